#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "swuc/image.hpp"

namespace swuc {

enum class SimMode { Sequential, Interleaved };

struct SimConfig {
    int n_cpes = 64;
    SimMode mode = SimMode::Sequential;
    uint64_t seed = 0;  // interleaved mode only
    uint64_t main_memory_bytes = 64ull * 1024 * 1024;
    uint64_t local_memory_bytes = 256ull * 1024;
    bool trace = false;
};

struct LaunchRecord {
    std::string wrapper_symbol;
    uint64_t param_block_address = 0;
    uint64_t param_block_size = 0;
    std::vector<std::string> per_cpe_status;  // "completed" or trap code
};

struct RunResult {
    int exit_status = 0;
    std::string stdout_text;
    std::string trace_text;
    bool trapped = false;
    std::string trap_code;     // TRAP_OOB, TRAP_DIV0, ...
    std::string trap_message;  // includes context (MPE or CPE index) and span
    std::vector<LaunchRecord> launches;
};

RunResult run(const LinkedImage& image, const SimConfig& config,
              const std::vector<std::string>& argv = {});

}  // namespace swuc
