#pragma once
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "swuc/diag.hpp"
#include "swuc/image.hpp"
#include "swuc/sim.hpp"

namespace swuc {

struct DriverConfig {
    std::string command;  // check | build | emit-split | link | run | exec
    std::vector<std::string> input_paths;
    std::string output_path;
    int cpes = 64;
    std::string mode = "seq";  // seq | interleave
    uint64_t seed = 0;
    bool trace = false;
    bool no_collab = false;
    bool emit_targets = false;
    bool emit_modules = false;
    std::string color = "auto";  // auto | always | never
    std::vector<std::string> program_args;
};

// Exit codes: 0 success, 1 diagnostics with errors, 2 usage error,
// 101 simulator trap.
int drive(const DriverConfig& config, std::ostream& out, std::ostream& err);

// In-process pipeline pieces, shared by the CLI and the test suites.
struct CompileOutput {
    DiagBag diags;
    bool ok = false;
    LinkedImage image;
    TargetModule host;
    TargetModule slave;
    std::string targets_table;
};

CompileOutput compile_source(const std::string& source, const std::string& filename,
                             bool no_collab = false);

}  // namespace swuc
