#pragma once
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "swuc/diag.hpp"
#include "swuc/split.hpp"

namespace swuc {

inline constexpr char kImageMagic[8] = {'S', 'W', 'U', 'C', 'I', 'M', 'G', '1'};
inline constexpr char kModuleMagic[8] = {'S', 'W', 'U', 'C', 'M', 'O', 'D', '1'};
inline constexpr uint32_t kImageFormatVersion = 1;

struct LinkedImage {
    std::map<std::string, std::unique_ptr<Function>> host_functions;
    std::map<std::string, std::unique_ptr<Function>> slave_functions;
    std::vector<KernelEntry> kernel_table;
    std::map<std::string, RecordLayout> records;
    std::string entry;  // HOST-side symbol of main
    uint32_t format_version = kImageFormatVersion;
};

// Resolves symbols across the two finalized modules. Diagnostics:
// E_UNDEF_REF ("undefined reference to `sym`"), E_DUP_SYM,
// E_LAYOUT_MISMATCH, E_NO_ENTRY.
LinkedImage link(const TargetModule& host, const TargetModule& slave, DiagBag& diags);

std::vector<uint8_t> serialize_image(const LinkedImage& image);
// Diagnostics: E_IMG_MAGIC, E_IMG_VERSION, E_IMG_TRUNCATED.
bool deserialize_image(const std::vector<uint8_t>& bytes, LinkedImage& out, DiagBag& diags);

std::vector<uint8_t> serialize_module(const TargetModule& module);
bool deserialize_module(const std::vector<uint8_t>& bytes, TargetModule& out, DiagBag& diags);

// Structural equality via canonical re-serialization.
bool image_equal(const LinkedImage& a, const LinkedImage& b);

}  // namespace swuc
