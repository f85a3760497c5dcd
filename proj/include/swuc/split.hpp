#pragma once
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "swuc/ast.hpp"
#include "swuc/graph.hpp"
#include "swuc/layout.hpp"
#include "swuc/transform.hpp"

namespace swuc {

enum class Side : uint8_t { Host = 0, Slave = 1 };

// "slave_" prefix on the SLAVE side, bare base name on the HOST side.
std::string mangle_symbol(Side side, const std::string& base);
// Inverse of mangle_symbol; returns {side, base}.
std::pair<Side, std::string> demangle_symbol(const std::string& mangled);

struct KernelEntry {
    std::string base;            // kernel base name (post-monomorphization)
    std::string wrapper_symbol;  // slave-mangled launchable entry
    BlockLayout layout;
    std::vector<Param> params;
};

struct TargetModule {
    Side side = Side::Host;
    // Functions carry base names until finalize_symbols mangles them.
    std::vector<std::unique_ptr<Function>> functions;
    std::vector<std::string> externs;  // referenced but not defined (mangled)
    std::map<std::string, RecordLayout> records;
    std::vector<KernelEntry> kernels;
    bool finalized = false;

    Function* find(const std::string& name) {
        for (auto& f : functions)
            if (f->name == name) return f.get();
        return nullptr;
    }
};

// Retains bodies whose TargetSet includes `side`; kernel bodies go to the
// SLAVE module only. Record layouts are copied verbatim to both modules.
// In no_collab mode the SLAVE module drops instantiations that were only
// requested from functions with no SLAVE availability.
TargetModule split_for_target(const SourceUnit& unit, const ProgramGraph& graph,
                              Side side, DiagBag& diags, bool no_collab = false);

// Adds per-kernel launch stubs ("<k>.launch", both modules) and the SLAVE-side
// wrapper (named after the kernel itself; the programmed body becomes
// "<k>.body"), and rewrites kernel call sites to the stubs.
void lower_kernels(TargetModule& host, TargetModule& slave,
                   const std::vector<std::string>& kernels, DiagBag& diags);

// Renames definitions and call targets to side-mangled symbols and computes
// the extern list. Must run last.
void finalize_symbols(TargetModule& module);

// Deterministic human-readable listing for golden tests.
std::string print_module(const TargetModule& module);

}  // namespace swuc
