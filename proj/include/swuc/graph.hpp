#pragma once
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "swuc/ast.hpp"
#include "swuc/diag.hpp"

namespace swuc {

enum class TargetSet : uint8_t {
    None = 0,
    Host = 1,
    Slave = 2,
    Both = 3,
    UnresolvedInfer = 4,  // transient, only during analysis
};

inline bool has_host(TargetSet t) { return static_cast<uint8_t>(t) & 1; }
inline bool has_slave(TargetSet t) { return static_cast<uint8_t>(t) & 2; }
TargetSet meet(TargetSet a, TargetSet b);  // set intersection of {HOST, SLAVE}
const char* target_set_name(TargetSet t);

struct KernelCallSite {
    std::string caller;
    std::string kernel;
    Span span;
};

struct ProgramGraph {
    std::map<std::string, const Function*> symbols;
    std::map<std::string, std::set<std::string>> call_edges;  // regular calls only
    std::vector<KernelCallSite> kernel_call_sites;
    std::map<std::string, TargetSet> resolved_targets;
    std::set<std::string> kernel_flags;
    // SLAVE-only constraints from `local` declarations, per function.
    std::set<std::string> uses_local_storage;
};

// Fixed builtin availability table.
std::optional<TargetSet> builtin_target(const std::string& name);

ProgramGraph build_program_graph(const SourceUnit& unit, DiagBag& diags);
void resolve_explicit_targets(ProgramGraph& graph, DiagBag& diags);
// Greatest-fixed-point inference; order-independent (shuffle is test-only).
void infer_targets(ProgramGraph& graph, DiagBag& diags, unsigned shuffle_seed = 0);
void check_call_legality(const ProgramGraph& graph, const SourceUnit& unit, DiagBag& diags);

// Runs all of the above in order; returns the graph even when diagnostics
// contain errors.
ProgramGraph analyze(const SourceUnit& unit, DiagBag& diags);

// Deterministic `function<TAB>HOST|SLAVE|BOTH` table sorted by name.
std::string emit_targets_table(const ProgramGraph& graph);

}  // namespace swuc
