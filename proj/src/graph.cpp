#include "swuc/graph.hpp"

#include <algorithm>
#include <random>
#include <sstream>

namespace swuc {

TargetSet meet(TargetSet a, TargetSet b) {
    return static_cast<TargetSet>(static_cast<uint8_t>(a) & static_cast<uint8_t>(b) & 3);
}

const char* target_set_name(TargetSet t) {
    switch (t) {
        case TargetSet::None: return "NONE";
        case TargetSet::Host: return "HOST";
        case TargetSet::Slave: return "SLAVE";
        case TargetSet::Both: return "BOTH";
        case TargetSet::UnresolvedInfer: return "INFER";
    }
    return "?";
}

std::optional<TargetSet> builtin_target(const std::string& name) {
    if (name == "cpe_id" || name == "dma_get" || name == "dma_put")
        return TargetSet::Slave;
    if (name == "print" || name == "min" || name == "n_cpes") return TargetSet::Both;
    return std::nullopt;
}

namespace {

struct EdgeCollector {
    ProgramGraph& graph;
    std::string caller;

    void walk_stmt(const Stmt& s) {
        if (s.kind == StmtKind::Decl && s.is_local)
            graph.uses_local_storage.insert(caller);
        for (const ExprPtr* e : {&s.init, &s.lhs, &s.rhs, &s.cond, &s.expr})
            if (*e) walk_expr(**e);
        for (const StmtPtr* st : {&s.then_branch, &s.else_branch, &s.body, &s.for_init,
                                  &s.for_step})
            if (*st) walk_stmt(**st);
        for (const auto& st : s.stmts) walk_stmt(*st);
    }

    void walk_expr(const Expr& e) {
        if (e.kind == ExprKind::Call && !e.callee.empty()) {
            if (graph.kernel_flags.count(e.callee))
                graph.kernel_call_sites.push_back({caller, e.callee, e.span});
            else
                graph.call_edges[caller].insert(e.callee);
        }
        if (e.callee_expr) walk_expr(*e.callee_expr);
        if (e.lambda && e.lambda->body) walk_stmt(*e.lambda->body);
        for (const auto& a : e.args) walk_expr(*a);
    }
};

}  // namespace

ProgramGraph build_program_graph(const SourceUnit& unit, DiagBag& diags) {
    (void)diags;
    ProgramGraph graph;
    for (const auto& f : unit.functions) {
        graph.symbols[f->name] = f.get();
        if (f->target.has_mark("kernel")) graph.kernel_flags.insert(f->name);
    }
    for (const auto& f : unit.functions) {
        if (!f->body) continue;
        graph.call_edges[f->name];  // every defined function gets an entry
        EdgeCollector ec{graph, f->name};
        ec.walk_stmt(*f->body);
    }
    return graph;
}

void resolve_explicit_targets(ProgramGraph& graph, DiagBag& diags) {
    (void)diags;
    for (const auto& [name, fn] : graph.symbols) {
        const RawTargetSpec& spec = fn->target;
        if (spec.has_mark("kernel")) {
            // the body runs on CPEs; launchability is a property of call sites
            graph.resolved_targets[name] = TargetSet::Slave;
            continue;
        }
        bool h = spec.has_mark("host");
        bool s = spec.has_mark("slave");
        if (h && s)
            graph.resolved_targets[name] = TargetSet::Both;
        else if (h)
            graph.resolved_targets[name] = TargetSet::Host;
        else if (s)
            graph.resolved_targets[name] = TargetSet::Slave;
        else if (spec.has_mark("infer") || spec.pragma_default == "infer")
            graph.resolved_targets[name] = TargetSet::UnresolvedInfer;
        else if (spec.pragma_default == "slave")
            graph.resolved_targets[name] = TargetSet::Slave;
        else
            graph.resolved_targets[name] = TargetSet::Host;
    }
}

void infer_targets(ProgramGraph& graph, DiagBag& diags, unsigned shuffle_seed) {
    std::vector<std::string> infer_fns;
    for (const auto& [name, ts] : graph.resolved_targets)
        if (ts == TargetSet::UnresolvedInfer) infer_fns.push_back(name);
    if (shuffle_seed != 0) {
        std::mt19937 rng(shuffle_seed);
        std::shuffle(infer_fns.begin(), infer_fns.end(), rng);
    }

    std::map<std::string, TargetSet> cur;
    for (const auto& n : infer_fns) cur[n] = TargetSet::Both;

    auto avail = [&](const std::string& name) -> TargetSet {
        if (auto bt = builtin_target(name)) return *bt;
        auto ci = cur.find(name);
        if (ci != cur.end()) return ci->second;
        auto ri = graph.resolved_targets.find(name);
        return ri == graph.resolved_targets.end() ? TargetSet::Both : ri->second;
    };

    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& name : infer_fns) {
            TargetSet t = TargetSet::Both;
            auto ei = graph.call_edges.find(name);
            if (ei != graph.call_edges.end())
                for (const auto& callee : ei->second) t = meet(t, avail(callee));
            if (graph.uses_local_storage.count(name)) t = meet(t, TargetSet::Slave);
            if (cur[name] != t) {
                cur[name] = t;
                changed = true;
            }
        }
    }
    // launching a kernel requires the MPE, so a launch site pins HOST
    // availability; applied post-fixpoint it can only shrink further
    bool again = true;
    while (again) {
        again = false;
        for (const auto& site : graph.kernel_call_sites) {
            auto ci = cur.find(site.caller);
            if (ci == cur.end()) continue;
            TargetSet t = meet(ci->second, TargetSet::Host);
            if (ci->second != t) {
                ci->second = t;
                again = true;
            }
        }
        for (const auto& name : infer_fns) {
            TargetSet t = TargetSet::Both;
            auto ei = graph.call_edges.find(name);
            if (ei != graph.call_edges.end())
                for (const auto& callee : ei->second) t = meet(t, avail(callee));
            if (graph.uses_local_storage.count(name)) t = meet(t, TargetSet::Slave);
            t = meet(t, cur[name]);
            if (cur[name] != t) {
                cur[name] = t;
                again = true;
            }
        }
    }

    for (const auto& name : infer_fns) {
        graph.resolved_targets[name] = cur[name];
        if (cur[name] == TargetSet::None) {
            std::ostringstream msg;
            msg << "no feasible target for `" << name << "`: callees require both "
                << "host-only and slave-only execution";
            const Function* fn = graph.symbols.at(name);
            diags.error("E_INFER_INFEASIBLE", msg.str(), fn->span);
        }
    }
}

namespace {

struct LegalityWalker {
    const ProgramGraph& graph;
    DiagBag& diags;
    std::string caller;
    TargetSet caller_avail = TargetSet::Both;

    void check_call(const Expr& e) {
        const std::string& callee = e.callee;
        if (graph.kernel_flags.count(callee)) {
            if (!has_host(caller_avail))
                diags.error("E_KERNEL_FROM_SLAVE",
                            "kernel `" + callee + "` launched from `" + caller +
                                "`, which never runs on the MPE",
                            e.span);
            return;
        }
        TargetSet callee_avail;
        if (auto bt = builtin_target(callee)) {
            callee_avail = *bt;
        } else {
            auto it = graph.resolved_targets.find(callee);
            if (it == graph.resolved_targets.end()) return;
            callee_avail = it->second;
            if (callee_avail == TargetSet::None) return;  // already diagnosed
        }
        if (has_host(caller_avail) && !has_host(callee_avail))
            mismatch(e, callee, "HOST");
        if (has_slave(caller_avail) && !has_slave(callee_avail))
            mismatch(e, callee, "SLAVE");
    }

    void mismatch(const Expr& e, const std::string& callee, const char* side) {
        Diagnostic d;
        d.severity = Severity::Error;
        d.code = "E_TARGET_MISMATCH";
        d.message = "`" + callee + "` is not available on " + side + ", but `" + caller +
                    "` runs there";
        d.span = e.span;
        auto si = graph.symbols.find(callee);
        if (si != graph.symbols.end())
            d.notes.push_back({"`" + callee + "` declared here", si->second->span});
        diags.add(std::move(d));
    }

    void walk_stmt(const Stmt& s) {
        if (s.kind == StmtKind::Decl && s.is_local && has_host(caller_avail))
            diags.error("E_TARGET_MISMATCH",
                        "CPE-local storage in `" + caller + "`, which runs on the MPE",
                        s.span);
        for (const ExprPtr* e : {&s.init, &s.lhs, &s.rhs, &s.cond, &s.expr})
            if (*e) walk_expr(**e);
        for (const StmtPtr* st : {&s.then_branch, &s.else_branch, &s.body, &s.for_init,
                                  &s.for_step})
            if (*st) walk_stmt(**st);
        for (const auto& st : s.stmts) walk_stmt(*st);
    }

    void walk_expr(const Expr& e) {
        if (e.kind == ExprKind::Call && !e.callee.empty()) check_call(e);
        if (e.callee_expr) walk_expr(*e.callee_expr);
        for (const auto& a : e.args) walk_expr(*a);
    }
};

bool transferable(const Type& t) {
    switch (t.kind) {
        case TypeKind::Bool:
        case TypeKind::Int:
        case TypeKind::Long:
        case TypeKind::Float:
        case TypeKind::Double:
        case TypeKind::Pointer:
        case TypeKind::Record:
        case TypeKind::Closure: return true;
        default: return false;
    }
}

}  // namespace

void check_call_legality(const ProgramGraph& graph, const SourceUnit& unit,
                         DiagBag& diags) {
    for (const auto& f : unit.functions) {
        if (!f->body) continue;
        auto ri = graph.resolved_targets.find(f->name);
        if (ri == graph.resolved_targets.end()) continue;
        TargetSet avail = ri->second;
        if (avail == TargetSet::None || avail == TargetSet::UnresolvedInfer) continue;
        LegalityWalker w{graph, diags, f->name, avail};
        w.walk_stmt(*f->body);
    }
    for (const auto& name : graph.kernel_flags) {
        const Function* k = graph.symbols.at(name);
        for (const auto& p : k->params)
            if (!transferable(p.type))
                diags.error("E_KERNEL_PARAM",
                            "kernel parameter `" + p.name +
                                "` is not transferable to CPE memory",
                            p.span);
    }
}

ProgramGraph analyze(const SourceUnit& unit, DiagBag& diags) {
    ProgramGraph graph = build_program_graph(unit, diags);
    resolve_explicit_targets(graph, diags);
    infer_targets(graph, diags);
    if (!diags.has_errors()) check_call_legality(graph, unit, diags);
    return graph;
}

std::string emit_targets_table(const ProgramGraph& graph) {
    std::ostringstream os;
    for (const auto& [name, ts] : graph.resolved_targets) {
        if (ts == TargetSet::None || ts == TargetSet::UnresolvedInfer) continue;
        const Function* fn = graph.symbols.at(name);
        if (!fn->body) continue;
        os << name << "\t" << target_set_name(ts) << "\n";
    }
    return os.str();
}

}  // namespace swuc
