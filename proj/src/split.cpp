#include "swuc/split.hpp"

#include <algorithm>
#include <sstream>

#include "swuc/pretty.hpp"

namespace swuc {

std::string mangle_symbol(Side side, const std::string& base) {
    return side == Side::Slave ? "slave_" + base : base;
}

std::pair<Side, std::string> demangle_symbol(const std::string& mangled) {
    if (mangled.rfind("slave_", 0) == 0) return {Side::Slave, mangled.substr(6)};
    return {Side::Host, mangled};
}

namespace {

bool on_side(TargetSet ts, Side side) {
    return side == Side::Host ? has_host(ts) : has_slave(ts);
}

// In no-collab mode an instantiation survives on the SLAVE side only when some
// origin call site lives in a function that itself survives there.
std::set<std::string> slave_retained_no_collab(const SourceUnit& unit,
                                               const ProgramGraph& graph) {
    std::set<std::string> retained;
    for (const auto& f : unit.functions) {
        if (!f->body || !f->instantiated_from.empty()) continue;
        auto it = graph.resolved_targets.find(f->name);
        if (it != graph.resolved_targets.end() && has_slave(it->second))
            retained.insert(f->name);
    }
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& f : unit.functions) {
            if (!f->body || f->instantiated_from.empty() || retained.count(f->name))
                continue;
            auto it = graph.resolved_targets.find(f->name);
            if (it == graph.resolved_targets.end() || !has_slave(it->second)) continue;
            for (const auto& origin : f->origin_functions) {
                if (retained.count(origin)) {
                    retained.insert(f->name);
                    changed = true;
                    break;
                }
            }
        }
    }
    return retained;
}

}  // namespace

TargetModule split_for_target(const SourceUnit& unit, const ProgramGraph& graph,
                              Side side, DiagBag& diags, bool no_collab) {
    TargetModule mod;
    mod.side = side;

    RecordTable table = build_record_table(unit, diags);
    for (const auto& [name, lay] : table.all()) mod.records[name] = lay;

    std::set<std::string> slave_keep;
    if (no_collab && side == Side::Slave)
        slave_keep = slave_retained_no_collab(unit, graph);

    for (const auto& f : unit.functions) {
        if (!f->body) continue;
        auto it = graph.resolved_targets.find(f->name);
        if (it == graph.resolved_targets.end()) continue;
        if (!on_side(it->second, side)) continue;
        if (no_collab && side == Side::Slave && !f->instantiated_from.empty() &&
            !slave_keep.count(f->name))
            continue;
        mod.functions.push_back(clone_function(*f));
    }

    // kernel signatures travel with both modules so launch stubs can be built
    // even when the body was dropped
    for (const auto& name : graph.kernel_flags) {
        const Function* k = graph.symbols.at(name);
        KernelEntry entry;
        entry.base = name;
        entry.params = k->params;
        entry.layout = compute_block_layout(k->params, table);
        mod.kernels.push_back(entry);
    }
    std::sort(mod.kernels.begin(), mod.kernels.end(),
              [](const KernelEntry& a, const KernelEntry& b) { return a.base < b.base; });
    return mod;
}

namespace {

bool body_calls(const Stmt& s, const std::string& name);

bool expr_calls(const Expr& e, const std::string& name) {
    if (e.kind == ExprKind::Call && e.callee == name) return true;
    if (e.callee_expr && expr_calls(*e.callee_expr, name)) return true;
    for (const auto& a : e.args)
        if (expr_calls(*a, name)) return true;
    return false;
}

bool body_calls(const Stmt& s, const std::string& name) {
    for (const ExprPtr* e : {&s.init, &s.lhs, &s.rhs, &s.cond, &s.expr})
        if (*e && expr_calls(**e, name)) return true;
    for (const StmtPtr* st : {&s.then_branch, &s.else_branch, &s.body, &s.for_init,
                              &s.for_step})
        if (*st && body_calls(**st, name)) return true;
    for (const auto& st : s.stmts)
        if (body_calls(*st, name)) return true;
    return false;
}

bool module_calls(const TargetModule& mod, const std::string& name) {
    for (const auto& f : mod.functions)
        if (f->body && body_calls(*f->body, name)) return true;
    return false;
}

void rewrite_calls(Expr& e, const std::string& from, const std::string& to) {
    if (e.kind == ExprKind::Call && e.callee == from) e.callee = to;
    if (e.callee_expr) rewrite_calls(*e.callee_expr, from, to);
    for (auto& a : e.args) rewrite_calls(*a, from, to);
}

void rewrite_calls(Stmt& s, const std::string& from, const std::string& to) {
    for (ExprPtr* e : {&s.init, &s.lhs, &s.rhs, &s.cond, &s.expr})
        if (*e) rewrite_calls(**e, from, to);
    for (StmtPtr* st : {&s.then_branch, &s.else_branch, &s.body, &s.for_init, &s.for_step})
        if (*st) rewrite_calls(**st, from, to);
    for (auto& st : s.stmts) rewrite_calls(*st, from, to);
}

std::unique_ptr<Function> make_launch_stub(const KernelEntry& entry) {
    auto fn = std::make_unique<Function>();
    fn->name = entry.base + ".launch";
    fn->ret = make_void();
    fn->params = entry.params;
    fn->synthesized = true;
    auto launch = std::make_unique<Stmt>(StmtKind::KernelLaunch, Span{});
    launch->symbol = entry.base;  // slave-mangled by finalize
    launch->k_params = entry.params;
    auto body = std::make_unique<Stmt>(StmtKind::Block, Span{});
    body->stmts.push_back(std::move(launch));
    fn->body = std::move(body);
    return fn;
}

}  // namespace

void lower_kernels(TargetModule& host, TargetModule& slave,
                   const std::vector<std::string>& kernels, DiagBag& diags) {
    (void)diags;
    for (const auto& base : kernels) {
        const KernelEntry* proto = nullptr;
        for (const auto& k : slave.kernels)
            if (k.base == base) proto = &k;
        if (!proto) {
            for (const auto& k : host.kernels)
                if (k.base == base) proto = &k;
        }
        if (!proto) continue;
        KernelEntry entry = *proto;
        entry.wrapper_symbol = mangle_symbol(Side::Slave, base);

        Function* kernel_fn = slave.find(base);
        if (kernel_fn) {
            // the programmed body becomes an internal symbol; its old name is
            // taken by the wrapper that unpacks the parameter block
            kernel_fn->name = base + ".body";
            auto wrapper = std::make_unique<Function>();
            wrapper->name = base;
            wrapper->ret = make_void();
            wrapper->synthesized = true;
            auto unpack = std::make_unique<Stmt>(StmtKind::KernelUnpack, Span{});
            unpack->symbol = base + ".body";
            unpack->k_params = entry.params;
            auto wbody = std::make_unique<Stmt>(StmtKind::Block, Span{});
            wbody->stmts.push_back(std::move(unpack));
            wrapper->body = std::move(wbody);
            slave.functions.push_back(std::move(wrapper));
        }

        // call sites become calls to the launch stub; a stub is emitted on a
        // side only when something there actually launches this kernel
        for (TargetModule* mod : {&host, &slave}) {
            if (!module_calls(*mod, base)) continue;
            for (auto& f : mod->functions)
                if (f->body) rewrite_calls(*f->body, base, base + ".launch");
            mod->functions.push_back(make_launch_stub(entry));
        }

        for (auto& k : slave.kernels)
            if (k.base == base) k = entry;
    }
    // only kernels with a live wrapper belong in the slave kernel table
    std::erase_if(slave.kernels, [&](const KernelEntry& k) {
        return k.wrapper_symbol.empty() || slave.find(k.base) == nullptr;
    });
    host.kernels.clear();
}

void finalize_symbols(TargetModule& module) {
    if (module.finalized) return;

    struct Finalizer {
        Side side;
        std::set<std::string> refs;

        void fix_expr(Expr& e) {
            if (e.kind == ExprKind::Call && !e.callee.empty() &&
                !builtin_target(e.callee)) {
                e.callee = mangle_symbol(side, e.callee);
                refs.insert(e.callee);
            }
            if (e.callee_expr) fix_expr(*e.callee_expr);
            for (auto& a : e.args) fix_expr(*a);
        }

        void fix_stmt(Stmt& s) {
            if (s.kind == StmtKind::KernelLaunch) {
                s.symbol = mangle_symbol(Side::Slave, s.symbol);
                refs.insert(s.symbol);
            } else if (s.kind == StmtKind::KernelUnpack) {
                s.symbol = mangle_symbol(Side::Slave, s.symbol);
                refs.insert(s.symbol);
            }
            for (ExprPtr* e : {&s.init, &s.lhs, &s.rhs, &s.cond, &s.expr})
                if (*e) fix_expr(**e);
            for (StmtPtr* st : {&s.then_branch, &s.else_branch, &s.body, &s.for_init,
                                &s.for_step})
                if (*st) fix_stmt(**st);
            for (auto& st : s.stmts) fix_stmt(*st);
        }
    } fin{module.side, {}};

    std::set<std::string> defined;
    for (auto& f : module.functions) {
        f->name = mangle_symbol(module.side, f->name);
        defined.insert(f->name);
        if (f->body) fin.fix_stmt(*f->body);
    }
    module.externs.clear();
    for (const auto& r : fin.refs)
        if (!defined.count(r)) module.externs.push_back(r);
    std::sort(module.externs.begin(), module.externs.end());
    std::sort(module.functions.begin(), module.functions.end(),
              [](const std::unique_ptr<Function>& a, const std::unique_ptr<Function>& b) {
                  return a->name < b->name;
              });
    module.finalized = true;
}

std::string print_module(const TargetModule& module) {
    std::ostringstream os;
    os << "module " << (module.side == Side::Host ? "HOST" : "SLAVE") << "\n\n";
    for (const auto& [name, lay] : module.records) {
        os << "record " << name << " size=" << lay.size << " align=" << lay.align << "\n";
        for (const auto& f : lay.fields)
            os << "    +" << f.offset << " " << f.name << ": " << spell_source(f.type)
               << " (" << f.size << "B)\n";
    }
    if (!module.records.empty()) os << "\n";
    for (const auto& k : module.kernels) {
        os << "kernel " << k.base << " wrapper=" << k.wrapper_symbol
           << " block=" << k.layout.size << "B\n";
        for (const auto& slot : k.layout.slots)
            os << "    +" << slot.offset << " " << slot.name << ": "
               << spell_source(slot.type) << " (" << slot.size << "B)\n";
    }
    if (!module.kernels.empty()) os << "\n";
    std::vector<const Function*> fns;
    for (const auto& f : module.functions) fns.push_back(f.get());
    std::sort(fns.begin(), fns.end(),
              [](const Function* a, const Function* b) { return a->name < b->name; });
    for (const Function* f : fns) os << print_function(*f) << "\n";
    if (!module.externs.empty()) {
        os << "externs:\n";
        for (const auto& e : module.externs) os << "    " << e << "\n";
    }
    return os.str();
}

}  // namespace swuc
