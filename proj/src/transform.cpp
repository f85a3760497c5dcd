#include "swuc/transform.hpp"

#include <algorithm>
#include <cassert>
#include <optional>
#include <set>

#include "swuc/graph.hpp"

namespace swuc {

std::string mangle_instantiation(const std::string& generic_name, const Type& arg) {
    return generic_name + "$" + spell(arg);
}

namespace {

Type decay(const Type& t) {
    if (t.kind == TypeKind::Array) return make_pointer(*t.elem);
    return t;
}

int rank(const Type& t) {
    switch (t.kind) {
        case TypeKind::Bool: return 0;
        case TypeKind::Int: return 1;
        case TypeKind::Long: return 2;
        case TypeKind::Float: return 3;
        case TypeKind::Double: return 4;
        default: return -1;
    }
}

Type common_numeric(const Type& a, const Type& b) {
    static const Type by_rank[] = {make_bool(), make_int(), make_long(), make_float(),
                                   make_double()};
    int r = std::max(rank(a), rank(b));
    if (r < 1) r = 1;  // bool op bool computes as int
    return by_rank[r];
}

bool assignable(const Type& dst, const Type& src_raw) {
    Type src = decay(src_raw);
    if (dst.is_numeric() && src.is_numeric()) return true;
    if (dst.is_pointer() && src.is_pointer()) return *dst.elem == *src.elem;
    if (dst.is_record_like() && src.is_record_like()) return dst.name == src.name;
    return false;
}

void substitute_in_expr(Expr& e, const Type& arg);

void substitute_in_stmt(Stmt& s, const Type& arg) {
    s.decl_type = substitute_generic(s.decl_type, arg);
    for (auto& p : s.k_params) p.type = substitute_generic(p.type, arg);
    for (ExprPtr* e : {&s.init, &s.lhs, &s.rhs, &s.cond, &s.expr})
        if (*e) substitute_in_expr(**e, arg);
    for (StmtPtr* st : {&s.then_branch, &s.else_branch, &s.body, &s.for_init, &s.for_step})
        if (*st) substitute_in_stmt(**st, arg);
    for (auto& st : s.stmts) substitute_in_stmt(*st, arg);
}

void substitute_in_expr(Expr& e, const Type& arg) {
    if (e.has_type_arg) e.type_arg = substitute_generic(e.type_arg, arg);
    if (e.lambda) {
        for (auto& p : e.lambda->params) p.type = substitute_generic(p.type, arg);
        if (e.lambda->body) substitute_in_stmt(*e.lambda->body, arg);
    }
    if (e.callee_expr) substitute_in_expr(*e.callee_expr, arg);
    for (auto& a : e.args) substitute_in_expr(*a, arg);
}

struct VarInfo {
    Type type;
    bool is_local = false;
};

struct Checker {
    SourceUnit& unit;
    DiagBag& diags;
    RecordTable records;

    std::map<std::string, Function*> fns;       // resolvable (non-generic) functions
    std::map<std::string, Function*> generics;  // templates by name
    std::map<std::string, int> inst_depth;
    std::vector<Instantiation> instantiations;
    std::map<std::string, size_t> inst_index;  // mangled -> instantiations index
    std::vector<ClosureInfo> closures;
    std::map<std::string, size_t> closure_by_record;
    std::vector<Function*> worklist;

    Function* current = nullptr;
    int current_depth = 0;

    struct LambdaCtx {
        LambdaInfo* li = nullptr;
        ClosureInfo* info = nullptr;
    };
    struct Scope {
        std::map<std::string, VarInfo> vars;
        LambdaCtx* boundary = nullptr;  // set on the parameter scope of a lambda
    };
    std::vector<Scope> scopes;

    // return-type context: fixed for functions, deduced for lambdas
    struct RetCtx {
        Type type = make_void();
        bool deduced = false;
        bool saw_return = false;
    };
    std::vector<RetCtx> ret_stack;

    explicit Checker(SourceUnit& u, DiagBag& d) : unit(u), diags(d) {
        records = build_record_table(unit, diags);
    }

    void index_functions() {
        for (auto& f : unit.functions) {
            auto& table = f->is_generic ? generics : fns;
            auto it = table.find(f->name);
            if (it == table.end()) {
                table[f->name] = f.get();
                continue;
            }
            // prototype + definition pairs merge; two bodies clash
            if (it->second->body && f->body) {
                diags.error("E_DUP_SYM", "function `" + f->name + "` redefined", f->span);
            } else if (f->body) {
                table[f->name] = f.get();
            }
        }
    }

    void run() {
        index_functions();
        for (auto& f : unit.functions) {
            if (f->is_generic || !f->body) continue;
            if (fns[f->name] == f.get()) worklist.push_back(f.get());
        }
        while (!worklist.empty()) {
            Function* f = worklist.back();
            worklist.pop_back();
            check_function(*f);
        }
        // generic templates are lowered away entirely
        std::erase_if(unit.functions,
                      [](const std::unique_ptr<Function>& f) { return f->is_generic; });
    }

    void check_function(Function& f) {
        current = &f;
        auto di = inst_depth.find(f.name);
        current_depth = di == inst_depth.end() ? 0 : di->second;

        if (f.target.has_mark("kernel") && !f.ret.is_void())
            diags.error("E_KERNEL_RETURN", "kernel `" + f.name + "` must return void",
                        f.span);

        scopes.clear();
        scopes.push_back({});
        for (auto& p : f.params) {
            if (!valid_value_type(p.type))
                diags.error("E_TYPE", "parameter `" + p.name + "` has invalid type", p.span);
            scopes.back().vars[p.name] = {p.type, false};
        }
        ret_stack.push_back({f.ret, false, false});
        tc_stmt(*f.body);
        ret_stack.pop_back();
        scopes.clear();
    }

    bool valid_value_type(const Type& t) {
        switch (t.kind) {
            case TypeKind::Void:
            case TypeKind::Generic:
            case TypeKind::String: return false;
            case TypeKind::Pointer: return true;
            case TypeKind::Array: return false;  // parameters decay at parse time
            case TypeKind::Record: return records.has(t.name);
            default: return true;
        }
    }

    // -- name resolution -------------------------------------------------------

    struct Resolution {
        VarInfo info;
        bool found = false;
        bool crossed_lambda = false;
    };

    Resolution resolve_var(const std::string& name, Span span) {
        std::vector<LambdaCtx*> crossed;
        for (size_t i = scopes.size(); i-- > 0;) {
            auto it = scopes[i].vars.find(name);
            if (it != scopes[i].vars.end()) {
                VarInfo info = it->second;
                // register the capture in every lambda boundary crossed,
                // innermost last so chained captures resolve outward
                for (size_t k = crossed.size(); k-- > 0;)
                    info = register_capture(*crossed[k], name, info, span);
                return {info, true, !crossed.empty()};
            }
            if (scopes[i].boundary) crossed.push_back(scopes[i].boundary);
        }
        return {};
    }

    VarInfo register_capture(LambdaCtx& lam, const std::string& name, VarInfo var,
                             Span span) {
        for (auto& c : lam.info->captures) {
            if (c.name == name) return {c.stored_type, false};
        }
        ClosureInfo::Capture cap;
        cap.name = name;
        cap.captured_local = var.is_local;
        if (var.type.is_array()) {
            if (!lam.li->by_ref) {
                diags.error("E_CAPTURE",
                            "array `" + name + "` cannot be captured by value", span);
            }
            cap.by_address = true;
            cap.stored_type = make_pointer(*var.type.elem);
        } else {
            cap.stored_type = var.type;
        }
        if (cap.captured_local) {
            for (const auto& m : lam.li->marks)
                if (m == "host")
                    diags.error("E_CAPTURE",
                                "CPE-local `" + name + "` captured into host lambda", span);
        }
        lam.info->captures.push_back(cap);
        return {cap.stored_type, false};
    }

    // -- expressions -------------------------------------------------------------

    bool is_lvalue(const Expr& e) {
        switch (e.kind) {
            case ExprKind::Var: return !e.type.is_array();
            case ExprKind::Index: return true;
            case ExprKind::Member: return true;
            case ExprKind::Unary: return e.op == "*";
            default: return false;
        }
    }

    Type tc_expr(Expr& e) {
        e.type = tc_expr_inner(e);
        return e.type;
    }

    Type err_type() { return make_int(); }

    Type tc_expr_inner(Expr& e) {
        switch (e.kind) {
            case ExprKind::IntLit: return make_int();
            case ExprKind::FloatLit: return make_double();
            case ExprKind::BoolLit: return make_bool();
            case ExprKind::StrLit: return make_string();
            case ExprKind::Var: return tc_var(e);
            case ExprKind::Unary: return tc_unary(e);
            case ExprKind::Binary: return tc_binary(e);
            case ExprKind::Index: return tc_index(e);
            case ExprKind::Member: return tc_member(e);
            case ExprKind::Call: return tc_call(e);
            case ExprKind::Lambda: return tc_lambda(e);
            case ExprKind::SizeofType: {
                if (mentions_generic(e.type_arg)) return make_long();  // folded later
                uint64_t sz = records.size_of(e.type_arg);
                e.kind = ExprKind::IntLit;
                e.ival = static_cast<int64_t>(sz);
                e.has_type_arg = false;
                return make_long();
            }
            case ExprKind::MakeClosure: return e.type;  // already typed
        }
        return err_type();
    }

    Type tc_var(Expr& e) {
        auto r = resolve_var(e.text, e.span);
        if (r.found) return r.info.type;
        auto fit = fns.find(e.text);
        if (fit != fns.end()) {
            if (fit->second->target.has_mark("kernel"))
                diags.error("E_KERNEL_MISUSE",
                            "kernel `" + e.text + "` cannot be used as a value", e.span);
            else
                diags.error("E_FN_ADDR",
                            "taking the address of function `" + e.text +
                                "` is not supported",
                            e.span);
            return err_type();
        }
        if (generics.count(e.text) || builtin_target(e.text)) {
            diags.error("E_FN_ADDR", "`" + e.text + "` cannot be used as a value", e.span);
            return err_type();
        }
        diags.error("E_UNDECLARED", "use of undeclared identifier `" + e.text + "`",
                    e.span);
        return err_type();
    }

    Type tc_unary(Expr& e) {
        Type a = tc_expr(*e.args[0]);
        if (e.op == "-") {
            if (!decay(a).is_numeric()) {
                diags.error("E_TYPE", "operand of unary `-` must be numeric", e.span);
                return err_type();
            }
            Type t = decay(a);
            return t.kind == TypeKind::Bool ? make_int() : t;
        }
        if (e.op == "!") {
            if (!decay(a).is_scalar())
                diags.error("E_TYPE", "operand of `!` must be scalar", e.span);
            return make_bool();
        }
        if (e.op == "*") {
            Type t = decay(a);
            if (!t.is_pointer()) {
                diags.error("E_TYPE", "cannot dereference non-pointer", e.span);
                return err_type();
            }
            return *t.elem;
        }
        // ++/--
        if (!is_lvalue(*e.args[0]))
            diags.error("E_TYPE", "operand of `" + e.op + "` must be assignable", e.span);
        Type t = decay(a);
        if (!t.is_numeric() && !t.is_pointer())
            diags.error("E_TYPE", "operand of `" + e.op + "` must be numeric or pointer",
                        e.span);
        check_not_captured_write(*e.args[0]);
        return t;
    }

    Type tc_binary(Expr& e) {
        Type a = decay(tc_expr(*e.args[0]));
        Type b = decay(tc_expr(*e.args[1]));
        const std::string& op = e.op;
        if (op == "&&" || op == "||") {
            if (!a.is_scalar() || !b.is_scalar())
                diags.error("E_TYPE", "operands of `" + op + "` must be scalar", e.span);
            return make_bool();
        }
        if (op == "==" || op == "!=" || op == "<" || op == ">" || op == "<=" ||
            op == ">=") {
            bool ok = (a.is_numeric() && b.is_numeric()) ||
                      (a.is_pointer() && b.is_pointer() && a == b);
            if (!ok)
                diags.error("E_TYPE", "invalid operands to `" + op + "`", e.span);
            return make_bool();
        }
        if (op == "%") {
            if (!a.is_integer() || !b.is_integer())
                diags.error("E_TYPE", "`%` requires integer operands", e.span);
            return common_numeric(a, b);
        }
        if (op == "+" || op == "-") {
            if (a.is_pointer() && b.is_integer()) return a;
            if (op == "+" && a.is_integer() && b.is_pointer()) return b;
            if (op == "-" && a.is_pointer() && b.is_pointer() && a == b) return make_long();
        }
        if (a.is_numeric() && b.is_numeric()) return common_numeric(a, b);
        diags.error("E_TYPE", "invalid operands to `" + op + "`", e.span);
        return err_type();
    }

    Type tc_index(Expr& e) {
        Type base = decay(tc_expr(*e.args[0]));
        Type idx = decay(tc_expr(*e.args[1]));
        if (!base.is_pointer()) {
            diags.error("E_TYPE", "subscripted value is not an array or pointer", e.span);
            return err_type();
        }
        if (!idx.is_integer())
            diags.error("E_TYPE", "array subscript must be an integer", e.span);
        return *base.elem;
    }

    Type tc_member(Expr& e) {
        Type base = tc_expr(*e.args[0]);
        Type rec;
        if (e.op == "->") {
            Type p = decay(base);
            if (!p.is_pointer() || !p.elem->is_record_like()) {
                diags.error("E_TYPE", "`->` requires a pointer to a record", e.span);
                return err_type();
            }
            rec = *p.elem;
        } else {
            if (!base.is_record_like()) {
                diags.error("E_TYPE", "`.` requires a record value", e.span);
                return err_type();
            }
            rec = base;
        }
        // closure records exist in the table only after conversion; member
        // access on them is internal, so resolve fields from the capture list
        if (rec.kind == TypeKind::Closure) {
            auto it = closure_by_record.find(rec.name);
            if (it != closure_by_record.end()) {
                for (const auto& c : closures[it->second].captures)
                    if (c.name == e.text) return c.stored_type;
            }
            diags.error("E_TYPE", "lambda values have no accessible fields", e.span);
            return err_type();
        }
        if (!records.has(rec.name)) {
            diags.error("E_TYPE", "unknown record `" + rec.name + "`", e.span);
            return err_type();
        }
        for (const auto& f : records.get(rec.name).fields)
            if (f.name == e.text) return f.type;
        diags.error("E_TYPE",
                    "record `" + rec.name + "` has no field `" + e.text + "`", e.span);
        return err_type();
    }

    Type tc_lambda(Expr& e) {
        LambdaInfo& li = *e.lambda;
        int id = static_cast<int>(closures.size());
        closures.push_back({});
        ClosureInfo& info = closures.back();
        info.id = id;
        info.record_name = "__closure_" + std::to_string(id);
        info.function_name = "__lambda_" + std::to_string(id);
        info.by_ref = li.by_ref;
        info.params = li.params;
        info.marks = li.marks;
        info.pragma_default = li.pragma_default;
        info.span = e.span;
        closure_by_record[info.record_name] = static_cast<size_t>(id);
        li.closure_id = id;

        LambdaCtx ctx{&li, &info};
        Scope scope;
        scope.boundary = &ctx;
        for (auto& p : li.params) {
            if (!valid_value_type(p.type))
                diags.error("E_TYPE", "parameter `" + p.name + "` has invalid type", p.span);
            scope.vars[p.name] = {p.type, false};
        }
        scopes.push_back(std::move(scope));
        ret_stack.push_back({make_void(), true, false});
        tc_stmt(*li.body);
        info.ret = ret_stack.back().type;
        ret_stack.pop_back();
        scopes.pop_back();
        return make_closure(info.record_name);
    }

    // -- calls -------------------------------------------------------------------

    Type tc_call(Expr& e) {
        if (e.callee_expr) return tc_indirect_call(e);

        // a parameter or local shadowing a function name is a closure call
        if (resolve_var(e.callee, e.span).found) {
            auto var = std::make_unique<Expr>(ExprKind::Var, e.span);
            var->text = e.callee;
            e.callee_expr = std::move(var);
            e.callee.clear();
            return tc_indirect_call(e);
        }

        if (auto bt = builtin_target(e.callee); bt.has_value()) return tc_builtin(e);

        auto git = generics.find(e.callee);
        if (git != generics.end()) return tc_generic_call(e, *git->second);

        auto fit = fns.find(e.callee);
        if (fit == fns.end()) {
            for (auto& a : e.args) tc_expr(*a);
            diags.error("E_UNDECLARED", "call to undeclared function `" + e.callee + "`",
                        e.span);
            return err_type();
        }
        Function& callee = *fit->second;
        if (e.has_type_arg)
            diags.error("E_TYPE", "`" + e.callee + "` is not a generic function", e.span);
        check_args(e, callee.params, callee.name);
        if (callee.target.has_mark("kernel")) check_kernel_args(e);
        return callee.ret;
    }

    Type tc_indirect_call(Expr& e) {
        Type ct = tc_expr(*e.callee_expr);
        if (ct.kind != TypeKind::Closure) {
            for (auto& a : e.args) tc_expr(*a);
            diags.error("E_TYPE", "called value is not callable", e.span);
            return err_type();
        }
        const ClosureInfo& info = closures[closure_by_record.at(ct.name)];
        check_args(e, info.params, "lambda");
        return info.ret;
    }

    void check_args(Expr& e, const std::vector<Param>& params, const std::string& what) {
        if (e.args.size() != params.size()) {
            diags.error("E_TYPE",
                        "wrong number of arguments to `" + what + "`: expected " +
                            std::to_string(params.size()) + ", got " +
                            std::to_string(e.args.size()),
                        e.span);
        }
        for (size_t i = 0; i < e.args.size(); ++i) {
            Type at = tc_expr(*e.args[i]);
            if (i < params.size() && !assignable(params[i].type, at))
                diags.error("E_TYPE",
                            "argument " + std::to_string(i + 1) + " to `" + what +
                                "`: cannot convert " + spell_source(at) + " to " +
                                spell_source(params[i].type),
                            e.args[i]->span);
        }
    }

    void check_kernel_args(Expr& e) {
        for (auto& a : e.args) {
            if (a->type.kind == TypeKind::Closure) {
                const ClosureInfo& info = closures[closure_by_record.at(a->type.name)];
                for (const auto& c : info.captures)
                    if (c.captured_local)
                        diags.error("E_LAMBDA_ESCAPE",
                                    "lambda capturing CPE-local `" + c.name +
                                        "` cannot be passed to a kernel",
                                    a->span);
            }
        }
    }

    Type tc_builtin(Expr& e) {
        const std::string& name = e.callee;
        auto need_args = [&](size_t n) {
            if (e.args.size() != n) {
                diags.error("E_TYPE",
                            "`" + name + "` takes " + std::to_string(n) + " argument(s)",
                            e.span);
                return false;
            }
            return true;
        };
        if (name == "print") {
            for (auto& a : e.args) {
                Type t = decay(tc_expr(*a));
                if (!t.is_scalar() && t.kind != TypeKind::String)
                    diags.error("E_TYPE", "`print` arguments must be scalars or strings",
                                a->span);
            }
            return make_void();
        }
        for (auto& a : e.args) tc_expr(*a);
        if (name == "min") {
            if (!need_args(2)) return err_type();
            Type a = decay(e.args[0]->type), b = decay(e.args[1]->type);
            if (!a.is_numeric() || !b.is_numeric()) {
                diags.error("E_TYPE", "`min` requires numeric arguments", e.span);
                return err_type();
            }
            return common_numeric(a, b);
        }
        if (name == "cpe_id" || name == "n_cpes") {
            need_args(0);
            return make_int();
        }
        if (name == "dma_get" || name == "dma_put") {
            if (!need_args(3)) return make_void();
            Type a = decay(e.args[0]->type), b = decay(e.args[1]->type),
                 n = decay(e.args[2]->type);
            if (!a.is_pointer() || !b.is_pointer())
                diags.error("E_TYPE", "`" + name + "` requires pointer endpoints", e.span);
            if (!n.is_integer())
                diags.error("E_TYPE", "`" + name + "` size must be an integer", e.span);
            return make_void();
        }
        return err_type();
    }

    Type tc_generic_call(Expr& e, Function& tmpl) {
        // type the arguments first (lambdas get their closure types here)
        for (auto& a : e.args) tc_expr(*a);

        std::optional<Type> bound;
        if (e.has_type_arg) bound = e.type_arg;

        if (e.args.size() != tmpl.params.size()) {
            diags.error("E_TYPE",
                        "wrong number of arguments to `" + tmpl.name + "`", e.span);
            return err_type();
        }
        for (size_t i = 0; i < e.args.size() && !e.has_type_arg; ++i) {
            const Type& pt = tmpl.params[i].type;
            if (!mentions_generic(pt)) continue;
            Type deduced;
            if (!unify(pt, decay(e.args[i]->type), deduced)) continue;
            if (bound && !(*bound == deduced)) {
                diags.error("E_INFER_TYPEARG",
                            "conflicting deductions for type parameter of `" + tmpl.name +
                                "`: " + spell_source(*bound) + " vs " +
                                spell_source(deduced),
                            e.span);
                return err_type();
            }
            if (!bound) bound = deduced;
        }
        if (!bound) {
            diags.error("E_INFER_TYPEARG",
                        "cannot deduce type argument for `" + tmpl.name +
                            "`; use `" + tmpl.name + "<type>(...)`",
                        e.span);
            return err_type();
        }
        Function* inst = instantiate(tmpl, *bound, e.span);
        if (!inst) return err_type();
        e.callee = inst->name;
        e.has_type_arg = false;
        // re-check argument compatibility against the concrete signature
        for (size_t i = 0; i < e.args.size(); ++i) {
            if (!assignable(inst->params[i].type, e.args[i]->type))
                diags.error("E_TYPE",
                            "argument " + std::to_string(i + 1) + " to `" + tmpl.name +
                                "`: cannot convert " + spell_source(e.args[i]->type) +
                                " to " + spell_source(inst->params[i].type),
                            e.args[i]->span);
        }
        if (inst->target.has_mark("kernel")) check_kernel_args(e);
        return inst->ret;
    }

    static bool unify(const Type& param, const Type& arg, Type& out) {
        if (param.kind == TypeKind::Generic) {
            out = arg;
            return true;
        }
        if (param.kind == TypeKind::Pointer && arg.kind == TypeKind::Pointer)
            return unify(*param.elem, *arg.elem, out);
        if (param.kind == TypeKind::Array && arg.kind == TypeKind::Array)
            return unify(*param.elem, *arg.elem, out);
        return false;
    }

    Function* instantiate(Function& tmpl, const Type& arg, Span site) {
        if (arg.kind == TypeKind::Void || arg.kind == TypeKind::String ||
            arg.kind == TypeKind::Generic) {
            diags.error("E_INFER_TYPEARG", "invalid type argument for `" + tmpl.name + "`",
                        site);
            return nullptr;
        }
        std::string mangled = mangle_instantiation(tmpl.name, arg);
        auto ii = inst_index.find(mangled);
        if (ii != inst_index.end()) {
            instantiations[ii->second].origin_sites.push_back(site);
            instantiations[ii->second].origin_functions.push_back(current->name);
            Function* f = fns.at(mangled);
            f->origin_sites.push_back(site);
            f->origin_functions.push_back(current->name);
            return f;
        }
        int depth = current_depth + 1;
        if (depth > kMaxInstantiationDepth) {
            diags.error("E_RECURSIVE_INST",
                        "generic instantiation of `" + tmpl.name + "` exceeds depth " +
                            std::to_string(kMaxInstantiationDepth),
                        site);
            return nullptr;
        }
        auto inst = clone_function(tmpl);
        inst->name = mangled;
        inst->is_generic = false;
        inst->generic_param.clear();
        inst->instantiated_from = tmpl.name;
        inst->instantiation_arg = arg;
        inst->origin_sites = {site};
        inst->origin_functions = {current->name};
        // an unmarked template under the global default serves whichever sides
        // end up requesting the instance, so its target is inferred rather
        // than pinned to the host default
        if (inst->target.explicit_marks.empty() &&
            inst->target.origin == TargetOrigin::GlobalDefault)
            inst->target.pragma_default = "infer";
        for (auto& p : inst->params) p.type = substitute_generic(p.type, arg);
        inst->ret = substitute_generic(inst->ret, arg);
        if (inst->body) substitute_in_stmt(*inst->body, arg);

        Function* raw = inst.get();
        unit.functions.push_back(std::move(inst));
        fns[mangled] = raw;
        inst_depth[mangled] = depth;
        inst_index[mangled] = instantiations.size();
        instantiations.push_back({tmpl.name, arg, mangled, {site}, {current->name}});
        if (raw->body) worklist.push_back(raw);
        return raw;
    }

    // -- statements ----------------------------------------------------------------

    void check_not_captured_write(Expr& lhs) {
        const Expr* base = &lhs;
        while ((base->kind == ExprKind::Index || base->kind == ExprKind::Member ||
                base->kind == ExprKind::Unary) &&
               !base->args.empty())
            base = base->args[0].get();
        if (base->kind != ExprKind::Var) return;
        // writing the captured binding itself is rejected; writing through a
        // captured pointer is fine
        if (lhs.kind != ExprKind::Var) return;
        std::vector<const Scope*> crossed;
        for (size_t i = scopes.size(); i-- > 0;) {
            if (scopes[i].vars.count(base->text)) {
                if (!crossed.empty())
                    diags.error("E_CAPTURE",
                                "captured variable `" + base->text + "` is read-only",
                                lhs.span);
                return;
            }
            if (scopes[i].boundary) crossed.push_back(&scopes[i]);
        }
    }

    void tc_stmt(Stmt& s) {
        switch (s.kind) {
            case StmtKind::Block: {
                scopes.push_back({});
                for (auto& st : s.stmts) tc_stmt(*st);
                scopes.pop_back();
                break;
            }
            case StmtKind::Decl: {
                if (s.decl_type.is_void() ||
                    (s.decl_type.is_record_like() && s.decl_type.kind == TypeKind::Record &&
                     !records.has(s.decl_type.name))) {
                    diags.error("E_TYPE", "invalid type for `" + s.name + "`", s.span);
                    break;
                }
                if (s.decl_type.is_array() && s.decl_type.count <= 0)
                    diags.error("E_TYPE", "array size must be positive", s.span);
                if (s.is_local && !s.decl_type.is_array())
                    diags.error("E_TYPE", "`local` applies only to array declarations",
                                s.span);
                if (scopes.back().vars.count(s.name))
                    diags.error("E_TYPE", "redeclaration of `" + s.name + "`", s.span);
                if (s.init) {
                    Type it = tc_expr(*s.init);
                    if (!assignable(s.decl_type, it))
                        diags.error("E_TYPE",
                                    "cannot initialize " + spell_source(s.decl_type) +
                                        " from " + spell_source(it),
                                    s.span);
                }
                scopes.back().vars[s.name] = {s.decl_type, s.is_local};
                break;
            }
            case StmtKind::Assign: {
                Type lt = tc_expr(*s.lhs);
                Type rt = tc_expr(*s.rhs);
                if (!is_lvalue(*s.lhs)) {
                    diags.error("E_TYPE", "left side of assignment is not assignable",
                                s.span);
                    break;
                }
                check_not_captured_write(*s.lhs);
                if (s.op == "=") {
                    if (!assignable(lt, rt))
                        diags.error("E_TYPE",
                                    "cannot assign " + spell_source(rt) + " to " +
                                        spell_source(lt),
                                    s.span);
                } else {
                    bool ok = lt.is_numeric() && decay(rt).is_numeric();
                    if (lt.is_pointer() && decay(rt).is_integer() &&
                        (s.op == "+=" || s.op == "-="))
                        ok = true;
                    if (!ok)
                        diags.error("E_TYPE", "invalid operands to `" + s.op + "`", s.span);
                }
                break;
            }
            case StmtKind::If:
            case StmtKind::While: {
                Type ct = decay(tc_expr(*s.cond));
                if (!ct.is_scalar())
                    diags.error("E_TYPE", "condition must be scalar", s.cond->span);
                if (s.kind == StmtKind::If) {
                    tc_stmt(*s.then_branch);
                    if (s.else_branch) tc_stmt(*s.else_branch);
                } else {
                    tc_stmt(*s.body);
                }
                break;
            }
            case StmtKind::For: {
                scopes.push_back({});
                if (s.for_init) tc_stmt(*s.for_init);
                if (s.cond) {
                    Type ct = decay(tc_expr(*s.cond));
                    if (!ct.is_scalar())
                        diags.error("E_TYPE", "condition must be scalar", s.cond->span);
                }
                if (s.for_step) tc_stmt(*s.for_step);
                tc_stmt(*s.body);
                scopes.pop_back();
                break;
            }
            case StmtKind::Return: {
                RetCtx& rc = ret_stack.back();
                Type rt = s.expr ? decay(tc_expr(*s.expr)) : make_void();
                if (rc.deduced) {
                    if (!rc.saw_return) {
                        rc.type = rt;
                        rc.saw_return = true;
                    } else if (!rt.is_void() && !assignable(rc.type, rt)) {
                        diags.error("E_TYPE", "inconsistent lambda return types", s.span);
                    }
                } else {
                    if (rc.type.is_void() && s.expr)
                        diags.error("E_TYPE", "void function cannot return a value",
                                    s.span);
                    else if (!rc.type.is_void() && !s.expr)
                        diags.error("E_TYPE", "non-void function must return a value",
                                    s.span);
                    else if (s.expr && !assignable(rc.type, rt))
                        diags.error("E_TYPE",
                                    "cannot return " + spell_source(rt) + " from function "
                                    "returning " + spell_source(rc.type),
                                    s.span);
                }
                break;
            }
            case StmtKind::ExprStmt:
                tc_expr(*s.expr);
                break;
            default:
                break;  // kernel lowering nodes do not exist yet
        }
    }
};

// ---- closure conversion -----------------------------------------------------

struct Converter {
    SourceUnit& unit;
    TransformResult& tr;
    DiagBag& diags;
    std::vector<std::unique_ptr<Function>> lifted;

    void run() {
        for (auto& f : unit.functions)
            if (f->body) convert_stmt(*f->body);
        for (auto& f : lifted) unit.functions.push_back(std::move(f));
        lifted.clear();
    }

    const ClosureInfo& info_by_record(const std::string& record_name) const {
        for (const auto& c : tr.closures)
            if (c.record_name == record_name) return c;
        throw std::logic_error("unknown closure record " + record_name);
    }

    void convert_stmt(Stmt& s) {
        for (ExprPtr* e : {&s.init, &s.lhs, &s.rhs, &s.cond, &s.expr})
            if (*e) convert_expr(**e);
        for (StmtPtr* st : {&s.then_branch, &s.else_branch, &s.body, &s.for_init,
                            &s.for_step})
            if (*st) convert_stmt(**st);
        for (auto& st : s.stmts) convert_stmt(*st);
    }

    void convert_expr(Expr& e) {
        if (e.callee_expr) convert_expr(*e.callee_expr);
        for (auto& a : e.args) convert_expr(*a);

        if (e.kind == ExprKind::Lambda) {
            lift_lambda(e);
            return;
        }
        if (e.kind == ExprKind::Call && e.callee_expr &&
            e.callee_expr->type.kind == TypeKind::Closure) {
            const ClosureInfo& info = info_by_record(e.callee_expr->type.name);
            e.callee = info.function_name;
            e.args.insert(e.args.begin(), std::move(e.callee_expr));
            e.callee_expr = nullptr;
        }
    }

    void lift_lambda(Expr& e) {
        ClosureInfo& info = tr.closures[static_cast<size_t>(e.lambda->closure_id)];
        StmtPtr body = std::move(e.lambda->body);
        convert_stmt(*body);  // inner lambdas first

        std::set<std::string> cap_names;
        for (const auto& c : info.captures) cap_names.insert(c.name);
        std::vector<std::set<std::string>> shadows;
        shadows.emplace_back();
        for (const auto& p : info.params) shadows.back().insert(p.name);
        rename_stmt(*body, info, cap_names, shadows);

        RecordDecl rec;
        rec.name = info.record_name;
        rec.span = info.span;
        rec.synthesized = true;
        for (const auto& c : info.captures) rec.fields.emplace_back(c.name, c.stored_type);
        unit.records.push_back(std::move(rec));

        auto fn = std::make_unique<Function>();
        fn->name = info.function_name;
        fn->ret = info.ret;
        fn->span = info.span;
        fn->synthesized = true;
        Param env;
        env.type = make_closure(info.record_name);
        env.name = "__env";
        env.span = info.span;
        fn->params.push_back(env);
        for (const auto& p : info.params) fn->params.push_back(p);
        fn->body = std::move(body);
        fn->target.explicit_marks = info.marks;
        fn->target.pragma_default = info.pragma_default;
        fn->target.origin = info.marks.empty()
                                ? (info.pragma_default == "host" ? TargetOrigin::GlobalDefault
                                                                 : TargetOrigin::Pragma)
                                : TargetOrigin::Attribute;
        lifted.push_back(std::move(fn));

        // the lambda expression becomes a closure-record construction
        Type ctype = make_closure(info.record_name);
        e.kind = ExprKind::MakeClosure;
        e.type = ctype;
        e.lambda.reset();
        e.args.clear();
        for (const auto& c : info.captures) {
            auto var = std::make_unique<Expr>(ExprKind::Var, e.span);
            var->text = c.name;
            var->type = c.stored_type;
            e.args.push_back(std::move(var));
        }
    }

    void rename_stmt(Stmt& s, const ClosureInfo& info, const std::set<std::string>& caps,
                     std::vector<std::set<std::string>>& shadows) {
        if (s.kind == StmtKind::Block || s.kind == StmtKind::For) {
            shadows.emplace_back();
            if (s.for_init) rename_stmt(*s.for_init, info, caps, shadows);
            for (ExprPtr* e : {&s.init, &s.lhs, &s.rhs, &s.cond, &s.expr})
                if (*e) rename_expr(**e, info, caps, shadows);
            for (StmtPtr* st : {&s.then_branch, &s.else_branch, &s.body, &s.for_step})
                if (*st) rename_stmt(**st, info, caps, shadows);
            for (auto& st : s.stmts) rename_stmt(*st, info, caps, shadows);
            shadows.pop_back();
            return;
        }
        for (ExprPtr* e : {&s.init, &s.lhs, &s.rhs, &s.cond, &s.expr})
            if (*e) rename_expr(**e, info, caps, shadows);
        for (StmtPtr* st : {&s.then_branch, &s.else_branch, &s.body, &s.for_init,
                            &s.for_step})
            if (*st) rename_stmt(**st, info, caps, shadows);
        for (auto& st : s.stmts) rename_stmt(*st, info, caps, shadows);
        if (s.kind == StmtKind::Decl) shadows.back().insert(s.name);
    }

    void rename_expr(Expr& e, const ClosureInfo& info, const std::set<std::string>& caps,
                     std::vector<std::set<std::string>>& shadows) {
        if (e.callee_expr) rename_expr(*e.callee_expr, info, caps, shadows);
        for (auto& a : e.args) rename_expr(*a, info, caps, shadows);
        if (e.kind != ExprKind::Var || !caps.count(e.text)) return;
        for (const auto& sh : shadows)
            if (sh.count(e.text)) return;
        // x -> __env.x
        auto base = std::make_unique<Expr>(ExprKind::Var, e.span);
        base->text = "__env";
        base->type = make_closure(info.record_name);
        e.kind = ExprKind::Member;
        e.op = ".";
        // e.text stays the field name; e.type stays the stored type
        e.args.clear();
        e.args.push_back(std::move(base));
    }
};

}  // namespace

TransformResult monomorphize(SourceUnit& unit, DiagBag& diags) {
    Checker checker(unit, diags);
    checker.run();
    TransformResult tr;
    tr.instantiations = std::move(checker.instantiations);
    tr.closures = std::move(checker.closures);
    return tr;
}

void closure_convert(SourceUnit& unit, TransformResult& tr, DiagBag& diags) {
    Converter conv{unit, tr, diags};
    conv.run();
}

}  // namespace swuc
