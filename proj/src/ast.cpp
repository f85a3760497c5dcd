#include "swuc/ast.hpp"

namespace swuc {

ExprPtr clone_expr(const Expr& e) {
    auto c = std::make_unique<Expr>(e.kind, e.span);
    c->type = e.type;
    c->ival = e.ival;
    c->fval = e.fval;
    c->text = e.text;
    c->op = e.op;
    c->callee = e.callee;
    if (e.callee_expr) c->callee_expr = clone_expr(*e.callee_expr);
    c->has_type_arg = e.has_type_arg;
    c->type_arg = e.type_arg;
    if (e.lambda) {
        auto li = std::make_unique<LambdaInfo>();
        li->by_ref = e.lambda->by_ref;
        li->params = e.lambda->params;
        li->marks = e.lambda->marks;
        li->pragma_default = e.lambda->pragma_default;
        li->closure_id = e.lambda->closure_id;
        if (e.lambda->body) li->body = clone_stmt(*e.lambda->body);
        c->lambda = std::move(li);
    }
    for (const auto& a : e.args) c->args.push_back(clone_expr(*a));
    return c;
}

StmtPtr clone_stmt(const Stmt& s) {
    auto c = std::make_unique<Stmt>(s.kind, s.span);
    c->decl_type = s.decl_type;
    c->name = s.name;
    c->is_local = s.is_local;
    if (s.init) c->init = clone_expr(*s.init);
    if (s.lhs) c->lhs = clone_expr(*s.lhs);
    if (s.rhs) c->rhs = clone_expr(*s.rhs);
    c->op = s.op;
    if (s.cond) c->cond = clone_expr(*s.cond);
    if (s.then_branch) c->then_branch = clone_stmt(*s.then_branch);
    if (s.else_branch) c->else_branch = clone_stmt(*s.else_branch);
    if (s.body) c->body = clone_stmt(*s.body);
    if (s.for_init) c->for_init = clone_stmt(*s.for_init);
    if (s.for_step) c->for_step = clone_stmt(*s.for_step);
    for (const auto& st : s.stmts) c->stmts.push_back(clone_stmt(*st));
    if (s.expr) c->expr = clone_expr(*s.expr);
    c->symbol = s.symbol;
    c->k_params = s.k_params;
    return c;
}

std::unique_ptr<Function> clone_function(const Function& f) {
    auto c = std::make_unique<Function>();
    c->name = f.name;
    c->is_generic = f.is_generic;
    c->generic_param = f.generic_param;
    c->params = f.params;
    c->ret = f.ret;
    if (f.body) c->body = clone_stmt(*f.body);
    c->target = f.target;
    c->span = f.span;
    c->instantiated_from = f.instantiated_from;
    c->instantiation_arg = f.instantiation_arg;
    c->origin_sites = f.origin_sites;
    c->origin_functions = f.origin_functions;
    c->synthesized = f.synthesized;
    return c;
}

}  // namespace swuc
