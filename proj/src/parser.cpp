#include "swuc/parser.hpp"

#include <cassert>
#include <set>
#include <sstream>

namespace swuc {

void apply_pragma_line(const std::string& pragma_line, Span span, PragmaStack& stack,
                       DiagBag& diags) {
    std::istringstream iss(pragma_line);
    std::string hash, swuc_word, cmd, target;
    iss >> hash >> swuc_word >> cmd;
    if (hash != "#pragma" || swuc_word != "swuc") {
        diags.error("E_PRAGMA_MALFORMED", "malformed swuc pragma: " + pragma_line, span);
        return;
    }
    if (cmd == "push") {
        iss >> target;
        std::string rest;
        iss >> rest;
        if ((target != "host" && target != "slave" && target != "infer") || !rest.empty()) {
            diags.error("E_PRAGMA_MALFORMED",
                        "expected `#pragma swuc push <host|slave|infer>`", span);
            return;
        }
        stack.push(target);
    } else if (cmd == "pop") {
        std::string rest;
        iss >> rest;
        if (!rest.empty()) {
            diags.error("E_PRAGMA_MALFORMED", "unexpected text after `pop`", span);
            return;
        }
        if (!stack.pop())
            diags.error("E_PRAGMA_UNDERFLOW", "`#pragma swuc pop` with empty default stack",
                        span);
    } else {
        diags.error("E_PRAGMA_MALFORMED", "unknown swuc pragma subcommand: " + cmd, span);
    }
}

namespace {

struct ParseAbort {};

struct Parser {
    const std::vector<Token>& toks;
    DiagBag& diags;
    size_t pos = 0;
    SourceUnit unit;
    PragmaStack pragma_stack;
    std::set<std::string> record_names;

    const Token& peek(size_t k = 0) const {
        size_t i = pos + k;
        return i < toks.size() ? toks[i] : toks.back();
    }
    const Token& cur() const { return peek(); }
    Span here() const { return {cur().line, cur().column}; }
    void bump() {
        if (pos + 1 < toks.size()) ++pos;
    }

    [[noreturn]] void fail(const std::string& expected) {
        std::string found = cur().kind == TokenKind::Eof
                                ? "end of file"
                                : "`" + cur().lexeme + "`";
        diags.error("E_PARSE", "expected " + expected + ", found " + found, here());
        throw ParseAbort{};
    }

    void expect_punct(const std::string& p) {
        if (!cur().is_punct(p)) fail("`" + p + "`");
        bump();
    }
    void expect_kw(const std::string& k) {
        if (!cur().is_kw(k)) fail("`" + k + "`");
        bump();
    }
    std::string expect_ident() {
        if (cur().kind != TokenKind::Identifier) fail("identifier");
        std::string s = cur().lexeme;
        bump();
        return s;
    }

    // -- types --------------------------------------------------------------

    bool at_type_start(const std::string& generic_param) const {
        const Token& t = cur();
        if (t.is_kw("const")) return true;
        if (t.kind == TokenKind::Keyword)
            return t.lexeme == "int" || t.lexeme == "long" || t.lexeme == "float" ||
                   t.lexeme == "double" || t.lexeme == "bool" || t.lexeme == "void";
        if (t.kind == TokenKind::Identifier)
            return record_names.count(t.lexeme) != 0 ||
                   (!generic_param.empty() && t.lexeme == generic_param);
        return false;
    }

    Type parse_type(const std::string& generic_param) {
        if (cur().is_kw("const")) bump();
        Type base;
        const Token& t = cur();
        if (t.is_kw("int")) base = make_int();
        else if (t.is_kw("long")) base = make_long();
        else if (t.is_kw("float")) base = make_float();
        else if (t.is_kw("double")) base = make_double();
        else if (t.is_kw("bool")) base = make_bool();
        else if (t.is_kw("void")) base = make_void();
        else if (t.kind == TokenKind::Identifier &&
                 !generic_param.empty() && t.lexeme == generic_param)
            base = make_generic(t.lexeme);
        else if (t.kind == TokenKind::Identifier && record_names.count(t.lexeme))
            base = make_record(t.lexeme);
        else
            fail("type");
        bump();
        if (cur().is_kw("const")) bump();
        while (cur().is_punct("*")) {
            bump();
            base = make_pointer(base);
            if (cur().is_kw("const")) bump();
        }
        return base;
    }

    // -- attributes ----------------------------------------------------------

    std::vector<std::string> parse_attrs() {
        std::vector<std::string> marks;
        while (cur().is_kw("__attribute")) {
            bump();
            expect_punct("(");
            expect_punct("(");
            if (cur().kind != TokenKind::Identifier) fail("attribute name");
            std::string m = cur().lexeme;
            if (m != "host" && m != "slave" && m != "infer" && m != "kernel") {
                diags.error("E_PARSE", "unknown extension attribute `" + m + "`", here());
                throw ParseAbort{};
            }
            bump();
            expect_punct(")");
            expect_punct(")");
            marks.push_back(m);
        }
        return marks;
    }

    // -- top level ------------------------------------------------------------

    void prescan_records() {
        for (size_t i = 0; i + 1 < toks.size(); ++i) {
            if (toks[i].is_kw("struct") && toks[i + 1].kind == TokenKind::Identifier)
                record_names.insert(toks[i + 1].lexeme);
        }
    }

    void sync_top_level() {
        int depth = 0;
        while (cur().kind != TokenKind::Eof) {
            if (cur().is_punct("{")) ++depth;
            if (cur().is_punct("}")) {
                --depth;
                if (depth <= 0) {
                    bump();
                    if (cur().is_punct(";")) bump();
                    return;
                }
            }
            if (cur().is_punct(";") && depth <= 0) {
                bump();
                return;
            }
            bump();
        }
    }

    SourceUnit run() {
        prescan_records();
        while (cur().kind != TokenKind::Eof) {
            if (cur().kind == TokenKind::PragmaLine) {
                apply_pragma_line(cur().lexeme, here(), pragma_stack, diags);
                bump();
                continue;
            }
            try {
                parse_top_decl();
            } catch (ParseAbort&) {
                sync_top_level();
            }
        }
        if (pragma_stack.depth() != 0) {
            unit.pragma_balanced = false;
            diags.warning("W_PRAGMA_UNCLOSED",
                          "swuc default stack not empty at end of file", here());
        }
        return std::move(unit);
    }

    void parse_top_decl() {
        Span start = here();
        std::vector<std::string> marks = parse_attrs();

        if (cur().is_kw("struct")) {
            parse_record(std::move(marks), start);
            return;
        }

        bool generic = false;
        std::string generic_param;
        if (cur().is_kw("template")) {
            bump();
            expect_punct("<");
            generic_param = expect_ident();
            expect_punct(">");
            generic = true;
            // attributes may also appear after the template header
            auto more = parse_attrs();
            marks.insert(marks.end(), more.begin(), more.end());
        }

        auto fn = std::make_unique<Function>();
        fn->span = start;
        fn->is_generic = generic;
        fn->generic_param = generic_param;
        fn->ret = parse_type(generic_param);
        fn->name = expect_ident();
        fn->target.explicit_marks = std::move(marks);
        fn->target.pragma_default = pragma_stack.active();
        if (!fn->target.explicit_marks.empty())
            fn->target.origin = TargetOrigin::Attribute;
        else if (pragma_stack.depth() > 0)
            fn->target.origin = TargetOrigin::Pragma;
        else
            fn->target.origin = TargetOrigin::GlobalDefault;

        expect_punct("(");
        if (!cur().is_punct(")")) {
            while (true) {
                Param p;
                p.span = here();
                p.type = parse_type(generic_param);
                p.name = expect_ident();
                if (cur().is_punct("[")) {
                    // array parameters decay to pointers
                    bump();
                    if (cur().kind == TokenKind::IntLiteral) bump();
                    expect_punct("]");
                    p.type = make_pointer(p.type);
                }
                fn->params.push_back(std::move(p));
                if (cur().is_punct(",")) {
                    bump();
                    continue;
                }
                break;
            }
        }
        expect_punct(")");

        if (cur().is_punct(";")) {
            bump();  // prototype
        } else {
            fn->body = parse_block(generic_param);
        }
        unit.functions.push_back(std::move(fn));
    }

    void parse_record(std::vector<std::string> marks, Span start) {
        expect_kw("struct");
        RecordDecl rec;
        rec.span = start;
        rec.marks = std::move(marks);
        rec.name = expect_ident();
        record_names.insert(rec.name);
        expect_punct("{");
        while (!cur().is_punct("}")) {
            Type ft = parse_type("");
            std::string fname = expect_ident();
            if (cur().is_punct("[")) {
                bump();
                if (cur().kind != TokenKind::IntLiteral) fail("array size");
                int64_t n = std::stoll(cur().lexeme);
                bump();
                expect_punct("]");
                ft = make_array(ft, n);
            }
            expect_punct(";");
            rec.fields.emplace_back(fname, ft);
        }
        expect_punct("}");
        expect_punct(";");
        unit.records.push_back(std::move(rec));
    }

    // -- statements ----------------------------------------------------------

    StmtPtr parse_block(const std::string& generic_param) {
        Span sp = here();
        expect_punct("{");
        auto block = std::make_unique<Stmt>(StmtKind::Block, sp);
        while (!cur().is_punct("}")) {
            if (cur().kind == TokenKind::Eof) fail("`}`");
            if (cur().kind == TokenKind::PragmaLine) {
                diags.error("E_PARSE", "swuc pragma not allowed inside a function body",
                            here());
                bump();
                continue;
            }
            try {
                block->stmts.push_back(parse_stmt(generic_param));
            } catch (ParseAbort&) {
                while (cur().kind != TokenKind::Eof && !cur().is_punct(";") &&
                       !cur().is_punct("}"))
                    bump();
                if (cur().is_punct(";")) bump();
            }
        }
        bump();  // }
        return block;
    }

    bool at_decl_start(const std::string& generic_param) const {
        if (cur().is_kw("local")) return true;
        if (cur().is_kw("const")) return true;
        if (cur().kind == TokenKind::Keyword && at_type_start(generic_param)) return true;
        if (cur().kind == TokenKind::Identifier &&
            (record_names.count(cur().lexeme) ||
             (!generic_param.empty() && cur().lexeme == generic_param))) {
            // `Point p` or `T* x` is a declaration, `p.x = 1` is not
            const Token& n1 = peek(1);
            if (n1.kind == TokenKind::Identifier) return true;
            if (n1.is_punct("*") &&
                (peek(2).kind == TokenKind::Identifier || peek(2).is_punct("*")))
                return true;
        }
        return false;
    }

    StmtPtr parse_stmt(const std::string& generic_param) {
        Span sp = here();
        if (cur().is_punct("{")) return parse_block(generic_param);
        if (cur().is_kw("if")) {
            bump();
            auto s = std::make_unique<Stmt>(StmtKind::If, sp);
            expect_punct("(");
            s->cond = parse_expr(generic_param);
            expect_punct(")");
            s->then_branch = parse_stmt(generic_param);
            if (cur().is_kw("else")) {
                bump();
                s->else_branch = parse_stmt(generic_param);
            }
            return s;
        }
        if (cur().is_kw("while")) {
            bump();
            auto s = std::make_unique<Stmt>(StmtKind::While, sp);
            expect_punct("(");
            s->cond = parse_expr(generic_param);
            expect_punct(")");
            s->body = parse_stmt(generic_param);
            return s;
        }
        if (cur().is_kw("for")) {
            bump();
            auto s = std::make_unique<Stmt>(StmtKind::For, sp);
            expect_punct("(");
            if (!cur().is_punct(";"))
                s->for_init = parse_simple_stmt(generic_param);
            else
                bump();
            if (!cur().is_punct(";")) s->cond = parse_expr(generic_param);
            expect_punct(";");
            if (!cur().is_punct(")")) s->for_step = parse_assign_or_expr(generic_param);
            expect_punct(")");
            s->body = parse_stmt(generic_param);
            return s;
        }
        if (cur().is_kw("return")) {
            bump();
            auto s = std::make_unique<Stmt>(StmtKind::Return, sp);
            if (!cur().is_punct(";")) s->expr = parse_expr(generic_param);
            expect_punct(";");
            return s;
        }
        auto s = parse_simple_stmt(generic_param);
        return s;
    }

    // decl / assign / exprstmt, consuming the trailing `;`
    StmtPtr parse_simple_stmt(const std::string& generic_param) {
        Span sp = here();
        if (at_decl_start(generic_param)) {
            auto s = std::make_unique<Stmt>(StmtKind::Decl, sp);
            if (cur().is_kw("local")) {
                s->is_local = true;
                bump();
            }
            s->decl_type = parse_type(generic_param);
            s->name = expect_ident();
            if (cur().is_punct("[")) {
                bump();
                if (cur().kind != TokenKind::IntLiteral) fail("array size");
                int64_t n = std::stoll(cur().lexeme);
                bump();
                expect_punct("]");
                s->decl_type = make_array(s->decl_type, n);
            }
            if (cur().is_punct("=")) {
                bump();
                s->init = parse_expr(generic_param);
            }
            expect_punct(";");
            return s;
        }
        auto s = parse_assign_or_expr(generic_param);
        expect_punct(";");
        return s;
    }

    // assign / exprstmt without the trailing `;` (shared with for-steps)
    StmtPtr parse_assign_or_expr(const std::string& generic_param) {
        Span sp = here();
        ExprPtr e = parse_expr(generic_param);
        static const char* assign_ops[] = {"=", "+=", "-=", "*=", "/="};
        for (const char* op : assign_ops) {
            if (cur().is_punct(op)) {
                bump();
                auto s = std::make_unique<Stmt>(StmtKind::Assign, sp);
                s->lhs = std::move(e);
                s->op = op;
                s->rhs = parse_expr(generic_param);
                return s;
            }
        }
        auto s = std::make_unique<Stmt>(StmtKind::ExprStmt, sp);
        s->expr = std::move(e);
        return s;
    }

    // -- expressions -----------------------------------------------------------

    ExprPtr parse_expr(const std::string& g) { return parse_or(g); }

    ExprPtr make_bin(std::string op, ExprPtr a, ExprPtr b, Span sp) {
        auto e = std::make_unique<Expr>(ExprKind::Binary, sp);
        e->op = std::move(op);
        e->args.push_back(std::move(a));
        e->args.push_back(std::move(b));
        return e;
    }

    ExprPtr parse_or(const std::string& g) {
        auto e = parse_and(g);
        while (cur().is_punct("||")) {
            Span sp = here();
            bump();
            e = make_bin("||", std::move(e), parse_and(g), sp);
        }
        return e;
    }
    ExprPtr parse_and(const std::string& g) {
        auto e = parse_eq(g);
        while (cur().is_punct("&&")) {
            Span sp = here();
            bump();
            e = make_bin("&&", std::move(e), parse_eq(g), sp);
        }
        return e;
    }
    ExprPtr parse_eq(const std::string& g) {
        auto e = parse_rel(g);
        while (cur().is_punct("==") || cur().is_punct("!=")) {
            std::string op = cur().lexeme;
            Span sp = here();
            bump();
            e = make_bin(op, std::move(e), parse_rel(g), sp);
        }
        return e;
    }
    ExprPtr parse_rel(const std::string& g) {
        auto e = parse_add(g);
        while (cur().is_punct("<") || cur().is_punct(">") || cur().is_punct("<=") ||
               cur().is_punct(">=")) {
            std::string op = cur().lexeme;
            Span sp = here();
            bump();
            e = make_bin(op, std::move(e), parse_add(g), sp);
        }
        return e;
    }
    ExprPtr parse_add(const std::string& g) {
        auto e = parse_mul(g);
        while (cur().is_punct("+") || cur().is_punct("-")) {
            std::string op = cur().lexeme;
            Span sp = here();
            bump();
            e = make_bin(op, std::move(e), parse_mul(g), sp);
        }
        return e;
    }
    ExprPtr parse_mul(const std::string& g) {
        auto e = parse_unary(g);
        while (cur().is_punct("*") || cur().is_punct("/") || cur().is_punct("%")) {
            std::string op = cur().lexeme;
            Span sp = here();
            bump();
            e = make_bin(op, std::move(e), parse_unary(g), sp);
        }
        return e;
    }

    ExprPtr parse_unary(const std::string& g) {
        Span sp = here();
        if (cur().is_punct("-") || cur().is_punct("!") || cur().is_punct("*")) {
            std::string op = cur().lexeme;
            bump();
            auto e = std::make_unique<Expr>(ExprKind::Unary, sp);
            e->op = op;
            e->args.push_back(parse_unary(g));
            return e;
        }
        if (cur().is_punct("++") || cur().is_punct("--")) {
            std::string op = cur().lexeme;
            bump();
            auto e = std::make_unique<Expr>(ExprKind::Unary, sp);
            e->op = op + "pre";
            e->args.push_back(parse_unary(g));
            return e;
        }
        if (cur().is_punct("&")) {
            diags.error("E_FN_ADDR", "taking addresses with `&` is not supported", sp);
            throw ParseAbort{};
        }
        return parse_postfix(g);
    }

    ExprPtr parse_postfix(const std::string& g) {
        auto e = parse_primary(g);
        while (true) {
            Span sp = here();
            if (cur().is_punct("[")) {
                bump();
                auto idx = std::make_unique<Expr>(ExprKind::Index, sp);
                idx->args.push_back(std::move(e));
                idx->args.push_back(parse_expr(g));
                expect_punct("]");
                e = std::move(idx);
                continue;
            }
            if (cur().is_punct(".") || cur().is_punct("->")) {
                std::string op = cur().lexeme;
                bump();
                auto m = std::make_unique<Expr>(ExprKind::Member, sp);
                m->op = op;
                m->args.push_back(std::move(e));
                m->text = expect_ident();
                e = std::move(m);
                continue;
            }
            if (cur().is_punct("(")) {
                // invocation of a closure-typed value (named functions are
                // handled in parse_primary)
                bump();
                auto call = std::make_unique<Expr>(ExprKind::Call, sp);
                call->callee_expr = std::move(e);
                parse_args(*call, g);
                e = std::move(call);
                continue;
            }
            if (cur().is_punct("++") || cur().is_punct("--")) {
                std::string op = cur().lexeme;
                bump();
                auto u = std::make_unique<Expr>(ExprKind::Unary, sp);
                u->op = op + "post";
                u->args.push_back(std::move(e));
                e = std::move(u);
                continue;
            }
            break;
        }
        return e;
    }

    void parse_args(Expr& call, const std::string& g) {
        if (!cur().is_punct(")")) {
            while (true) {
                call.args.push_back(parse_expr(g));
                if (cur().is_punct(",")) {
                    bump();
                    continue;
                }
                break;
            }
        }
        expect_punct(")");
    }

    // Lookahead: `<` type `>` `(` after an identifier.
    bool at_explicit_type_arg(const std::string& g) const {
        if (!peek(1).is_punct("<")) return false;
        size_t k = 2;
        auto is_base = [&](const Token& t) {
            if (t.kind == TokenKind::Keyword)
                return t.lexeme == "int" || t.lexeme == "long" || t.lexeme == "float" ||
                       t.lexeme == "double" || t.lexeme == "bool" || t.lexeme == "const";
            return t.kind == TokenKind::Identifier &&
                   (record_names.count(t.lexeme) || (!g.empty() && t.lexeme == g));
        };
        if (!is_base(peek(k))) return false;
        ++k;
        while (peek(k).is_punct("*") || peek(k).is_kw("const")) ++k;
        return peek(k).is_punct(">") && peek(k + 1).is_punct("(");
    }

    ExprPtr parse_primary(const std::string& g) {
        Span sp = here();
        const Token& t = cur();
        if (t.kind == TokenKind::IntLiteral) {
            auto e = std::make_unique<Expr>(ExprKind::IntLit, sp);
            e->ival = std::stoll(t.lexeme);
            bump();
            return e;
        }
        if (t.kind == TokenKind::FloatLiteral) {
            auto e = std::make_unique<Expr>(ExprKind::FloatLit, sp);
            e->fval = std::stod(t.lexeme);
            bump();
            return e;
        }
        if (t.is_kw("true") || t.is_kw("false")) {
            auto e = std::make_unique<Expr>(ExprKind::BoolLit, sp);
            e->ival = t.is_kw("true") ? 1 : 0;
            bump();
            return e;
        }
        if (t.kind == TokenKind::StringLiteral) {
            auto e = std::make_unique<Expr>(ExprKind::StrLit, sp);
            e->text = unescape(t.lexeme);
            bump();
            return e;
        }
        if (t.is_punct("(")) {
            bump();
            auto e = parse_expr(g);
            expect_punct(")");
            return e;
        }
        if (t.is_punct("[")) return parse_lambda(g, sp);
        if (t.kind == TokenKind::Identifier) {
            if (t.lexeme == "sizeof" && peek(1).is_punct("(")) {
                bump();
                bump();
                auto e = std::make_unique<Expr>(ExprKind::SizeofType, sp);
                e->type_arg = parse_type(g);
                e->has_type_arg = true;
                expect_punct(")");
                return e;
            }
            std::string name = t.lexeme;
            if (at_explicit_type_arg(g)) {
                bump();  // name
                bump();  // <
                auto call = std::make_unique<Expr>(ExprKind::Call, sp);
                call->callee = name;
                call->type_arg = parse_type(g);
                call->has_type_arg = true;
                expect_punct(">");
                expect_punct("(");
                parse_args(*call, g);
                return call;
            }
            if (peek(1).is_punct("(")) {
                bump();
                bump();
                auto call = std::make_unique<Expr>(ExprKind::Call, sp);
                call->callee = name;
                parse_args(*call, g);
                return call;
            }
            bump();
            auto e = std::make_unique<Expr>(ExprKind::Var, sp);
            e->text = name;
            return e;
        }
        fail("expression");
    }

    ExprPtr parse_lambda(const std::string& g, Span sp) {
        expect_punct("[");
        bool by_ref;
        if (cur().is_punct("&")) {
            by_ref = true;
            bump();
        } else if (cur().is_punct("=")) {
            by_ref = false;
            bump();
        } else {
            fail("`&` or `=` in lambda capture");
        }
        expect_punct("]");
        auto e = std::make_unique<Expr>(ExprKind::Lambda, sp);
        auto li = std::make_unique<LambdaInfo>();
        li->by_ref = by_ref;
        li->pragma_default = pragma_stack.active();
        expect_punct("(");
        if (!cur().is_punct(")")) {
            while (true) {
                Param p;
                p.span = here();
                p.type = parse_type(g);
                p.name = expect_ident();
                li->params.push_back(std::move(p));
                if (cur().is_punct(",")) {
                    bump();
                    continue;
                }
                break;
            }
        }
        expect_punct(")");
        li->marks = parse_attrs();
        li->body = parse_block(g);
        e->lambda = std::move(li);
        return e;
    }

    static std::string unescape(const std::string& quoted) {
        std::string out;
        for (size_t i = 1; i + 1 < quoted.size(); ++i) {
            char c = quoted[i];
            if (c == '\\' && i + 2 < quoted.size() + 1) {
                char n = quoted[++i];
                switch (n) {
                    case 'n': out.push_back('\n'); break;
                    case 't': out.push_back('\t'); break;
                    case '\\': out.push_back('\\'); break;
                    case '"': out.push_back('"'); break;
                    default: out.push_back(n); break;
                }
            } else {
                out.push_back(c);
            }
        }
        return out;
    }
};

}  // namespace

SourceUnit parse(const std::vector<Token>& tokens, DiagBag& diags) {
    Parser p{tokens, diags};
    return p.run();
}

void frontend_check(SourceUnit& unit, DiagBag& diags) {
    auto check_marks = [&](std::vector<std::string>& marks, Span span, bool is_lambda) {
        // collapse duplicate identical marks with a warning
        std::vector<std::string> uniq;
        for (const auto& m : marks) {
            bool dup = false;
            for (const auto& u : uniq)
                if (u == m) dup = true;
            if (dup)
                diags.warning("W_ATTR_DUP", "duplicate attribute `" + m + "` ignored", span);
            else
                uniq.push_back(m);
        }
        marks = uniq;
        bool has_infer = false, has_kernel = false;
        for (const auto& m : marks) {
            if (m == "infer") has_infer = true;
            if (m == "kernel") has_kernel = true;
        }
        if (has_infer && marks.size() > 1)
            diags.error("E_ATTR_CONFLICT",
                        "`infer` is not compatible with other extension attributes", span);
        if (has_kernel && marks.size() > 1)
            diags.error("E_ATTR_CONFLICT",
                        "`kernel` is not compatible with other extension attributes", span);
        if (has_kernel && is_lambda)
            diags.error("E_KERNEL_LAMBDA", "`kernel` cannot be applied to a lambda", span);
    };

    struct Walker {
        decltype(check_marks)& check;
        void walk_expr(Expr& e) {
            if (e.kind == ExprKind::Lambda && e.lambda) {
                check(e.lambda->marks, e.span, true);
                if (e.lambda->body) walk_stmt(*e.lambda->body);
            }
            if (e.callee_expr) walk_expr(*e.callee_expr);
            for (auto& a : e.args) walk_expr(*a);
        }
        void walk_stmt(Stmt& s) {
            for (ExprPtr* e : {&s.init, &s.lhs, &s.rhs, &s.cond, &s.expr})
                if (*e) walk_expr(**e);
            for (StmtPtr* st :
                 {&s.then_branch, &s.else_branch, &s.body, &s.for_init, &s.for_step})
                if (*st) walk_stmt(**st);
            for (auto& st : s.stmts) walk_stmt(*st);
        }
    } walker{check_marks};

    for (auto& f : unit.functions) {
        check_marks(f->target.explicit_marks, f->span, false);
        if (f->body) walker.walk_stmt(*f->body);
    }
    for (auto& r : unit.records) {
        if (!r.marks.empty()) {
            check_marks(r.marks, r.span, false);
            diags.warning("W_RECORD_ATTR_UNUSED",
                          "record target attribute is accepted but has no effect", r.span);
        }
    }
}

}  // namespace swuc
