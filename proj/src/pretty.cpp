#include "swuc/pretty.hpp"

#include <sstream>

namespace swuc {

namespace {

std::string ind(int n) { return std::string(static_cast<size_t>(n) * 4, ' '); }

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\\': out += "\\\\"; break;
            case '"': out += "\\\""; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    std::string s = os.str();
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
        s += ".0";
    return s;
}

// Declarator form: arrays go after the name.
std::string decl_to_string(const Type& t, const std::string& name) {
    if (t.kind == TypeKind::Array)
        return spell_source(*t.elem) + " " + name + "[" + std::to_string(t.count) + "]";
    return spell_source(t) + " " + name;
}

}  // namespace

std::string print_expr(const Expr& e) {
    switch (e.kind) {
        case ExprKind::IntLit: return std::to_string(e.ival);
        case ExprKind::FloatLit: return fmt_double(e.fval);
        case ExprKind::BoolLit: return e.ival ? "true" : "false";
        case ExprKind::StrLit: return "\"" + escape(e.text) + "\"";
        case ExprKind::Var: return e.text;
        case ExprKind::Unary: {
            std::string a = "(" + print_expr(*e.args[0]) + ")";
            if (e.op == "++pre") return "++" + a;
            if (e.op == "--pre") return "--" + a;
            if (e.op == "++post") return a + "++";
            if (e.op == "--post") return a + "--";
            return e.op + a;
        }
        case ExprKind::Binary:
            return "(" + print_expr(*e.args[0]) + " " + e.op + " " +
                   print_expr(*e.args[1]) + ")";
        case ExprKind::Index:
            return print_expr(*e.args[0]) + "[" + print_expr(*e.args[1]) + "]";
        case ExprKind::Member:
            return print_expr(*e.args[0]) + e.op + e.text;
        case ExprKind::SizeofType:
            return "sizeof(" + spell_source(e.type_arg) + ")";
        case ExprKind::Call: {
            std::string s;
            if (e.callee_expr)
                s = print_expr(*e.callee_expr);
            else {
                s = e.callee;
                if (e.has_type_arg) s += "<" + spell_source(e.type_arg) + ">";
            }
            s += "(";
            for (size_t i = 0; i < e.args.size(); ++i) {
                if (i) s += ", ";
                s += print_expr(*e.args[i]);
            }
            return s + ")";
        }
        case ExprKind::Lambda: {
            const auto& li = *e.lambda;
            std::string s = li.by_ref ? "[&](" : "[=](";
            for (size_t i = 0; i < li.params.size(); ++i) {
                if (i) s += ", ";
                s += decl_to_string(li.params[i].type, li.params[i].name);
            }
            s += ")";
            for (const auto& m : li.marks) s += " __attribute((" + m + "))";
            s += " " + print_stmt(*li.body, 0);
            // single-line body form
            return s;
        }
        case ExprKind::MakeClosure: {
            std::string s = "make_closure<" + e.type.name + ">(";
            for (size_t i = 0; i < e.args.size(); ++i) {
                if (i) s += ", ";
                s += print_expr(*e.args[i]);
            }
            return s + ")";
        }
    }
    return "?";
}

std::string print_stmt(const Stmt& s, int indent) {
    std::ostringstream os;
    switch (s.kind) {
        case StmtKind::Block: {
            os << "{\n";
            for (const auto& st : s.stmts) os << ind(indent + 1) << print_stmt(*st, indent + 1);
            os << ind(indent) << "}";
            break;
        }
        case StmtKind::Decl:
            os << (s.is_local ? "local " : "") << decl_to_string(s.decl_type, s.name);
            if (s.init) os << " = " << print_expr(*s.init);
            os << ";";
            break;
        case StmtKind::Assign:
            os << print_expr(*s.lhs) << " " << s.op << " " << print_expr(*s.rhs) << ";";
            break;
        case StmtKind::If:
            os << "if (" << print_expr(*s.cond) << ") " << print_stmt(*s.then_branch, indent);
            if (s.else_branch) os << " else " << print_stmt(*s.else_branch, indent);
            break;
        case StmtKind::While:
            os << "while (" << print_expr(*s.cond) << ") " << print_stmt(*s.body, indent);
            break;
        case StmtKind::For: {
            auto chomp = [](std::string s) {
                while (!s.empty() && (s.back() == '\n' || s.back() == ' ')) s.pop_back();
                return s;
            };
            os << "for (";
            if (s.for_init) {
                os << chomp(print_stmt(*s.for_init, 0));  // simple stmts end with ';'
            } else {
                os << ";";
            }
            os << " ";
            if (s.cond) os << print_expr(*s.cond);
            os << "; ";
            if (s.for_step) {
                std::string step = chomp(print_stmt(*s.for_step, 0));
                if (!step.empty() && step.back() == ';') step.pop_back();
                os << step;
            }
            os << ") " << print_stmt(*s.body, indent);
            break;
        }
        case StmtKind::Return:
            os << "return";
            if (s.expr) os << " " << print_expr(*s.expr);
            os << ";";
            break;
        case StmtKind::ExprStmt:
            os << print_expr(*s.expr) << ";";
            break;
        case StmtKind::KernelLaunch:
            os << "__launch " << s.symbol << "(";
            for (size_t i = 0; i < s.k_params.size(); ++i) {
                if (i) os << ", ";
                os << s.k_params[i].name;
            }
            os << ");";
            break;
        case StmtKind::KernelUnpack:
            os << "__unpack_and_call " << s.symbol << "(";
            for (size_t i = 0; i < s.k_params.size(); ++i) {
                if (i) os << ", ";
                os << decl_to_string(s.k_params[i].type, s.k_params[i].name);
            }
            os << ");";
            break;
    }
    os << "\n";
    return os.str();
}

std::string print_function(const Function& f) {
    std::ostringstream os;
    if (f.is_generic) os << "template <" << f.generic_param << "> ";
    for (const auto& m : f.target.explicit_marks) os << "__attribute((" << m << ")) ";
    os << spell_source(f.ret) << " " << f.name << "(";
    for (size_t i = 0; i < f.params.size(); ++i) {
        if (i) os << ", ";
        os << decl_to_string(f.params[i].type, f.params[i].name);
    }
    os << ")";
    if (f.body)
        os << " " << print_stmt(*f.body, 0);
    else
        os << ";\n";
    return os.str();
}

std::string print_unit(const SourceUnit& unit) {
    std::ostringstream os;
    for (const auto& r : unit.records) {
        for (const auto& m : r.marks) os << "__attribute((" << m << ")) ";
        os << "struct " << r.name << " {\n";
        for (const auto& [fname, ftype] : r.fields)
            os << "    " << decl_to_string(ftype, fname) << ";\n";
        os << "};\n\n";
    }
    for (const auto& f : unit.functions) {
        bool wrapped = f->target.pragma_default != "host";
        if (wrapped) os << "#pragma swuc push " << f->target.pragma_default << "\n";
        os << print_function(*f);
        if (wrapped) os << "#pragma swuc pop\n";
        os << "\n";
    }
    return os.str();
}

namespace {

bool spec_equal(const RawTargetSpec& a, const RawTargetSpec& b) {
    return a.explicit_marks == b.explicit_marks && a.pragma_default == b.pragma_default;
}

}  // namespace

bool unit_equal(const SourceUnit& a, const SourceUnit& b) {
    if (a.records.size() != b.records.size() || a.functions.size() != b.functions.size())
        return false;
    for (size_t i = 0; i < a.records.size(); ++i) {
        if (a.records[i].name != b.records[i].name) return false;
        if (a.records[i].fields != b.records[i].fields) return false;
        if (a.records[i].marks != b.records[i].marks) return false;
    }
    for (size_t i = 0; i < a.functions.size(); ++i) {
        const Function& fa = *a.functions[i];
        const Function& fb = *b.functions[i];
        if (fa.name != fb.name || fa.is_generic != fb.is_generic) return false;
        if (!spec_equal(fa.target, fb.target)) return false;
        // structural body comparison via printing
        if (print_function(fa) != print_function(fb)) return false;
    }
    return true;
}

}  // namespace swuc
