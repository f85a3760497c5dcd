#pragma once
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "swuc/diag.hpp"
#include "swuc/type.hpp"

namespace swuc {

// Where a function's raw target specification came from.
enum class TargetOrigin { Attribute, Pragma, GlobalDefault };

struct RawTargetSpec {
    std::vector<std::string> explicit_marks;  // ordered, from {host, slave, infer, kernel}
    std::string pragma_default = "host";      // host | slave | infer
    TargetOrigin origin = TargetOrigin::GlobalDefault;

    bool has_mark(const std::string& m) const {
        for (const auto& x : explicit_marks)
            if (x == m) return true;
        return false;
    }
};

struct Param {
    Type type;
    std::string name;
    Span span;
};

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

enum class ExprKind : uint8_t {
    IntLit,
    FloatLit,
    BoolLit,
    StrLit,
    Var,
    Unary,      // op in {-, !, *, ++pre, --pre, ++post, --post}; operand in args[0]
    Binary,     // op; operands in args[0], args[1]
    Call,       // callee name (direct) or callee_expr (closure value)
    Index,      // args[0][args[1]]
    Member,     // args[0].text  (op "->" for pointer access)
    Lambda,     // pre-conversion only
    SizeofType, // sizeof(type_arg); folded during monomorphization
    MakeClosure // post-conversion: construct closure record, capture inits in args
};

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct LambdaInfo {
    bool by_ref = false;  // [&] vs [=]
    std::vector<Param> params;
    std::vector<std::string> marks;      // attribute list after the parameter list
    std::string pragma_default = "host"; // active default at the lambda's site
    StmtPtr body;                        // Block
    int closure_id = -1;                 // assigned by monomorphize
};

struct Expr {
    ExprKind kind;
    Span span;
    Type type;  // filled by the type checker

    int64_t ival = 0;
    double fval = 0;
    std::string text;  // string literal / variable name / member name
    std::string op;

    std::string callee;        // direct call target (function or builtin)
    ExprPtr callee_expr;       // closure-typed value being invoked
    bool has_type_arg = false; // f<type>(...)
    Type type_arg;

    std::unique_ptr<LambdaInfo> lambda;
    std::vector<ExprPtr> args;

    Expr(ExprKind k, Span s) : kind(k), span(s) {}
};

enum class StmtKind : uint8_t {
    Block,
    Decl,
    Assign,   // op in {=, +=, -=, *=, /=}
    If,
    While,
    For,
    Return,
    ExprStmt,
    KernelLaunch,  // stub body: pack own params, launch `symbol`, join
    KernelUnpack,  // wrapper body: unpack local param block, call `symbol`
};

struct Stmt {
    StmtKind kind;
    Span span;

    // Decl
    Type decl_type;
    std::string name;
    bool is_local = false;
    ExprPtr init;

    // Assign
    ExprPtr lhs;
    ExprPtr rhs;
    std::string op;

    // If / While / For
    ExprPtr cond;
    StmtPtr then_branch;
    StmtPtr else_branch;
    StmtPtr body;
    StmtPtr for_init;
    StmtPtr for_step;

    // Block
    std::vector<StmtPtr> stmts;

    // Return / ExprStmt
    ExprPtr expr;

    // Kernel lowering: launch target / original body symbol, and the
    // parameter list the block layout is derived from.
    std::string symbol;
    std::vector<Param> k_params;

    Stmt(StmtKind k, Span s) : kind(k), span(s) {}
};

struct RecordDecl {
    std::string name;
    std::vector<std::pair<std::string, Type>> fields;  // ordered
    std::vector<std::string> marks;
    Span span;
    bool synthesized = false;  // closure records
};

struct Function {
    std::string name;  // mangled after monomorphization / splitting
    bool is_generic = false;
    std::string generic_param;  // "T"
    std::vector<Param> params;
    Type ret;
    StmtPtr body;  // null for a prototype
    RawTargetSpec target;
    Span span;

    // Instantiation bookkeeping (set by monomorphize).
    std::string instantiated_from;  // generic template name, empty otherwise
    Type instantiation_arg;
    std::vector<Span> origin_sites;
    std::vector<std::string> origin_functions;  // functions whose call sites requested it

    bool synthesized = false;  // lifted lambdas, kernel stubs/wrappers
};

struct SourceUnit {
    std::vector<RecordDecl> records;
    std::vector<std::unique_ptr<Function>> functions;
    bool pragma_balanced = true;

    Function* find(const std::string& name) {
        for (auto& f : functions)
            if (f->name == name) return f.get();
        return nullptr;
    }
    const Function* find(const std::string& name) const {
        for (auto& f : functions)
            if (f->name == name) return f.get();
        return nullptr;
    }
    const RecordDecl* find_record(const std::string& name) const {
        for (auto& r : records)
            if (r.name == name) return &r;
        return nullptr;
    }
};

ExprPtr clone_expr(const Expr& e);
StmtPtr clone_stmt(const Stmt& s);
std::unique_ptr<Function> clone_function(const Function& f);

}  // namespace swuc
