#pragma once
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "swuc/ast.hpp"
#include "swuc/diag.hpp"
#include "swuc/layout.hpp"

namespace swuc {

struct Instantiation {
    std::string generic_name;
    Type type_argument;
    std::string mangled_name;
    std::vector<Span> origin_sites;
    std::vector<std::string> origin_functions;
};

// One lifted lambda, recorded by the type checker during monomorphization
// and materialized by closure_convert.
struct ClosureInfo {
    int id = -1;
    std::string record_name;    // "__closure_N"
    std::string function_name;  // "__lambda_N"
    bool by_ref = false;
    struct Capture {
        std::string name;
        Type stored_type;   // value type, or pointer for by-ref array captures
        bool by_address = false;
        bool captured_local = false;  // captured a CPE-`local` array
    };
    std::vector<Capture> captures;
    std::vector<Param> params;
    Type ret;
    std::vector<std::string> marks;
    std::string pragma_default;
    Span span;
};

struct TransformResult {
    std::vector<Instantiation> instantiations;
    std::vector<ClosureInfo> closures;
};

// Type-checks the unit and instantiates every reachable generic, rewriting
// generic call sites to their mangled instantiations and folding sizeof(T).
// Lambdas are typed and assigned closure ids but left in place.
TransformResult monomorphize(SourceUnit& unit, DiagBag& diags);

// Replaces lambda expressions with closure-record construction, lifts lambda
// bodies to named functions, and turns closure-value invocations into direct
// calls. Requires monomorphize() to have run on the same unit.
void closure_convert(SourceUnit& unit, TransformResult& tr, DiagBag& diags);

// Max generic instantiation chain depth before E_RECURSIVE_INST.
inline constexpr int kMaxInstantiationDepth = 64;

std::string mangle_instantiation(const std::string& generic_name, const Type& arg);

}  // namespace swuc
