#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "swuc/graph.hpp"
#include "swuc/lexer.hpp"
#include "swuc/parser.hpp"
#include "swuc/transform.hpp"

using namespace swuc;

namespace {

struct Analyzed {
    SourceUnit unit;
    DiagBag diags;
    ProgramGraph graph;
};

Analyzed analyze_src(const std::string& src, unsigned shuffle_seed = 0) {
    Analyzed out;
    auto toks = tokenize(src, out.diags);
    out.unit = parse(toks, out.diags);
    frontend_check(out.unit, out.diags);
    REQUIRE_FALSE(out.diags.has_errors());
    TransformResult tr = monomorphize(out.unit, out.diags);
    REQUIRE_FALSE(out.diags.has_errors());
    closure_convert(out.unit, tr, out.diags);
    REQUIRE_FALSE(out.diags.has_errors());
    out.graph = build_program_graph(out.unit, out.diags);
    resolve_explicit_targets(out.graph, out.diags);
    infer_targets(out.graph, out.diags, shuffle_seed);
    if (!out.diags.has_errors())
        check_call_legality(out.graph, out.unit, out.diags);
    return out;
}

TargetSet ts_of(const Analyzed& a, const std::string& name) {
    auto it = a.graph.resolved_targets.find(name);
    REQUIRE(it != a.graph.resolved_targets.end());
    return it->second;
}

}  // namespace

TEST_CASE("lattice: meet is intersection of availability") {
    CHECK(meet(TargetSet::Both, TargetSet::Both) == TargetSet::Both);
    CHECK(meet(TargetSet::Both, TargetSet::Host) == TargetSet::Host);
    CHECK(meet(TargetSet::Both, TargetSet::Slave) == TargetSet::Slave);
    CHECK(meet(TargetSet::Host, TargetSet::Slave) == TargetSet::None);
    CHECK(meet(TargetSet::None, TargetSet::Both) == TargetSet::None);
    // idempotent and commutative over the whole lattice
    TargetSet all[] = {TargetSet::None, TargetSet::Host, TargetSet::Slave, TargetSet::Both};
    for (TargetSet a : all) {
        CHECK(meet(a, a) == a);
        for (TargetSet b : all) {
            CHECK(meet(a, b) == meet(b, a));
            // meet can only shrink availability
            CHECK((static_cast<uint8_t>(meet(a, b)) & ~static_cast<uint8_t>(a)) == 0);
        }
    }
}

TEST_CASE("graph: call edges and kernel sites are separated") {
    auto a = analyze_src(
        "int helper(int x) { return x + 1; }\n"
        "__attribute((kernel)) void k(int* out) { out[cpe_id()] = 1; }\n"
        "int main() { int out[64]; k(out); return helper(0); }\n");
    REQUIRE_FALSE(a.diags.has_errors());
    CHECK(a.graph.call_edges.at("main").count("helper") == 1);
    CHECK(a.graph.call_edges.at("main").count("k") == 0);
    REQUIRE(a.graph.kernel_call_sites.size() == 1);
    CHECK(a.graph.kernel_call_sites[0].caller == "main");
    CHECK(a.graph.kernel_call_sites[0].kernel == "k");
    CHECK(a.graph.call_edges.at("k").count("cpe_id") == 1);
    CHECK(a.graph.kernel_flags.count("k") == 1);
}

TEST_CASE("graph: local declarations are tracked per function") {
    auto a = analyze_src(
        "__attribute((slave)) int f() { local int buf[4]; buf[0] = 1; return buf[0]; }\n"
        "int main() { return 0; }\n");
    CHECK(a.graph.uses_local_storage.count("f") == 1);
    CHECK(a.graph.uses_local_storage.count("main") == 0);
}

TEST_CASE("explicit targets: marks and pragma defaults") {
    auto a = analyze_src(
        "__attribute((host)) int h() { return 1; }\n"
        "__attribute((slave)) int s() { return 2; }\n"
        "__attribute((host)) __attribute((slave)) int b() { return 3; }\n"
        "#pragma swuc push slave\n"
        "int s2() { return 4; }\n"
        "#pragma swuc pop\n"
        "__attribute((kernel)) void k(int* p) { p[cpe_id()] = s(); }\n"
        "int main() { int p[64]; k(p); return h() + b(); }\n");
    REQUIRE_FALSE(a.diags.has_errors());
    CHECK(ts_of(a, "h") == TargetSet::Host);
    CHECK(ts_of(a, "s") == TargetSet::Slave);
    CHECK(ts_of(a, "b") == TargetSet::Both);
    CHECK(ts_of(a, "s2") == TargetSet::Slave);
    CHECK(ts_of(a, "k") == TargetSet::Slave);
    CHECK(ts_of(a, "main") == TargetSet::Host);
}

TEST_CASE("inference: a call-free infer function lands on BOTH") {
    auto a = analyze_src(
        "__attribute((infer)) int leaf(int x) { return x * x; }\n"
        "int main() { return leaf(3); }\n");
    REQUIRE_FALSE(a.diags.has_errors());
    CHECK(ts_of(a, "leaf") == TargetSet::Both);
}

TEST_CASE("inference: slave-only constraints cascade through a depth-5 chain") {
    auto a = analyze_src(
        "__attribute((infer)) int c5(int x) { return cpe_id() + x; }\n"
        "__attribute((infer)) int c4(int x) { return c5(x); }\n"
        "__attribute((infer)) int c3(int x) { return c4(x); }\n"
        "__attribute((infer)) int c2(int x) { return c3(x); }\n"
        "__attribute((infer)) int c1(int x) { return c2(x); }\n"
        "__attribute((kernel)) void k(int* out) { out[cpe_id()] = c1(1); }\n"
        "int main() { int out[64]; k(out); return 0; }\n");
    REQUIRE_FALSE(a.diags.has_errors());
    for (const char* n : {"c1", "c2", "c3", "c4", "c5"}) {
        CAPTURE(n);
        CHECK(ts_of(a, n) == TargetSet::Slave);
    }
}

TEST_CASE("inference: a cyclic trio inherits an external slave constraint") {
    auto a = analyze_src(
        "__attribute((slave)) int ext(int x) { return x + 1; }\n"
        "__attribute((infer)) int r1(int x);\n"
        "__attribute((infer)) int r3(int x) { if (x > 0) { return r1(x - 1); } return ext(x); }\n"
        "__attribute((infer)) int r2(int x) { return r3(x); }\n"
        "__attribute((infer)) int r1(int x) { return r2(x); }\n"
        "__attribute((kernel)) void k(int* out) { out[cpe_id()] = r1(3); }\n"
        "int main() { int out[64]; k(out); return 0; }\n");
    REQUIRE_FALSE(a.diags.has_errors());
    for (const char* n : {"r1", "r2", "r3"}) {
        CAPTURE(n);
        CHECK(ts_of(a, n) == TargetSet::Slave);
    }
}

TEST_CASE("inference: host-only plus slave-only callees is infeasible") {
    Analyzed a;
    auto toks = tokenize(
        "__attribute((host)) int h() { return 1; }\n"
        "__attribute((infer)) int torn() { return h() + cpe_id(); }\n"
        "int main() { return torn(); }\n",
        a.diags);
    a.unit = parse(toks, a.diags);
    frontend_check(a.unit, a.diags);
    TransformResult tr = monomorphize(a.unit, a.diags);
    closure_convert(a.unit, tr, a.diags);
    a.graph = build_program_graph(a.unit, a.diags);
    resolve_explicit_targets(a.graph, a.diags);
    infer_targets(a.graph, a.diags);
    CHECK(a.diags.has_code("E_INFER_INFEASIBLE"));
}

TEST_CASE("inference: result is invariant under 100 shuffled worklist orders") {
    const std::string src =
        "__attribute((host)) int h() { return 1; }\n"
        "__attribute((slave)) int s() { return 2; }\n"
        "__attribute((infer)) int a1() { return h(); }\n"
        "__attribute((infer)) int a2() { return a1(); }\n"
        "__attribute((infer)) int b1() { return s(); }\n"
        "__attribute((infer)) int b2() { return b1(); }\n"
        "__attribute((infer)) int free1() { return 5; }\n"
        "__attribute((infer)) int free2() { return free1(); }\n"
        "__attribute((infer)) int m1() { return min(free1(), free2()); }\n"
        "__attribute((kernel)) void k(int* out) { out[cpe_id()] = b2() + m1(); }\n"
        "int main() { int out[64]; k(out); return a2() + m1(); }\n";
    auto base = analyze_src(src, 0);
    REQUIRE_FALSE(base.diags.has_errors());
    CHECK(ts_of(base, "a1") == TargetSet::Host);
    CHECK(ts_of(base, "a2") == TargetSet::Host);
    CHECK(ts_of(base, "b1") == TargetSet::Slave);
    CHECK(ts_of(base, "b2") == TargetSet::Slave);
    CHECK(ts_of(base, "free1") == TargetSet::Both);
    CHECK(ts_of(base, "free2") == TargetSet::Both);
    CHECK(ts_of(base, "m1") == TargetSet::Both);
    for (unsigned seed = 1; seed <= 100; ++seed) {
        auto shuffled = analyze_src(src, seed);
        REQUIRE_FALSE(shuffled.diags.has_errors());
        CHECK(shuffled.graph.resolved_targets == base.graph.resolved_targets);
    }
}

TEST_CASE("inference: launch sites pin the caller to the host") {
    auto a = analyze_src(
        "__attribute((kernel)) void k(int* out) { out[cpe_id()] = 1; }\n"
        "__attribute((infer)) void go(int* out) { k(out); }\n"
        "int main() { int out[64]; go(out); return 0; }\n");
    REQUIRE_FALSE(a.diags.has_errors());
    CHECK(ts_of(a, "go") == TargetSet::Host);
}

TEST_CASE("inference: local storage pins SLAVE") {
    auto a = analyze_src(
        "__attribute((infer)) int stage(int x) { local int buf[8]; buf[0] = x; return buf[0]; }\n"
        "__attribute((kernel)) void k(int* out) { out[cpe_id()] = stage(2); }\n"
        "int main() { int out[64]; k(out); return 0; }\n");
    REQUIRE_FALSE(a.diags.has_errors());
    CHECK(ts_of(a, "stage") == TargetSet::Slave);
}

TEST_CASE("legality: host function calling a slave-only function") {
    auto a = analyze_src(
        "__attribute((slave)) int s() { return cpe_id(); }\n"
        "int main() { return s(); }\n");
    CHECK(a.diags.has_code("E_TARGET_MISMATCH"));
}

TEST_CASE("legality: BOTH function calling a host-only function") {
    auto a = analyze_src(
        "__attribute((host)) int h() { return 1; }\n"
        "__attribute((host)) __attribute((slave)) int b() { return h(); }\n"
        "int main() { return b(); }\n");
    CHECK(a.diags.has_code("E_TARGET_MISMATCH"));
}

TEST_CASE("legality: slave-only builtins are rejected on the host") {
    auto a = analyze_src("int main() { return cpe_id(); }\n");
    CHECK(a.diags.has_code("E_TARGET_MISMATCH"));
}

TEST_CASE("legality: kernels cannot be launched from slave-only code") {
    auto a = analyze_src(
        "__attribute((kernel)) void k2(int* out) { out[cpe_id()] = 2; }\n"
        "__attribute((slave)) void bad(int* out) { k2(out); }\n"
        "__attribute((kernel)) void k1(int* out) { bad(out); }\n"
        "int main() { int out[64]; k1(out); return 0; }\n");
    CHECK(a.diags.has_code("E_KERNEL_FROM_SLAVE"));
}

TEST_CASE("legality: kernels launching kernels is rejected at compile time") {
    auto a = analyze_src(
        "__attribute((kernel)) void k2(int* out) { out[cpe_id()] = 2; }\n"
        "__attribute((kernel)) void k1(int* out) { k2(out); }\n"
        "int main() { int out[64]; k1(out); return 0; }\n");
    CHECK(a.diags.has_code("E_KERNEL_FROM_SLAVE"));
}

TEST_CASE("legality: local storage in a host-visible function") {
    auto a = analyze_src(
        "__attribute((host)) __attribute((slave)) int f() { local int b[4]; b[0] = 1; return b[0]; }\n"
        "int main() { return f(); }\n");
    CHECK(a.diags.has_code("E_TARGET_MISMATCH"));
}

TEST_CASE("targets table: sorted, tab-separated, complete") {
    auto a = analyze_src(
        "__attribute((slave)) int zeta() { return cpe_id(); }\n"
        "__attribute((infer)) int alpha(int x) { return x; }\n"
        "__attribute((kernel)) void k(int* out) { out[cpe_id()] = zeta() + alpha(1); }\n"
        "int main() { int out[64]; k(out); return alpha(2); }\n");
    REQUIRE_FALSE(a.diags.has_errors());
    std::string table = emit_targets_table(a.graph);
    CHECK(table ==
          "alpha\tBOTH\n"
          "k\tSLAVE\n"
          "main\tHOST\n"
          "zeta\tSLAVE\n");
}

TEST_CASE("inference: rerunning the fixpoint does not change anything") {
    auto a = analyze_src(
        "__attribute((infer)) int f(int x) { return g(x); }\n"
        "__attribute((infer)) int g(int x) { return x > 0 && f(x - 1) > 0; }\n"
        "int main() { return f(5); }\n");
    REQUIRE_FALSE(a.diags.has_errors());
    auto before = a.graph.resolved_targets;
    DiagBag d2;
    // feeding resolved results back through inference must be a no-op
    infer_targets(a.graph, d2);
    CHECK(a.graph.resolved_targets == before);
    CHECK_FALSE(d2.has_errors());
}
