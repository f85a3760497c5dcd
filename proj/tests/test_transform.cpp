#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>

#include "doctest.h"
#include "swuc/graph.hpp"
#include "swuc/lexer.hpp"
#include "swuc/parser.hpp"
#include "swuc/pretty.hpp"
#include "swuc/split.hpp"
#include "swuc/transform.hpp"

using namespace swuc;

namespace {

struct Lowered {
    SourceUnit unit;
    DiagBag diags;
    TransformResult tr;
};

Lowered lower_src(const std::string& src) {
    Lowered out;
    auto toks = tokenize(src, out.diags);
    out.unit = parse(toks, out.diags);
    frontend_check(out.unit, out.diags);
    if (out.diags.has_errors()) return out;
    out.tr = monomorphize(out.unit, out.diags);
    if (out.diags.has_errors()) return out;
    closure_convert(out.unit, out.tr, out.diags);
    return out;
}

std::vector<std::string> inst_names(const Lowered& l) {
    std::vector<std::string> names;
    for (const auto& i : l.tr.instantiations) names.push_back(i.mangled_name);
    std::sort(names.begin(), names.end());
    return names;
}

}  // namespace

TEST_CASE("mangling: type spellings in instantiation names") {
    CHECK(mangle_instantiation("id", make_int()) == "id$int");
    CHECK(mangle_instantiation("id", make_double()) == "id$double");
    CHECK(mangle_instantiation("id", make_pointer(make_int())) == "id$ptr_int");
    CHECK(mangle_instantiation("id", make_pointer(make_pointer(make_float()))) ==
          "id$ptr_ptr_float");
    CHECK(mangle_instantiation("id", make_record("Point")) == "id$Point");
}

TEST_CASE("monomorphize: one instantiation per distinct type argument") {
    auto l = lower_src(
        "template <T> T pass(T x) { return x; }\n"
        "int main() {\n"
        "    int a = pass(1);\n"
        "    int b = pass(2);\n"
        "    double c = pass(1.5);\n"
        "    long d = pass<long>(7);\n"
        "    return a + b;\n"
        "}\n");
    REQUIRE_FALSE(l.diags.has_errors());
    CHECK(inst_names(l) ==
          std::vector<std::string>{"pass$double", "pass$int", "pass$long"});
    // the template itself is gone; only concrete functions remain
    CHECK(l.unit.find("pass") == nullptr);
    CHECK(l.unit.find("pass$int") != nullptr);
    CHECK_FALSE(l.unit.find("pass$int")->is_generic);
    // repeated requests for the same instantiation just add origin sites
    CHECK(l.tr.instantiations.size() == 3);
    for (const auto& i : l.tr.instantiations)
        if (i.mangled_name == "pass$int") CHECK(i.origin_sites.size() == 2);
}

TEST_CASE("monomorphize: transitive instantiation through generic bodies") {
    auto l = lower_src(
        "template <T> T add(T a, T b) { return a + b; }\n"
        "template <T> T twice(T x) { return add(x, x); }\n"
        "int main() { long n = twice<long>(21); return 0; }\n");
    REQUIRE_FALSE(l.diags.has_errors());
    CHECK(inst_names(l) == std::vector<std::string>{"add$long", "twice$long"});
    // the inner call site now names the concrete instantiation
    std::string printed = print_function(*l.unit.find("twice$long"));
    CHECK(printed.find("add$long(") != std::string::npos);
}

TEST_CASE("monomorphize: uncalled generics produce nothing") {
    auto l = lower_src(
        "template <T> T dead(T x) { return x; }\n"
        "int main() { return 0; }\n");
    REQUIRE_FALSE(l.diags.has_errors());
    CHECK(l.tr.instantiations.empty());
    CHECK(l.unit.find("dead") == nullptr);
}

TEST_CASE("monomorphize: sizeof folds to a constant per instantiation") {
    auto l = lower_src(
        "template <T> long width(T x) { return sizeof(T); }\n"
        "int main() {\n"
        "    long a = width(1);\n"
        "    long b = width(0.5);\n"
        "    return 0;\n"
        "}\n");
    REQUIRE_FALSE(l.diags.has_errors());
    std::string w_int = print_function(*l.unit.find("width$int"));
    std::string w_dbl = print_function(*l.unit.find("width$double"));
    CHECK(w_int.find("return 4;") != std::string::npos);
    CHECK(w_dbl.find("return 8;") != std::string::npos);
}

TEST_CASE("monomorphize: deduction failures are diagnosed") {
    auto l1 = lower_src(
        "template <T> int f(int x) { return x; }\n"
        "int main() { return f(1); }\n");
    CHECK(l1.diags.has_code("E_INFER_TYPEARG"));  // T appears in no parameter

    auto l2 = lower_src(
        "template <T> T g(T a, T b) { return a; }\n"
        "int main() { double d = g(1, 2.0); return 0; }\n");
    CHECK(l2.diags.has_code("E_INFER_TYPEARG"));  // conflicting deductions
}

TEST_CASE("monomorphize: runaway recursive instantiation is cut off") {
    auto l = lower_src(
        "template <T> int depth(T* p) { T* q[1]; return depth(q) + 1; }\n"
        "int main() { int* p[1]; return depth(p); }\n");
    CHECK(l.diags.has_code("E_RECURSIVE_INST"));
}

TEST_CASE("type checking: common diagnostics") {
    CHECK(lower_src("int main() { return nothere; }").diags.has_code("E_UNDECLARED"));
    CHECK(lower_src("int main() { return missing(1); }").diags.has_code("E_UNDECLARED"));
    CHECK(lower_src("int f() { return 0; } int main() { int x = f; return x; }")
              .diags.has_code("E_FN_ADDR"));
    CHECK(lower_src("__attribute((kernel)) void k(int* p) { p[0] = 1; }\n"
                    "int main() { int x[4]; int y = k; return 0; }")
              .diags.has_code("E_KERNEL_MISUSE"));
    CHECK(lower_src("int main() { int x = 1.5 > true || 0; double* p = x; return 0; }")
              .diags.has_code("E_TYPE"));
    CHECK(lower_src("__attribute((kernel)) int k(int* p) { return p[0]; }\n"
                    "int main() { int p[4]; return 0; }")
              .diags.has_code("E_KERNEL_RETURN"));
}

TEST_CASE("closures: by-reference arrays are captured by address") {
    auto l = lower_src(
        "int main() {\n"
        "    int data[8];\n"
        "    data[0] = 5;\n"
        "    int c = 3;\n"
        "    int r = [&](int i) { return data[i] + c; }(0);\n"
        "    return r;\n"
        "}\n");
    REQUIRE_FALSE(l.diags.has_errors());
    REQUIRE(l.tr.closures.size() == 1);
    const ClosureInfo& info = l.tr.closures[0];
    REQUIRE(info.captures.size() == 2);
    CHECK(info.captures[0].name == "data");
    CHECK(info.captures[0].by_address);
    CHECK(info.captures[0].stored_type == make_pointer(make_int()));
    CHECK(info.captures[1].name == "c");
    CHECK_FALSE(info.captures[1].by_address);
    // a record and a lifted function were synthesized
    CHECK(l.unit.find_record("__closure_0") != nullptr);
    const Function* lifted = l.unit.find("__lambda_0");
    REQUIRE(lifted != nullptr);
    CHECK(lifted->params.size() == 2);  // environment + declared parameter
    CHECK(lifted->params[0].name == "__env");
    // the body now reads captures through the environment
    std::string printed = print_function(*lifted);
    CHECK(printed.find("__env.data") != std::string::npos);
    CHECK(printed.find("__env.c") != std::string::npos);
    // the call site was rewritten to a direct call with the closure prepended
    std::string main_printed = print_function(*l.unit.find("main"));
    CHECK(main_printed.find("__lambda_0(make_closure<__closure_0>(data, c), 0)") !=
          std::string::npos);
}

TEST_CASE("closures: by-value capture of an array is rejected") {
    auto l = lower_src(
        "int main() {\n"
        "    int data[8];\n"
        "    int r = [=](int i) { return data[i]; }(0);\n"
        "    return r;\n"
        "}\n");
    CHECK(l.diags.has_code("E_CAPTURE"));
}

TEST_CASE("closures: captured bindings are read-only") {
    auto l = lower_src(
        "int main() {\n"
        "    int c = 3;\n"
        "    int r = [&](int i) { c = i; return c; }(0);\n"
        "    return r;\n"
        "}\n");
    CHECK(l.diags.has_code("E_CAPTURE"));
}

TEST_CASE("closures: capturing CPE-local data into a kernel argument") {
    auto l = lower_src(
        "template <T> __attribute((kernel)) void k(T f, int* out) { out[cpe_id()] = f(0); }\n"
        "__attribute((slave)) void inner(int* out) {\n"
        "    local int buf[4];\n"
        "    buf[0] = 1;\n"
        "    k([&](int i) __attribute((slave)) { return buf[i]; }, out);\n"
        "}\n"
        "__attribute((kernel)) void outer(int* out) { inner(out); }\n"
        "int main() { int out[64]; outer(out); return 0; }\n");
    CHECK(l.diags.has_code("E_LAMBDA_ESCAPE"));
}

TEST_CASE("closures: shadowed names are not rewritten") {
    auto l = lower_src(
        "int main() {\n"
        "    int c = 3;\n"
        "    int r = [&](int i) { int q = c; for (int c = 0; c < 2; ++c) { q = q + c; } return q; }(0);\n"
        "    return r;\n"
        "}\n");
    REQUIRE_FALSE(l.diags.has_errors());
    std::string printed = print_function(*l.unit.find("__lambda_0"));
    CHECK(printed.find("int q = __env.c;") != std::string::npos);
    CHECK(printed.find("(q + c)") != std::string::npos);  // loop variable untouched
}

TEST_CASE("layout: record sizes use natural alignment with tail padding") {
    DiagBag diags;
    auto toks = tokenize(
        "struct A { int x; double y; int z; };\n"
        "struct B { bool a; };\n"
        "struct C { B inner; long n; };\n"
        "int main() { return 0; }\n",
        diags);
    SourceUnit unit = parse(toks, diags);
    RecordTable table = build_record_table(unit, diags);
    REQUIRE_FALSE(diags.has_errors());
    CHECK(table.get("A").size == 24);  // 0,8,16 with 4B tail pad
    CHECK(table.get("A").align == 8);
    CHECK(table.get("A").fields[1].offset == 8);
    CHECK(table.get("B").size == 1);
    CHECK(table.get("C").size == 16);
    CHECK(table.get("C").fields[1].offset == 8);
}

TEST_CASE("layout: kernel parameter blocks pad to an 8-byte multiple") {
    RecordTable table;
    std::vector<Param> params;
    params.push_back({make_pointer(make_int()), "a", {}});
    params.push_back({make_pointer(make_int()), "b", {}});
    params.push_back({make_long(), "n", {}});
    BlockLayout lay = compute_block_layout(params, table);
    CHECK(lay.size == 24);
    CHECK(lay.slots[0].offset == 0);
    CHECK(lay.slots[1].offset == 8);
    CHECK(lay.slots[2].offset == 16);

    std::vector<Param> mixed;
    mixed.push_back({make_int(), "i", {}});
    mixed.push_back({make_double(), "d", {}});
    mixed.push_back({make_bool(), "f", {}});
    BlockLayout lay2 = compute_block_layout(mixed, table);
    CHECK(lay2.slots[1].offset == 8);  // double aligns to 8
    CHECK(lay2.slots[2].offset == 16);
    CHECK(lay2.size == 24);  // 17 rounded up

    BlockLayout empty = compute_block_layout({}, table);
    CHECK(empty.size == 0);
}

TEST_CASE("split: every function lands exactly on its availability") {
    const std::string src =
        "__attribute((host)) int h() { return 1; }\n"
        "__attribute((slave)) int s() { return cpe_id(); }\n"
        "__attribute((host)) __attribute((slave)) int b() { return 3; }\n"
        "__attribute((kernel)) void k(int* out) { out[cpe_id()] = s() + b(); }\n"
        "int main() { int out[64]; k(out); return h() + b(); }\n";
    auto l = lower_src(src);
    REQUIRE_FALSE(l.diags.has_errors());
    ProgramGraph graph = analyze(l.unit, l.diags);
    REQUIRE_FALSE(l.diags.has_errors());
    TargetModule host = split_for_target(l.unit, graph, Side::Host, l.diags);
    TargetModule slave = split_for_target(l.unit, graph, Side::Slave, l.diags);
    auto has = [](const TargetModule& m, const std::string& n) {
        for (const auto& f : m.functions)
            if (f->name == n) return true;
        return false;
    };
    for (const auto& [name, ts] : graph.resolved_targets) {
        if (!graph.symbols.at(name)->body) continue;
        CAPTURE(name);
        CHECK(has(host, name) == has_host(ts));
        CHECK(has(slave, name) == has_slave(ts));
    }
    CHECK(has(slave, "k"));
    CHECK_FALSE(has(host, "k"));
}

TEST_CASE("split: collaborative instantiation serves both sides") {
    const std::string src =
        "template <T> T id(T x) { return x; }\n"
        "__attribute((kernel)) void k(int* out) { out[cpe_id()] = id(5); }\n"
        "int main() { int out[64]; k(out); return id(7); }\n";
    auto l = lower_src(src);
    REQUIRE_FALSE(l.diags.has_errors());
    ProgramGraph graph = analyze(l.unit, l.diags);
    REQUIRE_FALSE(l.diags.has_errors());
    CHECK(graph.resolved_targets.at("id$int") == TargetSet::Both);

    for (bool no_collab : {false, true}) {
        CAPTURE(no_collab);
        DiagBag d;
        TargetModule host = split_for_target(l.unit, graph, Side::Host, d, no_collab);
        TargetModule slave = split_for_target(l.unit, graph, Side::Slave, d, no_collab);
        CHECK(host.find("id$int") != nullptr);
        // the kernel itself requests the instantiation, so even no-collab
        // keeps it on the slave side here
        CHECK(slave.find("id$int") != nullptr);
    }
}

TEST_CASE("split: no-collab drops instantiations requested only by the host") {
    const std::string src =
        "template <T> __attribute((kernel)) void spawn(T* a, int n) { a[cpe_id()] = n; }\n"
        "int main() { int a[64]; spawn(a, 3); return 0; }\n";
    auto l = lower_src(src);
    REQUIRE_FALSE(l.diags.has_errors());
    ProgramGraph graph = analyze(l.unit, l.diags);
    REQUIRE_FALSE(l.diags.has_errors());

    DiagBag d1;
    TargetModule collab = split_for_target(l.unit, graph, Side::Slave, d1, false);
    CHECK(collab.find("spawn$int") != nullptr);

    DiagBag d2;
    TargetModule isolated = split_for_target(l.unit, graph, Side::Slave, d2, true);
    CHECK(isolated.find("spawn$int") == nullptr);
    // the kernel's signature still travels with the module metadata
    REQUIRE(isolated.kernels.size() == 1);
    CHECK(isolated.kernels[0].base == "spawn$int");
}

TEST_CASE("split: kernel lowering produces stubs and wrappers") {
    const std::string src =
        "__attribute((kernel)) void k(int* out, int n) { out[cpe_id()] = n; }\n"
        "int main() { int out[64]; k(out, 9); return 0; }\n";
    auto l = lower_src(src);
    REQUIRE_FALSE(l.diags.has_errors());
    ProgramGraph graph = analyze(l.unit, l.diags);
    DiagBag d;
    TargetModule host = split_for_target(l.unit, graph, Side::Host, d);
    TargetModule slave = split_for_target(l.unit, graph, Side::Slave, d);
    lower_kernels(host, slave, {"k"}, d);
    REQUIRE_FALSE(d.has_errors());
    CHECK(host.find("k.launch") != nullptr);
    CHECK(slave.find("k") != nullptr);       // wrapper takes the kernel's name
    CHECK(slave.find("k.body") != nullptr);  // original body renamed
    REQUIRE(slave.kernels.size() == 1);
    CHECK(slave.kernels[0].wrapper_symbol == "slave_k");
    CHECK(slave.kernels[0].layout.size == 16);  // int* + int, padded

    finalize_symbols(host);
    finalize_symbols(slave);
    CHECK(host.find("main") != nullptr);
    CHECK(host.find("k.launch") != nullptr);
    CHECK(slave.find("slave_k") != nullptr);
    CHECK(slave.find("slave_k.body") != nullptr);
    // the host module's only unresolved symbol is the slave wrapper
    REQUIRE(host.externs.size() == 1);
    CHECK(host.externs[0] == "slave_k");
}

TEST_CASE("mangling: symbol sides round-trip") {
    for (const char* base : {"main", "k.launch", "id$int", "spawn__vector_add$float"}) {
        for (Side side : {Side::Host, Side::Slave}) {
            auto [s2, b2] = demangle_symbol(mangle_symbol(side, base));
            CHECK(s2 == side);
            CHECK(b2 == base);
        }
    }
}
