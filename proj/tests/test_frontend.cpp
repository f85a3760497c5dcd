#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "swuc/lexer.hpp"
#include "swuc/parser.hpp"
#include "swuc/pretty.hpp"

using namespace swuc;

namespace {

std::vector<Token> lex_ok(const std::string& src) {
    DiagBag diags;
    auto toks = tokenize(src, diags);
    REQUIRE_FALSE(diags.has_errors());
    return toks;
}

SourceUnit parse_src(const std::string& src, DiagBag& diags) {
    auto toks = tokenize(src, diags);
    SourceUnit unit = parse(toks, diags);
    frontend_check(unit, diags);
    return unit;
}

std::string corpus(const std::string& name) {
    std::ifstream in(std::string(CORPUS_DIR) + "/" + name);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("lexer: token count for a small definition") {
    auto toks = lex_ok("int identity(int x) { return x; }");
    // int identity ( int x ) { return x ; }
    CHECK(toks.size() == 12);  // 11 tokens + end-of-file marker
    CHECK(toks[11].kind == TokenKind::Eof);
    CHECK(toks[0].is_kw("int"));
    CHECK(toks[1].kind == TokenKind::Identifier);
    CHECK(toks[7].is_kw("return"));
}

TEST_CASE("lexer: literals and punctuators") {
    auto toks = lex_ok("x += 3.5e2; y != 0.5;");
    CHECK(toks[1].lexeme == "+=");
    CHECK(toks[2].kind == TokenKind::FloatLiteral);
    CHECK(toks[2].lexeme == "3.5e2");
    CHECK(toks[5].lexeme == "!=");
    auto t2 = lex_ok("a->b++ -- <= >=");
    CHECK(t2[1].lexeme == "->");
    CHECK(t2[3].lexeme == "++");
}

TEST_CASE("lexer: strings, comments, and errors") {
    auto toks = lex_ok("print(\"a b\\n\"); // trailing\n/* block\n */ x");
    CHECK(toks[2].kind == TokenKind::StringLiteral);

    DiagBag d1;
    tokenize("\"unterminated", d1);
    CHECK(d1.has_code("E_LEX"));

    DiagBag d2;
    tokenize("/* never closed", d2);
    CHECK(d2.has_code("E_LEX"));

    DiagBag d3;
    tokenize("int x @ y;", d3);
    CHECK(d3.has_code("E_LEX"));
}

TEST_CASE("lexer: pragma lines only start in column one") {
    auto toks = lex_ok("#pragma swuc push slave\nint x() { return 0; }\n#pragma swuc pop\n");
    CHECK(toks[0].kind == TokenKind::PragmaLine);
    CHECK(toks[0].lexeme == "#pragma swuc push slave");

    DiagBag diags;
    tokenize("int x() { return 0; } #pragma swuc pop\n", diags);
    CHECK(diags.has_code("E_LEX"));  // '#' mid-line is not a directive
}

TEST_CASE("pragma stack: defaults, nesting, and underflow") {
    PragmaStack stack;
    DiagBag diags;
    CHECK(stack.active() == "host");
    apply_pragma_line("#pragma swuc push slave", {1, 1}, stack, diags);
    CHECK(stack.active() == "slave");
    apply_pragma_line("#pragma swuc push infer", {2, 1}, stack, diags);
    CHECK(stack.active() == "infer");
    apply_pragma_line("#pragma swuc pop", {3, 1}, stack, diags);
    CHECK(stack.active() == "slave");
    apply_pragma_line("#pragma swuc pop", {4, 1}, stack, diags);
    CHECK(stack.active() == "host");
    CHECK_FALSE(diags.has_errors());

    apply_pragma_line("#pragma swuc pop", {5, 1}, stack, diags);
    CHECK(diags.has_code("E_PRAGMA_UNDERFLOW"));
}

TEST_CASE("pragma stack: nesting to depth 10 tracks the innermost default") {
    PragmaStack stack;
    DiagBag diags;
    const char* kinds[] = {"host", "slave", "infer"};
    for (int i = 0; i < 10; ++i) {
        apply_pragma_line(std::string("#pragma swuc push ") + kinds[i % 3], {i + 1, 1},
                          stack, diags);
        CHECK(stack.active() == kinds[i % 3]);
        CHECK(stack.depth() == i + 1);
    }
    for (int i = 9; i >= 0; --i) {
        apply_pragma_line("#pragma swuc pop", {20 + i, 1}, stack, diags);
        CHECK(stack.active() == (i == 0 ? "host" : kinds[(i - 1) % 3]));
    }
    CHECK_FALSE(diags.has_errors());
}

TEST_CASE("pragma stack: malformed directives") {
    PragmaStack stack;
    DiagBag diags;
    apply_pragma_line("#pragma swuc push turbo", {1, 1}, stack, diags);
    CHECK(diags.has_code("E_PRAGMA_MALFORMED"));
    DiagBag d2;
    apply_pragma_line("#pragma swuc shove host", {1, 1}, stack, d2);
    CHECK(d2.has_code("E_PRAGMA_MALFORMED"));
    DiagBag d3;
    apply_pragma_line("#pragma swuc push", {1, 1}, stack, d3);
    CHECK(d3.has_code("E_PRAGMA_MALFORMED"));
}

TEST_CASE("parser: pragma defaults attach to unmarked functions") {
    DiagBag diags;
    SourceUnit unit = parse_src(
        "int a() { return 1; }\n"
        "#pragma swuc push slave\n"
        "int b() { return 2; }\n"
        "__attribute((host)) int c() { return 3; }\n"
        "#pragma swuc pop\n"
        "int d() { return 4; }\n",
        diags);
    REQUIRE_FALSE(diags.has_errors());
    CHECK(unit.find("a")->target.pragma_default == "host");
    CHECK(unit.find("b")->target.pragma_default == "slave");
    CHECK(unit.find("b")->target.origin == TargetOrigin::Pragma);
    CHECK(unit.find("c")->target.has_mark("host"));
    CHECK(unit.find("c")->target.origin == TargetOrigin::Attribute);
    CHECK(unit.find("d")->target.pragma_default == "host");
    CHECK(unit.find("d")->target.origin == TargetOrigin::GlobalDefault);
}

TEST_CASE("parser: unclosed pragma region warns and marks the unit") {
    DiagBag diags;
    SourceUnit unit = parse_src("#pragma swuc push slave\nint a() { return 1; }\n", diags);
    CHECK_FALSE(diags.has_errors());
    CHECK(diags.has_code("W_PRAGMA_UNCLOSED"));
    CHECK_FALSE(unit.pragma_balanced);
}

TEST_CASE("parser: pragma inside a function body is rejected") {
    DiagBag diags;
    parse_src("int a() {\n#pragma swuc push slave\nreturn 1; }\n", diags);
    CHECK(diags.has_code("E_PARSE"));
}

TEST_CASE("attributes: conflicts and duplicates") {
    DiagBag d1;
    parse_src("__attribute((infer)) __attribute((host)) int f() { return 0; }", d1);
    CHECK(d1.has_code("E_ATTR_CONFLICT"));

    DiagBag d2;
    parse_src("__attribute((kernel)) __attribute((slave)) void k(int* p) { p[0] = 1; }",
              d2);
    CHECK(d2.has_code("E_ATTR_CONFLICT"));

    DiagBag d3;
    SourceUnit u3 = parse_src("__attribute((slave)) __attribute((slave)) int f() { return 0; }", d3);
    CHECK_FALSE(d3.has_errors());
    CHECK(d3.has_code("W_ATTR_DUP"));
    CHECK(u3.find("f")->target.explicit_marks.size() == 1);

    DiagBag d4;
    parse_src("int f() { int x = [&](int y) __attribute((kernel)) { return y; }(1); return x; }",
              d4);
    CHECK(d4.has_code("E_KERNEL_LAMBDA"));

    DiagBag d5;
    parse_src("__attribute((slave)) struct P { int x; };\nint main() { return 0; }", d5);
    CHECK_FALSE(d5.has_errors());
    CHECK(d5.has_code("W_RECORD_ATTR_UNUSED"));
}

TEST_CASE("parser: address-of is a dedicated diagnostic") {
    DiagBag diags;
    parse_src("int f(int x) { int* p = &x; return 0; }", diags);
    CHECK(diags.has_code("E_FN_ADDR"));
}

TEST_CASE("parser: recovery continues after a bad definition") {
    DiagBag diags;
    SourceUnit unit = parse_src(
        "int broken( { return 0; }\n"
        "int fine() { return 7; }\n",
        diags);
    CHECK(diags.has_code("E_PARSE"));
    CHECK(unit.find("fine") != nullptr);
}

TEST_CASE("parser: declarations, loops, and generics survive a round trip") {
    const char* samples[] = {
        "int f(int x) { int y = x + 1; return y * 2; }",
        "struct P { int x; double w; };\nint g(P* p) { return p->x; }",
        "template <T> T pick(T* items, int i) { return items[i]; }\n"
        "int main() { int xs[4]; xs[0] = 9; return pick(xs, 0); }",
        "__attribute((kernel)) void k(int* out) { out[cpe_id()] = 1; }\n"
        "int main() { int out[64]; k(out); return 0; }",
        "int main() { for (int i = 0; i < 3; ++i) { print(i); } while (false) { } return 0; }",
        "int main() { double d = 1.5; bool b = true; long n = sizeof(double); return 0; }",
    };
    for (const char* src : samples) {
        CAPTURE(src);
        DiagBag d1;
        SourceUnit u1 = parse_src(src, d1);
        REQUIRE_FALSE(d1.has_errors());
        std::string printed = print_unit(u1);
        DiagBag d2;
        SourceUnit u2 = parse_src(printed, d2);
        REQUIRE_FALSE(d2.has_errors());
        CHECK(unit_equal(u1, u2));
        // printing is a fixed point after one round
        CHECK(print_unit(u2) == printed);
    }
}

TEST_CASE("parser: corpus files parse cleanly and round-trip") {
    for (const char* name :
         {"fig1.swc", "vector_add.swc", "lambda_apply.swc", "identity_both.swc"}) {
        CAPTURE(name);
        DiagBag d1;
        SourceUnit u1 = parse_src(corpus(name), d1);
        REQUIRE_FALSE(d1.has_errors());
        std::string printed = print_unit(u1);
        DiagBag d2;
        SourceUnit u2 = parse_src(printed, d2);
        REQUIRE_FALSE(d2.has_errors());
        CHECK(unit_equal(u1, u2));
    }
}

TEST_CASE("parser: const is accepted and ignored in types") {
    DiagBag diags;
    SourceUnit unit =
        parse_src("int f(const int* p, const int n) { return p[0] + n; }", diags);
    REQUIRE_FALSE(diags.has_errors());
    const Function* f = unit.find("f");
    REQUIRE(f);
    CHECK(f->params[0].type.is_pointer());
    CHECK(f->params[1].type.kind == TypeKind::Int);
}

TEST_CASE("parser: array parameters decay to pointers") {
    DiagBag diags;
    SourceUnit unit = parse_src("int f(int xs[8]) { return xs[0]; }", diags);
    REQUIRE_FALSE(diags.has_errors());
    CHECK(unit.find("f")->params[0].type.is_pointer());
}

TEST_CASE("lexer: every token carries its source position") {
    auto toks = lex_ok("int x;\n  long y;");
    CHECK(toks[0].line == 1);
    CHECK(toks[0].column == 1);
    CHECK(toks[3].line == 2);
    CHECK(toks[3].column == 3);
}
