#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "swuc/driver.hpp"
#include "swuc/image.hpp"

using namespace swuc;

namespace {

std::string corpus(const std::string& name) {
    std::ifstream in(std::string(CORPUS_DIR) + "/" + name);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CompileOutput compile_ok(const std::string& src, bool no_collab = false) {
    CompileOutput co = compile_source(src, "test.swc", no_collab);
    if (!co.ok) {
        std::ostringstream os;
        co.diags.render(os);
        INFO(os.str());
        REQUIRE(co.ok);
    }
    return co;
}

// Deep-copies a module through its canonical byte form.
TargetModule copy_module(const TargetModule& m) {
    DiagBag diags;
    TargetModule out;
    REQUIRE(deserialize_module(serialize_module(m), out, diags));
    REQUIRE_FALSE(diags.has_errors());
    return out;
}

const char* kTwoSidedSrc =
    "struct P { int x; long y; };\n"
    "__attribute((slave)) int scale(int v) { return v * 3; }\n"
    "__attribute((kernel)) void k(P p, int* out) { out[cpe_id()] = scale(p.x); }\n"
    "int main() { P p; p.x = 2; p.y = 0; int out[64]; k(p, out); print(out[1]); return 0; }\n";

}  // namespace

TEST_CASE("link: every referenced symbol resolves across the corpus") {
    for (const char* name :
         {"fig1.swc", "vector_add.swc", "lambda_apply.swc", "identity_both.swc"}) {
        CAPTURE(name);
        CompileOutput co = compile_ok(corpus(name));
        CHECK_FALSE(co.diags.has_code("E_UNDEF_REF"));
        CHECK(co.image.host_functions.count(co.image.entry) == 1);
        // the image must define every extern each module declared
        for (const auto& sym : co.host.externs) {
            CAPTURE(sym);
            CHECK((co.image.host_functions.count(sym) || co.image.slave_functions.count(sym)));
        }
        for (const auto& sym : co.slave.externs) {
            CAPTURE(sym);
            CHECK(co.image.slave_functions.count(sym) == 1);
        }
    }
}

TEST_CASE("link: separate-module link reproduces the single-pass image") {
    CompileOutput co = compile_ok(kTwoSidedSrc);
    TargetModule host = copy_module(co.host);
    TargetModule slave = copy_module(co.slave);
    DiagBag diags;
    LinkedImage relinked = link(host, slave, diags);
    REQUIRE_FALSE(diags.has_errors());
    CHECK(image_equal(relinked, co.image));
}

TEST_CASE("link: dropping a referenced slave body is an undefined reference") {
    CompileOutput co = compile_source(corpus("vector_add.swc"), "vector_add.swc",
                                      /*no_collab=*/true);
    CHECK_FALSE(co.ok);
    REQUIRE(co.diags.has_code("E_UNDEF_REF"));
    bool found = false;
    for (const auto& d : co.diags.all())
        if (d.code == "E_UNDEF_REF" &&
            d.message == "undefined reference to `slave_spawn__vector_add$int`")
            found = true;
    CHECK(found);
}

TEST_CASE("link: duplicate definitions on one side are rejected") {
    CompileOutput co = compile_ok(kTwoSidedSrc);
    TargetModule host = copy_module(co.host);
    TargetModule dup = copy_module(co.host);
    host.functions.push_back(std::move(dup.functions.front()));
    DiagBag diags;
    link(host, co.slave, diags);
    CHECK(diags.has_code("E_DUP_SYM"));
}

TEST_CASE("link: record layouts must agree between the two sides") {
    CompileOutput co = compile_ok(kTwoSidedSrc);
    TargetModule slave = copy_module(co.slave);
    REQUIRE(slave.records.count("P") == 1);
    slave.records["P"].size += 8;
    DiagBag diags;
    link(co.host, slave, diags);
    CHECK(diags.has_code("E_LAYOUT_MISMATCH"));
}

TEST_CASE("link: a host-side main is mandatory") {
    CompileOutput co = compile_ok(kTwoSidedSrc);
    TargetModule host = copy_module(co.host);
    std::erase_if(host.functions, [](const auto& f) { return f->name == "main"; });
    DiagBag diags;
    link(host, co.slave, diags);
    CHECK(diags.has_code("E_NO_ENTRY"));
}

TEST_CASE("image: serialization is deterministic and round-trips exactly") {
    for (const char* name :
         {"fig1.swc", "vector_add.swc", "lambda_apply.swc", "identity_both.swc"}) {
        CAPTURE(name);
        CompileOutput co = compile_ok(corpus(name));
        std::vector<uint8_t> a = serialize_image(co.image);
        std::vector<uint8_t> b = serialize_image(co.image);
        CHECK(a == b);
        LinkedImage back;
        DiagBag diags;
        REQUIRE(deserialize_image(a, back, diags));
        REQUIRE_FALSE(diags.has_errors());
        CHECK(image_equal(back, co.image));
        // decode→encode is the identity on canonical bytes
        CHECK(serialize_image(back) == a);
    }
}

TEST_CASE("module: serialization round-trips exactly") {
    CompileOutput co = compile_ok(kTwoSidedSrc);
    for (const TargetModule* m : {&co.host, &co.slave}) {
        std::vector<uint8_t> bytes = serialize_module(*m);
        TargetModule back;
        DiagBag diags;
        REQUIRE(deserialize_module(bytes, back, diags));
        REQUIRE_FALSE(diags.has_errors());
        CHECK(back.side == m->side);
        CHECK(back.externs == m->externs);
        CHECK(print_module(back) == print_module(*m));
        CHECK(serialize_module(back) == bytes);
    }
}

TEST_CASE("image: corrupted magic is detected") {
    CompileOutput co = compile_ok(kTwoSidedSrc);
    std::vector<uint8_t> bytes = serialize_image(co.image);
    bytes[3] ^= 0xFF;
    LinkedImage out;
    DiagBag diags;
    CHECK_FALSE(deserialize_image(bytes, out, diags));
    CHECK(diags.has_code("E_IMG_MAGIC"));

    // a module is not an image, and vice versa
    std::vector<uint8_t> mod = serialize_module(co.host);
    DiagBag d2;
    LinkedImage out2;
    CHECK_FALSE(deserialize_image(mod, out2, d2));
    CHECK(d2.has_code("E_IMG_MAGIC"));
}

TEST_CASE("image: unknown format version is detected") {
    CompileOutput co = compile_ok(kTwoSidedSrc);
    std::vector<uint8_t> bytes = serialize_image(co.image);
    // little-endian u32 version follows the 8-byte magic
    bytes[8] = 2;
    LinkedImage out;
    DiagBag diags;
    CHECK_FALSE(deserialize_image(bytes, out, diags));
    CHECK(diags.has_code("E_IMG_VERSION"));
}

TEST_CASE("image: truncation anywhere in the payload is detected") {
    CompileOutput co = compile_ok(kTwoSidedSrc);
    std::vector<uint8_t> bytes = serialize_image(co.image);
    for (size_t keep : {size_t{0}, size_t{4}, size_t{8}, size_t{11}, size_t{13},
                        bytes.size() / 4, bytes.size() / 2, bytes.size() - 1}) {
        CAPTURE(keep);
        std::vector<uint8_t> cut(bytes.begin(), bytes.begin() + keep);
        LinkedImage out;
        DiagBag diags;
        CHECK_FALSE(deserialize_image(cut, out, diags));
        CHECK(diags.has_code("E_IMG_TRUNCATED"));
    }
}

TEST_CASE("image: trailing bytes after the payload are detected") {
    CompileOutput co = compile_ok(kTwoSidedSrc);
    std::vector<uint8_t> bytes = serialize_image(co.image);
    bytes.push_back(0);
    LinkedImage out;
    DiagBag diags;
    CHECK_FALSE(deserialize_image(bytes, out, diags));
    CHECK(diags.has_code("E_IMG_TRUNCATED"));
}

TEST_CASE("image: equality distinguishes different programs") {
    CompileOutput a = compile_ok(kTwoSidedSrc);
    CompileOutput b = compile_ok(corpus("fig1.swc"));
    CHECK(image_equal(a.image, a.image));
    CHECK_FALSE(image_equal(a.image, b.image));
}

TEST_CASE("symbols: slave definitions and kernel wrappers carry the slave prefix") {
    CompileOutput co = compile_ok(kTwoSidedSrc);
    CHECK(co.image.slave_functions.count("slave_scale") == 1);
    CHECK(co.image.slave_functions.count("slave_k") == 1);        // wrapper
    CHECK(co.image.slave_functions.count("slave_k.body") == 1);   // programmed body
    CHECK(co.image.host_functions.count("main") == 1);
    REQUIRE(co.image.kernel_table.size() == 1);
    CHECK(co.image.kernel_table[0].wrapper_symbol == "slave_k");
    auto [side, base] = demangle_symbol("slave_scale");
    CHECK(side == Side::Slave);
    CHECK(base == "scale");
}
