#include "swuc/image.hpp"

#include <cstring>
#include <stdexcept>

namespace swuc {

namespace {

// -- little-endian byte stream -------------------------------------------------

struct Writer {
    std::vector<uint8_t> bytes;

    void u8(uint8_t v) { bytes.push_back(v); }
    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }
    void f64(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void str(const std::string& s) {
        u32(static_cast<uint32_t>(s.size()));
        bytes.insert(bytes.end(), s.begin(), s.end());
    }
    void raw(const char* p, size_t n) {
        bytes.insert(bytes.end(), p, p + n);
    }
};

struct Truncated {};

struct Reader {
    const std::vector<uint8_t>& bytes;
    size_t pos = 0;

    void need(size_t n) {
        if (pos + n > bytes.size()) throw Truncated{};
    }
    uint8_t u8() {
        need(1);
        return bytes[pos++];
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[pos++]) << (8 * i);
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes[pos++]) << (8 * i);
        return v;
    }
    int64_t i64() { return static_cast<int64_t>(u64()); }
    double f64() {
        uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str() {
        uint32_t n = u32();
        need(n);
        std::string s(bytes.begin() + static_cast<long>(pos),
                      bytes.begin() + static_cast<long>(pos + n));
        pos += n;
        return s;
    }
};

// -- AST encoding --------------------------------------------------------------

void put_type(Writer& w, const Type& t) {
    w.u8(static_cast<uint8_t>(t.kind));
    switch (t.kind) {
        case TypeKind::Pointer: put_type(w, *t.elem); break;
        case TypeKind::Array:
            put_type(w, *t.elem);
            w.i64(t.count);
            break;
        case TypeKind::Record:
        case TypeKind::Generic:
        case TypeKind::Closure: w.str(t.name); break;
        default: break;
    }
}

Type get_type(Reader& r) {
    Type t;
    uint8_t k = r.u8();
    if (k > static_cast<uint8_t>(TypeKind::String)) throw Truncated{};
    t.kind = static_cast<TypeKind>(k);
    switch (t.kind) {
        case TypeKind::Pointer: t.elem = std::make_shared<Type>(get_type(r)); break;
        case TypeKind::Array:
            t.elem = std::make_shared<Type>(get_type(r));
            t.count = r.i64();
            break;
        case TypeKind::Record:
        case TypeKind::Generic:
        case TypeKind::Closure: t.name = r.str(); break;
        default: break;
    }
    return t;
}

void put_span(Writer& w, Span s) {
    w.u32(static_cast<uint32_t>(s.line));
    w.u32(static_cast<uint32_t>(s.col));
}

Span get_span(Reader& r) {
    Span s;
    s.line = static_cast<int>(r.u32());
    s.col = static_cast<int>(r.u32());
    return s;
}

void put_params(Writer& w, const std::vector<Param>& ps) {
    w.u32(static_cast<uint32_t>(ps.size()));
    for (const auto& p : ps) {
        put_type(w, p.type);
        w.str(p.name);
        put_span(w, p.span);
    }
}

std::vector<Param> get_params(Reader& r) {
    uint32_t n = r.u32();
    std::vector<Param> ps;
    ps.reserve(n);
    for (uint32_t i = 0; i < n; ++i) {
        Param p;
        p.type = get_type(r);
        p.name = r.str();
        p.span = get_span(r);
        ps.push_back(std::move(p));
    }
    return ps;
}

void put_stmt(Writer& w, const Stmt& s);

void put_expr(Writer& w, const Expr& e) {
    w.u8(static_cast<uint8_t>(e.kind));
    put_span(w, e.span);
    put_type(w, e.type);
    w.i64(e.ival);
    w.f64(e.fval);
    w.str(e.text);
    w.str(e.op);
    w.str(e.callee);
    w.u8(e.callee_expr ? 1 : 0);
    if (e.callee_expr) put_expr(w, *e.callee_expr);
    w.u8(e.has_type_arg ? 1 : 0);
    if (e.has_type_arg) put_type(w, e.type_arg);
    // lambdas never survive into images
    w.u32(static_cast<uint32_t>(e.args.size()));
    for (const auto& a : e.args) put_expr(w, *a);
}

ExprPtr get_expr(Reader& r) {
    uint8_t k = r.u8();
    if (k > static_cast<uint8_t>(ExprKind::MakeClosure) ||
        k == static_cast<uint8_t>(ExprKind::Lambda))
        throw Truncated{};
    Span span = get_span(r);
    auto e = std::make_unique<Expr>(static_cast<ExprKind>(k), span);
    e->type = get_type(r);
    e->ival = r.i64();
    e->fval = r.f64();
    e->text = r.str();
    e->op = r.str();
    e->callee = r.str();
    if (r.u8()) e->callee_expr = get_expr(r);
    if (r.u8()) {
        e->has_type_arg = true;
        e->type_arg = get_type(r);
    }
    uint32_t n = r.u32();
    for (uint32_t i = 0; i < n; ++i) e->args.push_back(get_expr(r));
    return e;
}

void put_opt_expr(Writer& w, const ExprPtr& e) {
    w.u8(e ? 1 : 0);
    if (e) put_expr(w, *e);
}

void put_opt_stmt(Writer& w, const StmtPtr& s) {
    w.u8(s ? 1 : 0);
    if (s) put_stmt(w, *s);
}

void put_stmt(Writer& w, const Stmt& s) {
    w.u8(static_cast<uint8_t>(s.kind));
    put_span(w, s.span);
    put_type(w, s.decl_type);
    w.str(s.name);
    w.u8(s.is_local ? 1 : 0);
    put_opt_expr(w, s.init);
    put_opt_expr(w, s.lhs);
    put_opt_expr(w, s.rhs);
    w.str(s.op);
    put_opt_expr(w, s.cond);
    put_opt_stmt(w, s.then_branch);
    put_opt_stmt(w, s.else_branch);
    put_opt_stmt(w, s.body);
    put_opt_stmt(w, s.for_init);
    put_opt_stmt(w, s.for_step);
    w.u32(static_cast<uint32_t>(s.stmts.size()));
    for (const auto& st : s.stmts) put_stmt(w, *st);
    put_opt_expr(w, s.expr);
    w.str(s.symbol);
    put_params(w, s.k_params);
}

StmtPtr get_stmt(Reader& r) {
    uint8_t k = r.u8();
    if (k > static_cast<uint8_t>(StmtKind::KernelUnpack)) throw Truncated{};
    Span span = get_span(r);
    auto s = std::make_unique<Stmt>(static_cast<StmtKind>(k), span);
    s->decl_type = get_type(r);
    s->name = r.str();
    s->is_local = r.u8() != 0;
    if (r.u8()) s->init = get_expr(r);
    if (r.u8()) s->lhs = get_expr(r);
    if (r.u8()) s->rhs = get_expr(r);
    s->op = r.str();
    if (r.u8()) s->cond = get_expr(r);
    if (r.u8()) s->then_branch = get_stmt(r);
    if (r.u8()) s->else_branch = get_stmt(r);
    if (r.u8()) s->body = get_stmt(r);
    if (r.u8()) s->for_init = get_stmt(r);
    if (r.u8()) s->for_step = get_stmt(r);
    uint32_t n = r.u32();
    for (uint32_t i = 0; i < n; ++i) s->stmts.push_back(get_stmt(r));
    if (r.u8()) s->expr = get_expr(r);
    s->symbol = r.str();
    s->k_params = get_params(r);
    return s;
}

void put_function(Writer& w, const Function& f) {
    w.str(f.name);
    put_params(w, f.params);
    put_type(w, f.ret);
    put_span(w, f.span);
    w.u32(static_cast<uint32_t>(f.target.explicit_marks.size()));
    for (const auto& m : f.target.explicit_marks) w.str(m);
    w.str(f.target.pragma_default);
    w.u8(f.synthesized ? 1 : 0);
    put_opt_stmt(w, f.body);
}

std::unique_ptr<Function> get_function(Reader& r) {
    auto f = std::make_unique<Function>();
    f->name = r.str();
    f->params = get_params(r);
    f->ret = get_type(r);
    f->span = get_span(r);
    uint32_t nm = r.u32();
    for (uint32_t i = 0; i < nm; ++i) f->target.explicit_marks.push_back(r.str());
    f->target.pragma_default = r.str();
    f->synthesized = r.u8() != 0;
    if (r.u8()) f->body = get_stmt(r);
    return f;
}

void put_layout(Writer& w, const RecordLayout& lay) {
    w.str(lay.name);
    w.u64(lay.size);
    w.u64(lay.align);
    w.u32(static_cast<uint32_t>(lay.fields.size()));
    for (const auto& f : lay.fields) {
        w.str(f.name);
        put_type(w, f.type);
        w.u64(f.offset);
        w.u64(f.size);
    }
}

RecordLayout get_layout(Reader& r) {
    RecordLayout lay;
    lay.name = r.str();
    lay.size = r.u64();
    lay.align = r.u64();
    uint32_t n = r.u32();
    for (uint32_t i = 0; i < n; ++i) {
        FieldLayout f;
        f.name = r.str();
        f.type = get_type(r);
        f.offset = r.u64();
        f.size = r.u64();
        lay.fields.push_back(std::move(f));
    }
    return lay;
}

void put_kernel_entry(Writer& w, const KernelEntry& k) {
    w.str(k.base);
    w.str(k.wrapper_symbol);
    w.u64(k.layout.size);
    w.u32(static_cast<uint32_t>(k.layout.slots.size()));
    for (const auto& s : k.layout.slots) {
        w.str(s.name);
        put_type(w, s.type);
        w.u64(s.offset);
        w.u64(s.size);
    }
    put_params(w, k.params);
}

KernelEntry get_kernel_entry(Reader& r) {
    KernelEntry k;
    k.base = r.str();
    k.wrapper_symbol = r.str();
    k.layout.size = r.u64();
    uint32_t n = r.u32();
    for (uint32_t i = 0; i < n; ++i) {
        FieldLayout s;
        s.name = r.str();
        s.type = get_type(r);
        s.offset = r.u64();
        s.size = r.u64();
        k.layout.slots.push_back(std::move(s));
    }
    k.params = get_params(r);
    return k;
}

bool check_header(Reader& r, const char magic[8], DiagBag& diags, const char* what) {
    try {
        r.need(8);
    } catch (Truncated&) {
        diags.error("E_IMG_TRUNCATED", std::string(what) + " too short for header", {});
        return false;
    }
    if (std::memcmp(r.bytes.data(), magic, 8) != 0) {
        diags.error("E_IMG_MAGIC", std::string("bad magic in ") + what, {});
        return false;
    }
    r.pos = 8;
    uint32_t ver;
    try {
        ver = r.u32();
    } catch (Truncated&) {
        diags.error("E_IMG_TRUNCATED", std::string(what) + " too short for header", {});
        return false;
    }
    if (ver != kImageFormatVersion) {
        diags.error("E_IMG_VERSION",
                    "unsupported format version " + std::to_string(ver) + " in " + what +
                        " (expected " + std::to_string(kImageFormatVersion) + ")",
                    {});
        return false;
    }
    return true;
}

// -- reference scanning (for link-time resolution) -------------------------------

struct Refs {
    std::set<std::string> calls;
    std::set<std::string> launches;

    void scan_expr(const Expr& e) {
        if (e.kind == ExprKind::Call && !e.callee.empty() && !builtin_target(e.callee))
            calls.insert(e.callee);
        if (e.callee_expr) scan_expr(*e.callee_expr);
        for (const auto& a : e.args) scan_expr(*a);
    }
    void scan_stmt(const Stmt& s) {
        if (s.kind == StmtKind::KernelLaunch)
            launches.insert(s.symbol);
        else if (s.kind == StmtKind::KernelUnpack)
            calls.insert(s.symbol);
        for (const ExprPtr* e : {&s.init, &s.lhs, &s.rhs, &s.cond, &s.expr})
            if (*e) scan_expr(**e);
        for (const StmtPtr* st : {&s.then_branch, &s.else_branch, &s.body, &s.for_init,
                                  &s.for_step})
            if (*st) scan_stmt(**st);
        for (const auto& st : s.stmts) scan_stmt(*st);
    }
};

}  // namespace

LinkedImage link(const TargetModule& host, const TargetModule& slave, DiagBag& diags) {
    LinkedImage image;

    for (const TargetModule* mod : {&host, &slave}) {
        auto& table = mod->side == Side::Host ? image.host_functions
                                              : image.slave_functions;
        for (const auto& f : mod->functions) {
            if (table.count(f->name)) {
                diags.error("E_DUP_SYM", "duplicate symbol `" + f->name + "`", f->span);
                continue;
            }
            table[f->name] = clone_function(*f);
        }
        for (const auto& [name, lay] : mod->records) {
            auto it = image.records.find(name);
            if (it == image.records.end())
                image.records[name] = lay;
            else if (!(it->second == lay))
                diags.error("E_LAYOUT_MISMATCH",
                            "record `" + name + "` has different layouts in the two "
                            "modules",
                            {});
        }
    }

    image.kernel_table = slave.kernels;

    // every reference must resolve within its side; launch targets always
    // resolve against the slave side
    for (const TargetModule* mod : {&host, &slave}) {
        const auto& own = mod->side == Side::Host ? image.host_functions
                                                  : image.slave_functions;
        Refs refs;
        for (const auto& f : mod->functions)
            if (f->body) refs.scan_stmt(*f->body);
        for (const auto& sym : refs.calls)
            if (!own.count(sym))
                diags.error("E_UNDEF_REF", "undefined reference to `" + sym + "`", {});
        for (const auto& sym : refs.launches)
            if (!image.slave_functions.count(sym))
                diags.error("E_UNDEF_REF", "undefined reference to `" + sym + "`", {});
    }

    if (!image.host_functions.count("main"))
        diags.error("E_NO_ENTRY", "no `main` defined on the HOST side", {});
    else
        image.entry = "main";
    return image;
}

std::vector<uint8_t> serialize_image(const LinkedImage& image) {
    Writer w;
    w.raw(kImageMagic, 8);
    w.u32(image.format_version);
    w.str(image.entry);
    w.u32(static_cast<uint32_t>(image.records.size()));
    for (const auto& [name, lay] : image.records) put_layout(w, lay);
    w.u32(static_cast<uint32_t>(image.kernel_table.size()));
    for (const auto& k : image.kernel_table) put_kernel_entry(w, k);
    for (const auto* table : {&image.host_functions, &image.slave_functions}) {
        w.u32(static_cast<uint32_t>(table->size()));
        for (const auto& [name, fn] : *table) put_function(w, *fn);
    }
    return w.bytes;
}

bool deserialize_image(const std::vector<uint8_t>& bytes, LinkedImage& out,
                       DiagBag& diags) {
    Reader r{bytes};
    if (!check_header(r, kImageMagic, diags, "image")) return false;
    try {
        out.format_version = kImageFormatVersion;
        out.entry = r.str();
        uint32_t nr = r.u32();
        for (uint32_t i = 0; i < nr; ++i) {
            RecordLayout lay = get_layout(r);
            out.records[lay.name] = std::move(lay);
        }
        uint32_t nk = r.u32();
        for (uint32_t i = 0; i < nk; ++i) out.kernel_table.push_back(get_kernel_entry(r));
        for (auto* table : {&out.host_functions, &out.slave_functions}) {
            uint32_t nf = r.u32();
            for (uint32_t i = 0; i < nf; ++i) {
                auto fn = get_function(r);
                std::string name = fn->name;
                (*table)[name] = std::move(fn);
            }
        }
    } catch (Truncated&) {
        diags.error("E_IMG_TRUNCATED", "image data ends unexpectedly", {});
        return false;
    }
    if (r.pos != bytes.size()) {
        diags.error("E_IMG_TRUNCATED", "trailing bytes after image payload", {});
        return false;
    }
    return true;
}

std::vector<uint8_t> serialize_module(const TargetModule& module) {
    Writer w;
    w.raw(kModuleMagic, 8);
    w.u32(kImageFormatVersion);
    w.u8(static_cast<uint8_t>(module.side));
    w.u8(module.finalized ? 1 : 0);
    w.u32(static_cast<uint32_t>(module.records.size()));
    for (const auto& [name, lay] : module.records) put_layout(w, lay);
    w.u32(static_cast<uint32_t>(module.kernels.size()));
    for (const auto& k : module.kernels) put_kernel_entry(w, k);
    w.u32(static_cast<uint32_t>(module.externs.size()));
    for (const auto& e : module.externs) w.str(e);
    w.u32(static_cast<uint32_t>(module.functions.size()));
    for (const auto& f : module.functions) put_function(w, *f);
    return w.bytes;
}

bool deserialize_module(const std::vector<uint8_t>& bytes, TargetModule& out,
                        DiagBag& diags) {
    Reader r{bytes};
    if (!check_header(r, kModuleMagic, diags, "module")) return false;
    try {
        out.side = r.u8() ? Side::Slave : Side::Host;
        out.finalized = r.u8() != 0;
        uint32_t nr = r.u32();
        for (uint32_t i = 0; i < nr; ++i) {
            RecordLayout lay = get_layout(r);
            out.records[lay.name] = std::move(lay);
        }
        uint32_t nk = r.u32();
        for (uint32_t i = 0; i < nk; ++i) out.kernels.push_back(get_kernel_entry(r));
        uint32_t ne = r.u32();
        for (uint32_t i = 0; i < ne; ++i) out.externs.push_back(r.str());
        uint32_t nf = r.u32();
        for (uint32_t i = 0; i < nf; ++i) out.functions.push_back(get_function(r));
    } catch (Truncated&) {
        diags.error("E_IMG_TRUNCATED", "module data ends unexpectedly", {});
        return false;
    }
    if (r.pos != bytes.size()) {
        diags.error("E_IMG_TRUNCATED", "trailing bytes after module payload", {});
        return false;
    }
    return true;
}

bool image_equal(const LinkedImage& a, const LinkedImage& b) {
    return serialize_image(a) == serialize_image(b);
}

}  // namespace swuc
