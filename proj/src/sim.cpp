#include "swuc/sim.hpp"

#include <charconv>
#include <condition_variable>
#include <cstring>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace swuc {

namespace {

constexpr uint64_t kGuardBytes = 4096;       // [0, 4K) traps: null + guard page
constexpr uint64_t kLocalTag = 1ull << 63;   // bit 63 marks CPE-local addresses
constexpr int kLocalOwnerShift = 48;
constexpr uint64_t kLocalOffsetMask = (1ull << 48) - 1;
// Kept low enough that the interpreter's own recursion fits comfortably in
// an 8MiB native stack.
constexpr int kMaxCallDepth = 500;

uint64_t local_addr(int cpe, uint64_t offset) {
    return kLocalTag | (static_cast<uint64_t>(cpe) << kLocalOwnerShift) | offset;
}

struct TrapError {
    std::string code;
    std::string message;
};

struct AbortExec {};  // another CPE trapped; unwind quietly

uint64_t align_up(uint64_t v, uint64_t a) { return (v + a - 1) / a * a; }

// -- runtime values -------------------------------------------------------------

struct Value {
    enum Kind : uint8_t { I, F, R } kind = I;
    int64_t i = 0;
    double f = 0;
    std::string rname;          // record/closure layout name
    std::vector<Value> fields;  // in layout order

    static Value of_i(int64_t v) {
        Value x;
        x.i = v;
        return x;
    }
    static Value of_f(double v) {
        Value x;
        x.kind = F;
        x.f = v;
        return x;
    }
};

int64_t as_i(const Value& v) {
    return v.kind == Value::F ? static_cast<int64_t>(v.f) : v.i;
}
double as_f(const Value& v) {
    return v.kind == Value::F ? v.f : static_cast<double>(v.i);
}
bool truthy(const Value& v) { return v.kind == Value::F ? v.f != 0 : v.i != 0; }

std::string fmt_shortest(double v, bool narrow) {
    char buf[64];
    std::to_chars_result res;
    if (narrow)
        res = std::to_chars(buf, buf + sizeof buf, static_cast<float>(v));
    else
        res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// -- cooperative interleaving -----------------------------------------------------

struct Scheduler {
    std::mutex m;
    std::condition_variable cv;
    int n = 0;
    int current = -1;
    std::vector<char> done;
    std::mt19937_64 rng;
    uint64_t quantum_left = 1;
    bool aborted = false;
    bool trap_set = false;
    TrapError trap;

    explicit Scheduler(int n_cpes, uint64_t seed) : n(n_cpes), done(n_cpes, 0), rng(seed) {}

    uint64_t next_quantum() { return rng() % 32 + 1; }

    int pick_runnable() {
        std::vector<int> runnable;
        for (int i = 0; i < n; ++i)
            if (!done[i]) runnable.push_back(i);
        if (runnable.empty()) return -1;
        return runnable[rng() % runnable.size()];
    }

    // called by the running CPE when its quantum expires
    void yield(int me) {
        std::unique_lock<std::mutex> lk(m);
        if (aborted) throw AbortExec{};
        current = pick_runnable();
        quantum_left = next_quantum();
        cv.notify_all();
        cv.wait(lk, [&] { return current == me || aborted; });
        if (aborted) throw AbortExec{};
    }

    void finish(int me) {
        std::unique_lock<std::mutex> lk(m);
        done[me] = 1;
        if (current == me) {
            current = pick_runnable();
            quantum_left = next_quantum();
        }
        cv.notify_all();
    }

    void abort_with(TrapError t, int me) {
        std::unique_lock<std::mutex> lk(m);
        if (!trap_set) {
            trap = std::move(t);
            trap_set = true;
        }
        aborted = true;
        done[me] = 1;
        cv.notify_all();
    }

    void wait_for_turn(int me) {
        std::unique_lock<std::mutex> lk(m);
        cv.wait(lk, [&] { return current == me || aborted; });
        if (aborted) throw AbortExec{};
    }
};

// -- machine ---------------------------------------------------------------------

struct Ctx {
    int cpe = -1;  // -1 = MPE
    uint64_t sp = 0;        // bump pointer inside this context's main-memory slice
    uint64_t sp_limit = 0;
    uint64_t local_sp = 0;  // bump pointer inside this CPE's local memory
    std::string* out = nullptr;
    Scheduler* sched = nullptr;
    int call_depth = 0;

    std::string who() const {
        return cpe < 0 ? "MPE" : "CPE " + std::to_string(cpe);
    }
};

struct Frame {
    struct Scope {
        std::map<std::string, Value> vars;
        uint64_t sp_mark = 0;
        uint64_t local_sp_mark = 0;
    };
    std::vector<Scope> scopes;

    Value* find(const std::string& name) {
        for (size_t i = scopes.size(); i-- > 0;) {
            auto it = scopes[i].vars.find(name);
            if (it != scopes[i].vars.end()) return &it->second;
        }
        return nullptr;
    }
};

struct Flow {
    bool returned = false;
    Value value;
};

struct Machine {
    const LinkedImage& image;
    const SimConfig& cfg;
    RunResult& result;

    std::vector<uint8_t> main_mem;
    std::vector<std::vector<uint8_t>> local_mem;
    uint64_t mpe_stack_base = 0, mpe_stack_size = 0;
    uint64_t cpe_stack_size = 0;

    // static types of each frame scalar, for conversion on assignment
    std::map<std::string, const RecordLayout*> layouts;

    Machine(const LinkedImage& img, const SimConfig& c, RunResult& r)
        : image(img), cfg(c), result(r) {
        main_mem.assign(cfg.main_memory_bytes, 0);
        local_mem.assign(static_cast<size_t>(cfg.n_cpes),
                         std::vector<uint8_t>(cfg.local_memory_bytes, 0));
        uint64_t usable = cfg.main_memory_bytes - kGuardBytes;
        mpe_stack_base = kGuardBytes;
        mpe_stack_size = usable / 2;
        cpe_stack_size = (usable - mpe_stack_size) / static_cast<uint64_t>(cfg.n_cpes);
        for (const auto& [name, lay] : image.records) layouts[name] = &lay;
    }

    [[noreturn]] void trap(const Ctx& ctx, const std::string& code,
                           const std::string& msg) {
        throw TrapError{code, ctx.who() + ": " + msg};
    }

    // -- typed memory access ------------------------------------------------------

    uint8_t* resolve(const Ctx& ctx, uint64_t addr, uint64_t n, bool local_ok = true) {
        if (n == 0) return nullptr;
        if (addr & kLocalTag) {
            int owner = static_cast<int>((addr >> kLocalOwnerShift) & 0x7FFF);
            uint64_t off = addr & kLocalOffsetMask;
            if (ctx.cpe < 0)
                trap(ctx, "TRAP_LOCAL_FROM_MPE",
                     "MPE access to CPE-local memory (CPE " + std::to_string(owner) + ")");
            if (!local_ok || owner != ctx.cpe || owner >= cfg.n_cpes)
                trap(ctx, "TRAP_OOB",
                     "access to CPE " + std::to_string(owner) + " local memory");
            if (off + n > cfg.local_memory_bytes)
                trap(ctx, "TRAP_OOB", "out-of-bounds local access");
            return local_mem[static_cast<size_t>(owner)].data() + off;
        }
        if (addr < kGuardBytes)
            trap(ctx, "TRAP_OOB", "null/guard page access at address " +
                                      std::to_string(addr));
        if (addr + n > cfg.main_memory_bytes || addr + n < addr)
            trap(ctx, "TRAP_OOB", "out-of-bounds main memory access at address " +
                                      std::to_string(addr));
        return main_mem.data() + addr;
    }

    uint64_t size_of(const Type& t) const {
        switch (t.kind) {
            case TypeKind::Bool: return 1;
            case TypeKind::Int:
            case TypeKind::Float: return 4;
            case TypeKind::Long:
            case TypeKind::Double:
            case TypeKind::Pointer: return 8;
            case TypeKind::Array:
                return size_of(*t.elem) * static_cast<uint64_t>(t.count);
            case TypeKind::Record:
            case TypeKind::Closure: {
                auto it = layouts.find(t.name);
                return it == layouts.end() ? 0 : it->second->size;
            }
            default: return 0;
        }
    }

    Value load(Ctx& ctx, const Type& t, uint64_t addr) {
        switch (t.kind) {
            case TypeKind::Bool: {
                uint8_t* p = resolve(ctx, addr, 1);
                return Value::of_i(*p != 0);
            }
            case TypeKind::Int: {
                uint8_t* p = resolve(ctx, addr, 4);
                int32_t v;
                std::memcpy(&v, p, 4);
                return Value::of_i(v);
            }
            case TypeKind::Long:
            case TypeKind::Pointer: {
                uint8_t* p = resolve(ctx, addr, 8);
                int64_t v;
                std::memcpy(&v, p, 8);
                return Value::of_i(v);
            }
            case TypeKind::Float: {
                uint8_t* p = resolve(ctx, addr, 4);
                float v;
                std::memcpy(&v, p, 4);
                return Value::of_f(v);
            }
            case TypeKind::Double: {
                uint8_t* p = resolve(ctx, addr, 8);
                double v;
                std::memcpy(&v, p, 8);
                return Value::of_f(v);
            }
            case TypeKind::Record:
            case TypeKind::Closure: {
                auto it = layouts.find(t.name);
                if (it == layouts.end()) trap(ctx, "TRAP_OOB", "unknown record layout");
                Value v;
                v.kind = Value::R;
                v.rname = t.name;
                for (const auto& f : it->second->fields)
                    v.fields.push_back(load(ctx, f.type, addr + f.offset));
                return v;
            }
            default: trap(ctx, "TRAP_OOB", "load of non-loadable type");
        }
    }

    void store(Ctx& ctx, const Type& t, uint64_t addr, const Value& v) {
        switch (t.kind) {
            case TypeKind::Bool: {
                uint8_t* p = resolve(ctx, addr, 1);
                *p = truthy(v) ? 1 : 0;
                return;
            }
            case TypeKind::Int: {
                uint8_t* p = resolve(ctx, addr, 4);
                int32_t x = static_cast<int32_t>(as_i(v));
                std::memcpy(p, &x, 4);
                return;
            }
            case TypeKind::Long:
            case TypeKind::Pointer: {
                uint8_t* p = resolve(ctx, addr, 8);
                int64_t x = as_i(v);
                std::memcpy(p, &x, 8);
                return;
            }
            case TypeKind::Float: {
                uint8_t* p = resolve(ctx, addr, 4);
                float x = static_cast<float>(as_f(v));
                std::memcpy(p, &x, 4);
                return;
            }
            case TypeKind::Double: {
                uint8_t* p = resolve(ctx, addr, 8);
                double x = as_f(v);
                std::memcpy(p, &x, 8);
                return;
            }
            case TypeKind::Record:
            case TypeKind::Closure: {
                auto it = layouts.find(t.name);
                if (it == layouts.end()) trap(ctx, "TRAP_OOB", "unknown record layout");
                const auto& fields = it->second->fields;
                for (size_t i = 0; i < fields.size() && i < v.fields.size(); ++i)
                    store(ctx, fields[i].type, addr + fields[i].offset, v.fields[i]);
                return;
            }
            default: trap(ctx, "TRAP_OOB", "store of non-storable type");
        }
    }

    Value convert(Ctx& ctx, const Value& v, const Type& t) {
        (void)ctx;
        switch (t.kind) {
            case TypeKind::Bool: return Value::of_i(truthy(v) ? 1 : 0);
            case TypeKind::Int:
                return Value::of_i(static_cast<int32_t>(as_i(v)));
            case TypeKind::Long:
            case TypeKind::Pointer: return Value::of_i(as_i(v));
            case TypeKind::Float:
                return Value::of_f(static_cast<float>(as_f(v)));
            case TypeKind::Double: return Value::of_f(as_f(v));
            default: return v;
        }
    }

    Value zero_value(const Type& t) {
        if (t.is_record_like()) {
            Value v;
            v.kind = Value::R;
            v.rname = t.name;
            auto it = layouts.find(t.name);
            if (it != layouts.end())
                for (const auto& f : it->second->fields)
                    v.fields.push_back(zero_value(f.type));
            return v;
        }
        if (t.is_float()) return Value::of_f(0);
        return Value::of_i(0);
    }

    // -- stack allocation ---------------------------------------------------------

    uint64_t alloc_main(Ctx& ctx, uint64_t n) {
        uint64_t base = align_up(ctx.sp, 8);
        if (base + n > ctx.sp_limit)
            trap(ctx, "TRAP_OOM", "stack overflow allocating " + std::to_string(n) +
                                      " bytes");
        ctx.sp = base + n;
        return base;
    }

    uint64_t alloc_local(Ctx& ctx, uint64_t n) {
        if (ctx.cpe < 0)
            trap(ctx, "TRAP_LOCAL_FROM_MPE", "CPE-local allocation on the MPE");
        uint64_t base = align_up(ctx.local_sp, 8);
        if (base + n > cfg.local_memory_bytes)
            trap(ctx, "TRAP_OOM", "local memory exhausted allocating " +
                                      std::to_string(n) + " bytes");
        ctx.local_sp = base + n;
        return local_addr(ctx.cpe, base);
    }

    // -- interleaving hook ---------------------------------------------------------

    void step(Ctx& ctx) {
        if (!ctx.sched) return;
        if (--ctx.sched->quantum_left == 0) ctx.sched->yield(ctx.cpe);
    }

    // -- expression evaluation ------------------------------------------------------

    struct LV {
        bool in_mem = false;
        uint64_t addr = 0;
        Type type;     // in_mem: pointee type
        Value* slot = nullptr;
        Type slot_type;
    };

    LV lvalue(Ctx& ctx, Frame& fr, const Expr& e) {
        switch (e.kind) {
            case ExprKind::Var: {
                Value* v = fr.find(e.text);
                if (!v) trap(ctx, "TRAP_OOB", "unbound variable `" + e.text + "`");
                LV lv;
                lv.slot = v;
                lv.slot_type = e.type;
                return lv;
            }
            case ExprKind::Index: {
                uint64_t base = static_cast<uint64_t>(as_i(eval(ctx, fr, *e.args[0])));
                int64_t idx = as_i(eval(ctx, fr, *e.args[1]));
                LV lv;
                lv.in_mem = true;
                lv.type = e.type;
                lv.addr = base + static_cast<uint64_t>(idx) * size_of(e.type);
                return lv;
            }
            case ExprKind::Unary:
                if (e.op == "*") {
                    LV lv;
                    lv.in_mem = true;
                    lv.type = e.type;
                    lv.addr = static_cast<uint64_t>(as_i(eval(ctx, fr, *e.args[0])));
                    return lv;
                }
                break;
            case ExprKind::Member: {
                if (e.op == "->") {
                    uint64_t base =
                        static_cast<uint64_t>(as_i(eval(ctx, fr, *e.args[0])));
                    Type rec = *e.args[0]->type.elem;
                    const RecordLayout* lay = layouts.at(rec.name);
                    for (const auto& f : lay->fields) {
                        if (f.name != e.text) continue;
                        LV lv;
                        lv.in_mem = true;
                        lv.type = f.type;
                        lv.addr = base + f.offset;
                        return lv;
                    }
                    trap(ctx, "TRAP_OOB", "unknown field `" + e.text + "`");
                }
                LV base = lvalue(ctx, fr, *e.args[0]);
                const std::string& rname =
                    base.in_mem ? base.type.name : base.slot_type.name;
                const RecordLayout* lay = layouts.at(rname);
                for (size_t i = 0; i < lay->fields.size(); ++i) {
                    if (lay->fields[i].name != e.text) continue;
                    if (base.in_mem) {
                        LV lv;
                        lv.in_mem = true;
                        lv.type = lay->fields[i].type;
                        lv.addr = base.addr + lay->fields[i].offset;
                        return lv;
                    }
                    LV lv;
                    lv.slot = &base.slot->fields[i];
                    lv.slot_type = lay->fields[i].type;
                    return lv;
                }
                trap(ctx, "TRAP_OOB", "unknown field `" + e.text + "`");
            }
            default: break;
        }
        trap(ctx, "TRAP_OOB", "expression is not assignable");
    }

    Value read_lv(Ctx& ctx, LV& lv) {
        if (lv.in_mem) return load(ctx, lv.type, lv.addr);
        return *lv.slot;
    }

    void write_lv(Ctx& ctx, LV& lv, const Value& v) {
        if (lv.in_mem)
            store(ctx, lv.type, lv.addr, v);
        else
            *lv.slot = convert(ctx, v, lv.slot_type);
    }

    Value eval(Ctx& ctx, Frame& fr, const Expr& e) {
        step(ctx);
        switch (e.kind) {
            case ExprKind::IntLit: return Value::of_i(e.ival);
            case ExprKind::FloatLit: return Value::of_f(e.fval);
            case ExprKind::BoolLit: return Value::of_i(e.ival);
            case ExprKind::StrLit: return Value::of_i(0);  // print handles text itself
            case ExprKind::Var: {
                Value* v = fr.find(e.text);
                if (!v) trap(ctx, "TRAP_OOB", "unbound variable `" + e.text + "`");
                return *v;
            }
            case ExprKind::Unary: return eval_unary(ctx, fr, e);
            case ExprKind::Binary: return eval_binary(ctx, fr, e);
            case ExprKind::Index: {
                LV lv = lvalue(ctx, fr, e);
                return read_lv(ctx, lv);
            }
            case ExprKind::Member: {
                LV lv = lvalue(ctx, fr, e);
                return read_lv(ctx, lv);
            }
            case ExprKind::Call: return eval_call(ctx, fr, e);
            case ExprKind::SizeofType:
                return Value::of_i(static_cast<int64_t>(size_of(e.type_arg)));
            case ExprKind::MakeClosure: {
                Value v;
                v.kind = Value::R;
                v.rname = e.type.name;
                const RecordLayout* lay = layouts.at(e.type.name);
                for (size_t i = 0; i < e.args.size(); ++i) {
                    Value a = eval(ctx, fr, *e.args[i]);
                    v.fields.push_back(convert(ctx, a, lay->fields[i].type));
                }
                return v;
            }
            case ExprKind::Lambda:
                trap(ctx, "TRAP_OOB", "unlowered lambda reached the simulator");
        }
        return Value::of_i(0);
    }

    Value eval_unary(Ctx& ctx, Frame& fr, const Expr& e) {
        if (e.op == "-") {
            Value v = eval(ctx, fr, *e.args[0]);
            if (e.type.is_float()) {
                double r = -as_f(v);
                return Value::of_f(e.type.kind == TypeKind::Float
                                       ? static_cast<float>(r)
                                       : r);
            }
            int64_t r = -as_i(v);
            if (e.type.kind == TypeKind::Int) r = static_cast<int32_t>(r);
            return Value::of_i(r);
        }
        if (e.op == "!") return Value::of_i(!truthy(eval(ctx, fr, *e.args[0])));
        if (e.op == "*") {
            LV lv = lvalue(ctx, fr, e);
            return read_lv(ctx, lv);
        }
        // ++ / --
        LV lv = lvalue(ctx, fr, *e.args[0]);
        Value old = read_lv(ctx, lv);
        int64_t delta = (e.op[0] == '+') ? 1 : -1;
        Value next;
        if (e.type.is_pointer())
            next = Value::of_i(as_i(old) +
                               delta * static_cast<int64_t>(size_of(*e.type.elem)));
        else if (e.type.is_float())
            next = Value::of_f(as_f(old) + static_cast<double>(delta));
        else
            next = Value::of_i(as_i(old) + delta);
        write_lv(ctx, lv, next);
        bool post = e.op.size() > 2 && e.op.substr(2) == "post";
        return post ? old : read_lv(ctx, lv);
    }

    Value eval_binary(Ctx& ctx, Frame& fr, const Expr& e) {
        const std::string& op = e.op;
        if (op == "&&") {
            if (!truthy(eval(ctx, fr, *e.args[0]))) return Value::of_i(0);
            return Value::of_i(truthy(eval(ctx, fr, *e.args[1])) ? 1 : 0);
        }
        if (op == "||") {
            if (truthy(eval(ctx, fr, *e.args[0]))) return Value::of_i(1);
            return Value::of_i(truthy(eval(ctx, fr, *e.args[1])) ? 1 : 0);
        }
        Value a = eval(ctx, fr, *e.args[0]);
        Value b = eval(ctx, fr, *e.args[1]);
        const Type& ta = e.args[0]->type;
        const Type& tb = e.args[1]->type;
        bool a_ptr = ta.is_pointer() || ta.is_array();
        bool b_ptr = tb.is_pointer() || tb.is_array();

        if (op == "==" || op == "!=" || op == "<" || op == ">" || op == "<=" ||
            op == ">=") {
            int cmp;
            if (ta.is_float() || tb.is_float()) {
                double x = as_f(a), y = as_f(b);
                cmp = x < y ? -1 : (x > y ? 1 : 0);
            } else {
                int64_t x = as_i(a), y = as_i(b);
                cmp = x < y ? -1 : (x > y ? 1 : 0);
            }
            bool r = op == "==" ? cmp == 0
                   : op == "!=" ? cmp != 0
                   : op == "<"  ? cmp < 0
                   : op == ">"  ? cmp > 0
                   : op == "<=" ? cmp <= 0
                                : cmp >= 0;
            return Value::of_i(r ? 1 : 0);
        }

        if (e.type.is_pointer()) {
            uint64_t esz = size_of(*e.type.elem);
            if (a_ptr)
                return Value::of_i(as_i(a) + (op == "-" ? -1 : 1) * as_i(b) *
                                                 static_cast<int64_t>(esz));
            return Value::of_i(as_i(b) + as_i(a) * static_cast<int64_t>(esz));
        }
        if (op == "-" && a_ptr && b_ptr) {
            uint64_t esz = size_of(ta.elem ? *ta.elem : *tb.elem);
            return Value::of_i((as_i(a) - as_i(b)) / static_cast<int64_t>(esz));
        }

        if (e.type.is_float()) {
            double x = as_f(a), y = as_f(b);
            double r;
            if (op == "+") r = x + y;
            else if (op == "-") r = x - y;
            else if (op == "*") r = x * y;
            else if (op == "/") r = x / y;
            else r = 0;
            if (e.type.kind == TypeKind::Float) r = static_cast<float>(r);
            return Value::of_f(r);
        }

        int64_t x = as_i(a), y = as_i(b);
        int64_t r = 0;
        if (op == "+") r = x + y;
        else if (op == "-") r = x - y;
        else if (op == "*") r = x * y;
        else if (op == "/" || op == "%") {
            if (y == 0) trap(ctx, "TRAP_DIV0", "integer division by zero");
            r = op == "/" ? x / y : x % y;
        }
        if (e.type.kind == TypeKind::Int || e.type.kind == TypeKind::Bool)
            r = static_cast<int32_t>(r);
        return Value::of_i(r);
    }

    // -- calls ------------------------------------------------------------------

    Value eval_call(Ctx& ctx, Frame& fr, const Expr& e) {
        const std::string& name = e.callee;
        if (name == "print") return do_print(ctx, fr, e);
        if (name == "min") {
            Value a = eval(ctx, fr, *e.args[0]);
            Value b = eval(ctx, fr, *e.args[1]);
            if (e.type.is_float()) {
                double r = std::min(as_f(a), as_f(b));
                if (e.type.kind == TypeKind::Float) r = static_cast<float>(r);
                return Value::of_f(r);
            }
            return Value::of_i(std::min(as_i(a), as_i(b)));
        }
        if (name == "cpe_id") {
            if (ctx.cpe < 0)
                trap(ctx, "TRAP_CPEID_FROM_MPE", "cpe_id() called on the MPE");
            return Value::of_i(ctx.cpe);
        }
        if (name == "n_cpes") return Value::of_i(cfg.n_cpes);
        if (name == "dma_get" || name == "dma_put") return do_dma(ctx, fr, e);

        const auto& table = ctx.cpe < 0 ? image.host_functions : image.slave_functions;
        auto it = table.find(name);
        if (it == table.end())
            trap(ctx, "TRAP_OOB", "call to unknown symbol `" + name + "`");
        const Function& fn = *it->second;
        std::vector<Value> args;
        args.reserve(e.args.size());
        for (size_t i = 0; i < e.args.size(); ++i) {
            Value v = eval(ctx, fr, *e.args[i]);
            args.push_back(i < fn.params.size() ? convert(ctx, v, fn.params[i].type) : v);
        }
        return call_function(ctx, fn, std::move(args));
    }

    Value call_function(Ctx& ctx, const Function& fn, std::vector<Value> args) {
        if (++ctx.call_depth > kMaxCallDepth) {
            --ctx.call_depth;
            trap(ctx, "TRAP_OOM", "call stack exhausted in `" + fn.name + "`");
        }
        Frame fr;
        fr.scopes.push_back({{}, ctx.sp, ctx.local_sp});
        for (size_t i = 0; i < fn.params.size(); ++i)
            fr.scopes.back().vars[fn.params[i].name] =
                i < args.size() ? args[i] : zero_value(fn.params[i].type);
        Flow flow = exec(ctx, fr, *fn.body);
        ctx.sp = fr.scopes.back().sp_mark;
        ctx.local_sp = fr.scopes.back().local_sp_mark;
        --ctx.call_depth;
        if (flow.returned) return convert(ctx, flow.value, fn.ret);
        return zero_value(fn.ret.is_void() ? make_int() : fn.ret);
    }

    Value do_print(Ctx& ctx, Frame& fr, const Expr& e) {
        std::string line;
        for (size_t i = 0; i < e.args.size(); ++i) {
            if (i) line += " ";
            const Expr& a = *e.args[i];
            if (a.type.kind == TypeKind::String) {
                line += a.text;
                continue;
            }
            Value v = eval(ctx, fr, a);
            Type t = a.type.is_array() ? make_pointer(*a.type.elem) : a.type;
            switch (t.kind) {
                case TypeKind::Float: line += fmt_shortest(as_f(v), true); break;
                case TypeKind::Double: line += fmt_shortest(as_f(v), false); break;
                default: line += std::to_string(as_i(v)); break;
            }
        }
        line += "\n";
        if (ctx.out) *ctx.out += line;
        return Value::of_i(0);
    }

    Value do_dma(Ctx& ctx, Frame& fr, const Expr& e) {
        bool is_get = e.callee == "dma_get";
        if (ctx.cpe < 0)
            trap(ctx, "TRAP_DMA_FROM_MPE", "`" + e.callee + "` called on the MPE");
        uint64_t dst = static_cast<uint64_t>(as_i(eval(ctx, fr, *e.args[0])));
        uint64_t src = static_cast<uint64_t>(as_i(eval(ctx, fr, *e.args[1])));
        int64_t n = as_i(eval(ctx, fr, *e.args[2]));
        if (n < 0) trap(ctx, "TRAP_OOB", "negative DMA size");
        if (n == 0) return Value::of_i(0);
        uint64_t local = is_get ? dst : src;
        uint64_t main = is_get ? src : dst;
        if (!(local & kLocalTag))
            trap(ctx, "TRAP_OOB", std::string("`") + e.callee + "` " +
                                      (is_get ? "destination" : "source") +
                                      " must be CPE-local");
        if (main & kLocalTag)
            trap(ctx, "TRAP_OOB", std::string("`") + e.callee + "` " +
                                      (is_get ? "source" : "destination") +
                                      " must be main memory");
        uint8_t* lp = resolve(ctx, local, static_cast<uint64_t>(n));
        uint8_t* mp = resolve(ctx, main, static_cast<uint64_t>(n));
        if (is_get)
            std::memcpy(lp, mp, static_cast<size_t>(n));
        else
            std::memcpy(mp, lp, static_cast<size_t>(n));
        return Value::of_i(0);
    }

    // -- statements ----------------------------------------------------------------

    Flow exec(Ctx& ctx, Frame& fr, const Stmt& s) {
        step(ctx);
        switch (s.kind) {
            case StmtKind::Block: {
                fr.scopes.push_back({{}, ctx.sp, ctx.local_sp});
                Flow flow;
                for (const auto& st : s.stmts) {
                    flow = exec(ctx, fr, *st);
                    if (flow.returned) break;
                }
                ctx.sp = fr.scopes.back().sp_mark;
                ctx.local_sp = fr.scopes.back().local_sp_mark;
                fr.scopes.pop_back();
                return flow;
            }
            case StmtKind::Decl: {
                Value v;
                if (s.decl_type.is_array()) {
                    uint64_t n = size_of(s.decl_type);
                    uint64_t addr = s.is_local ? alloc_local(ctx, n)
                                               : alloc_main(ctx, n);
                    v = Value::of_i(static_cast<int64_t>(addr));
                } else if (s.init) {
                    v = convert(ctx, eval(ctx, fr, *s.init), s.decl_type);
                } else {
                    v = zero_value(s.decl_type);
                }
                if (s.decl_type.is_array() && s.init) {
                    // grammar has no array initializers; defensive only
                }
                fr.scopes.back().vars[s.name] = std::move(v);
                return {};
            }
            case StmtKind::Assign: {
                LV lv = lvalue(ctx, fr, *s.lhs);
                Value rhs = eval(ctx, fr, *s.rhs);
                if (s.op == "=") {
                    write_lv(ctx, lv, rhs);
                    return {};
                }
                // compound: evaluate as `lhs op rhs` with the lhs static type
                Value cur = read_lv(ctx, lv);
                const Type& lt = s.lhs->type;
                Value next;
                char op0 = s.op[0];
                if (lt.is_pointer()) {
                    int64_t d = as_i(rhs) * static_cast<int64_t>(size_of(*lt.elem));
                    next = Value::of_i(as_i(cur) + (op0 == '-' ? -d : d));
                } else if (lt.is_float()) {
                    double x = as_f(cur), y = as_f(rhs), r = 0;
                    if (op0 == '+') r = x + y;
                    else if (op0 == '-') r = x - y;
                    else if (op0 == '*') r = x * y;
                    else if (op0 == '/') r = x / y;
                    if (lt.kind == TypeKind::Float) r = static_cast<float>(r);
                    next = Value::of_f(r);
                } else {
                    int64_t x = as_i(cur), y = as_i(rhs), r = 0;
                    if (op0 == '+') r = x + y;
                    else if (op0 == '-') r = x - y;
                    else if (op0 == '*') r = x * y;
                    else if (op0 == '/') {
                        if (y == 0) trap(ctx, "TRAP_DIV0", "integer division by zero");
                        r = x / y;
                    }
                    if (lt.kind == TypeKind::Int) r = static_cast<int32_t>(r);
                    next = Value::of_i(r);
                }
                write_lv(ctx, lv, next);
                return {};
            }
            case StmtKind::If: {
                if (truthy(eval(ctx, fr, *s.cond))) return exec(ctx, fr, *s.then_branch);
                if (s.else_branch) return exec(ctx, fr, *s.else_branch);
                return {};
            }
            case StmtKind::While: {
                while (truthy(eval(ctx, fr, *s.cond))) {
                    Flow flow = exec(ctx, fr, *s.body);
                    if (flow.returned) return flow;
                }
                return {};
            }
            case StmtKind::For: {
                fr.scopes.push_back({{}, ctx.sp, ctx.local_sp});
                Flow flow;
                if (s.for_init) exec(ctx, fr, *s.for_init);
                while (!s.cond || truthy(eval(ctx, fr, *s.cond))) {
                    flow = exec(ctx, fr, *s.body);
                    if (flow.returned) break;
                    if (s.for_step) exec(ctx, fr, *s.for_step);
                }
                ctx.sp = fr.scopes.back().sp_mark;
                ctx.local_sp = fr.scopes.back().local_sp_mark;
                fr.scopes.pop_back();
                return flow;
            }
            case StmtKind::Return: {
                Flow flow;
                flow.returned = true;
                if (s.expr) flow.value = eval(ctx, fr, *s.expr);
                return flow;
            }
            case StmtKind::ExprStmt:
                eval(ctx, fr, *s.expr);
                return {};
            case StmtKind::KernelLaunch:
                exec_launch(ctx, fr, s);
                return {};
            case StmtKind::KernelUnpack:
                exec_unpack(ctx, fr, s);
                return {};
        }
        return {};
    }

    // -- kernel launch ---------------------------------------------------------------

    void exec_launch(Ctx& ctx, Frame& fr, const Stmt& s) {
        if (ctx.cpe >= 0)
            trap(ctx, "TRAP_NESTED_LAUNCH",
                 "kernel launch from inside a kernel (`" + s.symbol + "`)");

        const KernelEntry* entry = nullptr;
        for (const auto& k : image.kernel_table)
            if (k.wrapper_symbol == s.symbol) entry = &k;
        if (!entry)
            trap(ctx, "TRAP_OOB", "launch of unknown kernel `" + s.symbol + "`");

        uint64_t saved_sp = ctx.sp;
        uint64_t block = 0;
        if (entry->layout.size > 0) {
            block = alloc_main(ctx, entry->layout.size);
            for (const auto& slot : entry->layout.slots) {
                Value* v = fr.find(slot.name);
                if (!v) trap(ctx, "TRAP_OOB", "missing launch argument `" + slot.name + "`");
                store(ctx, slot.type, block + slot.offset, *v);
            }
        }

        if (cfg.trace)
            result.trace_text += "LAUNCH " + s.symbol + " block=" +
                                 std::to_string(entry->layout.size) + "B cpes=" +
                                 std::to_string(cfg.n_cpes) + "\n";
        LaunchRecord rec;
        rec.wrapper_symbol = s.symbol;
        rec.param_block_address = block;
        rec.param_block_size = entry->layout.size;
        rec.per_cpe_status.assign(static_cast<size_t>(cfg.n_cpes), "completed");

        auto it = image.slave_functions.find(s.symbol);
        if (it == image.slave_functions.end())
            trap(ctx, "TRAP_OOB", "launch of unknown kernel `" + s.symbol + "`");
        const Function& wrapper = *it->second;

        std::vector<std::string> cpe_out(static_cast<size_t>(cfg.n_cpes));

        auto run_cpe = [&](int cpe, Scheduler* sched) {
            Ctx cctx;
            cctx.cpe = cpe;
            cctx.sp = mpe_stack_base + mpe_stack_size +
                      static_cast<uint64_t>(cpe) * cpe_stack_size;
            cctx.sp_limit = cctx.sp + cpe_stack_size;
            cctx.local_sp = 0;
            cctx.out = &cpe_out[static_cast<size_t>(cpe)];
            cctx.sched = sched;
            // the parameter block is copied into this CPE's local memory
            uint64_t lblock = 0;
            if (entry->layout.size > 0) {
                lblock = alloc_local(cctx, entry->layout.size);
                uint8_t* lp = resolve(cctx, lblock, entry->layout.size);
                std::memcpy(lp, main_mem.data() + block,
                            static_cast<size_t>(entry->layout.size));
            }
            Frame wfr;
            wfr.scopes.push_back({{}, cctx.sp, cctx.local_sp});
            wfr.scopes.back().vars["__block"] =
                Value::of_i(static_cast<int64_t>(lblock));
            exec(cctx, wfr, *wrapper.body);
        };

        if (cfg.mode == SimMode::Sequential || ctx.sched != nullptr) {
            for (int cpe = 0; cpe < cfg.n_cpes; ++cpe) run_cpe(cpe, nullptr);
        } else {
            Scheduler sched(cfg.n_cpes, cfg.seed);
            {
                std::unique_lock<std::mutex> lk(sched.m);
                sched.current = sched.pick_runnable();
                sched.quantum_left = sched.next_quantum();
            }
            std::vector<std::thread> threads;
            threads.reserve(static_cast<size_t>(cfg.n_cpes));
            for (int cpe = 0; cpe < cfg.n_cpes; ++cpe) {
                threads.emplace_back([&, cpe] {
                    try {
                        sched.wait_for_turn(cpe);
                        run_cpe(cpe, &sched);
                        sched.finish(cpe);
                    } catch (AbortExec&) {
                        // another CPE trapped first
                    } catch (TrapError& t) {
                        sched.abort_with(std::move(t), cpe);
                    }
                });
            }
            for (auto& t : threads) t.join();
            if (sched.trap_set) {
                ctx.sp = saved_sp;
                throw sched.trap;
            }
        }

        // buffered CPE output is flushed in index order at join
        if (ctx.out)
            for (const auto& o : cpe_out) *ctx.out += o;
        ctx.sp = saved_sp;
        result.launches.push_back(std::move(rec));
    }

    void exec_unpack(Ctx& ctx, Frame& fr, const Stmt& s) {
        Value* blockv = fr.find("__block");
        uint64_t block = blockv ? static_cast<uint64_t>(as_i(*blockv)) : 0;
        const auto& table = image.slave_functions;
        auto it = table.find(s.symbol);
        if (it == table.end())
            trap(ctx, "TRAP_OOB", "call to unknown symbol `" + s.symbol + "`");
        const Function& fn = *it->second;
        BlockLayout lay;
        {
            // reconstruct offsets from the parameter list and known layouts
            uint64_t off = 0;
            for (const auto& p : s.k_params) {
                uint64_t sz = size_of(p.type);
                uint64_t al = align_of(p.type);
                off = align_up(off, al);
                lay.slots.push_back({p.name, p.type, off, sz});
                off += sz;
            }
        }
        std::vector<Value> args;
        for (const auto& slot : lay.slots)
            args.push_back(load(ctx, slot.type, block + slot.offset));
        call_function(ctx, fn, std::move(args));
    }

    uint64_t align_of(const Type& t) const {
        switch (t.kind) {
            case TypeKind::Array: return align_of(*t.elem);
            case TypeKind::Record:
            case TypeKind::Closure: {
                auto it = layouts.find(t.name);
                return it == layouts.end() ? 1 : it->second->align;
            }
            default: {
                uint64_t s = size_of(t);
                return s == 0 ? 1 : s;
            }
        }
    }
};

}  // namespace

RunResult run(const LinkedImage& image, const SimConfig& config,
              const std::vector<std::string>& argv) {
    (void)argv;
    RunResult result;
    Machine machine(image, config, result);

    auto it = image.host_functions.find(image.entry.empty() ? "main" : image.entry);
    if (it == image.host_functions.end()) {
        result.trapped = true;
        result.trap_code = "TRAP_OOB";
        result.trap_message = "no entry point in image";
        result.exit_status = 101;
        return result;
    }

    Ctx ctx;
    ctx.cpe = -1;
    ctx.sp = machine.mpe_stack_base;
    ctx.sp_limit = machine.mpe_stack_base + machine.mpe_stack_size;
    ctx.out = &result.stdout_text;

    try {
        std::vector<Value> args;
        for (const auto& p : it->second->params) args.push_back(machine.zero_value(p.type));
        Value ret = machine.call_function(ctx, *it->second, std::move(args));
        result.exit_status = static_cast<int>(as_i(ret));
    } catch (TrapError& t) {
        result.trapped = true;
        result.trap_code = t.code;
        result.trap_message = t.message;
        result.exit_status = 101;
    }
    return result;
}

}  // namespace swuc
