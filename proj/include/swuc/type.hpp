#pragma once
#include <cstdint>
#include <memory>
#include <string>

namespace swuc {

enum class TypeKind : uint8_t {
    Void,
    Bool,
    Int,
    Long,
    Float,
    Double,
    Pointer,   // elem
    Array,     // elem, count
    Record,    // name
    Generic,   // name (the single template parameter)
    Closure,   // name (synthesized closure record, "__closure_N")
    String,    // literal-only, print arguments
};

struct Type {
    TypeKind kind = TypeKind::Void;
    std::string name;              // Record / Generic / Closure
    std::shared_ptr<Type> elem;    // Pointer / Array
    int64_t count = 0;             // Array

    bool is_void() const { return kind == TypeKind::Void; }
    bool is_integer() const {
        return kind == TypeKind::Bool || kind == TypeKind::Int || kind == TypeKind::Long;
    }
    bool is_float() const { return kind == TypeKind::Float || kind == TypeKind::Double; }
    bool is_numeric() const { return is_integer() || is_float(); }
    bool is_pointer() const { return kind == TypeKind::Pointer; }
    bool is_array() const { return kind == TypeKind::Array; }
    bool is_record_like() const {
        return kind == TypeKind::Record || kind == TypeKind::Closure;
    }
    bool is_scalar() const { return is_numeric() || is_pointer(); }

    const Type& element() const { return *elem; }
};

bool operator==(const Type& a, const Type& b);
inline bool operator!=(const Type& a, const Type& b) { return !(a == b); }

Type make_void();
Type make_bool();
Type make_int();
Type make_long();
Type make_float();
Type make_double();
Type make_string();
Type make_pointer(Type elem);
Type make_array(Type elem, int64_t count);
Type make_record(std::string name);
Type make_generic(std::string name);
Type make_closure(std::string name);

// Readable type spelling used in mangled names and listings:
// int, long, ptr_int, arr8_int, Point, __closure_0, ...
std::string spell(const Type& t);
// Source-level spelling: "int*", "Point", "int[8]".
std::string spell_source(const Type& t);

// Does `t` mention the generic parameter anywhere?
bool mentions_generic(const Type& t);
// Replace every Generic node with `arg`.
Type substitute_generic(const Type& t, const Type& arg);

}  // namespace swuc
