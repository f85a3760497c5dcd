#include "swuc/type.hpp"

#include <string>

namespace swuc {

bool operator==(const Type& a, const Type& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case TypeKind::Pointer:
            return *a.elem == *b.elem;
        case TypeKind::Array:
            return a.count == b.count && *a.elem == *b.elem;
        case TypeKind::Record:
        case TypeKind::Generic:
        case TypeKind::Closure:
            return a.name == b.name;
        default:
            return true;
    }
}

Type make_void() { return {TypeKind::Void}; }
Type make_bool() { return {TypeKind::Bool}; }
Type make_int() { return {TypeKind::Int}; }
Type make_long() { return {TypeKind::Long}; }
Type make_float() { return {TypeKind::Float}; }
Type make_double() { return {TypeKind::Double}; }
Type make_string() { return {TypeKind::String}; }

Type make_pointer(Type elem) {
    Type t{TypeKind::Pointer};
    t.elem = std::make_shared<Type>(std::move(elem));
    return t;
}

Type make_array(Type elem, int64_t count) {
    Type t{TypeKind::Array};
    t.elem = std::make_shared<Type>(std::move(elem));
    t.count = count;
    return t;
}

Type make_record(std::string name) {
    Type t{TypeKind::Record};
    t.name = std::move(name);
    return t;
}

Type make_generic(std::string name) {
    Type t{TypeKind::Generic};
    t.name = std::move(name);
    return t;
}

Type make_closure(std::string name) {
    Type t{TypeKind::Closure};
    t.name = std::move(name);
    return t;
}

std::string spell(const Type& t) {
    switch (t.kind) {
        case TypeKind::Void: return "void";
        case TypeKind::Bool: return "bool";
        case TypeKind::Int: return "int";
        case TypeKind::Long: return "long";
        case TypeKind::Float: return "float";
        case TypeKind::Double: return "double";
        case TypeKind::String: return "string";
        case TypeKind::Pointer: return "ptr_" + spell(*t.elem);
        case TypeKind::Array: return "arr" + std::to_string(t.count) + "_" + spell(*t.elem);
        case TypeKind::Record:
        case TypeKind::Generic:
        case TypeKind::Closure: return t.name;
    }
    return "?";
}

std::string spell_source(const Type& t) {
    switch (t.kind) {
        case TypeKind::Pointer: return spell_source(*t.elem) + "*";
        case TypeKind::Array:
            return spell_source(*t.elem) + "[" + std::to_string(t.count) + "]";
        case TypeKind::Record:
        case TypeKind::Generic:
        case TypeKind::Closure: return t.name;
        default: return spell(t);
    }
}

bool mentions_generic(const Type& t) {
    if (t.kind == TypeKind::Generic) return true;
    if (t.elem) return mentions_generic(*t.elem);
    return false;
}

Type substitute_generic(const Type& t, const Type& arg) {
    if (t.kind == TypeKind::Generic) return arg;
    if (t.kind == TypeKind::Pointer) return make_pointer(substitute_generic(*t.elem, arg));
    if (t.kind == TypeKind::Array) return make_array(substitute_generic(*t.elem, arg), t.count);
    return t;
}

}  // namespace swuc
