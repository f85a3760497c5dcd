#include "swuc/layout.hpp"

namespace swuc {

bool operator==(const RecordLayout& a, const RecordLayout& b) {
    if (a.name != b.name || a.size != b.size || a.align != b.align) return false;
    if (a.fields.size() != b.fields.size()) return false;
    for (size_t i = 0; i < a.fields.size(); ++i) {
        const auto& fa = a.fields[i];
        const auto& fb = b.fields[i];
        if (fa.name != fb.name || fa.offset != fb.offset || fa.size != fb.size ||
            fa.type != fb.type)
            return false;
    }
    return true;
}

static uint64_t align_up(uint64_t v, uint64_t a) { return (v + a - 1) / a * a; }

uint64_t RecordTable::size_of(const Type& t) const {
    switch (t.kind) {
        case TypeKind::Void: return 0;
        case TypeKind::Bool: return 1;
        case TypeKind::Int:
        case TypeKind::Float: return 4;
        case TypeKind::Long:
        case TypeKind::Double:
        case TypeKind::Pointer: return 8;
        case TypeKind::Array: return size_of(*t.elem) * static_cast<uint64_t>(t.count);
        case TypeKind::Record:
        case TypeKind::Closure: {
            auto it = layouts_.find(t.name);
            return it == layouts_.end() ? 0 : it->second.size;
        }
        default: return 0;
    }
}

uint64_t RecordTable::align_of(const Type& t) const {
    switch (t.kind) {
        case TypeKind::Array: return align_of(*t.elem);
        case TypeKind::Record:
        case TypeKind::Closure: {
            auto it = layouts_.find(t.name);
            return it == layouts_.end() ? 1 : it->second.align;
        }
        default: {
            uint64_t s = size_of(t);
            return s == 0 ? 1 : s;
        }
    }
}

void RecordTable::define(const RecordDecl& decl, DiagBag& diags) {
    if (layouts_.count(decl.name)) {
        diags.error("E_DUP_SYM", "record `" + decl.name + "` redefined", decl.span);
        return;
    }
    RecordLayout lay;
    lay.name = decl.name;
    uint64_t offset = 0;
    uint64_t max_align = 1;
    for (const auto& [fname, ftype] : decl.fields) {
        if (ftype.is_record_like() && !layouts_.count(ftype.name)) {
            diags.error("E_TYPE", "field `" + fname + "` uses undefined record `" +
                                      ftype.name + "`",
                        decl.span);
            continue;
        }
        uint64_t fsize = size_of(ftype);
        uint64_t falign = align_of(ftype);
        if (fsize == 0) {
            diags.error("E_TYPE", "field `" + fname + "` has invalid type", decl.span);
            continue;
        }
        offset = align_up(offset, falign);
        lay.fields.push_back({fname, ftype, offset, fsize});
        offset += fsize;
        if (falign > max_align) max_align = falign;
    }
    lay.align = max_align;
    lay.size = align_up(offset, max_align);
    if (lay.size == 0) lay.size = 1;  // empty records still occupy a byte slot
    layouts_.emplace(decl.name, std::move(lay));
}

RecordTable build_record_table(const SourceUnit& unit, DiagBag& diags) {
    RecordTable table;
    for (const auto& r : unit.records) table.define(r, diags);
    return table;
}

BlockLayout compute_block_layout(const std::vector<Param>& params,
                                 const RecordTable& records) {
    BlockLayout out;
    uint64_t offset = 0;
    for (const auto& p : params) {
        uint64_t size = records.size_of(p.type);
        uint64_t align = records.align_of(p.type);
        offset = align_up(offset, align);
        out.slots.push_back({p.name, p.type, offset, size});
        offset += size;
    }
    out.size = align_up(offset, 8);
    return out;
}

}  // namespace swuc
