#pragma once
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "swuc/ast.hpp"
#include "swuc/diag.hpp"
#include "swuc/type.hpp"

namespace swuc {

struct FieldLayout {
    std::string name;
    Type type;
    uint64_t offset = 0;
    uint64_t size = 0;
};

struct RecordLayout {
    std::string name;
    std::vector<FieldLayout> fields;
    uint64_t size = 0;
    uint64_t align = 1;
};

bool operator==(const RecordLayout& a, const RecordLayout& b);

// Sizing rules: bool 1, int/float 4, long/double/pointer 8; records use
// natural field alignment in declaration order, size padded to alignment.
class RecordTable {
public:
    void define(const RecordDecl& decl, DiagBag& diags);
    bool has(const std::string& name) const { return layouts_.count(name) != 0; }
    const RecordLayout& get(const std::string& name) const { return layouts_.at(name); }
    const std::map<std::string, RecordLayout>& all() const { return layouts_; }

    uint64_t size_of(const Type& t) const;
    uint64_t align_of(const Type& t) const;

private:
    std::map<std::string, RecordLayout> layouts_;
};

// Builds the table for a unit (including synthesized closure records).
RecordTable build_record_table(const SourceUnit& unit, DiagBag& diags);

// Kernel parameter block: fields in declaration order, each aligned to its
// natural alignment, total padded to an 8-byte multiple.
struct BlockLayout {
    std::vector<FieldLayout> slots;
    uint64_t size = 0;
};

BlockLayout compute_block_layout(const std::vector<Param>& params, const RecordTable& records);

}  // namespace swuc
