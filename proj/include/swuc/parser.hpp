#pragma once
#include <string>
#include <vector>

#include "swuc/ast.hpp"
#include "swuc/diag.hpp"
#include "swuc/token.hpp"

namespace swuc {

// Default-target stack driven by `#pragma swuc push/pop`. The active default
// is the top frame, or "host" when the stack is empty.
class PragmaStack {
public:
    const std::string& active() const {
        return frames_.empty() ? base_ : frames_.back();
    }
    void push(const std::string& target) { frames_.push_back(target); }
    // Returns false on underflow (caller reports the diagnostic).
    bool pop() {
        if (frames_.empty()) return false;
        frames_.pop_back();
        return true;
    }
    size_t depth() const { return frames_.size(); }

private:
    std::vector<std::string> frames_;
    std::string base_ = "host";
};

// Applies one `#pragma swuc ...` directive line to the stack.
// Diagnostics: E_PRAGMA_MALFORMED, E_PRAGMA_UNDERFLOW.
void apply_pragma_line(const std::string& pragma_line, Span span, PragmaStack& stack,
                       DiagBag& diags);

SourceUnit parse(const std::vector<Token>& tokens, DiagBag& diags);

// Attribute/record checks on a parsed unit: E_ATTR_CONFLICT, E_KERNEL_LAMBDA,
// W_ATTR_DUP (duplicate identical marks collapse), W_RECORD_ATTR_UNUSED.
void frontend_check(SourceUnit& unit, DiagBag& diags);

}  // namespace swuc
