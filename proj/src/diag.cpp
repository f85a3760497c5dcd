#include "swuc/diag.hpp"

#include <algorithm>
#include <ostream>

namespace swuc {

void DiagBag::sort_by_position() {
    std::stable_sort(diags_.begin(), diags_.end(),
                     [](const Diagnostic& a, const Diagnostic& b) {
                         if (a.file != b.file) return a.file < b.file;
                         if (a.span.line != b.span.line) return a.span.line < b.span.line;
                         return a.span.col < b.span.col;
                     });
}

void DiagBag::render(std::ostream& os, bool color) const {
    for (const auto& d : diags_) {
        const char* sev = d.severity == Severity::Error ? "error" : "warning";
        os << d.file << ":" << d.span.line << ":" << d.span.col << ": ";
        if (color)
            os << (d.severity == Severity::Error ? "\033[31m" : "\033[33m")
               << sev << "\033[0m";
        else
            os << sev;
        os << "[" << d.code << "]: " << d.message << "\n";
        for (const auto& [note, sp] : d.notes)
            os << d.file << ":" << sp.line << ":" << sp.col << ": note: " << note << "\n";
    }
}

}  // namespace swuc
