#pragma once
#include <string>
#include <utility>
#include <vector>
#include <iosfwd>

namespace swuc {

enum class Severity { Warning, Error };

struct Span {
    int line = 0;
    int col = 0;
};

// Stable diagnostic codes; messages may change, codes may not.
struct Diagnostic {
    Severity severity = Severity::Error;
    std::string code;
    std::string message;
    std::string file;
    Span span;
    std::vector<std::pair<std::string, Span>> notes;
};

class DiagBag {
public:
    void error(std::string code, std::string message, Span span, std::string file = "") {
        diags_.push_back({Severity::Error, std::move(code), std::move(message),
                          std::move(file), span, {}});
    }
    void warning(std::string code, std::string message, Span span, std::string file = "") {
        diags_.push_back({Severity::Warning, std::move(code), std::move(message),
                          std::move(file), span, {}});
    }
    void add(Diagnostic d) { diags_.push_back(std::move(d)); }
    void append(const DiagBag& other) {
        diags_.insert(diags_.end(), other.diags_.begin(), other.diags_.end());
    }

    bool has_errors() const {
        for (const auto& d : diags_)
            if (d.severity == Severity::Error) return true;
        return false;
    }
    bool has_code(const std::string& code) const {
        for (const auto& d : diags_)
            if (d.code == code) return true;
        return false;
    }
    size_t count(const std::string& code) const {
        size_t n = 0;
        for (const auto& d : diags_)
            if (d.code == code) ++n;
        return n;
    }
    bool empty() const { return diags_.empty(); }
    const std::vector<Diagnostic>& all() const { return diags_; }

    void set_file(const std::string& file) {
        for (auto& d : diags_)
            if (d.file.empty()) d.file = file;
    }
    void sort_by_position();
    // `file:line:col: error[CODE]: message`, one per line.
    void render(std::ostream& os, bool color = false) const;

private:
    std::vector<Diagnostic> diags_;
};

}  // namespace swuc
