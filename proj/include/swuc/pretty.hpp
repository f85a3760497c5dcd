#pragma once
#include <string>

#include "swuc/ast.hpp"

namespace swuc {

// Prints a unit back to parseable SW-C source. Functions whose pragma default
// is not "host" are wrapped in matching push/pop directives so a re-parse
// reproduces the same raw target specifications.
std::string print_unit(const SourceUnit& unit);

std::string print_function(const Function& f);
std::string print_stmt(const Stmt& s, int indent = 0);
std::string print_expr(const Expr& e);

// Structural identity used by round-trip tests (origin of defaults ignored).
bool unit_equal(const SourceUnit& a, const SourceUnit& b);

}  // namespace swuc
