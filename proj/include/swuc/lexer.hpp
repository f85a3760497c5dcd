#pragma once
#include <string_view>
#include <vector>

#include "swuc/diag.hpp"
#include "swuc/token.hpp"

namespace swuc {

// Tokenizes SW-C source. Pragma lines (`#pragma swuc ...` starting at column 1)
// become single PragmaLine tokens carrying the whole directive text.
// The returned list always ends with an Eof token.
std::vector<Token> tokenize(std::string_view source, DiagBag& diags);

}  // namespace swuc
