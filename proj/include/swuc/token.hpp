#pragma once
#include <string>
#include <vector>

namespace swuc {

enum class TokenKind {
    Identifier,
    Keyword,
    IntLiteral,
    FloatLiteral,
    StringLiteral,
    Punctuator,
    PragmaLine,
    Eof,
};

struct Token {
    TokenKind kind = TokenKind::Eof;
    std::string lexeme;
    int line = 1;   // 1-based, first character of the lexeme
    int column = 1;

    bool is(TokenKind k) const { return kind == k; }
    bool is_punct(const std::string& p) const {
        return kind == TokenKind::Punctuator && lexeme == p;
    }
    bool is_kw(const std::string& k) const {
        return kind == TokenKind::Keyword && lexeme == k;
    }
};

const char* token_kind_name(TokenKind k);

}  // namespace swuc
