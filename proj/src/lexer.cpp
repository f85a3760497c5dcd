#include "swuc/lexer.hpp"

#include <cctype>
#include <set>
#include <string>

namespace swuc {

const char* token_kind_name(TokenKind k) {
    switch (k) {
        case TokenKind::Identifier: return "identifier";
        case TokenKind::Keyword: return "keyword";
        case TokenKind::IntLiteral: return "integer-literal";
        case TokenKind::FloatLiteral: return "float-literal";
        case TokenKind::StringLiteral: return "string-literal";
        case TokenKind::Punctuator: return "punctuator";
        case TokenKind::PragmaLine: return "pragma-line";
        case TokenKind::Eof: return "end of file";
    }
    return "?";
}

namespace {

const std::set<std::string> kKeywords = {
    "int", "long", "float", "double", "bool", "void", "struct", "template",
    "if", "else", "while", "for", "return", "true", "false", "local", "const",
    "__attribute",
};

struct Lexer {
    std::string_view src;
    DiagBag& diags;
    size_t pos = 0;
    int line = 1;
    int col = 1;
    std::vector<Token> out;

    bool eof() const { return pos >= src.size(); }
    char peek(size_t k = 0) const { return pos + k < src.size() ? src[pos + k] : '\0'; }

    char bump() {
        char c = src[pos++];
        if (c == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
        return c;
    }

    void emit(TokenKind k, std::string lexeme, int l, int c) {
        out.push_back({k, std::move(lexeme), l, c});
    }

    void run() {
        while (!eof()) {
            char c = peek();
            if (c == '#' && col == 1) {
                lex_directive();
                continue;
            }
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                bump();
                continue;
            }
            if (c == '/' && peek(1) == '/') {
                while (!eof() && peek() != '\n') bump();
                continue;
            }
            if (c == '/' && peek(1) == '*') {
                int l = line, co = col;
                bump();
                bump();
                bool closed = false;
                while (!eof()) {
                    if (peek() == '*' && peek(1) == '/') {
                        bump();
                        bump();
                        closed = true;
                        break;
                    }
                    bump();
                }
                if (!closed)
                    diags.error("E_LEX", "unterminated block comment", {l, co});
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) ||
                (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
                lex_number();
                continue;
            }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                lex_word();
                continue;
            }
            if (c == '"') {
                lex_string();
                continue;
            }
            lex_punct();
        }
        emit(TokenKind::Eof, "", line, col);
    }

    void lex_directive() {
        int l = line, co = col;
        std::string text;
        while (!eof() && peek() != '\n') text.push_back(bump());
        // trim trailing whitespace / CR
        while (!text.empty() && (text.back() == '\r' || text.back() == ' ' || text.back() == '\t'))
            text.pop_back();
        if (text.rfind("#pragma swuc", 0) == 0) {
            emit(TokenKind::PragmaLine, text, l, co);
        } else {
            diags.error("E_LEX", "unsupported preprocessor directive: " + text, {l, co});
        }
    }

    void lex_number() {
        int l = line, co = col;
        std::string text;
        bool is_float = false;
        while (std::isdigit(static_cast<unsigned char>(peek()))) text.push_back(bump());
        if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
            is_float = true;
            text.push_back(bump());
            while (std::isdigit(static_cast<unsigned char>(peek()))) text.push_back(bump());
        }
        if (peek() == 'e' || peek() == 'E') {
            size_t k = 1;
            if (peek(1) == '+' || peek(1) == '-') k = 2;
            if (std::isdigit(static_cast<unsigned char>(peek(k)))) {
                is_float = true;
                for (size_t i = 0; i < k; ++i) text.push_back(bump());
                while (std::isdigit(static_cast<unsigned char>(peek()))) text.push_back(bump());
            }
        }
        emit(is_float ? TokenKind::FloatLiteral : TokenKind::IntLiteral, text, l, co);
    }

    void lex_word() {
        int l = line, co = col;
        std::string text;
        while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')
            text.push_back(bump());
        emit(kKeywords.count(text) ? TokenKind::Keyword : TokenKind::Identifier, text, l, co);
    }

    void lex_string() {
        int l = line, co = col;
        std::string text;
        text.push_back(bump());  // opening quote
        bool closed = false;
        while (!eof()) {
            char c = peek();
            if (c == '\n') break;
            bump();
            text.push_back(c);
            if (c == '\\' && !eof()) {
                text.push_back(bump());
                continue;
            }
            if (c == '"') {
                closed = true;
                break;
            }
        }
        if (!closed) {
            diags.error("E_LEX", "unterminated string literal", {l, co});
            return;
        }
        emit(TokenKind::StringLiteral, text, l, co);
    }

    void lex_punct() {
        int l = line, co = col;
        static const char* two[] = {"->", "<=", ">=", "==", "!=", "&&", "||",
                                    "+=", "-=", "*=", "/=", "++", "--"};
        for (const char* t : two) {
            if (peek() == t[0] && peek(1) == t[1]) {
                bump();
                bump();
                emit(TokenKind::Punctuator, t, l, co);
                return;
            }
        }
        char c = peek();
        static const std::string singles = "()[]{};,.<>=+-*/%!&|";
        if (singles.find(c) != std::string::npos) {
            bump();
            emit(TokenKind::Punctuator, std::string(1, c), l, co);
            return;
        }
        bump();
        diags.error("E_LEX", std::string("illegal character '") + c + "'", {l, co});
    }
};

}  // namespace

std::vector<Token> tokenize(std::string_view source, DiagBag& diags) {
    Lexer lx{source, diags};
    lx.run();
    return std::move(lx.out);
}

}  // namespace swuc
