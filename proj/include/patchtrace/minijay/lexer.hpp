#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "patchtrace/error.hpp"

namespace patchtrace::minijay {

enum class TokenKind {
    identifier,
    keyword,
    integer,
    string,
    punct,
    comment,
    whitespace,
    eof,
};

struct Token {
    TokenKind kind = TokenKind::eof;
    std::string text;         // exact source bytes
    std::uint32_t line = 1;   // 1-based
    std::uint32_t column = 1; // 1-based, bytes
    std::size_t offset = 0;   // byte offset into the source
};

inline bool is_keyword(std::string_view word)
{
    static constexpr std::array<std::string_view, 13> keywords = {
        "package", "class", "fn", "init", "var", "if", "else",
        "while", "return", "new", "true", "false", "nil",
    };
    for (auto k : keywords)
        if (k == word)
            return true;
    return false;
}

namespace detail {

[[noreturn]] inline void lex_error(std::string message, std::uint32_t line, std::uint32_t column)
{
    raise(ErrorKind::lex_error,
          message + " at " + std::to_string(line) + ":" + std::to_string(column));
}

} // namespace detail

// Splits UTF-8 source text into tokens, keeping comments and whitespace as
// tokens of their own so spans can be reproduced byte-exactly.
inline std::vector<Token> tokenize(std::string_view source)
{
    std::vector<Token> tokens;
    std::size_t i = 0;
    std::uint32_t line = 1;
    std::uint32_t column = 1;

    auto push = [&](TokenKind kind, std::size_t start, std::size_t end,
                    std::uint32_t tok_line, std::uint32_t tok_col) {
        tokens.push_back(Token{kind, std::string(source.substr(start, end - start)),
                               tok_line, tok_col, start});
    };
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (source[i + k] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        i += n;
    };

    while (i < source.size()) {
        char c = source[i];
        std::size_t start = i;
        std::uint32_t tok_line = line;
        std::uint32_t tok_col = column;

        if (std::isspace(static_cast<unsigned char>(c))) {
            std::size_t end = i;
            while (end < source.size() && std::isspace(static_cast<unsigned char>(source[end])))
                ++end;
            advance(end - i);
            push(TokenKind::whitespace, start, end, tok_line, tok_col);
            continue;
        }

        if (c == '/' && i + 1 < source.size() && source[i + 1] == '/') {
            std::size_t end = i;
            while (end < source.size() && source[end] != '\n')
                ++end;
            advance(end - i);
            push(TokenKind::comment, start, end, tok_line, tok_col);
            continue;
        }

        if (c == '/' && i + 1 < source.size() && source[i + 1] == '*') {
            std::size_t end = source.find("*/", i + 2);
            if (end == std::string_view::npos)
                detail::lex_error("unterminated block comment", tok_line, tok_col);
            end += 2;
            advance(end - i);
            push(TokenKind::comment, start, end, tok_line, tok_col);
            continue;
        }

        if (c == '"') {
            std::size_t end = i + 1;
            while (true) {
                if (end >= source.size() || source[end] == '\n')
                    detail::lex_error("unterminated string literal", tok_line, tok_col);
                if (source[end] == '\\') {
                    if (end + 1 >= source.size())
                        detail::lex_error("unterminated string literal", tok_line, tok_col);
                    char esc = source[end + 1];
                    if (esc != '"' && esc != '\\' && esc != 'n' && esc != 't')
                        detail::lex_error(std::string("invalid escape '\\") + esc + "'",
                                          tok_line, tok_col);
                    end += 2;
                    continue;
                }
                if (source[end] == '"') {
                    ++end;
                    break;
                }
                ++end;
            }
            advance(end - i);
            push(TokenKind::string, start, end, tok_line, tok_col);
            continue;
        }

        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t end = i;
            while (end < source.size() && std::isdigit(static_cast<unsigned char>(source[end])))
                ++end;
            advance(end - i);
            push(TokenKind::integer, start, end, tok_line, tok_col);
            continue;
        }

        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t end = i;
            while (end < source.size()
                   && (std::isalnum(static_cast<unsigned char>(source[end])) || source[end] == '_'))
                ++end;
            std::string_view word = source.substr(start, end - start);
            advance(end - i);
            push(is_keyword(word) ? TokenKind::keyword : TokenKind::identifier,
                 start, end, tok_line, tok_col);
            continue;
        }

        // Punctuation, longest match first.
        static constexpr std::array<std::string_view, 6> two_char = {
            "<=", ">=", "==", "!=", "&&", "||",
        };
        std::string_view rest = source.substr(i);
        bool matched = false;
        for (auto p : two_char) {
            if (rest.substr(0, 2) == p) {
                advance(2);
                push(TokenKind::punct, start, start + 2, tok_line, tok_col);
                matched = true;
                break;
            }
        }
        if (matched)
            continue;
        if (std::string_view("(){};,.=+-*/<>!").find(c) != std::string_view::npos) {
            advance(1);
            push(TokenKind::punct, start, start + 1, tok_line, tok_col);
            continue;
        }

        detail::lex_error(std::string("unexpected character '") + c + "'", tok_line, tok_col);
    }

    tokens.push_back(Token{TokenKind::eof, "", line, column, source.size()});
    return tokens;
}

inline bool is_trivia(const Token& tok)
{
    return tok.kind == TokenKind::whitespace || tok.kind == TokenKind::comment;
}

} // namespace patchtrace::minijay
