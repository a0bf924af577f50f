// SPDX-License-Identifier: Apache-2.0
#pragma once

// Tokenizer shared by the core, manifest, netlist and March readers.
// Words are runs of identifier-ish characters; punctuation is one char each.
// `//` starts a comment that runs to end of line.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "stk/error.hpp"

namespace stk::detail {

struct Token {
    enum class Kind { word, punct, end };
    Kind kind = Kind::end;
    std::string text;
    std::size_t line = 1;
    std::size_t column = 1;

    bool is(std::string_view s) const { return kind != Kind::end && text == s; }
};

std::vector<Token> tokenize(std::string_view text, std::string_view punct_chars);

class TokenCursor {
public:
    explicit TokenCursor(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    const Token& peek(std::size_t ahead = 0) const;
    const Token& next();
    bool at_end() const { return peek().kind == Token::Kind::end; }
    bool accept(std::string_view s);
    const Token& expect(std::string_view s);
    const Token& expect_word(std::string_view what);

    [[noreturn]] void fail(const Token& at, const std::string& msg) const;
    [[noreturn]] void fail(const std::string& msg) const { fail(peek(), msg); }

private:
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    Token end_;
};

std::size_t parse_count(const Token& tok, const TokenCursor& cur);
double parse_real(const Token& tok, const TokenCursor& cur);

} // namespace stk::detail
