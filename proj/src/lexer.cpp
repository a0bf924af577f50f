// SPDX-License-Identifier: Apache-2.0
#include "lexer.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <limits>

namespace stk::detail {

std::vector<Token> tokenize(std::string_view text, std::string_view punct_chars)
{
    std::vector<Token> out;
    std::size_t line = 1, col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n && i < text.size(); ++k, ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    while (i < text.size()) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
            while (i < text.size() && text[i] != '\n')
                advance(1);
            continue;
        }
        Token t;
        t.line = line;
        t.column = col;
        if (punct_chars.find(c) != std::string_view::npos) {
            t.kind = Token::Kind::punct;
            t.text.assign(1, c);
            out.push_back(std::move(t));
            advance(1);
            continue;
        }
        std::size_t start = i;
        while (i < text.size()) {
            char d = text[i];
            if (std::isspace(static_cast<unsigned char>(d)) || punct_chars.find(d) != std::string_view::npos)
                break;
            if (d == '/' && i + 1 < text.size() && text[i + 1] == '/')
                break;
            advance(1);
        }
        t.kind = Token::Kind::word;
        t.text.assign(text.substr(start, i - start));
        out.push_back(std::move(t));
    }
    Token end;
    end.kind = Token::Kind::end;
    end.line = line;
    end.column = col;
    out.push_back(end);
    return out;
}

const Token& TokenCursor::peek(std::size_t ahead) const
{
    if (pos_ + ahead < tokens_.size())
        return tokens_[pos_ + ahead];
    return tokens_.back();
}

const Token& TokenCursor::next()
{
    const Token& t = peek();
    if (pos_ < tokens_.size() - 1)
        ++pos_;
    return t;
}

bool TokenCursor::accept(std::string_view s)
{
    if (peek().is(s)) {
        next();
        return true;
    }
    return false;
}

const Token& TokenCursor::expect(std::string_view s)
{
    if (!peek().is(s))
        fail("expected '" + std::string(s) + "'" +
             (at_end() ? std::string(" at end of input") : ", got '" + peek().text + "'"));
    return next();
}

const Token& TokenCursor::expect_word(std::string_view what)
{
    if (peek().kind != Token::Kind::word)
        fail("expected " + std::string(what) +
             (at_end() ? std::string(" at end of input") : ", got '" + peek().text + "'"));
    return next();
}

void TokenCursor::fail(const Token& at, const std::string& msg) const
{
    throw ParseError(at.line, at.column, msg);
}

std::size_t parse_count(const Token& tok, const TokenCursor& cur)
{
    std::size_t v = 0;
    const char* first = tok.text.data();
    const char* last = first + tok.text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || tok.kind != Token::Kind::word)
        cur.fail(tok, "expected a nonnegative integer, got '" + tok.text + "'");
    return v;
}

double parse_real(const Token& tok, const TokenCursor& cur)
{
    if (tok.text == "inf")
        return std::numeric_limits<double>::infinity();
    char* end = nullptr;
    double v = std::strtod(tok.text.c_str(), &end);
    if (tok.text.empty() || end != tok.text.c_str() + tok.text.size() || std::isnan(v))
        cur.fail(tok, "expected a number, got '" + tok.text + "'");
    return v;
}

} // namespace stk::detail
