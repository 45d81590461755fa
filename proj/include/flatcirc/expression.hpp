#ifndef FLATCIRC_EXPRESSION_HPP
#define FLATCIRC_EXPRESSION_HPP

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <flatcirc/error.hpp>
#include <flatcirc/rational.hpp>
#include <flatcirc/series.hpp>

namespace flatcirc
{

inline std::vector<std::string> default_coordinates(std::size_t n)
{
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back("x" + std::to_string(i));
    }
    return out;
}

namespace detail
{

// expr := term (('+'|'-') term)*
// term := unary (('*'|'/') unary)*
// unary := ('+'|'-') unary | power
// power := primary ('^' ['-'] integer)?
// primary := number | name | 'exp' '(' expr ')' | '(' expr ')'
class expression_parser
{
public:
    expression_parser(std::string_view text, const std::vector<std::string> &names, int cap)
        : text_(text), names_(names), cap_(cap)
    {
    }

    series parse()
    {
        auto s = expr();
        skip_space();
        if (pos_ != text_.size()) {
            fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        }
        return s;
    }

private:
    std::string_view text_;
    const std::vector<std::string> &names_;
    int cap_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string &msg) const { throw parse_error(msg, pos_); }

    void skip_space()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    bool accept(char c)
    {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c)) {
            fail(pos_ >= text_.size() ? "unexpected end of input, expected '" + std::string(1, c) + "'"
                                      : "expected '" + std::string(1, c) + "'");
        }
    }

    series constant(const rational &c) const { return series::constant(names_.size(), cap_, c); }

    series expr()
    {
        auto s = term();
        while (true) {
            if (accept('+')) {
                s += term();
            } else if (accept('-')) {
                s -= term();
            } else {
                return s;
            }
        }
    }

    series term()
    {
        auto s = unary();
        while (true) {
            if (accept('*')) {
                s = s * unary();
            } else if (accept('/')) {
                const std::size_t at = pos_;
                auto d = unary();
                try {
                    s = s * invert_unit(d);
                } catch (const non_unit_error &) {
                    throw non_unit_error("division by a series without constant term at offset " +
                                         std::to_string(at));
                }
            } else {
                return s;
            }
        }
    }

    series unary()
    {
        if (accept('-')) {
            return rational(-1) * unary();
        }
        if (accept('+')) {
            return unary();
        }
        return power();
    }

    series power()
    {
        auto base = primary();
        if (!accept('^')) {
            return base;
        }
        const bool negative = accept('-');
        skip_space();
        const std::size_t start = pos_;
        long k = 0;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            k = k * 10 + (text_[pos_] - '0');
            if (k > 255) {
                fail("exponent too large");
            }
            ++pos_;
        }
        if (pos_ == start) {
            fail(pos_ >= text_.size() ? "unexpected end of input, expected integer exponent"
                                      : "expected integer exponent");
        }
        if (negative) {
            try {
                base = invert_unit(base);
            } catch (const non_unit_error &) {
                throw non_unit_error("negative power of a series without constant term at offset " +
                                     std::to_string(start));
            }
        }
        auto out = constant(1).with_valid_to(base.valid_to());
        for (long i = 0; i < k; ++i) {
            out = out * base;
        }
        return out;
    }

    series primary()
    {
        skip_space();
        if (pos_ >= text_.size()) {
            fail("unexpected end of input");
        }
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            auto s = expr();
            expect(')');
            return s;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return constant(number());
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                ++pos_;
            }
            const std::string name(text_.substr(start, pos_ - start));
            auto it = std::find(names_.begin(), names_.end(), name);
            if (it != names_.end()) {
                return series::variable(names_.size(), cap_, static_cast<std::size_t>(it - names_.begin()));
            }
            if (name == "exp") {
                expect('(');
                const std::size_t at = pos_;
                auto arg = expr();
                expect(')');
                try {
                    return exp_series(arg);
                } catch (const non_unit_error &) {
                    throw non_unit_error("exp argument must vanish at the origin (offset " + std::to_string(at) +
                                         ")");
                }
            }
            pos_ = start;
            fail("unknown identifier '" + name + "'");
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    rational number()
    {
        const std::size_t start = pos_;
        std::string digits;
        std::size_t decimals = 0;
        bool dot = false;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || (text_[pos_] == '.' && !dot))) {
            if (text_[pos_] == '.') {
                dot = true;
            } else {
                digits += text_[pos_];
                decimals += dot ? 1 : 0;
            }
            ++pos_;
        }
        if (digits.empty()) {
            pos_ = start;
            fail("malformed number");
        }
        rational r(mpz_class(digits, 10), mpz_class(1));
        for (std::size_t i = 0; i < decimals; ++i) {
            r /= 10;
        }
        r.canonicalize();
        return r;
    }
};

} // namespace detail

// Exact truncated expansion of an arithmetic expression in the given coordinates.
inline series parse_expression(std::string_view text, const std::vector<std::string> &names, int cap)
{
    return detail::expression_parser(text, names, cap).parse();
}

inline series parse_expression(std::string_view text, std::size_t n, int cap)
{
    return parse_expression(text, default_coordinates(n), cap);
}

// Polynomial rendering that parse_expression reads back to the same series.
inline std::string to_expression(const series &s, const std::vector<std::string> &names)
{
    if (names.size() != s.nvars()) {
        throw dimension_error("coordinate names do not match the series");
    }
    std::vector<std::pair<exponent, rational>> terms(s.terms().begin(), s.terms().end());
    std::stable_sort(terms.begin(), terms.end(), [](const auto &x, const auto &y) {
        if (x.first.degree() != y.first.degree()) {
            return x.first.degree() < y.first.degree();
        }
        return x.first > y.first;
    });
    if (terms.empty()) {
        return "0";
    }
    std::string out;
    for (const auto &[e, c] : terms) {
        const bool negative = c < 0;
        const rational mag = negative ? rational(-c) : c;
        if (out.empty()) {
            out += negative ? "-" : "";
        } else {
            out += negative ? " - " : " + ";
        }
        std::string mono;
        for (std::size_t i = 0; i < s.nvars(); ++i) {
            if (e[i] == 0) {
                continue;
            }
            mono += (mono.empty() ? "" : "*") + names[i];
            if (e[i] > 1) {
                mono += "^" + std::to_string(e[i]);
            }
        }
        if (mono.empty()) {
            out += to_short_string(mag);
        } else if (mag == 1) {
            out += mono;
        } else {
            out += to_short_string(mag) + "*" + mono;
        }
    }
    return out;
}

inline std::string to_expression(const series &s)
{
    return to_expression(s, default_coordinates(s.nvars()));
}

} // namespace flatcirc

#endif
