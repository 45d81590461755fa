#ifndef FLATCIRC_SERIES_HPP
#define FLATCIRC_SERIES_HPP

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <flatcirc/error.hpp>
#include <flatcirc/rational.hpp>

namespace flatcirc
{

inline constexpr std::size_t max_vars = 8;

// Exponent vector of a monomial. Entries past the owning series' num_vars are zero,
// so the defaulted comparison is the lexicographic order on the live prefix.
struct exponent {
    std::array<std::uint8_t, max_vars> powers{};

    int degree() const noexcept
    {
        int d = 0;
        for (auto p : powers) {
            d += p;
        }
        return d;
    }

    std::uint8_t operator[](std::size_t i) const noexcept { return powers[i]; }
    std::uint8_t &operator[](std::size_t i) noexcept { return powers[i]; }

    friend exponent operator+(exponent a, const exponent &b) noexcept
    {
        for (std::size_t i = 0; i < max_vars; ++i) {
            a.powers[i] = static_cast<std::uint8_t>(a.powers[i] + b.powers[i]);
        }
        return a;
    }

    auto operator<=>(const exponent &) const = default;
    bool operator==(const exponent &) const = default;
};

inline exponent unit_exponent(std::size_t axis)
{
    exponent e;
    e[axis] = 1;
    return e;
}

inline std::string exponent_to_string(const exponent &e, std::size_t nvars)
{
    std::string out;
    for (std::size_t i = 0; i < nvars; ++i) {
        if (i) {
            out += ',';
        }
        out += std::to_string(e[i]);
    }
    return out;
}

// All exponent vectors of total degree k in nvars variables, lexicographically sorted.
inline std::vector<exponent> monomials_of_degree(std::size_t nvars, int k)
{
    std::vector<exponent> out;
    if (k < 0) {
        return out;
    }
    if (nvars == 0) {
        if (k == 0) {
            out.emplace_back();
        }
        return out;
    }
    exponent cur;
    auto rec = [&](auto &&self, std::size_t i, int left) -> void {
        if (i + 1 == nvars) {
            cur[i] = static_cast<std::uint8_t>(left);
            out.push_back(cur);
            cur[i] = 0;
            return;
        }
        for (int p = 0; p <= left; ++p) {
            cur[i] = static_cast<std::uint8_t>(p);
            self(self, i + 1, left - p);
        }
        cur[i] = 0;
    };
    rec(rec, 0, k);
    return out;
}

// Multivariate power series over Q truncated at total degree cap. Coefficients of
// total degree <= valid_to() are exact; the rest of the stored terms are artefacts
// of truncation.
class series
{
public:
    using term_map = std::map<exponent, rational>;

    series() = default;

    series(std::size_t nvars, int cap) : series(nvars, cap, cap) {}

    series(std::size_t nvars, int cap, int valid_to) : nvars_(nvars), cap_(cap), valid_to_(std::min(valid_to, cap))
    {
        if (nvars > max_vars) {
            throw dimension_error("at most " + std::to_string(max_vars) + " coordinates are supported");
        }
        if (cap < 0 || cap > 255) {
            throw dimension_error("truncation cap must lie in [0, 255]");
        }
        if (valid_to_ < 0) {
            valid_to_ = 0;
        }
    }

    static series constant(std::size_t nvars, int cap, const rational &c)
    {
        series s(nvars, cap);
        s.add_term(exponent{}, c);
        return s;
    }

    static series variable(std::size_t nvars, int cap, std::size_t axis)
    {
        series s(nvars, cap);
        if (axis >= nvars) {
            throw dimension_error("coordinate index out of range");
        }
        s.add_term(unit_exponent(axis), rational(1));
        return s;
    }

    static series monomial(std::size_t nvars, int cap, const exponent &e, const rational &c)
    {
        series s(nvars, cap);
        s.add_term(e, c);
        return s;
    }

    std::size_t nvars() const noexcept { return nvars_; }
    int cap() const noexcept { return cap_; }
    int valid_to() const noexcept { return valid_to_; }
    const term_map &terms() const noexcept { return terms_; }
    bool is_zero() const noexcept { return terms_.empty(); }

    rational coefficient(const exponent &e) const
    {
        auto it = terms_.find(e);
        return it == terms_.end() ? rational(0) : it->second;
    }

    rational constant_term() const { return coefficient(exponent{}); }

    // Accumulates c * x^e; terms above the cap are dropped.
    void add_term(const exponent &e, const rational &c)
    {
        if (c == 0 || e.degree() > cap_) {
            return;
        }
        auto [it, inserted] = terms_.try_emplace(e, c);
        if (inserted) {
            it->second.canonicalize();
        } else {
            it->second += c;
            if (it->second == 0) {
                terms_.erase(it);
            }
        }
    }

    // Lowers the validity degree; never raises it.
    series with_valid_to(int d) const
    {
        series s = *this;
        s.valid_to_ = std::max(0, std::min(valid_to_, d));
        return s;
    }

    // Drops every term of degree > d and lowers valid_to accordingly.
    series truncated(int d) const
    {
        series s(nvars_, cap_, std::min(valid_to_, d));
        for (const auto &[e, c] : terms_) {
            if (e.degree() <= d) {
                s.terms_.emplace(e, c);
            }
        }
        return s;
    }

    series homogeneous_part(int k) const
    {
        series s(nvars_, cap_, valid_to_);
        for (const auto &[e, c] : terms_) {
            if (e.degree() == k) {
                s.terms_.emplace(e, c);
            }
        }
        return s;
    }

    // Lowest-degree, then lexicographically first, nonzero term of degree <= d.
    std::optional<std::pair<exponent, rational>> first_nonzero_up_to(int d) const
    {
        std::optional<std::pair<exponent, rational>> best;
        for (const auto &[e, c] : terms_) {
            int k = e.degree();
            if (k > d) {
                continue;
            }
            if (!best || k < best->first.degree()) {
                best = std::pair{e, c};
            }
        }
        return best;
    }

    bool vanishes_up_to(int d) const { return !first_nonzero_up_to(d).has_value(); }

    bool equal_up_to(const series &other, int d) const { return (*this - other).vanishes_up_to(d); }

    series operator-() const
    {
        series s = *this;
        for (auto &[e, c] : s.terms_) {
            c = -c;
        }
        return s;
    }

    series &operator+=(const series &o) { return *this = *this + o; }
    series &operator-=(const series &o) { return *this = *this - o; }
    series &operator*=(const series &o) { return *this = *this * o; }

    friend series operator+(const series &a, const series &b)
    {
        check_compatible(a, b);
        series s(a.nvars_, std::min(a.cap_, b.cap_), std::min(a.valid_to_, b.valid_to_));
        for (const auto &[e, c] : a.terms_) {
            s.add_term(e, c);
        }
        for (const auto &[e, c] : b.terms_) {
            s.add_term(e, c);
        }
        return s;
    }

    friend series operator-(const series &a, const series &b)
    {
        check_compatible(a, b);
        series s(a.nvars_, std::min(a.cap_, b.cap_), std::min(a.valid_to_, b.valid_to_));
        for (const auto &[e, c] : a.terms_) {
            s.add_term(e, c);
        }
        for (const auto &[e, c] : b.terms_) {
            s.add_term(e, -c);
        }
        return s;
    }

    friend series operator*(const series &a, const series &b)
    {
        check_compatible(a, b);
        series s(a.nvars_, std::min(a.cap_, b.cap_), std::min(a.valid_to_, b.valid_to_));
        if (a.is_zero() || b.is_zero()) {
            return s;
        }
        for (const auto &[ea, ca] : a.terms_) {
            const int da = ea.degree();
            if (da > s.cap_) {
                continue;
            }
            for (const auto &[eb, cb] : b.terms_) {
                if (da + eb.degree() > s.cap_) {
                    continue;
                }
                s.add_term(ea + eb, ca * cb);
            }
        }
        return s;
    }

    friend series operator*(const rational &k, const series &a)
    {
        series s(a.nvars_, a.cap_, a.valid_to_);
        if (k == 0) {
            return s;
        }
        rational kc = k;
        kc.canonicalize();
        for (const auto &[e, c] : a.terms_) {
            s.terms_.emplace(e, kc * c);
        }
        return s;
    }

    friend series operator*(const series &a, const rational &k) { return k * a; }

    // Exact equality of the stored data, including the bookkeeping degrees.
    friend bool operator==(const series &a, const series &b)
    {
        return a.nvars_ == b.nvars_ && a.cap_ == b.cap_ && a.valid_to_ == b.valid_to_ && a.terms_ == b.terms_;
    }

private:
    static void check_compatible(const series &a, const series &b)
    {
        if (a.nvars_ != b.nvars_) {
            throw dimension_error("series with " + std::to_string(a.nvars_) + " and " + std::to_string(b.nvars_)
                                  + " coordinates cannot be combined");
        }
    }

    std::size_t nvars_ = 0;
    int cap_ = 0;
    int valid_to_ = 0;
    term_map terms_;
};

// d/dx^axis. Costs one degree of validity.
inline series derivative(const series &a, std::size_t axis)
{
    if (axis >= a.nvars()) {
        throw dimension_error("derivative axis " + std::to_string(axis) + " out of range");
    }
    series s(a.nvars(), a.cap(), a.valid_to() - 1);
    for (const auto &[e, c] : a.terms()) {
        if (e[axis] == 0) {
            continue;
        }
        exponent f = e;
        f[axis] = static_cast<std::uint8_t>(f[axis] - 1);
        s.add_term(f, c * e[axis]);
    }
    return s;
}

// Multiplicative inverse of a series with nonzero constant term.
inline series invert_unit(const series &a)
{
    const rational a0 = a.constant_term();
    if (a0 == 0) {
        throw non_unit_error("series with zero constant term is not invertible");
    }
    series b(a.nvars(), a.cap(), a.valid_to());
    b.add_term(exponent{}, 1 / a0);
    for (int k = 1; k <= a.cap(); ++k) {
        for (const auto &m : monomials_of_degree(a.nvars(), k)) {
            rational acc = 0;
            for (const auto &[e, c] : a.terms()) {
                if (e == exponent{} || e.degree() > k) {
                    continue;
                }
                bool divides = true;
                exponent rest;
                for (std::size_t i = 0; i < a.nvars(); ++i) {
                    if (e[i] > m[i]) {
                        divides = false;
                        break;
                    }
                    rest[i] = static_cast<std::uint8_t>(m[i] - e[i]);
                }
                if (divides) {
                    acc += c * b.coefficient(rest);
                }
            }
            b.add_term(m, -acc / a0);
        }
    }
    return b;
}

// exp(f) for f without constant term, by the factorial recurrence sum f^k / k!.
inline series exp_series(const series &f)
{
    if (f.constant_term() != 0) {
        throw non_unit_error("exp is only expanded for series without constant term");
    }
    series result = series::constant(f.nvars(), f.cap(), rational(1)).with_valid_to(f.valid_to());
    series power = result;
    for (int k = 1; k <= f.cap(); ++k) {
        power = power * f;
        power = rational(1, k) * power;
        if (power.is_zero()) {
            break;
        }
        result += power;
    }
    return result;
}

// exp(x^axis) truncated at cap.
inline series exp_trunc(std::size_t nvars, int cap, std::size_t axis, const rational &scale = 1)
{
    return exp_series(scale * series::variable(nvars, cap, axis));
}

// Formal Poincare integration: g with dg/dx^a = f_a and g(0) = 0.
inline series primitive_of_closed_family(std::span<const series> f)
{
    if (f.empty()) {
        throw dimension_error("empty family");
    }
    const std::size_t n = f.front().nvars();
    if (f.size() != n) {
        throw dimension_error("closed family needs one component per coordinate");
    }
    int cap = f.front().cap();
    int valid = f.front().valid_to();
    for (const auto &fa : f) {
        if (fa.nvars() != n) {
            throw dimension_error("closed family components disagree on coordinates");
        }
        cap = std::min(cap, fa.cap());
        valid = std::min(valid, fa.valid_to());
    }
    const int check_to = valid - 1;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            series defect = derivative(f[b], a) - derivative(f[a], b);
            if (auto bad = defect.first_nonzero_up_to(check_to)) {
                throw not_closed_error("family is not closed at monomial " + exponent_to_string(bad->first, n)
                                           + " for pair (" + std::to_string(a) + "," + std::to_string(b) + ")",
                                       exponent_to_string(bad->first, n), a, b);
            }
        }
    }
    // On closed forms the degree-(k+1) part of g is (1/(k+1)) sum_a x^a f_a^{(k)}.
    series g(n, cap, valid + 1);
    for (std::size_t a = 0; a < n; ++a) {
        for (const auto &[e, c] : f[a].terms()) {
            exponent up = e;
            up[a] = static_cast<std::uint8_t>(up[a] + 1);
            g.add_term(up, c / (e.degree() + 1));
        }
    }
    return g;
}

// One "e0,...,ek:num/den" line per nonzero term, lexicographic order.
inline std::string to_text(const series &s)
{
    std::string out;
    for (const auto &[e, c] : s.terms()) {
        out += exponent_to_string(e, s.nvars());
        out += ':';
        out += to_fraction_string(c);
        out += '\n';
    }
    return out;
}

inline std::vector<std::string> to_lines(const series &s)
{
    std::vector<std::string> out;
    for (const auto &[e, c] : s.terms()) {
        out.push_back(exponent_to_string(e, s.nvars()) + ":" + to_fraction_string(c));
    }
    return out;
}

inline void add_text_line(series &s, std::string_view line)
{
    auto colon = line.find(':');
    if (colon == std::string_view::npos) {
        throw parse_error("missing ':' in series line", line.size());
    }
    exponent e;
    std::size_t idx = 0;
    std::string_view head = line.substr(0, colon);
    std::size_t pos = 0;
    while (true) {
        auto comma = head.find(',', pos);
        std::string_view tok = head.substr(pos, comma == std::string_view::npos ? head.size() - pos : comma - pos);
        if (tok.empty() || idx >= s.nvars()) {
            throw parse_error("malformed exponent vector", pos);
        }
        int v = 0;
        for (char ch : tok) {
            if (ch < '0' || ch > '9') {
                throw parse_error("malformed exponent vector", pos);
            }
            v = v * 10 + (ch - '0');
            if (v > 255) {
                throw parse_error("exponent too large", pos);
            }
        }
        e[idx++] = static_cast<std::uint8_t>(v);
        if (comma == std::string_view::npos) {
            break;
        }
        pos = comma + 1;
    }
    if (idx != s.nvars()) {
        throw parse_error("exponent vector has wrong length", colon);
    }
    if (e.degree() > s.cap()) {
        throw parse_error("term exceeds truncation cap", 0);
    }
    s.add_term(e, parse_rational(line.substr(colon + 1)));
}

inline series from_text(std::string_view text, std::size_t nvars, int cap)
{
    series s(nvars, cap);
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        if (!line.empty()) {
            add_text_line(s, line);
        }
        if (nl == std::string_view::npos) {
            break;
        }
        pos = nl + 1;
    }
    return s;
}

// Human-readable rendering used in reports: "x0^2*x1".
inline std::string monomial_to_string(const exponent &e, std::size_t nvars)
{
    std::string out;
    for (std::size_t i = 0; i < nvars; ++i) {
        if (e[i] == 0) {
            continue;
        }
        if (!out.empty()) {
            out += '*';
        }
        out += "x" + std::to_string(i);
        if (e[i] > 1) {
            out += "^" + std::to_string(e[i]);
        }
    }
    return out.empty() ? "1" : out;
}

} // namespace flatcirc

#endif
