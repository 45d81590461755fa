#ifndef FLATCIRC_EULER_HPP
#define FLATCIRC_EULER_HPP

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <flatcirc/error.hpp>
#include <flatcirc/fmanifold.hpp>
#include <flatcirc/geometry.hpp>
#include <flatcirc/rational.hpp>
#include <flatcirc/series.hpp>

namespace flatcirc
{

// ---------------------------------------------------------------------------
// Truncated power series in mu with coefficients in T.

template <class T>
class mu_series
{
public:
    mu_series() = default;

    explicit mu_series(std::vector<T> coefficients) : c_(std::move(coefficients))
    {
        if (c_.empty()) {
            throw dimension_error("mu series needs at least one coefficient");
        }
    }

    // v * mu^0, zero above.
    static mu_series constant(const T &v, int mu_cap)
    {
        std::vector<T> c(static_cast<std::size_t>(mu_cap) + 1, rational(0) * v);
        c[0] = v;
        return mu_series(std::move(c));
    }

    int mu_cap() const noexcept { return static_cast<int>(c_.size()) - 1; }
    const T &operator[](int k) const { return c_.at(static_cast<std::size_t>(k)); }
    T &operator[](int k) { return c_.at(static_cast<std::size_t>(k)); }
    const std::vector<T> &coefficients() const noexcept { return c_; }

    mu_series truncated(int mu_cap) const
    {
        const auto keep = static_cast<std::size_t>(std::clamp(mu_cap, 0, this->mu_cap())) + 1;
        return mu_series(std::vector<T>(c_.begin(), c_.begin() + static_cast<std::ptrdiff_t>(keep)));
    }

    // mu * this, dropping the top coefficient.
    mu_series times_mu() const
    {
        std::vector<T> c;
        c.reserve(c_.size());
        c.push_back(rational(0) * c_[0]);
        for (std::size_t k = 0; k + 1 < c_.size(); ++k) {
            c.push_back(c_[k]);
        }
        return mu_series(std::move(c));
    }

    template <class F>
    auto map(F fn) const -> mu_series<decltype(fn(std::declval<const T &>()))>
    {
        std::vector<decltype(fn(std::declval<const T &>()))> out;
        out.reserve(c_.size());
        for (const auto &x : c_) {
            out.push_back(fn(x));
        }
        return mu_series<decltype(fn(std::declval<const T &>()))>(std::move(out));
    }

    mu_series operator-() const
    {
        return map([](const T &x) { return rational(-1) * x; });
    }

    friend mu_series operator+(const mu_series &a, const mu_series &b)
    {
        const int cap = std::min(a.mu_cap(), b.mu_cap());
        std::vector<T> c;
        for (int k = 0; k <= cap; ++k) {
            c.push_back(a[k] + b[k]);
        }
        return mu_series(std::move(c));
    }

    friend mu_series operator-(const mu_series &a, const mu_series &b) { return a + (-b); }

    friend mu_series operator*(const rational &k, const mu_series &a)
    {
        return a.map([&](const T &x) { return k * x; });
    }

private:
    std::vector<T> c_;
};

using mu_field = mu_series<vector_field>;
using mu_end = mu_series<end_field>;
using mu_tensor = mu_series<tensor>;

// sum_{i+j=k} op(a_i, b_j), truncated at the smaller mu cap.
template <class A, class B, class Op>
auto convolve(const mu_series<A> &a, const mu_series<B> &b, Op op)
    -> mu_series<decltype(op(std::declval<const A &>(), std::declval<const B &>()))>
{
    using R = decltype(op(std::declval<const A &>(), std::declval<const B &>()));
    const int cap = std::min(a.mu_cap(), b.mu_cap());
    std::vector<R> out;
    for (int k = 0; k <= cap; ++k) {
        R acc = op(a[0], b[k]);
        for (int i = 1; i <= k; ++i) {
            acc = acc + op(a[i], b[k - i]);
        }
        out.push_back(std::move(acc));
    }
    return mu_series<R>(std::move(out));
}

inline mu_field lift(const vector_field &v, int mu_cap)
{
    return mu_field::constant(v, mu_cap);
}

inline mu_field mu_multiply(const f_structure &f, const mu_field &x, const mu_field &y)
{
    return convolve(x, y, [&](const vector_field &u, const vector_field &v) { return multiply(f, u, v); });
}

inline mu_field mu_covariant(const connection &nabla, const mu_field &x, const mu_field &y)
{
    return convolve(x, y, [&](const vector_field &u, const vector_field &v) { return covariant_derivative(nabla, u, v); });
}

inline mu_field mu_bracket(const mu_field &x, const mu_field &y)
{
    return convolve(x, y, [](const vector_field &u, const vector_field &v) { return lie_bracket(u, v); });
}

inline mu_field mu_apply(const mu_end &h, const mu_field &x)
{
    return convolve(h, x, [](const end_field &b, const vector_field &v) { return b.apply(v); });
}

// Stacks frame-indexed mu fields into a mu tensor with the field index last.
inline mu_tensor mu_stack(const std::vector<std::size_t> &outer_shape, const std::vector<mu_field> &fields)
{
    int cap = fields.front().mu_cap();
    for (const auto &f : fields) {
        cap = std::min(cap, f.mu_cap());
    }
    std::vector<tensor> out;
    for (int k = 0; k <= cap; ++k) {
        std::vector<vector_field> layer;
        for (const auto &f : fields) {
            layer.push_back(f[k]);
        }
        out.push_back(stack(outer_shape, layer));
    }
    return mu_tensor(std::move(out));
}

struct mu_residual_status {
    bool vanishes = true;
    int proven_degree = 0;
    int mu_checked = 0;
    std::optional<offense> first;
    int first_mu_power = 0;
};

inline mu_residual_status analyze(const mu_tensor &t)
{
    mu_residual_status st;
    st.mu_checked = t.mu_cap();
    st.proven_degree = analyze(t[0]).proven_degree;
    for (int k = 0; k <= t.mu_cap(); ++k) {
        auto s = analyze(t[k]);
        st.proven_degree = std::min(st.proven_degree, s.proven_degree);
        if (!s.vanishes && st.vanishes) {
            st.vanishes = false;
            st.first = s.first;
            st.first_mu_power = k;
        }
    }
    return st;
}

inline mu_residual_status analyze(const mu_field &v)
{
    return analyze(v.map([](const vector_field &x) { return as_tensor(x); }));
}

// ---------------------------------------------------------------------------
// Euler fields

struct euler_field {
    vector_field field;
    rational weight;
};

// Index (a, b, c): P_E(d_a, d_b) - d0 d_a o d_b.
inline tensor euler_residual(const f_structure &f, const vector_field &e, const rational &d0)
{
    const std::size_t n = f.dim();
    std::vector<vector_field> entries;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            entries.push_back(p_tensor(f, e, f.frame(a), f.frame(b)) - d0 * multiply(f, f.frame(a), f.frame(b)));
        }
    }
    return stack({n, n}, entries);
}

// [E, Ker nabla0] in Ker nabla0: every component of degree at most one.
inline bool flat_compat(const vector_field &e)
{
    const int d = e.valid_to();
    for (std::size_t i = 0; i < e.dim(); ++i) {
        for (const auto &[m, c] : e[i].terms()) {
            if (m.degree() >= 2 && m.degree() <= d) {
                return false;
            }
        }
    }
    return true;
}

// E + s e, recertified.
inline euler_field euler_family(const f_structure &f, const euler_field &e_field, const rational &s)
{
    const auto &e = f.require_identity();
    for (std::size_t a = 0; a < f.dim(); ++a) {
        for (std::size_t i = 0; i < e.dim(); ++i) {
            if (!derivative(e[i], a).vanishes_up_to(e.valid_to() - 1)) {
                throw precondition_error("identity is not flat in the coordinate frame");
            }
        }
    }
    euler_field out{e_field.field + s * e, e_field.weight};
    if (!analyze(euler_residual(f, out.field, out.weight)).vanishes) {
        throw hypothesis_error("shifted field fails the Euler condition");
    }
    if (!flat_compat(out.field)) {
        throw hypothesis_error("shifted field fails flat compatibility");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Extended connection

// sum_i (-1)^i e1^{o i} mu^i with the zeroth power read as e.
inline mu_field geometric_inverse(const f_structure &f, const vector_field &e1, int mu_cap)
{
    const auto &e = f.require_identity();
    std::vector<vector_field> c;
    vector_field power = e;
    for (int i = 0; i <= mu_cap; ++i) {
        c.push_back((i % 2 == 0 ? rational(1) : rational(-1)) * power);
        power = multiply(f, power, e1);
    }
    return mu_field(std::move(c));
}

// e + mu e1
inline mu_field unit_pencil(const vector_field &e, const vector_field &e1, int mu_cap)
{
    return lift(e, mu_cap) + lift(e1, mu_cap).times_mu();
}

namespace combinators
{

// A(X) = X o E
inline mu_field a(const f_structure &f, const mu_field &e_mu, const mu_field &x)
{
    return mu_multiply(f, x, e_mu);
}

// B(X) = nabla_X E - X
inline mu_field b(const connection &nabla, const mu_field &e_mu, const mu_field &x)
{
    return mu_covariant(nabla, x, e_mu) - x;
}

// C(X) = -X o e1
inline mu_field c(const f_structure &f, const vector_field &e1, const mu_field &x)
{
    return -mu_multiply(f, x, lift(e1, x.mu_cap()));
}

} // namespace combinators

inline vector_field identity_derivative(const f_structure &f, const connection &nabla)
{
    const auto &e = f.require_identity();
    return covariant_derivative(nabla, e, e);
}

// H(X) = X o E + mu (nabla_{inv o X} E - inv o X) + (inv o X - X) o E, one end field per mu power.
inline mu_end h_from_e(const mu_field &e_mu, const f_structure &f, const connection &nabla)
{
    if (e_mu.mu_cap() < 1) {
        throw insufficient_order_error("mu order must be at least 1");
    }
    const int cap = e_mu.mu_cap();
    const std::size_t n = f.dim();
    const auto e1 = identity_derivative(f, nabla);
    const auto inv = geometric_inverse(f, e1, cap);
    std::vector<mu_field> columns;
    for (std::size_t c = 0; c < n; ++c) {
        const auto x = lift(f.frame(c), cap);
        const auto ix = mu_multiply(f, inv, x);
        columns.push_back(combinators::a(f, e_mu, x) + combinators::b(nabla, e_mu, ix).times_mu()
                          + combinators::a(f, e_mu, ix - x));
    }
    std::vector<end_field> out;
    for (int k = 0; k <= cap; ++k) {
        end_field h(n, f.order());
        for (std::size_t c = 0; c < n; ++c) {
            for (std::size_t a = 0; a < n; ++a) {
                h(a, c) = columns[c][k][a];
            }
        }
        out.push_back(std::move(h));
    }
    return mu_end(std::move(out));
}

// H(X) = X o E + mu (nabla_X E - X) for a mu-independent E.
inline mu_end h_simplified(const vector_field &e_field, const f_structure &f, const connection &nabla, int mu_cap)
{
    const std::size_t n = f.dim();
    std::vector<end_field> out(static_cast<std::size_t>(mu_cap) + 1, end_field(n, f.order()));
    for (std::size_t c = 0; c < n; ++c) {
        const auto x = f.frame(c);
        const auto h0 = multiply(f, x, e_field);
        const auto h1 = covariant_derivative(nabla, x, e_field) - x;
        for (std::size_t a = 0; a < n; ++a) {
            out[0](a, c) = h0[a];
            if (mu_cap >= 1) {
                out[1](a, c) = h1[a];
            }
        }
    }
    return mu_end(std::move(out));
}

// (e + mu e1) o nabla_{inv} E - e1 o E - e
inline mu_field e_equation_residual(const mu_field &e_mu, const f_structure &f, const connection &nabla)
{
    const auto &e = f.require_identity();
    const int cap = e_mu.mu_cap();
    const auto e1 = identity_derivative(f, nabla);
    const auto inv = geometric_inverse(f, e1, cap);
    return mu_multiply(f, unit_pencil(e, e1, cap), mu_covariant(nabla, inv, e_mu))
           - mu_multiply(f, lift(e1, cap), e_mu) - lift(e, cap);
}

struct flatness_report {
    mu_tensor flatness;     // (a, b, c): H(X o Y) - X o H(Y) - mu (nabla_X H(Y) - X o Y - H(nabla_X Y))
    mu_tensor functional;   // (a, c): H(X) - X o H(e) - mu (nabla_X H(e) - X - H(X o e1))
    mu_tensor unit_equation; // (c): [e,H(e)] + H(e) o e1 - H(e1) - e, to mu order cap - 1
    mu_residual_status flatness_status;
    mu_residual_status functional_status;
    mu_residual_status unit_status;
};

inline flatness_report full_flatness_residual(const mu_end &h, const f_structure &f, const connection &nabla)
{
    const auto &e = f.require_identity();
    const std::size_t n = f.dim();
    const int cap = h.mu_cap();
    const auto e1 = identity_derivative(f, nabla);
    auto hh = [&](const vector_field &v) { return mu_apply(h, lift(v, cap)); };
    auto circ = [&](const vector_field &x, const mu_field &v) { return mu_multiply(f, lift(x, cap), v); };
    auto nab = [&](const vector_field &x, const mu_field &v) { return mu_covariant(nabla, lift(x, cap), v); };

    std::vector<mu_field> main, func;
    const auto he = hh(e);
    for (std::size_t a = 0; a < n; ++a) {
        const auto x = f.frame(a);
        for (std::size_t b = 0; b < n; ++b) {
            const auto y = f.frame(b);
            const auto xy = multiply(f, x, y);
            const auto hy = hh(y);
            const auto inner = nab(x, hy) - lift(xy, cap) - hh(covariant_derivative(nabla, x, y));
            main.push_back(hh(xy) - circ(x, hy) - inner.times_mu());
        }
        const auto inner = nab(x, he) - lift(x, cap) - hh(multiply(f, x, e1));
        func.push_back(hh(x) - circ(x, he) - inner.times_mu());
    }
    const auto unit = mu_bracket(lift(e, cap), he) + mu_multiply(f, he, lift(e1, cap)) - hh(e1) - lift(e, cap);

    flatness_report r;
    r.flatness = mu_stack({n, n}, main);
    r.functional = mu_stack({n}, func);
    r.unit_equation = mu_stack({}, {unit}).truncated(std::max(cap - 1, 0));
    r.flatness_status = analyze(r.flatness);
    r.functional_status = analyze(r.functional);
    r.unit_status = analyze(r.unit_equation);
    return r;
}

struct potential_flatness_report {
    mu_tensor residual; // (a, b, c)
    mu_residual_status status;
    mu_residual_status precondition;
};

// On flat frame pairs:
// P_E(X,Y) - [X,[Y,C - mu E]] - X o H(Y o e1) - mu [X, H(Y o e1)], with H built from E.
inline potential_flatness_report potential_flatness_residual(const mu_field &e_mu, const vector_potential &pot,
                                                             const f_structure &f, const connection &nabla,
                                                             bool force = false)
{
    if (!analyze(nabla.as_tensor()).vanishes) {
        throw precondition_error("base connection must vanish in the coordinate frame");
    }
    potential_flatness_report r;
    r.precondition = analyze(e_equation_residual(e_mu, f, nabla));
    if (!r.precondition.vanishes && !force) {
        std::string where = r.precondition.first ? r.precondition.first->describe() : std::string();
        throw precondition_error("E does not solve the E equation at mu^" +
                                 std::to_string(r.precondition.first_mu_power) + ": " + where);
    }
    const std::size_t n = f.dim();
    const int cap = e_mu.mu_cap();
    const auto e1 = identity_derivative(f, nabla);
    const auto h = h_from_e(e_mu, f, nabla);
    const auto c_minus = lift(pot.field(), cap) - e_mu.times_mu();
    std::vector<mu_field> out;
    for (std::size_t a = 0; a < n; ++a) {
        const auto x = lift(f.frame(a), cap);
        for (std::size_t b = 0; b < n; ++b) {
            const auto y = lift(f.frame(b), cap);
            const auto p = e_mu.map([&](const vector_field &ek) { return p_tensor(f, ek, f.frame(a), f.frame(b)); });
            const auto hy = mu_apply(h, lift(multiply(f, f.frame(b), e1), cap));
            out.push_back(p - mu_bracket(x, mu_bracket(y, c_minus)) - mu_multiply(f, x, hy)
                          - mu_bracket(x, hy).times_mu());
        }
    }
    r.residual = mu_stack({n, n}, out);
    r.status = analyze(r.residual);
    return r;
}

} // namespace flatcirc

#endif
