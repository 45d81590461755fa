#ifndef FLATCIRC_GEOMETRY_HPP
#define FLATCIRC_GEOMETRY_HPP

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <flatcirc/error.hpp>
#include <flatcirc/rational.hpp>
#include <flatcirc/series.hpp>

namespace flatcirc
{

// Vector field in the flat frame: components[c] is the coefficient of d/dx^c.
class vector_field
{
public:
    vector_field() = default;
    explicit vector_field(std::vector<series> components) : c_(std::move(components))
    {
        for (const auto &s : c_) {
            if (s.nvars() != c_.size()) {
                throw dimension_error("vector field component has the wrong number of coordinates");
            }
        }
    }

    static vector_field zero(std::size_t n, int cap) { return vector_field(std::vector<series>(n, series(n, cap))); }

    // d/dx^a
    static vector_field frame(std::size_t n, int cap, std::size_t a)
    {
        auto v = zero(n, cap);
        v.c_.at(a) = series::constant(n, cap, 1);
        return v;
    }

    static vector_field constant(std::size_t n, int cap, const std::vector<rational> &values)
    {
        if (values.size() != n) {
            throw dimension_error("constant field needs one value per coordinate");
        }
        auto v = zero(n, cap);
        for (std::size_t i = 0; i < n; ++i) {
            v.c_[i] = series::constant(n, cap, values[i]);
        }
        return v;
    }

    std::size_t dim() const noexcept { return c_.size(); }
    const series &operator[](std::size_t i) const { return c_[i]; }
    series &operator[](std::size_t i) { return c_[i]; }
    const std::vector<series> &components() const noexcept { return c_; }

    int valid_to() const
    {
        int v = c_.empty() ? 0 : c_.front().valid_to();
        for (const auto &s : c_) {
            v = std::min(v, s.valid_to());
        }
        return v;
    }

    int cap() const
    {
        int v = c_.empty() ? 0 : c_.front().cap();
        for (const auto &s : c_) {
            v = std::min(v, s.cap());
        }
        return v;
    }

    vector_field with_valid_to(int d) const
    {
        vector_field r = *this;
        for (auto &s : r.c_) {
            s = s.with_valid_to(d);
        }
        return r;
    }

    vector_field truncated(int d) const
    {
        vector_field r = *this;
        for (auto &s : r.c_) {
            s = s.truncated(d);
        }
        return r;
    }

    bool equal_up_to(const vector_field &o, int d) const
    {
        check_same(o);
        for (std::size_t i = 0; i < dim(); ++i) {
            if (!c_[i].equal_up_to(o.c_[i], d)) {
                return false;
            }
        }
        return true;
    }

    bool vanishes_up_to(int d) const
    {
        return std::all_of(c_.begin(), c_.end(), [d](const series &s) { return s.vanishes_up_to(d); });
    }

    // Constant part as a rational vector.
    std::vector<rational> at_origin() const
    {
        std::vector<rational> out;
        for (const auto &s : c_) {
            out.push_back(s.constant_term());
        }
        return out;
    }

    vector_field operator-() const
    {
        vector_field r = *this;
        for (auto &s : r.c_) {
            s = -s;
        }
        return r;
    }

    friend vector_field operator+(const vector_field &a, const vector_field &b)
    {
        a.check_same(b);
        vector_field r = a;
        for (std::size_t i = 0; i < a.dim(); ++i) {
            r.c_[i] = a.c_[i] + b.c_[i];
        }
        return r;
    }

    friend vector_field operator-(const vector_field &a, const vector_field &b) { return a + (-b); }

    friend vector_field operator*(const series &f, const vector_field &a)
    {
        vector_field r = a;
        for (auto &s : r.c_) {
            s = f * s;
        }
        return r;
    }

    friend vector_field operator*(const rational &k, const vector_field &a)
    {
        vector_field r = a;
        for (auto &s : r.c_) {
            s = k * s;
        }
        return r;
    }

    vector_field &operator+=(const vector_field &o) { return *this = *this + o; }
    vector_field &operator-=(const vector_field &o) { return *this = *this - o; }

    friend bool operator==(const vector_field &, const vector_field &) = default;

    void check_same(const vector_field &o) const
    {
        if (dim() != o.dim()) {
            throw dimension_error("vector fields of different dimension");
        }
    }

private:
    std::vector<series> c_;
};

// Endomorphism field, (B f)^a = sum_c B(a, c) f^c.
class end_field
{
public:
    end_field() = default;
    end_field(std::size_t n, int cap) : n_(n), m_(n * n, series(n, cap)) {}

    static end_field identity(std::size_t n, int cap)
    {
        end_field b(n, cap);
        for (std::size_t i = 0; i < n; ++i) {
            b(i, i) = series::constant(n, cap, 1);
        }
        return b;
    }

    std::size_t dim() const noexcept { return n_; }
    series &operator()(std::size_t a, std::size_t c) { return m_[a * n_ + c]; }
    const series &operator()(std::size_t a, std::size_t c) const { return m_[a * n_ + c]; }

    vector_field apply(const vector_field &f) const
    {
        if (f.dim() != n_) {
            throw dimension_error("endomorphism applied to a field of different dimension");
        }
        std::vector<series> out;
        for (std::size_t a = 0; a < n_; ++a) {
            series acc(n_, f.cap(), f.valid_to());
            for (std::size_t c = 0; c < n_; ++c) {
                acc += (*this)(a, c) * f[c];
            }
            out.push_back(std::move(acc));
        }
        return vector_field(std::move(out));
    }

    // Image of d/dx^c.
    vector_field column(std::size_t c) const
    {
        std::vector<series> out;
        for (std::size_t a = 0; a < n_; ++a) {
            out.push_back((*this)(a, c));
        }
        return vector_field(std::move(out));
    }

    int valid_to() const
    {
        int v = m_.empty() ? 0 : m_.front().valid_to();
        for (const auto &s : m_) {
            v = std::min(v, s.valid_to());
        }
        return v;
    }

    friend end_field operator*(const end_field &x, const end_field &y)
    {
        end_field r(x.n_, 0);
        for (std::size_t a = 0; a < x.n_; ++a) {
            for (std::size_t c = 0; c < x.n_; ++c) {
                series acc = x(a, 0) * y(0, c);
                for (std::size_t k = 1; k < x.n_; ++k) {
                    acc += x(a, k) * y(k, c);
                }
                r(a, c) = std::move(acc);
            }
        }
        return r;
    }

    friend end_field operator+(const end_field &x, const end_field &y)
    {
        end_field r = x;
        for (std::size_t i = 0; i < r.m_.size(); ++i) {
            r.m_[i] = x.m_[i] + y.m_[i];
        }
        return r;
    }

    friend end_field operator-(const end_field &x, const end_field &y)
    {
        end_field r = x;
        for (std::size_t i = 0; i < r.m_.size(); ++i) {
            r.m_[i] = x.m_[i] - y.m_[i];
        }
        return r;
    }

    friend end_field operator*(const rational &k, const end_field &x)
    {
        end_field r = x;
        for (auto &s : r.m_) {
            s = k * s;
        }
        return r;
    }

    friend bool operator==(const end_field &, const end_field &) = default;

private:
    std::size_t n_ = 0;
    std::vector<series> m_;
};

// Dense tensor of series, row-major in its index tuple.
class tensor
{
public:
    tensor() = default;
    tensor(std::vector<std::size_t> shape, const series &fill) : shape_(std::move(shape))
    {
        std::size_t total = 1;
        for (auto s : shape_) {
            total *= s;
        }
        data_.assign(total, fill);
    }

    const std::vector<std::size_t> &shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return data_.size(); }
    const std::vector<series> &data() const noexcept { return data_; }

    series &at(std::initializer_list<std::size_t> idx) { return data_[offset(idx)]; }
    const series &at(std::initializer_list<std::size_t> idx) const { return data_[offset(idx)]; }
    series &flat(std::size_t i) { return data_[i]; }
    const series &flat(std::size_t i) const { return data_[i]; }

    std::vector<std::size_t> unflatten(std::size_t i) const
    {
        std::vector<std::size_t> idx(shape_.size());
        for (std::size_t k = shape_.size(); k-- > 0;) {
            idx[k] = i % shape_[k];
            i /= shape_[k];
        }
        return idx;
    }

    tensor operator-() const
    {
        tensor t = *this;
        for (auto &s : t.data_) {
            s = -s;
        }
        return t;
    }

    friend tensor operator+(const tensor &a, const tensor &b)
    {
        if (a.shape_ != b.shape_) {
            throw dimension_error("tensor shapes differ");
        }
        tensor t = a;
        for (std::size_t i = 0; i < t.data_.size(); ++i) {
            t.data_[i] = a.data_[i] + b.data_[i];
        }
        return t;
    }

    friend tensor operator-(const tensor &a, const tensor &b) { return a + (-b); }

    friend tensor operator*(const rational &k, const tensor &a)
    {
        tensor t = a;
        for (auto &s : t.data_) {
            s = k * s;
        }
        return t;
    }

    friend bool operator==(const tensor &, const tensor &) = default;

private:
    std::size_t offset(std::initializer_list<std::size_t> idx) const
    {
        if (idx.size() != shape_.size()) {
            throw dimension_error("tensor index has the wrong rank");
        }
        std::size_t off = 0;
        std::size_t k = 0;
        for (auto i : idx) {
            if (i >= shape_[k]) {
                throw dimension_error("tensor index out of range");
            }
            off = off * shape_[k] + i;
            ++k;
        }
        return off;
    }

    std::vector<std::size_t> shape_;
    std::vector<series> data_;
};

namespace detail
{

// Shared storage for the two rank-3 objects A_{ab}^c and Gamma_{ab}^c.
class rank3
{
public:
    rank3() = default;
    rank3(std::size_t n, int cap) : n_(n), t_({n, n, n}, series(n, cap)) {}
    explicit rank3(tensor t) : t_(std::move(t))
    {
        const auto &s = t_.shape();
        if (s.size() != 3 || s[0] != s[1] || s[1] != s[2]) {
            throw dimension_error("expected an n x n x n tensor");
        }
        n_ = s[0];
    }

    std::size_t dim() const noexcept { return n_; }
    series &operator()(std::size_t a, std::size_t b, std::size_t c) { return t_.at({a, b, c}); }
    const series &operator()(std::size_t a, std::size_t b, std::size_t c) const { return t_.at({a, b, c}); }
    const tensor &as_tensor() const noexcept { return t_; }

    int valid_to() const
    {
        int v = t_.size() ? t_.flat(0).valid_to() : 0;
        for (const auto &s : t_.data()) {
            v = std::min(v, s.valid_to());
        }
        return v;
    }

    int cap() const
    {
        int v = t_.size() ? t_.flat(0).cap() : 0;
        for (const auto &s : t_.data()) {
            v = std::min(v, s.cap());
        }
        return v;
    }

protected:
    std::size_t n_ = 0;
    tensor t_;
};

} // namespace detail

// A_{ab}^c: the 1-form valued endomorphism defining X o Y = i_X(A)(Y).
class higgs_field : public detail::rank3
{
public:
    using rank3::rank3;

    // Endomorphism slice A_a, (A_a)(c, b) = A_{ab}^c.
    end_field slice(std::size_t a) const
    {
        end_field m(n_, cap());
        for (std::size_t b = 0; b < n_; ++b) {
            for (std::size_t c = 0; c < n_; ++c) {
                m(c, b) = (*this)(a, b, c);
            }
        }
        return m;
    }

    friend higgs_field operator*(const rational &k, const higgs_field &a) { return higgs_field(k * a.t_); }
    friend higgs_field operator+(const higgs_field &x, const higgs_field &y) { return higgs_field(x.t_ + y.t_); }
    friend bool operator==(const higgs_field &x, const higgs_field &y) { return x.t_ == y.t_; }
};

// Christoffel symbols in the flat frame: nabla_{d_a} d_b = sum_c Gamma_{ab}^c d_c.
class connection : public detail::rank3
{
public:
    using rank3::rank3;

    static connection flat(std::size_t n, int cap) { return connection(n, cap); }

    // Base connection shifted along a Higgs field: Gamma + lambda * A.
    friend connection operator+(const connection &g, const higgs_field &a)
    {
        return connection(g.as_tensor() + a.as_tensor());
    }

    friend connection operator-(const connection &g, const higgs_field &a)
    {
        return connection(g.as_tensor() - a.as_tensor());
    }

    friend bool operator==(const connection &x, const connection &y) { return x.t_ == y.t_; }
};

// ---------------------------------------------------------------------------
// Residual bookkeeping

struct offense {
    std::vector<std::size_t> index;
    exponent monomial;
    rational coefficient;
    std::size_t nvars = 0;

    std::string describe() const
    {
        std::string out = "[";
        for (std::size_t i = 0; i < index.size(); ++i) {
            out += (i ? "," : "") + std::to_string(index[i]);
        }
        out += "] " + monomial_to_string(monomial, nvars) + " coeff " + to_short_string(coefficient);
        return out;
    }
};

struct residual_status {
    bool vanishes = true;
    int proven_degree = 0;
    std::optional<offense> first;
};

inline residual_status analyze(const tensor &t)
{
    residual_status st;
    if (t.size() == 0) {
        return st;
    }
    st.proven_degree = t.flat(0).valid_to();
    for (const auto &s : t.data()) {
        st.proven_degree = std::min(st.proven_degree, s.valid_to());
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (auto bad = t.flat(i).first_nonzero_up_to(st.proven_degree)) {
            st.vanishes = false;
            st.first = offense{t.unflatten(i), bad->first, bad->second, t.flat(i).nvars()};
            break;
        }
    }
    return st;
}

inline tensor as_tensor(const vector_field &v)
{
    tensor t({v.dim()}, series(v.dim(), v.cap()));
    for (std::size_t i = 0; i < v.dim(); ++i) {
        t.flat(i) = v[i];
    }
    return t;
}

inline residual_status analyze(const vector_field &v)
{
    return analyze(as_tensor(v));
}

// Stacks vector-field valued entries into a tensor with the field index last.
inline tensor stack(const std::vector<std::size_t> &outer_shape, const std::vector<vector_field> &fields)
{
    if (fields.empty()) {
        return {};
    }
    const std::size_t n = fields.front().dim();
    auto shape = outer_shape;
    shape.push_back(n);
    tensor t(shape, series(n, fields.front().cap()));
    std::size_t k = 0;
    for (const auto &f : fields) {
        for (std::size_t c = 0; c < n; ++c) {
            t.flat(k++) = f[c];
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// Operations

// X(f) = sum_a X^a df/dx^a
inline series directional(const vector_field &x, const series &f)
{
    if (x.dim() != f.nvars()) {
        throw dimension_error("vector field and function live on different spaces");
    }
    series acc(f.nvars(), std::min(f.cap(), x.cap()), std::min(f.valid_to() - 1, x.valid_to()));
    for (std::size_t a = 0; a < x.dim(); ++a) {
        if (x[a].is_zero()) {
            acc = acc.with_valid_to(x[a].valid_to());
            continue;
        }
        acc += x[a] * derivative(f, a);
    }
    return acc;
}

// [X,Y]^c = X(Y^c) - Y(X^c)
inline vector_field lie_bracket(const vector_field &x, const vector_field &y)
{
    x.check_same(y);
    std::vector<series> out;
    for (std::size_t c = 0; c < x.dim(); ++c) {
        out.push_back(directional(x, y[c]) - directional(y, x[c]));
    }
    return vector_field(std::move(out));
}

// (X o Y)^c = sum_{a,b} X^a Y^b A_{ab}^c
inline vector_field apply_higgs(const higgs_field &a, const vector_field &x, const vector_field &y)
{
    const std::size_t n = a.dim();
    if (x.dim() != n || y.dim() != n) {
        throw dimension_error("Higgs field and vector fields disagree on dimension");
    }
    std::vector<series> out(n, series(n, std::min(a.cap(), std::min(x.cap(), y.cap())),
                                      std::min(a.valid_to(), std::min(x.valid_to(), y.valid_to()))));
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i].is_zero()) {
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (y[j].is_zero()) {
                continue;
            }
            const series xy = x[i] * y[j];
            for (std::size_t c = 0; c < n; ++c) {
                if (!a(i, j, c).is_zero()) {
                    out[c] += xy * a(i, j, c);
                }
            }
        }
    }
    return vector_field(std::move(out));
}

// (nabla_X Y)^c = X(Y^c) + sum_{a,b} X^a Y^b Gamma_{ab}^c
inline vector_field covariant_derivative(const connection &g, const vector_field &x, const vector_field &y)
{
    x.check_same(y);
    if (g.dim() != x.dim()) {
        throw dimension_error("connection and vector fields disagree on dimension");
    }
    std::vector<series> out;
    for (std::size_t c = 0; c < x.dim(); ++c) {
        out.push_back(directional(x, y[c]));
    }
    vector_field plain(std::move(out));
    return plain + apply_higgs(higgs_field(g.as_tensor()), x, y).with_valid_to(g.valid_to());
}

// T_{ab}^c = Gamma_{ab}^c - Gamma_{ba}^c
inline tensor torsion(const connection &g)
{
    const std::size_t n = g.dim();
    tensor t({n, n, n}, series(n, g.cap(), g.valid_to()));
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t c = 0; c < n; ++c) {
                t.at({a, b, c}) = g(a, b, c) - g(b, a, c);
            }
        }
    }
    return t;
}

namespace detail
{

// sum_e (X_{bc}^e Y_{ae}^d - X_{ac}^e Y_{be}^d), the quadratic part of frame curvature.
template <class L, class R>
series quadratic_curvature_term(const L &x, const R &y, std::size_t a, std::size_t b, std::size_t c, std::size_t d)
{
    const std::size_t n = x.dim();
    series acc(n, std::min(x.cap(), y.cap()), std::min(x.valid_to(), y.valid_to()));
    for (std::size_t e = 0; e < n; ++e) {
        if (!x(b, c, e).is_zero() && !y(a, e, d).is_zero()) {
            acc += x(b, c, e) * y(a, e, d);
        }
        if (!x(a, c, e).is_zero() && !y(b, e, d).is_zero()) {
            acc -= x(a, c, e) * y(b, e, d);
        }
    }
    return acc;
}

} // namespace detail

// R(d_a, d_b) d_c = sum_d R_{abc}^d d_d, stored at index (a, b, c, d).
inline tensor curvature(const connection &g)
{
    const std::size_t n = g.dim();
    tensor t({n, n, n, n}, series(n, g.cap()));
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t c = 0; c < n; ++c) {
                for (std::size_t d = 0; d < n; ++d) {
                    t.at({a, b, c, d}) = derivative(g(b, c, d), a) - derivative(g(a, c, d), b)
                                         + detail::quadratic_curvature_term(g, g, a, b, c, d);
                }
            }
        }
    }
    return t;
}

struct curvature_split {
    tensor r1;
    tensor r2;
};

// Curvature of base + lambda A equals R_base + lambda R1 + lambda^2 R2 exactly.
inline curvature_split pencil_curvature_split(const higgs_field &a, const connection &base)
{
    const std::size_t n = a.dim();
    if (base.dim() != n) {
        throw dimension_error("Higgs field and base connection disagree on dimension");
    }
    auto base_curv = analyze(curvature(base));
    if (!base_curv.vanishes) {
        throw precondition_error("base connection is not flat: " + base_curv.first->describe());
    }
    curvature_split out{tensor({n, n, n, n}, series(n, a.cap())), tensor({n, n, n, n}, series(n, a.cap()))};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t c = 0; c < n; ++c) {
                for (std::size_t d = 0; d < n; ++d) {
                    out.r1.at({i, j, c, d}) = derivative(a(j, c, d), i) - derivative(a(i, c, d), j)
                                              + detail::quadratic_curvature_term(base, a, i, j, c, d)
                                              + detail::quadratic_curvature_term(a, base, i, j, c, d);
                    out.r2.at({i, j, c, d}) = detail::quadratic_curvature_term(a, a, i, j, c, d);
                }
            }
        }
    }
    return out;
}

} // namespace flatcirc

#endif
