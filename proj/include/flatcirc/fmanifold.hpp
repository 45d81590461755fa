#ifndef FLATCIRC_FMANIFOLD_HPP
#define FLATCIRC_FMANIFOLD_HPP

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <flatcirc/error.hpp>
#include <flatcirc/geometry.hpp>
#include <flatcirc/linalg.hpp>
#include <flatcirc/rational.hpp>
#include <flatcirc/series.hpp>

namespace flatcirc
{

// Structure tensor C_{ab}^c of a multiplication, with an optional identity field.
struct f_structure {
    higgs_field structure;
    std::optional<vector_field> identity;

    std::size_t dim() const noexcept { return structure.dim(); }
    int order() const { return structure.cap(); }
    int valid_to() const { return structure.valid_to(); }

    vector_field frame(std::size_t a) const { return vector_field::frame(dim(), order(), a); }

    const vector_field &require_identity() const
    {
        if (!identity) {
            throw precondition_error("structure has no identity field");
        }
        return *identity;
    }
};

inline vector_field multiply(const f_structure &f, const vector_field &x, const vector_field &y)
{
    return apply_higgs(f.structure, x, y);
}

// Vector potential C with C_{ab}^c = d_a d_b C^c, kept in the gauge without
// constant and linear monomials.
class vector_potential
{
public:
    vector_potential() = default;
    explicit vector_potential(const vector_field &c) : c_(normalize(c)) {}

    const vector_field &field() const noexcept { return c_; }
    std::size_t dim() const noexcept { return c_.dim(); }

    friend bool operator==(const vector_potential &, const vector_potential &) = default;

private:
    static vector_field normalize(const vector_field &c)
    {
        std::vector<series> out;
        for (std::size_t i = 0; i < c.dim(); ++i) {
            series s(c[i].nvars(), c[i].cap(), c[i].valid_to());
            for (const auto &[e, k] : c[i].terms()) {
                if (e.degree() >= 2) {
                    s.add_term(e, k);
                }
            }
            out.push_back(std::move(s));
        }
        return vector_field(std::move(out));
    }

    vector_field c_;
};

inline f_structure potential_to_structure(const vector_potential &pot)
{
    const auto &c = pot.field();
    const std::size_t n = c.dim();
    if (c.valid_to() < 2) {
        throw insufficient_order_error("potential must be valid to degree 2 or more, got "
                                       + std::to_string(c.valid_to()));
    }
    higgs_field a(n, c.cap());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            for (std::size_t k = 0; k < n; ++k) {
                a(i, j, k) = derivative(derivative(c[k], i), j);
                a(j, i, k) = a(i, j, k);
            }
        }
    }
    return f_structure{std::move(a), std::nullopt};
}

inline curvature_split structure_curvature(const f_structure &f)
{
    return pencil_curvature_split(f.structure, connection::flat(f.dim(), f.order()));
}

inline vector_potential structure_to_potential(const f_structure &f)
{
    const std::size_t n = f.dim();
    auto r1 = analyze(structure_curvature(f).r1);
    if (!r1.vanishes) {
        throw precondition_error("structure admits no vector potential: R1 component " + r1.first->describe());
    }
    // B_c^e with d_b B_c^e = A_{bc}^e, then C^e with d_c C^e = B_c^e.
    std::vector<series> potential;
    for (std::size_t e = 0; e < n; ++e) {
        std::vector<series> b_row;
        for (std::size_t c = 0; c < n; ++c) {
            std::vector<series> family;
            for (std::size_t b = 0; b < n; ++b) {
                family.push_back(f.structure(b, c, e));
            }
            b_row.push_back(primitive_of_closed_family(family));
        }
        potential.push_back(primitive_of_closed_family(b_row));
    }
    return vector_potential(vector_field(std::move(potential)));
}

// P_X(Z,W) = [X, Z o W] - [X,Z] o W - Z o [X,W]
inline vector_field p_tensor(const f_structure &f, const vector_field &x, const vector_field &z, const vector_field &w)
{
    return lie_bracket(x, multiply(f, z, w)) - multiply(f, lie_bracket(x, z), w) - multiply(f, z, lie_bracket(x, w));
}

// P_{XoY}(Z,W) - X o P_Y(Z,W) - Y o P_X(Z,W), expanded into its nine bracket terms.
inline vector_field hm_expression(const f_structure &f, const vector_field &x, const vector_field &y,
                                  const vector_field &z, const vector_field &w)
{
    const auto xy = multiply(f, x, y);
    const auto zw = multiply(f, z, w);
    auto m = [&](const vector_field &u, const vector_field &v) { return multiply(f, u, v); };
    return lie_bracket(xy, zw) - m(lie_bracket(xy, z), w) - m(z, lie_bracket(xy, w)) - m(x, lie_bracket(y, zw))
           - m(y, lie_bracket(x, zw)) + m(m(x, lie_bracket(y, z)), w) + m(m(x, z), lie_bracket(y, w))
           + m(m(y, lie_bracket(x, z)), w) + m(m(y, z), lie_bracket(x, w));
}

// Index (a, b, c, d, f): coefficient of d_f in the expression above on (d_a, d_b, d_c, d_d).
inline tensor hm_identity_residual(const f_structure &f)
{
    const std::size_t n = f.dim();
    std::vector<vector_field> frame;
    for (std::size_t a = 0; a < n; ++a) {
        frame.push_back(f.frame(a));
    }
    std::vector<vector_field> entries;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t c = 0; c < n; ++c) {
                for (std::size_t d = 0; d < n; ++d) {
                    entries.push_back(hm_expression(f, frame[a], frame[b], frame[c], frame[d]));
                }
            }
        }
    }
    return stack({n, n, n, n}, entries);
}

// D(X,Y,Z) = nabla_X(Y o Z) - nabla_X(Y) o Z - Y o nabla_X Z
inline vector_field d_tensor(const f_structure &f, const connection &nabla, const vector_field &x,
                             const vector_field &y, const vector_field &z)
{
    return covariant_derivative(nabla, x, multiply(f, y, z)) - multiply(f, covariant_derivative(nabla, x, y), z)
           - multiply(f, y, covariant_derivative(nabla, x, z));
}

// Associativity residual (X o Y) o Z - X o (Y o Z) on the frame, index (a, b, c, d).
inline tensor associativity_residual(const f_structure &f)
{
    const std::size_t n = f.dim();
    std::vector<vector_field> entries;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t c = 0; c < n; ++c) {
                auto fa = f.frame(a), fb = f.frame(b), fc = f.frame(c);
                entries.push_back(multiply(f, multiply(f, fa, fb), fc) - multiply(f, fa, multiply(f, fb, fc)));
            }
        }
    }
    return stack({n, n, n}, entries);
}

// Residual of e o d_b = d_b, index (b, c).
inline tensor identity_residual(const f_structure &f, const vector_field &e)
{
    const std::size_t n = f.dim();
    std::vector<vector_field> entries;
    for (std::size_t b = 0; b < n; ++b) {
        entries.push_back(multiply(f, e, f.frame(b)) - f.frame(b));
    }
    return stack({n}, entries);
}

struct identity_search {
    std::optional<vector_field> identity;
    std::optional<int> inconsistent_degree;
    std::string reason;
};

// Solves e o d_b = d_b degree by degree with exact elimination.
inline identity_search find_identity(const f_structure &f)
{
    const std::size_t n = f.dim();
    const int valid = f.valid_to();
    rational_matrix m0(n * n, n);
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t c = 0; c < n; ++c) {
            for (std::size_t a = 0; a < n; ++a) {
                m0(b * n + c, a) = f.structure(a, b, c).constant_term();
            }
        }
    }
    if (rank(m0) < n) {
        return {std::nullopt, 0, "degree-0 system is singular"};
    }
    vector_field e = vector_field::zero(n, f.order()).with_valid_to(valid);
    for (int k = 0; k <= valid; ++k) {
        // Degree-k part of delta_b^c - sum_a e^a A_{ab}^c must equal m0 * e_k.
        std::vector<std::vector<series>> defect(n, std::vector<series>(n, series(n, f.order())));
        for (std::size_t b = 0; b < n; ++b) {
            auto prod = multiply(f, e, f.frame(b));
            for (std::size_t c = 0; c < n; ++c) {
                defect[b][c] = (b == c ? series::constant(n, f.order(), 1) : series(n, f.order())) - prod[c];
            }
        }
        for (const auto &mono : monomials_of_degree(n, k)) {
            std::vector<rational> rhs(n * n);
            for (std::size_t b = 0; b < n; ++b) {
                for (std::size_t c = 0; c < n; ++c) {
                    rhs[b * n + c] = defect[b][c].coefficient(mono);
                }
            }
            auto sol = solve_unique(m0, rhs);
            if (!sol) {
                return {std::nullopt, k, "inconsistent at degree " + std::to_string(k)};
            }
            for (std::size_t a = 0; a < n; ++a) {
                e[a].add_term(mono, (*sol)[a]);
            }
        }
    }
    return {e, std::nullopt, {}};
}

// ---------------------------------------------------------------------------
// The sheaf L of fields with nabla_Y eps = Y o nabla_e eps.

struct l_membership_report {
    tensor condition;  // (a, c): nabla_{d_a} eps - d_a o nabla_e eps
    tensor ad_formula; // (a, c): [eps, d_a] - (nabla_eps d_a - d_a o nabla_e eps)
    tensor p_formula;  // (a, b, c): P_eps(d_a,d_b) - D(eps,d_a,d_b) - d_a o d_b o nabla_e eps
    tensor p_literal;  // (a, b, c): same with eps in place of nabla_e eps
    tensor derivation; // (a, b, c): [e, d_a o d_b] - [e,d_a] o d_b - d_a o [e,d_b]
    residual_status condition_status;
    residual_status ad_status;
    residual_status p_status;
    residual_status p_literal_status;
    residual_status derivation_status;
    bool member = false;
};

inline l_membership_report l_membership(const f_structure &f, const connection &nabla, const vector_field &eps)
{
    const auto &e = f.require_identity();
    const std::size_t n = f.dim();
    const auto nabla_e_eps = covariant_derivative(nabla, e, eps);
    std::vector<vector_field> cond, adf, pf, pl, der;
    for (std::size_t a = 0; a < n; ++a) {
        const auto y = f.frame(a);
        cond.push_back(covariant_derivative(nabla, y, eps) - multiply(f, y, nabla_e_eps));
        adf.push_back(lie_bracket(eps, y) - (covariant_derivative(nabla, eps, y) - multiply(f, y, nabla_e_eps)));
        for (std::size_t b = 0; b < n; ++b) {
            const auto z = f.frame(b);
            const auto pd = p_tensor(f, eps, y, z) - d_tensor(f, nabla, eps, y, z);
            const auto yz = multiply(f, y, z);
            pf.push_back(pd - multiply(f, yz, nabla_e_eps));
            pl.push_back(pd - multiply(f, yz, eps));
            der.push_back(lie_bracket(e, multiply(f, y, z)) - multiply(f, lie_bracket(e, y), z)
                          - multiply(f, y, lie_bracket(e, z)));
        }
    }
    l_membership_report r;
    r.condition = stack({n}, cond);
    r.ad_formula = stack({n}, adf);
    r.p_formula = stack({n, n}, pf);
    r.p_literal = stack({n, n}, pl);
    r.derivation = stack({n, n}, der);
    r.condition_status = analyze(r.condition);
    r.ad_status = analyze(r.ad_formula);
    r.p_status = analyze(r.p_formula);
    r.p_literal_status = analyze(r.p_literal);
    r.derivation_status = analyze(r.derivation);
    r.member = r.condition_status.vanishes;
    return r;
}

enum class identity_mode { flat, eigen, other };

struct nabla_e_e_result {
    identity_mode mode = identity_mode::other;
    rational eigenvalue = 0;
    int proven_degree = 0;
    vector_field nabla_e_e;
};

// Classifies nabla_e e as 0, c * e for a rational constant c, or neither.
inline nabla_e_e_result nabla_e_e_mode(const f_structure &f, const connection &nabla)
{
    const auto &e = f.require_identity();
    nabla_e_e_result r;
    r.nabla_e_e = covariant_derivative(nabla, e, e);
    r.proven_degree = r.nabla_e_e.valid_to();
    if (r.nabla_e_e.vanishes_up_to(r.proven_degree)) {
        r.mode = identity_mode::flat;
        return r;
    }
    // The ratio is fixed by the first nonzero coefficient of e.
    for (std::size_t i = 0; i < e.dim(); ++i) {
        if (auto lead = e[i].first_nonzero_up_to(r.proven_degree)) {
            const rational c = r.nabla_e_e[i].coefficient(lead->first) / lead->second;
            if ((r.nabla_e_e - c * e).vanishes_up_to(r.proven_degree)) {
                r.mode = identity_mode::eigen;
                r.eigenvalue = c;
            }
            return r;
        }
    }
    return r;
}

inline std::string to_string(identity_mode m)
{
    switch (m) {
    case identity_mode::flat:
        return "flat";
    case identity_mode::eigen:
        return "eigen";
    default:
        return "other";
    }
}

// Gamma' = Gamma + lambda0 * C: another point of the pencil.
inline connection shift_base(const f_structure &f, const connection &nabla, const rational &lambda0)
{
    return nabla + lambda0 * f.structure;
}

} // namespace flatcirc

#endif
