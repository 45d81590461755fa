#ifndef FLATCIRC_DUALITY_HPP
#define FLATCIRC_DUALITY_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <flatcirc/error.hpp>
#include <flatcirc/fmanifold.hpp>
#include <flatcirc/geometry.hpp>
#include <flatcirc/linalg.hpp>
#include <flatcirc/rational.hpp>
#include <flatcirc/series.hpp>

namespace flatcirc
{

// Multiplication by v: (v o w)^a = sum_c M(a, c) w^c.
inline end_field multiplication_operator(const f_structure &f, const vector_field &v)
{
    const std::size_t n = f.dim();
    end_field m(n, f.order());
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t c = 0; c < n; ++c) {
            series acc(n, f.order());
            for (std::size_t b = 0; b < n; ++b) {
                acc += v[b] * f.structure(b, c, a);
            }
            m(a, c) = std::move(acc);
        }
    }
    return m;
}

inline rational_matrix at_origin(const end_field &m)
{
    rational_matrix r(m.dim(), m.dim());
    for (std::size_t a = 0; a < m.dim(); ++a) {
        for (std::size_t c = 0; c < m.dim(); ++c) {
            r(a, c) = m(a, c).constant_term();
        }
    }
    return r;
}

// Solves M w = target degree by degree, M(0) invertible.
inline vector_field solve_linear_series(const end_field &m, const vector_field &target)
{
    const std::size_t n = m.dim();
    auto m0 = inverse(at_origin(m));
    if (!m0) {
        throw not_invertible_error("operator is singular at the origin");
    }
    const int valid = std::min(m.valid_to(), target.valid_to());
    vector_field w = vector_field::zero(n, target.cap()).with_valid_to(valid);
    for (int k = 0; k <= valid; ++k) {
        const auto defect = target - m.apply(w);
        for (const auto &mono : monomials_of_degree(n, k)) {
            for (std::size_t a = 0; a < n; ++a) {
                rational acc = 0;
                for (std::size_t c = 0; c < n; ++c) {
                    acc += (*m0)(a, c) * defect[c].coefficient(mono);
                }
                if (acc != 0) {
                    w[a].add_term(mono, acc);
                }
            }
        }
    }
    return w.with_valid_to(valid);
}

// w with v o w = e.
inline vector_field circ_inverse(const f_structure &f, const vector_field &v)
{
    const auto &e = f.require_identity();
    try {
        return solve_linear_series(multiplication_operator(f, v), e);
    } catch (const not_invertible_error &) {
        throw not_invertible_error("field is not invertible: multiplication matrix is singular at the origin");
    }
}

// ---------------------------------------------------------------------------
// Primitive sections of the tangent bundle as an external bundle

struct primitive_section_report {
    end_field b;             // d_a B^c_b = A_ab^c, B(0) = 0
    vector_field image;      // B u
    rational_matrix jacobian; // (c, a): d_a (B u)^c at 0
    bool primitive = false;
    tensor closedness;       // (c, a, d): d_d B^c_a - d_a B^c_d
    residual_status closedness_status;
};

inline primitive_section_report primitive_section(const f_structure &f, const connection &nabla0, const vector_field &u)
{
    const std::size_t n = f.dim();
    if (!analyze(nabla0.as_tensor()).vanishes) {
        throw precondition_error("base connection must vanish in the coordinate frame");
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto &[m, c] : u[i].terms()) {
            if (m.degree() > 0 && c != 0) {
                throw precondition_error("u is not flat: component " + std::to_string(i) + " is not constant");
            }
        }
    }
    primitive_section_report r;
    r.b = end_field(n, f.order());
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t b = 0; b < n; ++b) {
            std::vector<series> family;
            for (std::size_t a = 0; a < n; ++a) {
                family.push_back(f.structure(a, b, c));
            }
            try {
                r.b(c, b) = primitive_of_closed_family(family);
            } catch (const not_closed_error &err) {
                throw integrability_error(std::string("structure is not closed: ") + err.what());
            }
        }
    }
    r.image = r.b.apply(u);
    r.jacobian = rational_matrix(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t a = 0; a < n; ++a) {
            r.jacobian(c, a) = derivative(r.image[c], a).constant_term();
        }
    }
    r.primitive = determinant(r.jacobian) != 0;
    r.closedness = tensor({n, n, n}, series(n, f.order()));
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t d = 0; d < n; ++d) {
                r.closedness.at({c, a, d}) = derivative(r.b(c, a), d) - derivative(r.b(c, d), a);
            }
        }
    }
    r.closedness_status = analyze(r.closedness);
    return r;
}

// ---------------------------------------------------------------------------
// Twisted multiplication X * Y = eps^{-1} o X o Y

struct duality_pair {
    f_structure original;
    vector_field twist;
    f_structure dual;
    vector_field inverse_used;
    std::optional<vector_potential> dual_potential;
    std::string potential_failure;
};

inline f_structure twisted_structure(const f_structure &f, const vector_field &inv, const vector_field &unit)
{
    const std::size_t n = f.dim();
    higgs_field s(n, f.order());
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            const auto prod = multiply(f, inv, multiply(f, f.frame(a), f.frame(b)));
            for (std::size_t c = 0; c < n; ++c) {
                s(a, b, c) = prod[c];
            }
        }
    }
    return f_structure{s, unit};
}

inline duality_pair dual_structure(const f_structure &f, const vector_field &eps)
{
    duality_pair p{f, eps, {}, circ_inverse(f, eps), std::nullopt, {}};
    p.dual = twisted_structure(f, p.inverse_used, eps);
    try {
        p.dual_potential = structure_to_potential(p.dual);
    } catch (const error &err) {
        p.potential_failure = err.what();
    }
    return p;
}

// nabla*_X Y = eps o nabla_X (eps^{-1} o Y), as Christoffel symbols in the frame.
inline connection dual_connection(const f_structure &f, const connection &nabla, const vector_field &eps,
                                  const vector_field &inv)
{
    const std::size_t n = f.dim();
    connection g(n, f.order());
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            const auto v = multiply(f, eps, covariant_derivative(nabla, f.frame(a), multiply(f, inv, f.frame(b))));
            for (std::size_t c = 0; c < n; ++c) {
                g(a, b, c) = v[c];
            }
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Verification of the old identity as an Euler field of the twisted structure

struct duality_item {
    std::string name;
    std::string assumes;
    tensor residual;
    residual_status status;
};

struct duality_report {
    std::vector<duality_item> hypotheses;
    std::vector<duality_item> identities;
    bool distinct_connections = false;
    std::string bracket_convention = "[X,Y]^c = X(Y^c) - Y(X^c)";

    const duality_item *find(const std::string &name) const
    {
        for (const auto *list : {&hypotheses, &identities}) {
            for (const auto &it : *list) {
                if (it.name == name) {
                    return &it;
                }
            }
        }
        return nullptr;
    }
};

inline constexpr const char *assumes_flat_twist = "nabla eps = 0";
inline constexpr const char *assumes_flat_inverse = "nabla eps^-1 = 0";

inline duality_report duality_verify(const f_structure &f, const connection &nabla0, const connection &nabla,
                                     const vector_field &eps)
{
    const auto &e = f.require_identity();
    const std::size_t n = f.dim();
    const auto inv = circ_inverse(f, eps);
    const auto dual = twisted_structure(f, inv, eps);
    auto item = [](std::string name, std::string assumes, tensor t) {
        auto st = analyze(t);
        return duality_item{std::move(name), std::move(assumes), std::move(t), st};
    };
    auto frame_derivatives = [&](const connection &g, const vector_field &v) {
        std::vector<vector_field> out;
        for (std::size_t a = 0; a < n; ++a) {
            out.push_back(covariant_derivative(g, f.frame(a), v));
        }
        return stack({n}, out);
    };

    duality_report r;
    r.distinct_connections = !analyze(nabla.as_tensor() - nabla0.as_tensor()).vanishes;
    r.hypotheses.push_back(item("identity flat for base", "", frame_derivatives(nabla0, e)));
    r.hypotheses.push_back(
        item("normalization nabla - nabla0 = A", "", nabla.as_tensor() - nabla0.as_tensor() - f.structure.as_tensor()));
    r.hypotheses.push_back(item("twist flat", assumes_flat_twist, frame_derivatives(nabla, eps)));
    r.hypotheses.push_back(item("inverse twist flat", assumes_flat_inverse, frame_derivatives(nabla, inv)));
    r.hypotheses.push_back(item("bridge (nabla0 - A) eps^-1 = 0", assumes_flat_twist,
                                frame_derivatives(nabla0 - f.structure, inv)));

    const auto br = lie_bracket(eps, e);
    r.identities.push_back(item("[eps,e] = eps", assumes_flat_twist, as_tensor(br - eps)));
    r.identities.push_back(item("[eps,e] = -eps", assumes_flat_inverse, as_tensor(br + eps)));
    std::vector<vector_field> plus, minus, closing;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            const auto p = p_tensor(dual, e, f.frame(a), f.frame(b));
            const auto xy = multiply(dual, f.frame(a), f.frame(b));
            plus.push_back(p - xy);
            minus.push_back(p + xy);
        }
        const auto ex = multiply(f, eps, f.frame(a));
        closing.push_back(lie_bracket(e, ex) + ex);
    }
    r.identities.push_back(item("P*_e(X,Y) = X*Y", assumes_flat_twist, stack({n, n}, plus)));
    r.identities.push_back(item("P*_e(X,Y) = -X*Y", assumes_flat_inverse, stack({n, n}, minus)));
    r.identities.push_back(item("[e,eps o X] = -eps o X", assumes_flat_twist, stack({n}, closing)));
    return r;
}

// w with w(0) = v0 and (nabla0 + lambda0 A) w = 0, by repeated integration.
inline vector_field flat_section_solve(const f_structure &f, const connection &nabla0, const rational &lambda0,
                                       const std::vector<rational> &v0)
{
    const std::size_t n = f.dim();
    if (v0.size() != n) {
        throw dimension_error("initial value has wrong length");
    }
    const auto g = shift_base(f, nabla0, lambda0);
    const auto flatness = analyze(curvature(g));
    if (!flatness.vanishes) {
        throw integrability_error("connection is not flat: " + flatness.first->describe());
    }
    const int cap = f.order();
    const int target = std::min(cap, g.valid_to() + 1);
    const auto start = vector_field::constant(n, cap, v0);
    vector_field w = start.with_valid_to(0);
    for (int k = 0; k < target; ++k) {
        std::vector<series> next;
        for (std::size_t c = 0; c < n; ++c) {
            std::vector<series> family;
            for (std::size_t a = 0; a < n; ++a) {
                series acc(n, cap, k);
                for (std::size_t b = 0; b < n; ++b) {
                    acc -= g(a, b, c) * w[b];
                }
                family.push_back(acc.with_valid_to(std::min(k, acc.valid_to())));
            }
            try {
                next.push_back(start[c] + primitive_of_closed_family(family));
            } catch (const not_closed_error &err) {
                throw integrability_error(std::string("flat section equation is not integrable: ") + err.what());
            }
        }
        w = vector_field(std::move(next)).with_valid_to(k + 1);
    }
    return w;
}

} // namespace flatcirc

#endif
