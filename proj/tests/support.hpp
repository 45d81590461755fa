#ifndef FLATCIRC_TESTS_SUPPORT_HPP
#define FLATCIRC_TESTS_SUPPORT_HPP

// Shared fixtures: the reference models built directly from the series API
// (no parser involved) and seeded random generators.

#include <cstddef>
#include <random>
#include <vector>

#include <flatcirc/fmanifold.hpp>
#include <flatcirc/geometry.hpp>
#include <flatcirc/series.hpp>

namespace flatcirc::testing
{

inline series var(std::size_t n, int cap, std::size_t i)
{
    return series::variable(n, cap, i);
}

inline series cst(std::size_t n, int cap, const rational &c)
{
    return series::constant(n, cap, c);
}

// C = (x0^2/2) d0, e = d0.
inline vector_potential one_dim_potential(int cap)
{
    return vector_potential(vector_field({rational(1, 2) * var(1, cap, 0) * var(1, cap, 0)}));
}

// C = (x0^2/2 + exp(x1)) d0 + x0 x1 d1; d1 o d1 = exp(x1) d0.
inline vector_potential qc_p1_potential(int cap)
{
    auto x0 = var(2, cap, 0), x1 = var(2, cap, 1);
    return vector_potential(vector_field({rational(1, 2) * x0 * x0 + exp_trunc(2, cap, 1), x0 * x1}));
}

// C = (x0^2/2) d0 + x0 x1 d1; d1 o d1 = 0.
inline vector_potential nilpotent_potential(int cap)
{
    auto x0 = var(2, cap, 0), x1 = var(2, cap, 1);
    return vector_potential(vector_field({rational(1, 2) * x0 * x0, x0 * x1}));
}

inline f_structure with_identity(f_structure f, vector_field e)
{
    f.identity = std::move(e);
    return f;
}

inline f_structure one_dim(int cap)
{
    auto f = potential_to_structure(one_dim_potential(cap));
    return with_identity(f, f.frame(0));
}

inline f_structure qc_p1(int cap)
{
    auto f = potential_to_structure(qc_p1_potential(cap));
    return with_identity(f, f.frame(0));
}

inline f_structure nilpotent(int cap)
{
    auto f = potential_to_structure(nilpotent_potential(cap));
    return with_identity(f, f.frame(0));
}

// E = x0 d0 + 2 d1 on qc-p1.
inline vector_field qc_p1_euler(int cap)
{
    return vector_field({var(2, cap, 0), cst(2, cap, 2)});
}

inline series random_series(std::mt19937 &rng, std::size_t n, int cap, int max_degree, int density = 60)
{
    std::uniform_int_distribution<int> coin(0, 99), num(-5, 5), den(1, 3);
    series s(n, cap);
    for (int k = 0; k <= max_degree; ++k) {
        for (const auto &m : monomials_of_degree(n, k)) {
            if (coin(rng) < density) {
                s.add_term(m, rational(num(rng), den(rng)));
            }
        }
    }
    return s;
}

inline vector_field random_field(std::mt19937 &rng, std::size_t n, int cap, int max_degree)
{
    std::vector<series> c;
    for (std::size_t i = 0; i < n; ++i) {
        c.push_back(random_series(rng, n, cap, max_degree));
    }
    return vector_field(std::move(c));
}

} // namespace flatcirc::testing

#endif
