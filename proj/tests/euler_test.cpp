#include <random>

#include <gtest/gtest.h>

#include <flatcirc/euler.hpp>

#include "support.hpp"

using namespace flatcirc;
using namespace flatcirc::testing;

namespace
{

constexpr int order = 8;
constexpr int mu_order = 3;

// P_E(d_a, d_b)^c in coordinates:
// E(C_ab^c) - C_ab^k d_k E^c + d_a E^k C_kb^c + d_b E^k C_ak^c.
tensor euler_by_coordinates(const f_structure &f, const vector_field &e, const rational &d0)
{
    const std::size_t n = f.dim();
    const auto &s = f.structure;
    tensor t({n, n, n}, series(n, order));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t c = 0; c < n; ++c) {
                series acc = -(d0 * s(a, b, c));
                for (std::size_t k = 0; k < n; ++k) {
                    acc += e[k] * derivative(s(a, b, c), k);
                    acc -= s(a, b, k) * derivative(e[c], k);
                    acc += derivative(e[k], a) * s(k, b, c);
                    acc += derivative(e[k], b) * s(a, k, c);
                }
                t.at({a, b, c}) = acc;
            }
    return t;
}

mu_field mu_of(std::vector<vector_field> c)
{
    return mu_field(std::move(c));
}

vector_field field2(const series &a, const series &b)
{
    return vector_field({a, b});
}

series x(std::size_t i)
{
    return var(2, order, i);
}

series k2(const rational &c)
{
    return cst(2, order, c);
}

// d0 unit, d1 o d1 = 0: linear Euler fields are d0 * id plus a derivation.
f_structure nilpotent_algebra()
{
    return nilpotent(order);
}

} // namespace

TEST(EulerResidual, QcP1WeightOne)
{
    auto f = qc_p1(order);
    auto e = qc_p1_euler(order);
    EXPECT_TRUE(analyze(euler_residual(f, e, 1)).vanishes);
    EXPECT_TRUE(analyze(euler_by_coordinates(f, e, 1)).vanishes);
    EXPECT_FALSE(analyze(euler_residual(f, e, 2)).vanishes);
}

TEST(EulerResidual, MatchesCoordinateFormula)
{
    std::mt19937 rng(3);
    auto f = qc_p1(order);
    for (int i = 0; i < 3; ++i) {
        auto e = random_field(rng, 2, order, 3);
        rational d0(i, 2);
        EXPECT_TRUE(analyze(euler_residual(f, e, d0) - euler_by_coordinates(f, e, d0)).vanishes);
    }
}

TEST(EulerResidual, IdentityHasWeightZero)
{
    for (const auto &f : {qc_p1(order), nilpotent(order), one_dim(order)}) {
        EXPECT_TRUE(analyze(euler_residual(f, *f.identity, 0)).vanishes);
    }
}

TEST(EulerResidual, CommutatorHasWeightZero)
{
    auto f = nilpotent_algebra();
    auto e1 = field2(x(0), rational(2) * x(1) + k2(1));
    auto e2 = field2(x(0), x(1));
    ASSERT_TRUE(analyze(euler_residual(f, e1, 1)).vanishes);
    ASSERT_TRUE(analyze(euler_residual(f, e2, 1)).vanishes);
    auto br = lie_bracket(e1, e2);
    EXPECT_FALSE(br.vanishes_up_to(br.valid_to()));
    EXPECT_TRUE(analyze(euler_residual(f, br, 0)).vanishes);
}

TEST(EulerResidual, WeightIsAdditive)
{
    auto f = qc_p1(order);
    auto e = qc_p1_euler(order);
    auto unit = *f.identity;
    EXPECT_TRUE(analyze(euler_residual(f, e + e, 2)).vanishes);
    EXPECT_TRUE(analyze(euler_residual(f, e + unit, 1)).vanishes);
}

TEST(FlatCompat, Examples)
{
    EXPECT_TRUE(flat_compat(qc_p1_euler(order)));
    EXPECT_FALSE(flat_compat(field2(x(0) * x(0), series(2, order))));
    EXPECT_TRUE(flat_compat(field2(k2(3), k2(rational(-1, 2)))));
}

TEST(EulerFamily, Line)
{
    auto f = qc_p1(order);
    euler_field e{qc_p1_euler(order), 1};
    auto same = euler_family(f, e, 0);
    EXPECT_TRUE(same.field.equal_up_to(e.field, order));
    auto one = euler_family(f, e, 1);
    EXPECT_TRUE(one.field.equal_up_to(field2(x(0) + k2(1), k2(2)), order));
    EXPECT_EQ(one.weight, 1);
    auto back = euler_family(f, euler_family(f, e, -1), 1);
    EXPECT_TRUE(back.field.equal_up_to(e.field, order));
}

TEST(EulerFamily, RejectsNonEuler)
{
    auto f = qc_p1(order);
    euler_field bad{field2(x(0), x(1)), 1};
    EXPECT_THROW(euler_family(f, bad, 1), hypothesis_error);
}

TEST(GeometricInverse, ZeroDerivative)
{
    auto f = qc_p1(order);
    auto inv = geometric_inverse(f, vector_field::zero(2, order), mu_order);
    EXPECT_TRUE(inv[0].equal_up_to(*f.identity, order));
    for (int k = 1; k <= mu_order; ++k) {
        EXPECT_TRUE(inv[k].vanishes_up_to(order));
    }
}

TEST(GeometricInverse, ScalarDerivative)
{
    auto f = qc_p1(order);
    const rational c(2, 3);
    auto e = *f.identity;
    auto inv = geometric_inverse(f, c * e, mu_order);
    rational p = 1;
    for (int k = 0; k <= mu_order; ++k) {
        EXPECT_TRUE(inv[k].equal_up_to(p * e, order)) << k;
        p *= -c;
    }
}

TEST(GeometricInverse, MultipliesBackToIdentity)
{
    auto f = qc_p1(order);
    auto e = *f.identity;
    for (const auto &e1 : {rational(1, 2) * e, f.frame(1), field2(x(1), x(0))}) {
        auto inv = geometric_inverse(f, e1, mu_order);
        auto prod = mu_multiply(f, unit_pencil(e, e1, mu_order), inv);
        auto st = analyze(prod - lift(e, mu_order));
        EXPECT_TRUE(st.vanishes);
        EXPECT_EQ(st.mu_checked, mu_order);
    }
}

TEST(HFromE, ReducesToSimplifiedForm)
{
    auto f = qc_p1(order);
    auto nabla = connection::flat(2, order);
    auto e = qc_p1_euler(order);
    auto h = h_from_e(lift(e, mu_order), f, nabla);
    auto s = h_simplified(e, f, nabla, mu_order);
    for (int k = 0; k <= mu_order; ++k)
        for (std::size_t a = 0; a < 2; ++a)
            for (std::size_t c = 0; c < 2; ++c)
                EXPECT_TRUE(h[k](a, c).equal_up_to(s[k](a, c), 6)) << k << a << c;
}

TEST(HFromE, OneDimensional)
{
    auto f = one_dim(order);
    auto h = h_from_e(lift(vector_field({var(1, order, 0)}), mu_order), f, connection::flat(1, order));
    EXPECT_TRUE(h[0](0, 0).equal_up_to(var(1, order, 0), order));
    for (int k = 1; k <= mu_order; ++k) {
        EXPECT_TRUE(h[k](0, 0).vanishes_up_to(h[k](0, 0).valid_to()));
    }
}

TEST(HFromE, MatchesIteratedCombinators)
{
    // Generic connection so that e1 is not a multiple of e.
    std::mt19937 rng(17);
    auto f = qc_p1(order);
    connection nabla(2, order);
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b)
            for (std::size_t c = 0; c < 2; ++c)
                nabla(a, b, c) = random_series(rng, 2, order, 2, 40);
    auto e_mu = mu_of({random_field(rng, 2, order, 3), random_field(rng, 2, order, 3), random_field(rng, 2, order, 3),
                       random_field(rng, 2, order, 3)});
    auto e1 = identity_derivative(f, nabla);
    ASSERT_FALSE(e1.vanishes_up_to(e1.valid_to()));
    auto h = h_from_e(e_mu, f, nabla);
    for (std::size_t c = 0; c < 2; ++c) {
        // A(X) + sum_n mu^n (B C^{n-1} X + A C^n X)
        auto xk = lift(f.frame(c), mu_order);
        auto total = combinators::a(f, e_mu, xk);
        auto cx = xk;
        for (int n = 1; n <= mu_order; ++n) {
            auto term = combinators::b(nabla, e_mu, cx);
            cx = combinators::c(f, e1, cx);
            term = term + combinators::a(f, e_mu, cx);
            for (int i = 0; i < n; ++i) {
                term = term.times_mu();
            }
            total = total + term;
        }
        auto col = mu_apply(h, xk);
        EXPECT_TRUE(analyze(col - total).vanishes) << c;
    }
}

TEST(HFromE, RoundTripOnShiftedModel)
{
    // nabla = nabla0 + c C gives e1 = c e and nabla_e E - c E = d0 E, so the E equation
    // reads d0 E_0 = d0, d0 E_k = 0.
    auto f = qc_p1(order);
    const rational c(1, 2);
    auto nabla = shift_base(f, connection::flat(2, order), c);
    auto e_mu = mu_of({field2(x(0) + x(1) * x(1), x(1)), field2(x(1) * x(1) * x(1), k2(2)), field2(series(2, order), x(1)),
                       field2(k2(-1), series(2, order))});
    auto eq = analyze(e_equation_residual(e_mu, f, nabla));
    ASSERT_TRUE(eq.vanishes);
    auto h = h_from_e(e_mu, f, nabla);
    auto he = mu_apply(h, lift(*f.identity, mu_order));
    EXPECT_TRUE(analyze(he - e_mu).vanishes);
    auto r = full_flatness_residual(h, f, nabla);
    EXPECT_TRUE(r.functional_status.vanishes);
    EXPECT_TRUE(r.unit_status.vanishes);
    EXPECT_EQ(r.unit_status.mu_checked, mu_order - 1);
}

TEST(HFromE, NonSolutionBreaksRoundTrip)
{
    auto f = qc_p1(order);
    auto nabla = connection::flat(2, order);
    auto e_mu = lift(field2(x(0) * x(0), k2(2)), mu_order);
    auto h = h_from_e(e_mu, f, nabla);
    auto he = mu_apply(h, lift(*f.identity, mu_order));
    EXPECT_FALSE(analyze(he - e_mu).vanishes);
}

TEST(HFromE, NeedsMuOrder)
{
    auto f = qc_p1(order);
    EXPECT_THROW(h_from_e(lift(qc_p1_euler(order), 0), f, connection::flat(2, order)), insufficient_order_error);
}

TEST(EEquation, Examples)
{
    auto d1 = one_dim(order);
    EXPECT_TRUE(analyze(e_equation_residual(lift(vector_field({var(1, order, 0)}), mu_order), d1,
                                            connection::flat(1, order)))
                    .vanishes);
    auto f = qc_p1(order);
    auto zero = e_equation_residual(lift(vector_field::zero(2, order), mu_order), f, connection::flat(2, order));
    EXPECT_TRUE(zero[0].equal_up_to(-*f.identity, order));
    EXPECT_TRUE(analyze(e_equation_residual(lift(qc_p1_euler(order), mu_order), f, connection::flat(2, order))).vanishes);
}

TEST(FullFlatness, OneDimensional)
{
    auto f = one_dim(order);
    auto nabla = connection::flat(1, order);
    auto r = full_flatness_residual(h_simplified(vector_field({var(1, order, 0)}), f, nabla, mu_order), f, nabla);
    EXPECT_TRUE(r.flatness_status.vanishes);
    EXPECT_TRUE(r.functional_status.vanishes);
    EXPECT_TRUE(r.unit_status.vanishes);
}

TEST(FullFlatness, EulerIffFlat)
{
    auto f = qc_p1(order);
    auto nabla = connection::flat(2, order);
    std::vector<vector_field> candidates{qc_p1_euler(order), field2(x(0) + k2(3), k2(2)), field2(x(0) * x(0), series(2, order)),
                                         field2(x(0), x(1)), field2(x(0), k2(2) + x(1) * x(1))};
    int flat_count = 0;
    for (const auto &e : candidates) {
        const bool euler = analyze(euler_residual(f, e, 1)).vanishes && flat_compat(e);
        auto r = full_flatness_residual(h_simplified(e, f, nabla, mu_order), f, nabla);
        EXPECT_EQ(r.flatness_status.vanishes, euler);
        if (r.functional_status.vanishes) {
            EXPECT_TRUE(r.unit_status.vanishes);
        }
        flat_count += euler ? 1 : 0;
    }
    EXPECT_EQ(flat_count, 2);
}

TEST(PotentialFlatness, EulerFieldsVanish)
{
    auto f = qc_p1(order);
    auto nabla = connection::flat(2, order);
    auto r = potential_flatness_residual(lift(qc_p1_euler(order), mu_order), qc_p1_potential(order), f, nabla);
    EXPECT_TRUE(r.precondition.vanishes);
    EXPECT_TRUE(r.status.vanishes);

    auto d1 = one_dim(order);
    auto r1 = potential_flatness_residual(lift(vector_field({var(1, order, 0)}), mu_order), one_dim_potential(order), d1,
                                          connection::flat(1, order));
    EXPECT_TRUE(r1.status.vanishes);
}

TEST(PotentialFlatness, IncompatibleFieldLeavesMuLinearTerm)
{
    auto f = qc_p1(order);
    auto nabla = connection::flat(2, order);
    auto e = field2(x(0), k2(2) + x(1) * x(1));
    auto r = potential_flatness_residual(lift(e, mu_order), qc_p1_potential(order), f, nabla);
    EXPECT_FALSE(r.status.vanishes);
    // mu [d1, [d1, E]] = 2 mu d1.
    EXPECT_EQ(r.residual[1].at({1, 1, 1}).constant_term(), 2);
}

TEST(PotentialFlatness, RefusesWhenEEquationFails)
{
    auto f = qc_p1(order);
    auto nabla = connection::flat(2, order);
    auto e = lift(field2(x(0) * x(0), k2(2)), mu_order);
    EXPECT_THROW(potential_flatness_residual(e, qc_p1_potential(order), f, nabla), precondition_error);
    auto forced = potential_flatness_residual(e, qc_p1_potential(order), f, nabla, true);
    EXPECT_FALSE(forced.precondition.vanishes);
    EXPECT_FALSE(forced.status.vanishes);
}

TEST(PotentialFlatness, RefusesCurvedFrame)
{
    auto f = qc_p1(order);
    auto nabla = shift_base(f, connection::flat(2, order), rational(1, 2));
    EXPECT_THROW(potential_flatness_residual(lift(qc_p1_euler(order), mu_order), qc_p1_potential(order), f, nabla),
                 precondition_error);
}

TEST(PotentialFlatness, AgreesWithFullFlatness)
{
    auto f = qc_p1(order);
    auto nabla = connection::flat(2, order);
    std::vector<mu_field> inputs{lift(qc_p1_euler(order), mu_order), lift(field2(x(0), k2(2) + x(1) * x(1)), mu_order),
                                 lift(field2(x(0) + x(1), k2(2)), mu_order),
                                 mu_of({qc_p1_euler(order), field2(k2(1), x(1)), field2(series(2, order), k2(1)),
                                        vector_field::zero(2, order)})};
    for (const auto &e : inputs) {
        auto a = potential_flatness_residual(e, qc_p1_potential(order), f, nabla);
        auto b = full_flatness_residual(h_from_e(e, f, nabla), f, nabla);
        EXPECT_EQ(a.status.vanishes, b.flatness_status.vanishes);
    }
}
