#include <gtest/gtest.h>

#include <random>
#include <vector>

#include <flatcirc/correlators.hpp>
#include <flatcirc/duality.hpp>

#include "support.hpp"

using namespace flatcirc;
using namespace flatcirc::testing;

namespace
{

constexpr int cap = 6;

rational_matrix mat(std::initializer_list<std::initializer_list<int>> rows)
{
    rational_matrix m(rows.size(), rows.begin()->size());
    std::size_t i = 0;
    for (const auto &r : rows) {
        std::size_t j = 0;
        for (int x : r) {
            m(i, j++) = x;
        }
        ++i;
    }
    return m;
}

// Hand-built B for qc-p1: B^0_0 = x0, B^0_1 = exp(x1) - 1, B^1_0 = x1, B^1_1 = x0.
end_field qc_p1_b(int k)
{
    end_field b(2, k);
    b(0, 0) = var(2, k, 0);
    b(0, 1) = exp_trunc(2, k, 1) - cst(2, k, 1);
    b(1, 0) = var(2, k, 1);
    b(1, 1) = var(2, k, 0);
    return b;
}

// Its family by hand: Delta(0) = I, Delta(1) antidiagonal, Delta(1..1) = E_01 beyond, rest zero.
correlator_family qc_p1_family(int k)
{
    correlator_family fam{2, k, {}, false};
    for (const auto &key : correlator_keys(2, k)) {
        rational_matrix m(2, 2);
        const bool all_one = std::all_of(key.begin(), key.end(), [](std::size_t a) { return a == 1; });
        if (key == index_tuple{0}) {
            m = rational_matrix::identity(2);
        } else if (key == index_tuple{1}) {
            m = mat({{0, 1}, {1, 0}});
        } else if (all_one) {
            m = mat({{0, 1}, {0, 0}});
        }
        fam.set(key, m);
    }
    return fam;
}

// d_{a_1} ... d_{a_k} B (0) by repeated differentiation in the given order.
rational_matrix taylor_by_derivatives(const end_field &b, const index_tuple &order)
{
    rational_matrix m(b.dim(), b.dim());
    for (std::size_t i = 0; i < b.dim(); ++i) {
        for (std::size_t j = 0; j < b.dim(); ++j) {
            series s = b(i, j);
            for (auto a : order) {
                s = derivative(s, a);
            }
            m(i, j) = s.constant_term();
        }
    }
    return m;
}

correlator_family random_symmetric_family(std::mt19937 &rng, std::size_t n, int k)
{
    std::uniform_int_distribution<int> num(-3, 3);
    correlator_family fam{n, k, {}, false};
    for (const auto &key : correlator_keys(n, k)) {
        rational_matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                m(i, j) = num(rng);
            }
        }
        fam.set(key, m);
    }
    return fam;
}

rational_matrix commutator(const rational_matrix &x, const rational_matrix &y)
{
    return x * y - y * x;
}

} // namespace

TEST(Keys, CountsAreMultisetCounts)
{
    // multisets of size 1..3 over 2 symbols: 2 + 3 + 4
    EXPECT_EQ(correlator_keys(2, 3).size(), 9u);
    EXPECT_EQ(correlator_keys(3, 2).size(), 9u);
    EXPECT_EQ(correlator_keys(2, 2).front(), (index_tuple{0}));
}

TEST(BFromCorrelators, ZeroFamily)
{
    correlator_family fam{2, 3, {}, false};
    for (const auto &key : correlator_keys(2, 3)) {
        fam.set(key, rational_matrix(2, 2));
    }
    const auto b = b_from_correlators(fam);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            EXPECT_TRUE(b(i, j).is_zero());
        }
    }
}

TEST(BFromCorrelators, QcP1MatchesHandBuiltB)
{
    EXPECT_EQ(b_from_correlators(qc_p1_family(cap)), qc_p1_b(cap));
}

TEST(BFromCorrelators, DerivativesAtOriginReproduceFamily)
{
    std::mt19937 rng(7);
    const auto fam = random_symmetric_family(rng, 3, 3);
    const auto b = b_from_correlators(fam);
    for (const auto &[key, m] : fam.entries) {
        auto order = key;
        do {
            EXPECT_EQ(taylor_by_derivatives(b, order), m);
        } while (std::next_permutation(order.begin(), order.end()));
    }
}

TEST(BFromCorrelators, MissingEntryIsIncomplete)
{
    auto fam = qc_p1_family(3);
    fam.entries.erase(index_tuple{0, 1});
    EXPECT_THROW(b_from_correlators(fam), incomplete_family_error);
}

TEST(BFromCorrelators, ShapeErrors)
{
    auto fam = qc_p1_family(2);
    fam.set({0}, rational_matrix(3, 3));
    EXPECT_THROW(b_from_correlators(fam), dimension_error);
    auto deep = qc_p1_family(2);
    deep.set({0, 0, 0}, rational_matrix(2, 2));
    EXPECT_THROW(b_from_correlators(deep), dimension_error);
}

TEST(FamilyLookup, SortsKeys)
{
    const auto fam = qc_p1_family(3);
    EXPECT_EQ(fam.at({1, 0}), fam.at({0, 1}));
    EXPECT_THROW(fam.at({0, 0, 0, 0}), incomplete_family_error);
}

TEST(MasterEquation, OneVariableVanishes)
{
    std::mt19937 rng(3);
    const auto b = b_from_correlators(random_symmetric_family(rng, 1, 4));
    EXPECT_TRUE(analyze(master_equation_residual(b)).vanishes);
}

TEST(MasterEquation, QcP1VanishesAndAgreesWithAssociativity)
{
    const auto b = qc_p1_b(cap);
    const auto st = analyze(master_equation_residual(b));
    EXPECT_TRUE(st.vanishes);
    EXPECT_EQ(st.proven_degree, cap - 1);
    EXPECT_TRUE(analyze(associativity_residual(structure_from_b(b))).vanishes);
    EXPECT_TRUE(analyze(structure_curvature(qc_p1(cap)).r1).vanishes);
    EXPECT_TRUE(analyze(structure_curvature(qc_p1(cap)).r2).vanishes);
}

TEST(MasterEquation, RandomFamilyMatchesBruteForceCommutators)
{
    std::mt19937 rng(11);
    const std::size_t n = 2;
    const auto fam = random_symmetric_family(rng, n, 2);
    const auto r = master_equation_residual(b_from_correlators(fam));
    EXPECT_FALSE(analyze(r).vanishes);
    const auto c01 = commutator(fam.at({0}), fam.at({1}));
    // linear coefficient along x_d: [Delta(0,d), Delta(1)] + [Delta(0), Delta(1,d)]
    std::vector<rational_matrix> lin;
    for (std::size_t d = 0; d < n; ++d) {
        lin.push_back(commutator(fam.at({0, d}), fam.at({1})) + commutator(fam.at({0}), fam.at({1, d})));
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const auto &s = r.at({0, 1, i, j});
            EXPECT_EQ(s.constant_term(), c01(i, j));
            for (std::size_t d = 0; d < n; ++d) {
                EXPECT_EQ(s.coefficient(unit_exponent(d)), lin[d](i, j));
            }
            EXPECT_TRUE(r.at({1, 0, i, j}).is_zero());
        }
    }
}

TEST(CorrelatorsFromB, ZeroB)
{
    const auto fam = correlators_from_b(end_field(2, 3));
    EXPECT_EQ(fam.cap, 3);
    for (const auto &[key, m] : fam.entries) {
        EXPECT_TRUE(m.is_zero());
    }
    EXPECT_FALSE(fam.forced);
}

TEST(CorrelatorsFromB, QcP1Roundtrip)
{
    const auto fam = correlators_from_b(qc_p1_b(cap));
    EXPECT_EQ(fam, qc_p1_family(cap));
    EXPECT_EQ(correlators_from_b(b_from_correlators(fam)), fam);
    EXPECT_EQ(b_from_correlators(correlators_from_b(qc_p1_b(cap))), qc_p1_b(cap));
}

TEST(CorrelatorsFromB, ExtractedEntriesSymmetric)
{
    const auto b = b_from_structure(qc_p1(cap));
    const auto fam = correlators_from_b(b);
    for (const auto &[key, m] : fam.entries) {
        auto order = key;
        std::reverse(order.begin(), order.end());
        EXPECT_EQ(taylor_by_derivatives(b, order), m);
    }
}

TEST(CorrelatorsFromB, FirstOrderIsMultiplicationAtOrigin)
{
    for (const auto &f : {qc_p1(cap), nilpotent(cap)}) {
        const auto fam = correlators_from_b(b_from_structure(f));
        for (std::size_t a = 0; a < f.dim(); ++a) {
            EXPECT_EQ(fam.at({a}), at_origin(multiplication_operator(f, f.frame(a))));
        }
    }
}

TEST(CorrelatorsFromB, ViolationRefusedUnlessForced)
{
    std::mt19937 rng(11);
    const auto b = b_from_correlators(random_symmetric_family(rng, 2, 2));
    EXPECT_THROW(correlators_from_b(b), hypothesis_error);
    const auto fam = correlators_from_b(b, true);
    EXPECT_TRUE(fam.forced);
    EXPECT_EQ(b_from_correlators(fam), b);
}

TEST(CorrelatorsFromB, NonzeroOriginRejected)
{
    auto b = qc_p1_b(3);
    b(0, 0) += cst(2, 3, 1);
    EXPECT_THROW(correlators_from_b(b), precondition_error);
}

TEST(StructureFromB, ZeroB)
{
    const auto f = structure_from_b(end_field(2, 3));
    EXPECT_TRUE(analyze(f.structure.as_tensor()).vanishes);
}

TEST(StructureFromB, QcP1Roundtrip)
{
    const auto diff = analyze(structure_from_b(qc_p1_b(cap)).structure.as_tensor() - qc_p1(cap).structure.as_tensor());
    EXPECT_TRUE(diff.vanishes);
    EXPECT_EQ(diff.proven_degree, cap - 2);
    const auto back = b_from_structure(qc_p1(cap));
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            EXPECT_FALSE((back(i, j) - qc_p1_b(cap)(i, j)).first_nonzero_up_to(cap - 1)) << i << j;
        }
    }
}

TEST(StructureFromB, LinearCommutingIsConstantAssociative)
{
    // Q[t]/t^2: M0 = I, M1 = multiplication by t.
    const auto m0 = rational_matrix::identity(2);
    const auto m1 = mat({{0, 0}, {1, 0}});
    ASSERT_TRUE(commutator(m0, m1).is_zero());
    correlator_family fam{2, 4, {}, false};
    for (const auto &key : correlator_keys(2, 4)) {
        fam.set(key, key.size() == 1 ? (key[0] == 0 ? m0 : m1) : rational_matrix(2, 2));
    }
    const auto b = b_from_correlators(fam);
    const auto f = structure_from_b(b);
    for (std::size_t a = 0; a < 2; ++a) {
        for (std::size_t c = 0; c < 2; ++c) {
            for (std::size_t k = 0; k < 2; ++k) {
                const auto &s = f.structure(a, c, k);
                EXPECT_EQ(s.constant_term(), (a == 0 ? m0 : m1)(k, c));
                EXPECT_TRUE((s - cst(2, 4, s.constant_term())).is_zero());
            }
        }
    }
    EXPECT_TRUE(analyze(master_equation_residual(b)).vanishes);
    EXPECT_TRUE(analyze(associativity_residual(f)).vanishes);
}

TEST(StructureFromB, NonCommutingBreaksAssociativity)
{
    const auto m0 = mat({{1, 0}, {0, 0}});
    const auto m1 = mat({{0, 1}, {0, 0}});
    correlator_family fam{2, 3, {}, false};
    for (const auto &key : correlator_keys(2, 3)) {
        fam.set(key, key.size() == 1 ? (key[0] == 0 ? m0 : m1) : rational_matrix(2, 2));
    }
    const auto b = b_from_correlators(fam);
    EXPECT_FALSE(analyze(master_equation_residual(b)).vanishes);
}

TEST(Property, ShippedSolutionsSatisfyMasterEquation)
{
    for (const auto &f : {one_dim(cap), qc_p1(cap), nilpotent(cap)}) {
        const auto b = b_from_structure(f);
        EXPECT_TRUE(analyze(master_equation_residual(b)).vanishes);
        const auto rebuilt = b_from_correlators(correlators_from_b(b));
        EXPECT_TRUE(analyze(master_equation_residual(rebuilt)).vanishes);
        // Consistency triangle through the potential.
        const auto s = structure_from_b(b);
        EXPECT_EQ(potential_to_structure(structure_to_potential(s)).structure, s.structure);
    }
}

TEST(Property, NotClosedStructureHasNoB)
{
    higgs_field s(2, 3);
    s(0, 0, 0) = var(2, 3, 1);
    EXPECT_THROW(b_from_structure(f_structure{s, std::nullopt}), integrability_error);
}
