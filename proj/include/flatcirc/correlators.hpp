#ifndef FLATCIRC_CORRELATORS_HPP
#define FLATCIRC_CORRELATORS_HPP

#include <algorithm>
#include <cstddef>
#include <map>
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

using index_tuple = std::vector<std::size_t>;

// Top correlators Delta(a_1..a_k), keyed by sorted index tuples, 1 <= k <= cap.
// Matrix rows carry the upper index: Delta(..)(c, b) = d..d B^c_b (0).
struct correlator_family {
    std::size_t dim = 0;
    int cap = 0;
    std::map<index_tuple, rational_matrix> entries;
    // Set when extracted from a B that violates the master equation.
    bool forced = false;

    const rational_matrix &at(index_tuple key) const
    {
        std::sort(key.begin(), key.end());
        auto it = entries.find(key);
        if (it == entries.end()) {
            throw incomplete_family_error("missing correlator " + key_to_string(key));
        }
        return it->second;
    }

    void set(index_tuple key, rational_matrix m)
    {
        std::sort(key.begin(), key.end());
        entries[std::move(key)] = std::move(m);
    }

    static std::string key_to_string(const index_tuple &key)
    {
        std::string out;
        for (std::size_t i = 0; i < key.size(); ++i) {
            out += (i ? "," : "") + std::to_string(key[i]);
        }
        return out;
    }

    friend bool operator==(const correlator_family &a, const correlator_family &b)
    {
        return a.dim == b.dim && a.cap == b.cap && a.entries == b.entries;
    }
};

// Sorted index tuples of length 1..cap over n coordinates, shortest first.
inline std::vector<index_tuple> correlator_keys(std::size_t n, int cap)
{
    std::vector<index_tuple> out;
    index_tuple cur;
    auto rec = [&](auto &&self, std::size_t from, int len) -> void {
        if (static_cast<int>(cur.size()) == len) {
            out.push_back(cur);
            return;
        }
        for (std::size_t a = from; a < n; ++a) {
            cur.push_back(a);
            self(self, a, len);
            cur.pop_back();
        }
    };
    for (int len = 1; len <= cap; ++len) {
        rec(rec, 0, len);
    }
    return out;
}

inline exponent exponent_of(const index_tuple &key)
{
    exponent e;
    for (auto a : key) {
        e[a] = static_cast<std::uint8_t>(e[a] + 1);
    }
    return e;
}

// alpha! for the multiplicity vector of the tuple.
inline rational multiplicity_factorial(const exponent &e, std::size_t n)
{
    rational f = 1;
    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 2; k <= e[i]; ++k) {
            f *= k;
        }
    }
    return f;
}

// B = sum_alpha x^alpha / alpha! Delta(alpha).
inline end_field b_from_correlators(const correlator_family &fam)
{
    const std::size_t n = fam.dim;
    for (const auto &[key, m] : fam.entries) {
        if (m.rows() != n || m.cols() != n) {
            throw dimension_error("correlator " + correlator_family::key_to_string(key) + " is not " +
                                  std::to_string(n) + "x" + std::to_string(n));
        }
        if (key.empty() || static_cast<int>(key.size()) > fam.cap ||
            std::any_of(key.begin(), key.end(), [n](std::size_t a) { return a >= n; })) {
            throw dimension_error("correlator key " + correlator_family::key_to_string(key) + " out of range");
        }
    }
    end_field b(n, fam.cap);
    for (const auto &key : correlator_keys(n, fam.cap)) {
        const auto &m = fam.at(key);
        const auto e = exponent_of(key);
        const rational scale = 1 / multiplicity_factorial(e, n);
        for (std::size_t c = 0; c < n; ++c) {
            for (std::size_t col = 0; col < n; ++col) {
                if (m(c, col) != 0) {
                    b(c, col).add_term(e, scale * m(c, col));
                }
            }
        }
    }
    return b;
}

inline end_field partial(const end_field &b, std::size_t a)
{
    end_field r(b.dim(), 0);
    for (std::size_t i = 0; i < b.dim(); ++i) {
        for (std::size_t j = 0; j < b.dim(); ++j) {
            r(i, j) = derivative(b(i, j), a);
        }
    }
    return r;
}

// (a, b, row, col): [d_a B, d_b B]; zero on and below the diagonal a >= b.
inline tensor master_equation_residual(const end_field &b)
{
    const std::size_t n = b.dim();
    const int cap = n ? b(0, 0).cap() : 0;
    tensor t({n, n, n, n}, series(n, cap, std::max(0, b.valid_to() - 1)));
    std::vector<end_field> d;
    for (std::size_t a = 0; a < n; ++a) {
        d.push_back(partial(b, a));
    }
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t c = a + 1; c < n; ++c) {
            const auto comm = d[a] * d[c] - d[c] * d[a];
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    t.at({a, c, i, j}) = comm(i, j);
                }
            }
        }
    }
    return t;
}

inline void require_vanishing_origin(const end_field &b)
{
    for (std::size_t i = 0; i < b.dim(); ++i) {
        for (std::size_t j = 0; j < b.dim(); ++j) {
            if (b(i, j).constant_term() != 0) {
                throw precondition_error("B must vanish at the origin");
            }
        }
    }
}

// Delta(alpha) = d^alpha B (0), up to the validity degree of B.
inline correlator_family correlators_from_b(const end_field &b, bool force = false)
{
    require_vanishing_origin(b);
    const std::size_t n = b.dim();
    const auto master = analyze(master_equation_residual(b));
    correlator_family fam;
    fam.dim = n;
    fam.cap = n ? std::min(b.valid_to(), b(0, 0).cap()) : 0;
    if (!master.vanishes) {
        if (!force) {
            throw hypothesis_error("B violates the master equation: " + master.first->describe());
        }
        fam.forced = true;
    }
    for (const auto &key : correlator_keys(n, fam.cap)) {
        const auto e = exponent_of(key);
        const rational scale = multiplicity_factorial(e, n);
        rational_matrix m(n, n);
        for (std::size_t c = 0; c < n; ++c) {
            for (std::size_t col = 0; col < n; ++col) {
                m(c, col) = scale * b(c, col).coefficient(e);
            }
        }
        fam.entries.emplace(key, std::move(m));
    }
    return fam;
}

// C_ab^c = d_a B^c_b.
inline f_structure structure_from_b(const end_field &b)
{
    const std::size_t n = b.dim();
    const int cap = n ? b(0, 0).cap() : 0;
    higgs_field s(n, cap);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t col = 0; col < n; ++col) {
            for (std::size_t c = 0; c < n; ++c) {
                s(a, col, c) = derivative(b(c, col), a);
            }
        }
    }
    return f_structure{s, std::nullopt};
}

// B with B(0) = 0 and d_a B^c_b = C_ab^c; requires a closed structure.
inline end_field b_from_structure(const f_structure &f)
{
    const std::size_t n = f.dim();
    end_field b(n, f.order());
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t col = 0; col < n; ++col) {
            std::vector<series> family;
            for (std::size_t a = 0; a < n; ++a) {
                family.push_back(f.structure(a, col, c));
            }
            try {
                b(c, col) = primitive_of_closed_family(family);
            } catch (const not_closed_error &err) {
                throw integrability_error(std::string("structure is not closed: ") + err.what());
            }
        }
    }
    return b;
}

} // namespace flatcirc

#endif
