#ifndef FLATCIRC_PERMUTOFAN_HPP
#define FLATCIRC_PERMUTOFAN_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <flatcirc/error.hpp>
#include <flatcirc/linalg.hpp>
#include <flatcirc/rational.hpp>

namespace flatcirc
{

using block = std::vector<int>;

// Totally ordered disjoint non-empty blocks covering {1..n}.
class ordered_partition
{
public:
    ordered_partition() = default;

    ordered_partition(int n, std::vector<block> blocks) : n_(n), blocks_(std::move(blocks))
    {
        std::vector<bool> seen(static_cast<std::size_t>(n) + 1, false);
        int count = 0;
        for (auto &b : blocks_) {
            if (b.empty()) {
                throw precondition_error("empty block");
            }
            std::sort(b.begin(), b.end());
            for (int x : b) {
                if (x < 1 || x > n || seen[static_cast<std::size_t>(x)]) {
                    throw precondition_error("blocks must partition {1.." + std::to_string(n) + "}");
                }
                seen[static_cast<std::size_t>(x)] = true;
                ++count;
            }
        }
        if (count != n) {
            throw precondition_error("blocks must partition {1.." + std::to_string(n) + "}");
        }
    }

    static ordered_partition trivial(int n)
    {
        block b;
        for (int i = 1; i <= n; ++i) {
            b.push_back(i);
        }
        return ordered_partition(n, {b});
    }

    int n() const noexcept { return n_; }
    const std::vector<block> &blocks() const noexcept { return blocks_; }
    std::size_t size() const noexcept { return blocks_.size(); }

    // Index of the block containing x.
    std::size_t block_of(int x) const
    {
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            if (std::binary_search(blocks_[i].begin(), blocks_[i].end(), x)) {
                return i;
            }
        }
        throw precondition_error("element outside the partitioned set");
    }

    friend auto operator<=>(const ordered_partition &a, const ordered_partition &b)
    {
        if (auto c = a.n_ <=> b.n_; c != 0) {
            return c;
        }
        if (auto c = a.blocks_.size() <=> b.blocks_.size(); c != 0) {
            return c;
        }
        return a.blocks_ <=> b.blocks_;
    }
    friend bool operator==(const ordered_partition &, const ordered_partition &) = default;

private:
    int n_ = 0;
    std::vector<block> blocks_;
};

inline std::string to_string(const ordered_partition &t)
{
    std::string out;
    for (std::size_t i = 0; i < t.blocks().size(); ++i) {
        if (i) {
            out += '|';
        }
        for (std::size_t j = 0; j < t.blocks()[i].size(); ++j) {
            if (j) {
                out += ',';
            }
            out += std::to_string(t.blocks()[i][j]);
        }
    }
    return out;
}

inline ordered_partition parse_partition(const std::string &text, int n)
{
    std::vector<block> blocks;
    std::stringstream outer(text);
    std::string part;
    while (std::getline(outer, part, '|')) {
        block b;
        std::stringstream inner(part);
        std::string item;
        while (std::getline(inner, item, ',')) {
            try {
                std::size_t used = 0;
                b.push_back(std::stoi(item, &used));
                if (used != item.size()) {
                    throw parse_error("bad partition element '" + item + "'", 0);
                }
            } catch (const std::logic_error &) {
                throw parse_error("bad partition element '" + item + "'", 0);
            }
        }
        blocks.push_back(std::move(b));
    }
    return ordered_partition(n, std::move(blocks));
}

// All ordered set partitions of {1..n}, sorted by block count then blocks.
inline std::vector<ordered_partition> enumerate_partitions(int n)
{
    if (n < 1) {
        throw precondition_error("n must be at least 1");
    }
    std::vector<ordered_partition> out;
    std::vector<block> current;
    auto rec = [&](auto &&self, unsigned remaining) -> void {
        if (remaining == 0) {
            out.emplace_back(n, current);
            return;
        }
        // Every non-empty submask of the remaining elements can be the next block.
        for (unsigned sub = remaining; sub; sub = (sub - 1) & remaining) {
            block b;
            for (int i = 0; i < n; ++i) {
                if (sub & (1u << i)) {
                    b.push_back(i + 1);
                }
            }
            current.push_back(std::move(b));
            self(self, remaining & ~sub);
            current.pop_back();
        }
    };
    rec(rec, (1u << n) - 1);
    std::sort(out.begin(), out.end());
    return out;
}

// (sigma_1, sigma_2) with sigma_1 the union of the first a blocks, a = 1..N.
inline std::vector<std::pair<block, block>> good_family(const ordered_partition &t)
{
    std::vector<std::pair<block, block>> out;
    for (std::size_t a = 1; a < t.size(); ++a) {
        block first, second;
        for (std::size_t i = 0; i < t.size(); ++i) {
            auto &dst = i < a ? first : second;
            dst.insert(dst.end(), t.blocks()[i].begin(), t.blocks()[i].end());
        }
        std::sort(first.begin(), first.end());
        std::sort(second.begin(), second.end());
        out.emplace_back(std::move(first), std::move(second));
    }
    return out;
}

// Element of Z^B / Z stored with last entry zero.
template <class T = std::int64_t>
struct lattice_vector {
    std::vector<T> entries;

    static lattice_vector normalized(std::vector<T> v)
    {
        const T last = v.back();
        for (auto &x : v) {
            x -= last;
        }
        return {std::move(v)};
    }

    static lattice_vector indicator(int n, const block &beta)
    {
        std::vector<T> v(static_cast<std::size_t>(n), T(0));
        for (int x : beta) {
            v[static_cast<std::size_t>(x - 1)] = T(1);
        }
        return normalized(std::move(v));
    }

    friend auto operator<=>(const lattice_vector &, const lattice_vector &) = default;
};

template <class T = std::int64_t>
struct cone {
    std::vector<lattice_vector<T>> generators;
    ordered_partition label;
};

template <class T = std::int64_t>
cone<T> cone_of_partition(const ordered_partition &t)
{
    cone<T> c{{}, t};
    for (const auto &[first, second] : good_family(t)) {
        c.generators.push_back(lattice_vector<T>::indicator(t.n(), first));
    }
    return c;
}

// v lies in the relative interior of C(t) iff v is constant on blocks and
// strictly decreasing across consecutive blocks.
template <class T>
bool in_relative_interior(const std::vector<T> &v, const ordered_partition &t)
{
    T prev{};
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto &b = t.blocks()[i];
        const T value = v[static_cast<std::size_t>(b.front() - 1)];
        for (int x : b) {
            if (v[static_cast<std::size_t>(x - 1)] != value) {
                return false;
            }
        }
        if (i > 0 && !(value < prev)) {
            return false;
        }
        prev = value;
    }
    return true;
}

// Level sets of v ordered by decreasing value.
template <class T>
ordered_partition locate_point(const std::vector<T> &v, int n)
{
    if (static_cast<int>(v.size()) != n) {
        throw dimension_error("point has wrong length");
    }
    std::map<T, block, std::greater<T>> levels;
    for (int i = 0; i < n; ++i) {
        levels[v[static_cast<std::size_t>(i)]].push_back(i + 1);
    }
    std::vector<block> blocks;
    for (auto &[value, b] : levels) {
        blocks.push_back(std::move(b));
    }
    return ordered_partition(n, std::move(blocks));
}

// tau1 followed by tau2 shifted by m.
inline ordered_partition concat_product(const ordered_partition &t1, const ordered_partition &t2)
{
    auto blocks = t1.blocks();
    for (const auto &b : t2.blocks()) {
        block s;
        for (int x : b) {
            s.push_back(x + t1.n());
        }
        blocks.push_back(std::move(s));
    }
    return ordered_partition(t1.n() + t2.n(), std::move(blocks));
}

// perm[i - 1] is the image of i.
inline ordered_partition sn_action(const std::vector<int> &perm, const ordered_partition &t)
{
    if (static_cast<int>(perm.size()) != t.n()) {
        throw dimension_error("permutation size does not match the partition");
    }
    std::vector<bool> seen(perm.size() + 1, false);
    for (int p : perm) {
        if (p < 1 || p > t.n() || seen[static_cast<std::size_t>(p)]) {
            throw precondition_error("not a permutation");
        }
        seen[static_cast<std::size_t>(p)] = true;
    }
    std::vector<block> blocks;
    for (const auto &b : t.blocks()) {
        block s;
        for (int x : b) {
            s.push_back(perm[static_cast<std::size_t>(x - 1)]);
        }
        blocks.push_back(std::move(s));
    }
    return ordered_partition(t.n(), std::move(blocks));
}

// pi1 x pi2 embedded in S_{m+n}.
inline std::vector<int> embed_permutations(const std::vector<int> &p1, const std::vector<int> &p2)
{
    auto out = p1;
    const int m = static_cast<int>(p1.size());
    for (int x : p2) {
        out.push_back(x + m);
    }
    return out;
}

// True if coarse is obtained from fine by merging runs of consecutive blocks.
inline bool is_coarsening(const ordered_partition &coarse, const ordered_partition &fine)
{
    if (coarse.n() != fine.n()) {
        return false;
    }
    std::size_t j = 0;
    for (const auto &b : coarse.blocks()) {
        block merged;
        while (j < fine.size() && merged.size() < b.size()) {
            merged.insert(merged.end(), fine.blocks()[j].begin(), fine.blocks()[j].end());
            ++j;
        }
        std::sort(merged.begin(), merged.end());
        if (merged != b) {
            return false;
        }
    }
    return j == fine.size();
}

inline int max_fan_dimension()
{
    if (const char *env = std::getenv("FLATCIRC_MAX_N")) {
        try {
            return std::stoi(env);
        } catch (const std::logic_error &) {
            throw precondition_error("FLATCIRC_MAX_N is not an integer");
        }
    }
    return 6;
}

struct fan_report {
    int n = 0;
    std::size_t cone_count = 0;
    std::size_t ray_count = 0;
    std::size_t max_cone_count = 0;
    bool unimodular = false;
    bool complete = false;
    bool face_closed = false;
    bool membership_consistent = false;
    std::size_t sample_points = 0;
};

template <class T = std::int64_t>
fan_report verify_fan(int n)
{
    if (n < 1 || n > max_fan_dimension()) {
        throw precondition_error("n must lie in 1.." + std::to_string(max_fan_dimension()));
    }
    const auto parts = enumerate_partitions(n);
    fan_report r;
    r.n = n;
    r.cone_count = parts.size();

    std::set<lattice_vector<T>> rays;
    std::set<std::vector<lattice_vector<T>>> cone_keys;
    std::vector<cone<T>> cones;
    for (const auto &t : parts) {
        auto c = cone_of_partition<T>(t);
        for (const auto &g : c.generators) {
            rays.insert(g);
        }
        auto key = c.generators;
        std::sort(key.begin(), key.end());
        cone_keys.insert(key);
        cones.push_back(std::move(c));
    }
    r.ray_count = rays.size();

    r.unimodular = true;
    for (const auto &c : cones) {
        if (static_cast<int>(c.generators.size()) != n - 1) {
            continue;
        }
        ++r.max_cone_count;
        rational_matrix m(static_cast<std::size_t>(n - 1), static_cast<std::size_t>(n - 1));
        for (std::size_t i = 0; i < c.generators.size(); ++i) {
            for (std::size_t j = 0; j + 1 < static_cast<std::size_t>(n); ++j) {
                m(i, j) = rational(static_cast<long>(c.generators[i].entries[j]));
            }
        }
        const auto d = determinant(m);
        if (d != 1 && d != -1) {
            r.unimodular = false;
        }
    }

    // Every face of a cone, i.e. every subset of its generators, spans a cone of the fan.
    r.face_closed = true;
    for (const auto &c : cones) {
        const std::size_t k = c.generators.size();
        for (unsigned mask = 0; mask < (1u << k); ++mask) {
            std::vector<lattice_vector<T>> face;
            for (std::size_t i = 0; i < k; ++i) {
                if (mask & (1u << i)) {
                    face.push_back(c.generators[i]);
                }
            }
            std::sort(face.begin(), face.end());
            if (!cone_keys.count(face)) {
                r.face_closed = false;
            }
        }
    }

    // Nonnegative combinations of generators locate to coarsenings of the label,
    // and strictly positive ones to the label itself.
    r.membership_consistent = true;
    for (const auto &c : cones) {
        const std::size_t k = c.generators.size();
        std::vector<int> w(k, 0);
        auto visit = [&](auto &&self, std::size_t i) -> void {
            if (i == k) {
                std::vector<T> v(static_cast<std::size_t>(n), T(0));
                bool positive = true;
                for (std::size_t g = 0; g < k; ++g) {
                    positive = positive && w[g] > 0;
                    for (std::size_t j = 0; j < v.size(); ++j) {
                        v[j] += T(w[g]) * c.generators[g].entries[j];
                    }
                }
                const auto where = locate_point(v, n);
                if (!is_coarsening(where, c.label) || (positive && !(where == c.label))) {
                    r.membership_consistent = false;
                }
                return;
            }
            for (int x = 0; x <= 2; ++x) {
                w[i] = x;
                self(self, i + 1);
            }
        };
        visit(visit, 0);
    }

    // Grid points with last coordinate zero each lie in exactly one relative interior.
    r.complete = true;
    std::vector<T> v(static_cast<std::size_t>(n), T(0));
    auto grid = [&](auto &&self, std::size_t i) -> void {
        if (i + 1 >= static_cast<std::size_t>(n)) {
            ++r.sample_points;
            std::size_t hits = 0;
            for (const auto &t : parts) {
                hits += in_relative_interior(v, t) ? 1 : 0;
            }
            if (hits != 1 || !in_relative_interior(v, locate_point(v, n))) {
                r.complete = false;
            }
            return;
        }
        for (int x = -1; x <= 2; ++x) {
            v[i] = T(x);
            self(self, i + 1);
        }
    };
    grid(grid, 0);
    return r;
}

} // namespace flatcirc

#endif
