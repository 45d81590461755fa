#ifndef FLATCIRC_LINALG_HPP
#define FLATCIRC_LINALG_HPP

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include <flatcirc/error.hpp>
#include <flatcirc/rational.hpp>

namespace flatcirc
{

// Dense row-major matrix over Q; small sizes only.
class rational_matrix
{
public:
    rational_matrix() = default;
    rational_matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

    static rational_matrix identity(std::size_t n)
    {
        rational_matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            m(i, i) = 1;
        }
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    rational &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const rational &operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    bool is_zero() const
    {
        for (const auto &x : data_) {
            if (x != 0) {
                return false;
            }
        }
        return true;
    }

    friend rational_matrix operator*(const rational_matrix &a, const rational_matrix &b)
    {
        if (a.cols_ != b.rows_) {
            throw dimension_error("matrix product shape mismatch");
        }
        rational_matrix m(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i) {
            for (std::size_t k = 0; k < a.cols_; ++k) {
                if (a(i, k) == 0) {
                    continue;
                }
                for (std::size_t j = 0; j < b.cols_; ++j) {
                    m(i, j) += a(i, k) * b(k, j);
                }
            }
        }
        return m;
    }

    friend rational_matrix operator-(const rational_matrix &a, const rational_matrix &b)
    {
        rational_matrix m = a;
        for (std::size_t i = 0; i < m.data_.size(); ++i) {
            m.data_[i] -= b.data_[i];
        }
        return m;
    }

    friend rational_matrix operator+(const rational_matrix &a, const rational_matrix &b)
    {
        rational_matrix m = a;
        for (std::size_t i = 0; i < m.data_.size(); ++i) {
            m.data_[i] += b.data_[i];
        }
        return m;
    }

    friend bool operator==(const rational_matrix &, const rational_matrix &) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<rational> data_;
};

namespace detail
{

// Gauss-Jordan on [m | rhs]; returns pivot columns.
inline std::vector<std::size_t> row_reduce(rational_matrix &m, rational_matrix *rhs)
{
    std::vector<std::size_t> pivots;
    std::size_t row = 0;
    for (std::size_t col = 0; col < m.cols() && row < m.rows(); ++col) {
        std::size_t piv = row;
        while (piv < m.rows() && m(piv, col) == 0) {
            ++piv;
        }
        if (piv == m.rows()) {
            continue;
        }
        if (piv != row) {
            for (std::size_t j = 0; j < m.cols(); ++j) {
                std::swap(m(piv, j), m(row, j));
            }
            if (rhs) {
                for (std::size_t j = 0; j < rhs->cols(); ++j) {
                    std::swap((*rhs)(piv, j), (*rhs)(row, j));
                }
            }
        }
        const rational inv = 1 / m(row, col);
        for (std::size_t j = 0; j < m.cols(); ++j) {
            m(row, j) *= inv;
        }
        if (rhs) {
            for (std::size_t j = 0; j < rhs->cols(); ++j) {
                (*rhs)(row, j) *= inv;
            }
        }
        for (std::size_t r = 0; r < m.rows(); ++r) {
            if (r == row || m(r, col) == 0) {
                continue;
            }
            const rational f = m(r, col);
            for (std::size_t j = 0; j < m.cols(); ++j) {
                m(r, j) -= f * m(row, j);
            }
            if (rhs) {
                for (std::size_t j = 0; j < rhs->cols(); ++j) {
                    (*rhs)(r, j) -= f * (*rhs)(row, j);
                }
            }
        }
        pivots.push_back(col);
        ++row;
    }
    return pivots;
}

} // namespace detail

inline std::size_t rank(rational_matrix m)
{
    return detail::row_reduce(m, nullptr).size();
}

inline rational determinant(rational_matrix m)
{
    if (m.rows() != m.cols()) {
        throw dimension_error("determinant of a non-square matrix");
    }
    const std::size_t n = m.rows();
    rational det = 1;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        while (piv < n && m(piv, col) == 0) {
            ++piv;
        }
        if (piv == n) {
            return 0;
        }
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(m(piv, j), m(col, j));
            }
            det = -det;
        }
        det *= m(col, col);
        for (std::size_t r = col + 1; r < n; ++r) {
            if (m(r, col) == 0) {
                continue;
            }
            const rational f = m(r, col) / m(col, col);
            for (std::size_t j = col; j < n; ++j) {
                m(r, j) -= f * m(col, j);
            }
        }
    }
    return det;
}

inline std::optional<rational_matrix> inverse(const rational_matrix &m)
{
    if (m.rows() != m.cols()) {
        throw dimension_error("inverse of a non-square matrix");
    }
    rational_matrix work = m;
    rational_matrix rhs = rational_matrix::identity(m.rows());
    if (detail::row_reduce(work, &rhs).size() != m.rows()) {
        return std::nullopt;
    }
    return rhs;
}

// Unique solution of m x = b (m may be tall). nullopt if inconsistent or underdetermined.
inline std::optional<std::vector<rational>> solve_unique(const rational_matrix &m, const std::vector<rational> &b)
{
    if (b.size() != m.rows()) {
        throw dimension_error("right-hand side length mismatch");
    }
    rational_matrix work = m;
    rational_matrix rhs(m.rows(), 1);
    for (std::size_t i = 0; i < b.size(); ++i) {
        rhs(i, 0) = b[i];
    }
    auto pivots = detail::row_reduce(work, &rhs);
    if (pivots.size() != m.cols()) {
        return std::nullopt;
    }
    for (std::size_t r = pivots.size(); r < m.rows(); ++r) {
        if (rhs(r, 0) != 0) {
            return std::nullopt;
        }
    }
    std::vector<rational> x(m.cols());
    for (std::size_t i = 0; i < pivots.size(); ++i) {
        x[pivots[i]] = rhs(i, 0);
    }
    return x;
}

} // namespace flatcirc

#endif
