#ifndef FLATCIRC_ERROR_HPP
#define FLATCIRC_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace flatcirc
{

// Base of every error thrown by the library.
class error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class dimension_error : public error
{
public:
    using error::error;
};

class non_unit_error : public error
{
public:
    using error::error;
};

class insufficient_order_error : public error
{
public:
    using error::error;
};

class precondition_error : public error
{
public:
    using error::error;
};

class not_invertible_error : public error
{
public:
    using error::error;
};

class integrability_error : public error
{
public:
    using error::error;
};

class incomplete_family_error : public error
{
public:
    using error::error;
};

class hypothesis_error : public error
{
public:
    using error::error;
};

class model_error : public error
{
public:
    using error::error;
};

// Raised by formal integration when d f_b / dx^a != d f_a / dx^b.
class not_closed_error : public error
{
public:
    not_closed_error(std::string what, std::string monomial, std::size_t a, std::size_t b)
        : error(std::move(what)), monomial_(std::move(monomial)), a_(a), b_(b)
    {
    }

    const std::string &monomial() const noexcept { return monomial_; }
    std::pair<std::size_t, std::size_t> pair() const noexcept { return {a_, b_}; }

private:
    std::string monomial_;
    std::size_t a_;
    std::size_t b_;
};

class parse_error : public error
{
public:
    parse_error(const std::string &msg, std::size_t offset)
        : error(msg + " at offset " + std::to_string(offset)), offset_(offset)
    {
    }

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

} // namespace flatcirc

#endif
