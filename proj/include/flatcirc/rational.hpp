#ifndef FLATCIRC_RATIONAL_HPP
#define FLATCIRC_RATIONAL_HPP

#include <string>
#include <string_view>

#include <gmpxx.h>

#include <flatcirc/error.hpp>

namespace flatcirc
{

using rational = mpq_class;

// Canonical "num/den" form, also for integers.
inline std::string to_fraction_string(const rational &q)
{
    return q.get_num().get_str() + "/" + q.get_den().get_str();
}

// Short form: "3", "-1/2".
inline std::string to_short_string(const rational &q)
{
    return q.get_str();
}

// Accepts "p", "-p", "p/q".
inline rational parse_rational(std::string_view text)
{
    std::string s(text);
    if (s.empty()) {
        throw parse_error("empty rational literal", 0);
    }
    rational q;
    if (q.set_str(s, 10) != 0) {
        throw parse_error("malformed rational literal '" + s + "'", 0);
    }
    if (q.get_den() == 0) {
        throw parse_error("zero denominator in '" + s + "'", 0);
    }
    q.canonicalize();
    return q;
}

} // namespace flatcirc

#endif
