#ifndef POISSHEAF_RATIONAL_HPP
#define POISSHEAF_RATIONAL_HPP

#include <boost/multiprecision/cpp_int.hpp>

#include <sstream>
#include <stdexcept>
#include <string>

namespace poissheaf {

// Exact rational scalar used for all symbolic coefficients and exact
// point coordinates. Floats appear only at evaluation time.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline std::string to_string(const Rational& r) {
    std::ostringstream os;
    os << r;
    return os.str();
}

inline double to_double(const Rational& r) {
    return r.convert_to<double>();
}

inline bool is_integer(const Rational& r) {
    return boost::multiprecision::denominator(r) == 1;
}

/// Parses "7", "-3/4" style literals.
inline Rational parse_rational(const std::string& text) {
    try {
        return Rational(text);
    } catch (const std::exception&) {
        throw std::invalid_argument("not a rational literal: '" + text + "'");
    }
}

}  // namespace poissheaf

#endif
