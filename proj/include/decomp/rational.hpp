#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>

namespace decomp {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline bool is_integer(const Rational& q) { return boost::multiprecision::denominator(q) == 1; }

inline BigInt num(const Rational& q) { return boost::multiprecision::numerator(q); }
inline BigInt den(const Rational& q) { return boost::multiprecision::denominator(q); }

/// "3", "-5/2".
std::string to_string(const Rational& q);

/// Parses "3", "-5/2", "0.25" exactly.
Rational parse_rational(const std::string& text);

/// q^n for integer n (n < 0 requires q != 0).
Rational pow_int(const Rational& q, long n);

/// Nearest double.
double to_double(const Rational& q);

/// Exact rational value of a finite double.
Rational from_double(double v);

/// Exact p-th root of q when it exists (q >= 0 for even roots).
bool exact_root(const Rational& q, long root, Rational& out);

}  // namespace decomp
