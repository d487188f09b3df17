#include "decomp/rational.hpp"

#include <cmath>
#include <stdexcept>

namespace decomp {

std::string to_string(const Rational& q) {
  if (is_integer(q)) return num(q).str();
  return num(q).str() + "/" + den(q).str();
}

Rational parse_rational(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty rational");
  auto slash = text.find('/');
  if (slash != std::string::npos) {
    Rational n = parse_rational(text.substr(0, slash));
    Rational d = parse_rational(text.substr(slash + 1));
    if (d == 0) throw std::invalid_argument("zero denominator: " + text);
    return n / d;
  }
  auto dot = text.find('.');
  std::string digits = text;
  BigInt scale = 1;
  if (dot != std::string::npos) {
    std::string frac = text.substr(dot + 1);
    digits = text.substr(0, dot) + frac;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
  }
  if (digits.empty() || digits == "-" || digits == "+")
    throw std::invalid_argument("bad rational: " + text);
  for (std::size_t i = 0; i < digits.size(); ++i) {
    char c = digits[i];
    if (!(std::isdigit(static_cast<unsigned char>(c)) || (i == 0 && (c == '-' || c == '+'))))
      throw std::invalid_argument("bad rational: " + text);
  }
  bool negative = digits[0] == '-';
  if (digits[0] == '+' || negative) digits = digits.substr(1);
  // Leading zeros would be read as octal.
  auto nz = digits.find_first_not_of('0');
  digits = nz == std::string::npos ? "0" : digits.substr(nz);
  if (negative) digits = "-" + digits;
  return Rational(BigInt(digits), scale);
}

Rational pow_int(const Rational& q, long n) {
  if (n < 0) {
    if (q == 0) throw std::domain_error("zero to a negative power");
    return pow_int(1 / q, -n);
  }
  Rational result = 1;
  Rational b = q;
  unsigned long e = static_cast<unsigned long>(n);
  while (e) {
    if (e & 1u) result *= b;
    b *= b;
    e >>= 1u;
  }
  return result;
}

double to_double(const Rational& q) { return q.convert_to<double>(); }

Rational from_double(double v) {
  if (!std::isfinite(v)) throw std::domain_error("non-finite double");
  int exp2 = 0;
  double mant = std::frexp(v, &exp2);
  // mant * 2^53 is an exact integer.
  auto m = static_cast<long long>(std::ldexp(mant, 53));
  exp2 -= 53;
  Rational r{BigInt(m)};
  if (exp2 >= 0) return r * pow_int(Rational(2), exp2);
  return r / pow_int(Rational(2), -exp2);
}

namespace {

bool exact_int_root(const BigInt& v, long root, BigInt& out) {
  if (v < 0) return false;
  if (v == 0 || v == 1) {
    out = v;
    return true;
  }
  double guess = std::pow(v.convert_to<double>(), 1.0 / static_cast<double>(root));
  if (!std::isfinite(guess)) return false;
  auto g = static_cast<long long>(std::llround(guess));
  for (long long c = std::max<long long>(0, g - 2); c <= g + 2; ++c) {
    BigInt p = boost::multiprecision::pow(BigInt(c), static_cast<unsigned>(root));
    if (p == v) {
      out = c;
      return true;
    }
  }
  return false;
}

}  // namespace

bool exact_root(const Rational& q, long root, Rational& out) {
  if (root <= 0) return false;
  if (root == 1) {
    out = q;
    return true;
  }
  if (q < 0) return false;
  BigInt n, d;
  if (!exact_int_root(num(q), root, n) || !exact_int_root(den(q), root, d)) return false;
  out = Rational(n, d);
  return true;
}

}  // namespace decomp
