#pragma once

#include <gmpxx.h>

#include <stdexcept>
#include <string>

namespace anderson {

using Rational = mpq_class;
using BigInt = mpz_class;

// "p/q" with q omitted when it is 1.
inline std::string to_string(const Rational& q) {
  Rational c = q;
  c.canonicalize();
  if (c.get_den() == 1) return c.get_num().get_str();
  return c.get_num().get_str() + "/" + c.get_den().get_str();
}

inline Rational parse_rational(const std::string& s) {
  Rational q;
  if (q.set_str(s, 10) != 0) throw std::invalid_argument("bad rational: " + s);
  if (q.get_den() == 0) throw std::invalid_argument("zero denominator: " + s);
  q.canonicalize();
  return q;
}

inline BigInt factorial(unsigned n) {
  BigInt r;
  mpz_fac_ui(r.get_mpz_t(), n);
  return r;
}

inline BigInt double_factorial(long n) {
  BigInt r = 1;
  for (long k = n; k > 1; k -= 2) r *= k;
  return r;
}

inline BigInt ipow(long base, unsigned e) {
  BigInt r;
  mpz_ui_pow_ui(r.get_mpz_t(), static_cast<unsigned long>(base), e);
  return r;
}

}  // namespace anderson
