#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace gamedyn {

// All exact arithmetic in this library runs on GMP rationals. Floats are
// derived views, never the source of truth.
using Rat = mpq_class;

inline double to_double(const Rat& q) { return q.get_d(); }

// Natural log of a positive rational, stable for values far outside the
// double range (numerator/denominator may have thousands of bits).
inline double log_rat(const Rat& q) {
  if (sgn(q) <= 0) throw std::domain_error("log_rat: nonpositive argument");
  long en = 0, ed = 0;
  double mn = mpz_get_d_2exp(&en, q.get_num().get_mpz_t());
  double md = mpz_get_d_2exp(&ed, q.get_den().get_mpz_t());
  return std::log(mn) - std::log(md) +
         (static_cast<double>(en) - static_cast<double>(ed)) * M_LN2;
}

// Parses "p/q", "p", or "-p/q" with arbitrary-precision integers.
inline Rat parse_rational(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("parse_rational: empty string");
  Rat q;
  if (q.set_str(s, 10) != 0)
    throw std::invalid_argument("parse_rational: cannot parse '" + s + "'");
  q.canonicalize();
  return q;
}

inline std::string to_string(const Rat& q) { return q.get_str(); }

// mpq_class(num, den) does not canonicalize; this always does.
inline Rat make_rat(long num, long den) {
  if (den == 0) throw std::invalid_argument("make_rat: zero denominator");
  Rat q(num, den);
  q.canonicalize();
  return q;
}

// Exact conversion: every finite double is a dyadic rational.
inline Rat rat_from_double(double d) {
  if (!std::isfinite(d)) throw std::domain_error("rat_from_double: non-finite");
  return Rat(d);
}

inline bool fits_int64(const mpz_class& z) {
  return z.fits_slong_p() || (mpz_sizeinbase(z.get_mpz_t(), 2) <= 62);
}

}  // namespace gamedyn
