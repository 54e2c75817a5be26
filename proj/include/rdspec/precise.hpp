#pragma once

// Multiprecision scalar used for true-orbit computations.
//
// Every generic routine in the library is written against the small set of
// helpers below so it can run on either `double` or `Precise`. Compound
// assignment is used throughout because it keeps the precision of the left
// operand; gmpxx expression templates would otherwise fall back to the
// default precision.

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <random>

namespace rdspec {

using Precise = mpf_class;

/// Bits of working precision.
using Bits = mp_bitcnt_t;

inline Precise make_precise(double v, Bits bits) { return Precise(v, bits); }

/// Value `v` carried at the precision of `like`.
template <class T>
inline T lift(double v, const T& like);

template <>
inline double lift<double>(double v, const double&) {
  return v;
}

template <>
inline Precise lift<Precise>(double v, const Precise& like) {
  return Precise(v, like.get_prec());
}

inline double to_double(double v) { return v; }
inline double to_double(const Precise& v) { return v.get_d(); }

inline double floor_of(double v) { return std::floor(v); }
inline Precise floor_of(const Precise& v) {
  Precise r(0, v.get_prec());
  mpf_floor(r.get_mpf_t(), v.get_mpf_t());
  return r;
}

inline double abs_of(double v) { return std::fabs(v); }
inline Precise abs_of(const Precise& v) {
  Precise r(v);
  mpf_abs(r.get_mpf_t(), v.get_mpf_t());
  return r;
}

inline bool is_negative(double v) { return v < 0.0; }
inline bool is_negative(const Precise& v) { return sgn(v) < 0; }

/// Natural log of |v| without underflow; -inf for 0.
inline double log_abs(const Precise& v) {
  if (sgn(v) == 0) return -INFINITY;
  long exponent = 0;
  const double mantissa = mpf_get_d_2exp(&exponent, v.get_mpf_t());
  return std::log(std::fabs(mantissa)) + static_cast<double>(exponent) * std::log(2.0);
}

/// Smallest integer >= v.
inline Precise ceil_of(const Precise& v) {
  Precise r(0, v.get_prec());
  mpf_ceil(r.get_mpf_t(), v.get_mpf_t());
  return r;
}

/// Uniform point of [0,1) carrying `bits` random bits.
inline Precise sample_uniform_precise(std::mt19937_64& rng, Bits bits) {
  const Bits words = (bits + 63) / 64;
  mpz_class z = 0;
  for (Bits i = 0; i < words; ++i) {
    const std::uint64_t word = rng();
    z <<= 64;
    z += mpz_class(static_cast<unsigned long>(word >> 32)) << 32;
    z += static_cast<unsigned long>(word & 0xffffffffULL);
  }
  Precise x(0, words * 64 + 64);
  mpf_set_z(x.get_mpf_t(), z.get_mpz_t());
  mpf_div_2exp(x.get_mpf_t(), x.get_mpf_t(), words * 64);
  return x;
}

/// Exact-as-possible value of num/den at the given precision.
inline Precise precise_ratio(long num, long den, Bits bits) {
  Precise x(num, bits);
  x /= den;
  return x;
}

}  // namespace rdspec
