#pragma once

#include <cstdint>

#include <boost/multiprecision/cpp_int.hpp>

namespace slt {

/// Exact rational used for path weights and Markov kernels.
using Rational = boost::multiprecision::cpp_rational;

/// Fixed-point numerator over a shared power-of-two denominator.
using Numerator = std::int64_t;

inline constexpr int kDefaultDenominatorLog2 = 40;

inline Rational fixed_to_rational(Numerator numerator, Numerator denominator) {
  return Rational(numerator) / Rational(denominator);
}

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

}  // namespace slt
