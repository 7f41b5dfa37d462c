#include "slt/intersection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "slt/errors.hpp"

namespace slt {

namespace {

double lens_area(double dist, double r1, double r2) {
  if (dist >= r1 + r2) return 0.0;
  const double rmin = std::min(r1, r2);
  if (dist <= std::abs(r1 - r2)) return std::numbers::pi * rmin * rmin;
  const double c1 = std::clamp((dist * dist + r1 * r1 - r2 * r2) / (2.0 * dist * r1), -1.0, 1.0);
  const double c2 = std::clamp((dist * dist + r2 * r2 - r1 * r1) / (2.0 * dist * r2), -1.0, 1.0);
  const double k = (-dist + r1 + r2) * (dist + r1 - r2) * (dist - r1 + r2) * (dist + r1 + r2);
  return r1 * r1 * std::acos(c1) + r2 * r2 * std::acos(c2) - 0.5 * std::sqrt(std::max(0.0, k));
}

Coord center_at(const TubeSegment& s, double t) {
  if (s.t1 == s.t0) return s.x0;
  const double f = (t - s.t0) / (s.t1 - s.t0);
  return {s.x0[0] + f * (s.x1[0] - s.x0[0]), s.x0[1] + f * (s.x1[1] - s.x0[1])};
}

/// Image indices n with |delta + n P| < reach somewhere on [delta_a, delta_b].
std::pair<long, long> image_range(double delta_a, double delta_b, double reach, double period) {
  if (period <= 0.0) return {0, 0};
  const double lo = std::min(delta_a, delta_b);
  const double hi = std::max(delta_a, delta_b);
  return {static_cast<long>(std::floor((-reach - hi) / period)), static_cast<long>(std::ceil((reach - lo) / period))};
}

/// Exact integral over s in [0,1] of g(|D(s)|) with D linear and g the
/// piecewise-linear interval overlap.
double interval_overlap_integral(double d0, double d1, double r1, double r2) {
  const double rs = r1 + r2;
  const double rd = std::abs(r1 - r2);
  std::vector<double> cuts{0.0, 1.0};
  if (d1 != d0) {
    for (double k : {-rs, -rd, 0.0, rd, rs}) {
      const double s = (k - d0) / (d1 - d0);
      if (s > 0.0 && s < 1.0) cuts.push_back(s);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  auto g = [&](double s) { return ball_overlap(std::abs(d0 + s * (d1 - d0)), r1, r2, 1); };
  double total = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    total += 0.5 * (cuts[i] - cuts[i - 1]) * (g(cuts[i - 1]) + g(cuts[i]));
  }
  return total;
}

/// Integral over s in [0,1] of the lens area at |A + s B|.
double lens_integral(const Coord& a, const Coord& b, double r1, double r2) {
  const double aa = a[0] * a[0] + a[1] * a[1];
  const double ab = a[0] * b[0] + a[1] * b[1];
  const double bb = b[0] * b[0] + b[1] * b[1];
  auto dist = [&](double s) { return std::sqrt(std::max(0.0, aa + 2.0 * ab * s + bb * s * s)); };

  const double rs = r1 + r2;
  double smin = 0.0;
  if (bb > 0.0) smin = std::clamp(-ab / bb, 0.0, 1.0);
  if (dist(smin) >= rs && dist(0.0) >= rs && dist(1.0) >= rs) return 0.0;

  std::vector<double> cuts{0.0, 1.0};
  if (bb > 0.0) {
    for (double k : {std::abs(r1 - r2), rs}) {
      const double disc = ab * ab - bb * (aa - k * k);
      if (disc < 0.0) continue;
      for (double sgn : {-1.0, 1.0}) {
        const double s = (-ab + sgn * std::sqrt(disc)) / bb;
        if (s > 0.0 && s < 1.0) cuts.push_back(s);
      }
    }
  }
  std::sort(cuts.begin(), cuts.end());
  using boost::math::quadrature::gauss_kronrod;
  double total = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    if (cuts[i] <= cuts[i - 1]) continue;
    total += gauss_kronrod<double, 31>::integrate([&](double s) { return lens_area(dist(s), r1, r2); }, cuts[i - 1],
                                                  cuts[i], 15, 1e-13);
  }
  return total;
}

}  // namespace

double ball_overlap(double distance, double r1, double r2, int dimension) {
  distance = std::abs(distance);
  if (dimension == 1) return std::max(0.0, std::min(r1 + r2 - distance, 2.0 * std::min(r1, r2)));
  if (dimension == 2) return lens_area(distance, r1, r2);
  throw StructuralError("ball_overlap supports d = 1 and d = 2");
}

double segment_intersection_volume(const TubeSegment& a, const TubeSegment& b, int dimension, double period,
                                   double t_lo, double t_hi) {
  const double lo = std::max({a.t0, b.t0, t_lo});
  const double hi = std::min({a.t1, b.t1, t_hi});
  if (!(hi > lo)) return 0.0;
  const double r1 = a.radius;
  const double r2 = b.radius;
  const double span = hi - lo;
  const Coord ca = center_at(a, lo), cb = center_at(b, lo);
  const Coord ea = center_at(a, hi), eb = center_at(b, hi);
  Coord d0{ca[0] - cb[0], ca[1] - cb[1]};
  Coord d1{ea[0] - eb[0], ea[1] - eb[1]};
  if (period > 0.0) {
    for (int k = 0; k < dimension; ++k) {
      const double shift = period * std::floor(d0[k] / period + 0.5);
      d0[k] -= shift;
      d1[k] -= shift;
    }
  }

  if (dimension == 1) {
    if (period > 0.0 && (2.0 * r1 >= period || 2.0 * r2 >= period)) {
      return std::min(std::min(2.0 * r1, period), std::min(2.0 * r2, period)) * span;
    }
    const auto [n0, n1] = image_range(d0[0], d1[0], r1 + r2, period);
    double total = 0.0;
    for (long n = n0; n <= n1; ++n) {
      total += interval_overlap_integral(d0[0] + n * period, d1[0] + n * period, r1, r2);
    }
    return total * span;
  }
  if (dimension != 2) throw StructuralError("segment_intersection_volume supports d = 1 and d = 2");
  if (period > 0.0 && r1 + r2 >= 0.5 * period) {
    throw ConfigurationError("periodic disc overlap needs r1 + r2 < period / 2");
  }
  const auto [m0, m1] = image_range(d0[0], d1[0], r1 + r2, period);
  const auto [k0, k1] = image_range(d0[1], d1[1], r1 + r2, period);
  double total = 0.0;
  for (long m = m0; m <= m1; ++m) {
    for (long k = k0; k <= k1; ++k) {
      const Coord start{d0[0] + m * period, d0[1] + k * period};
      const Coord slope{d1[0] - d0[0], d1[1] - d0[1]};
      total += lens_integral(start, slope, r1, r2);
    }
  }
  return total * span;
}

double tube_intersection_volume(const Tube& a, const Tube& b, double t_lo, double t_hi) {
  if (a.dimension != b.dimension) throw StructuralError("tubes live in different dimensions");
  if (a.period != b.period) throw StructuralError("tubes live on different tori");
  if (a.times.empty() || b.times.empty()) return 0.0;
  const double lo = std::max({a.times.front(), b.times.front(), t_lo});
  const double hi = std::min({a.times.back(), b.times.back(), t_hi});
  if (!(hi > lo)) return 0.0;
  std::vector<double> knots{lo, hi};
  for (const auto* tube : {&a, &b}) {
    for (double t : tube->times) {
      if (t > lo && t < hi) knots.push_back(t);
    }
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  double total = 0.0;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    const double s0 = knots[i - 1], s1 = knots[i];
    const TubeSegment sa{s0, s1, a.position(s0), a.position(s1), a.radius};
    const TubeSegment sb{s0, s1, b.position(s0), b.position(s1), b.radius};
    total += segment_intersection_volume(sa, sb, a.dimension, a.period, s0, s1);
  }
  return total;
}

double straight_crossing_volume(double r1, double r2, double velocity_gap) {
  if (!(velocity_gap > 0.0)) throw PreconditionError("crossing volume needs a positive velocity gap");
  return 4.0 * r1 * r2 / velocity_gap;
}

}  // namespace slt
