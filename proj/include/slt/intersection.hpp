#pragma once

#include "slt/tubes.hpp"

namespace slt {

/// Straight piece of a tube: center moves linearly from x0 at t0 to x1 at t1.
struct TubeSegment {
  double t0 = 0.0;
  double t1 = 0.0;
  Coord x0{0.0, 0.0};
  Coord x1{0.0, 0.0};
  double radius = 0.0;
};

/// Measure of the intersection of two balls (d = 1: intervals, d = 2: discs)
/// whose centers are `distance` apart.
double ball_overlap(double distance, double r1, double r2, int dimension);

/// Spacetime volume of {both segments contain (x,t)} for t in [t_lo, t_hi].
///
/// d = 1 is integrated exactly through its kinks. d = 2 splits at the kinks
/// and uses adaptive Gauss-Kronrod on the smooth lens-area pieces. On a
/// torus (period > 0) d = 2 requires r1 + r2 < period / 2.
double segment_intersection_volume(const TubeSegment& a, const TubeSegment& b, int dimension, double period,
                                   double t_lo, double t_hi);

/// Sum of segment volumes over the merged vertex times inside [t_lo, t_hi].
double tube_intersection_volume(const Tube& a, const Tube& b, double t_lo, double t_hi);

struct IntersectionRecord {
  std::size_t first = 0;
  std::size_t second = 0;
  double volume = 0.0;
  double velocity_gap = 0.0;
  double bound = 0.0;
};

/// 4 r1 r2 / gap: volume of two straight d = 1 tubes on the line whose whole
/// crossing lies inside the window.
double straight_crossing_volume(double r1, double r2, double velocity_gap);

}  // namespace slt
