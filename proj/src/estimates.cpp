#include "slt/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss.hpp>

#include "slt/errors.hpp"

namespace slt {

namespace {

double norm(const Coord& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1]); }

double bump(double s) { return s < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0; }

void require_same_grid(const WaveField& u, const WaveField& v) {
  if (!(u.grid() == v.grid())) throw StructuralError("fields must share one grid");
}

void require_separation(double n_freq, double m_freq) {
  if (!(m_freq > 0.0) || m_freq > n_freq / 4.0) {
    throw PreconditionError("frequency separation needs 0 < M <= N/4 (M = " + std::to_string(m_freq) +
                            ", N = " + std::to_string(n_freq) + ")");
  }
}

double determinant(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  double det = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t pivot = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[pivot][c])) pivot = r;
    }
    if (a[pivot][c] == 0.0) return 0.0;
    if (pivot != c) {
      std::swap(a[pivot], a[c]);
      det = -det;
    }
    det *= a[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  return det;
}

}  // namespace

std::vector<double> FrequencyCovering::weights(const Coord& xi) const {
  std::vector<double> w(centers.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    w[i] = bump(norm({xi[0] - centers[i][0], xi[1] - centers[i][1]}) / radius);
    total += w[i];
  }
  if (total > 0.0) {
    for (double& x : w) x /= total;
  }
  return w;
}

FrequencyCovering annulus_covering(int dimension, double speed) {
  if (dimension != 1 && dimension != 2) throw StructuralError("annulus covering supports d = 1 and d = 2");
  if (!(speed >= 0.4)) throw PreconditionError("annulus covering needs V >= 0.4 to stay inside A*_1");
  FrequencyCovering c;
  c.dimension = dimension;
  c.speed = speed;
  c.radius = 1.0 / (10.0 * speed);
  if (dimension == 1) {
    const int n = static_cast<int>(std::ceil(1.5 / (1.5 * c.radius))) + 1;
    for (int sign : {-1, 1}) {
      for (int j = 0; j < n; ++j) c.centers.push_back({sign * (0.5 + 1.5 * j / (n - 1)), 0.0});
    }
    return c;
  }
  const double step = 0.95 * std::numbers::sqrt2 * 0.75 * c.radius;
  const int rings = static_cast<int>(std::ceil(1.5 / step)) + 1;
  for (int j = 0; j < rings; ++j) {
    const double r = 0.5 + 1.5 * j / (rings - 1);
    const int around = static_cast<int>(std::ceil(2.0 * std::numbers::pi * r / step));
    for (int k = 0; k < around; ++k) {
      const double a = 2.0 * std::numbers::pi * k / around;
      c.centers.push_back({r * std::cos(a), r * std::sin(a)});
    }
  }
  return c;
}

CoveringCheck check_covering(const FrequencyCovering& c, int samples_per_axis) {
  CoveringCheck out;
  for (const auto& x : c.centers) {
    const double r = norm(x);
    if (r - c.radius < 0.25 || r + c.radius > 4.0) out.contained = false;
  }
  const int n = samples_per_axis;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < (c.dimension == 2 ? n : 1); ++j) {
      const Coord xi{-2.0 + 4.0 * (i + 0.5) / n, c.dimension == 2 ? -2.0 + 4.0 * (j + 0.5) / n : 0.0};
      const double r = norm(xi);
      if (r < 0.5 || r > 2.0) continue;
      ++out.samples;
      double gap = std::numeric_limits<double>::infinity();
      for (const auto& x : c.centers) gap = std::min(gap, norm({xi[0] - x[0], xi[1] - x[1]}));
      out.max_gap = std::max(out.max_gap, gap);
      if (!(gap < c.radius)) out.covers = false;
      const auto w = c.weights(xi);
      double total = 0.0;
      for (double x : w) total += x;
      out.max_partition_error = std::max(out.max_partition_error, std::abs(total - 1.0));
    }
  }
  out.partition_of_unity = out.max_partition_error <= 1e-12;
  return out;
}

std::vector<CoveringPiece> split_by_covering(const WaveField& u, const FrequencyCovering& c, double scale) {
  const Grid& g = u.grid();
  const auto spec = u.spectrum();
  std::map<std::size_t, std::vector<Complex>> pieces;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    if (spec[k] == Complex(0.0, 0.0)) continue;
    const Coord kv = g.wavevector(k);
    const auto w = c.weights({kv[0] / scale, kv[1] / scale});
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] == 0.0) continue;
      auto& p = pieces[i];
      if (p.empty()) p.assign(spec.size(), Complex(0.0, 0.0));
      p[k] = spec[k] * w[i];
    }
  }
  std::vector<CoveringPiece> out;
  for (auto& [i, coeffs] : pieces) {
    const FrequencyWindow win{{scale * c.centers[i][0], scale * c.centers[i][1]}, scale * c.radius};
    out.push_back({i, WaveField::from_spectrum(g, std::move(coeffs), win, u.time())});
  }
  return out;
}

void require_annulus(const FrequencyWindow& w, double scale, int dimension) {
  const double r = dimension == 2 ? norm(w.center) : std::abs(w.center[0]);
  if (r - w.radius < 0.5 * scale - 1e-12 || r + w.radius > 2.0 * scale + 1e-12) {
    throw PreconditionError("frequency window is not inside the annulus at scale " + std::to_string(scale));
  }
}

TimeQuadrature time_quadrature(double time_range, int panels) {
  if (panels < 1) throw ConfigurationError("time quadrature needs at least one panel");
  using rule = boost::math::quadrature::gauss<double, 8>;
  const auto& x = rule::abscissa();
  const auto& w = rule::weights();
  TimeQuadrature q;
  const double width = 2.0 * time_range / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = -time_range + (p + 0.5) * width;
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (double sgn : {-1.0, 1.0}) {
        if (x[i] == 0.0 && sgn > 0.0) continue;
        q.nodes.push_back(mid + sgn * 0.5 * width * x[i]);
        q.weights.push_back(0.5 * width * w[i]);
      }
    }
  }
  return q;
}

BilinearResult bilinear_ratio(const WaveField& u, const WaveField& v, double n_freq, double m_freq,
                              double time_range, const BilinearOptions& options) {
  require_same_grid(u, v);
  require_separation(n_freq, m_freq);
  const int d = u.grid().dimension();
  require_annulus(u.window(), n_freq, d);
  require_annulus(v.window(), m_freq, d);
  BilinearResult r;
  const double mu = mass(u), mv = mass(v);
  r.scale = std::pow(m_freq, 0.5 * (d - 1)) / std::sqrt(n_freq) * std::sqrt(mu) * std::sqrt(mv);
  if (mu == 0.0 || mv == 0.0) return r;
  const auto q = time_quadrature(time_range, options.panels);
  const double h = u.grid().cell_volume();
  double total = 0.0;
  for (std::size_t k = 0; k < q.nodes.size(); ++k) {
    const auto iu = intensity(propagate(u, q.nodes[k] - u.time()));
    const auto iv = intensity(propagate(v, q.nodes[k] - v.time()));
    double s = 0.0;
    for (std::size_t i = 0; i < iu.size(); ++i) s += iu[i] * iv[i];
    total += q.weights[k] * h * s;
  }
  r.norm = std::sqrt(total);
  r.ratio = r.norm / r.scale;
  return r;
}

TubeDecomposition decompose_with_retry(const WaveField& u, double tau, double time_range, double dilation,
                                       int max_halvings, double* tau_used) {
  for (int attempt = 0;; ++attempt) {
    try {
      auto dec = scaled_decompose(u, u.window().center, u.window().radius, tau, time_range, dilation);
      if (tau_used) *tau_used = tau;
      return dec;
    } catch (const InfeasibleFlowError&) {
      if (attempt >= max_halvings) throw;
      tau *= 0.5;
    }
  }
}

double tube_pair_sum(const TubeDecomposition& a, const TubeDecomposition& b, double t_lo, double t_hi,
                     std::size_t* pairs) {
  if (a.dimension() != b.dimension()) throw StructuralError("decompositions live in different dimensions");
  if (a.frame().period != b.frame().period) throw StructuralError("decompositions live on different tori");
  const auto sa = weighted_segments(a);
  const auto sb = weighted_segments(b);
  const double da = static_cast<double>(a.denominator());
  const double db = static_cast<double>(b.denominator());
  std::size_t count = 0;
  double total = 0.0;
  for (const auto& x : sa) {
    if (x.t1 <= t_lo || x.t0 >= t_hi) continue;
    for (const auto& y : sb) {
      if (y.t1 <= x.t0 || y.t0 >= x.t1) continue;
      ++count;
      const double vol = segment_intersection_volume({x.t0, x.t1, x.x0, x.x1, x.radius},
                                                     {y.t0, y.t1, y.x0, y.x1, y.radius}, a.dimension(),
                                                     a.frame().period, t_lo, t_hi);
      total += (static_cast<double>(x.mass) / da) * (static_cast<double>(y.mass) / db) * vol;
    }
  }
  if (pairs) *pairs = count;
  return total;
}

TubeSideReport bilinear_via_tubes(const WaveField& u, const WaveField& v, double n_freq, double m_freq,
                                  double time_range, const TubeSideOptions& options) {
  require_same_grid(u, v);
  require_separation(n_freq, m_freq);
  const int d = u.grid().dimension();
  require_annulus(u.window(), n_freq, d);
  require_annulus(v.window(), m_freq, d);
  TubeSideReport rep;
  const double mu = mass(u), mv = mass(v);
  if (mu == 0.0 || mv == 0.0) return rep;

  auto tau_for = [&](const WaveField& w) {
    if (options.tau > 0.0) return options.tau;
    const double scale = admissible_scale(w.grid(), w.window().radius);
    const auto moved = galilean_rescale(w, w.window().center, scale, RescaleDirection::Forward);
    const MuKernel kernel(moved.grid(), options.dilation);
    const std::vector<WaveField> ensemble{moved};
    return calibrate_tau(ensemble, kernel, options.calibration).tau;
  };
  const auto dec_u = decompose_with_retry(u, tau_for(u), time_range, options.dilation, options.max_halvings, &rep.tau_u);
  const auto dec_v = decompose_with_retry(v, tau_for(v), time_range, options.dilation, options.max_halvings, &rep.tau_v);

  const Grid& g = u.grid();
  std::vector<Coord> xs(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) xs[i] = g.point(i);
  const auto q = time_quadrature(time_range, options.panels);
  const double h = g.cell_volume();
  const double den_u = static_cast<double>(dec_u.denominator());
  const double den_v = static_cast<double>(dec_v.denominator());

  std::vector<std::vector<double>> iu(q.nodes.size()), iv(q.nodes.size());
  double peak_u = 0.0, peak_v = 0.0;
  for (std::size_t k = 0; k < q.nodes.size(); ++k) {
    iu[k] = intensity(propagate(u, q.nodes[k] - u.time()));
    iv[k] = intensity(propagate(v, q.nodes[k] - v.time()));
    peak_u = std::max(peak_u, *std::max_element(iu[k].begin(), iu[k].end()));
    peak_v = std::max(peak_v, *std::max_element(iv[k].begin(), iv[k].end()));
  }
  for (std::size_t k = 0; k < q.nodes.size(); ++k) {
    const auto fu = evaluate_cover_slice(dec_u, q.nodes[k], xs);
    const auto fv = evaluate_cover_slice(dec_v, q.nodes[k], xs);
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      s += iu[k][i] * iv[k][i];
      if (fu[i] > 0) {
        rep.c_dom_u = std::max(rep.c_dom_u, iu[k][i] / (static_cast<double>(fu[i]) / den_u));
      } else if (iu[k][i] > 1e-10 * peak_u) {
        rep.dominated = false;
      }
      if (fv[i] > 0) {
        rep.c_dom_v = std::max(rep.c_dom_v, iv[k][i] / (static_cast<double>(fv[i]) / den_v));
      } else if (iv[k][i] > 1e-10 * peak_v) {
        rep.dominated = false;
      }
    }
    rep.lhs_squared += q.weights[k] * h * s;
  }
  rep.rhs = tube_pair_sum(dec_u, dec_v, -time_range, time_range, &rep.segment_pairs);
  rep.sandwich = rep.dominated && rep.lhs_squared <= rep.c_dom_u * rep.c_dom_v * rep.rhs;
  rep.bilinear_constant = rep.rhs / (std::pow(m_freq, d - 1) / n_freq * mu * mv);
  return rep;
}

double transversality(std::span<const TubeFamily> families, int dimension) {
  const std::size_t n = static_cast<std::size_t>(dimension) + 1;
  if (families.size() != n) throw StructuralError("multilinear overlap needs d + 1 families");
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = families[i].velocity;
    double len = 1.0;
    for (int k = 0; k < dimension; ++k) len += c[k] * c[k];
    len = std::sqrt(len);
    for (int k = 0; k < dimension; ++k) m[i][k] = c[k] / len;
    m[i][dimension] = 1.0 / len;
  }
  return std::abs(determinant(std::move(m)));
}

KakeyaResult multilinear_overlap(std::span<const TubeFamily> families, int dimension, double ball_radius,
                                 const KakeyaOptions& options) {
  KakeyaResult res;
  res.wedge = transversality(families, dimension);
  if (res.wedge < options.nu) {
    throw PreconditionError("families are not transverse: wedge " + std::to_string(res.wedge) + " < nu " +
                            std::to_string(options.nu));
  }
  for (const auto& fam : families) {
    for (const auto& t : fam.tubes) {
      if (t.dimension != dimension) throw StructuralError("tube dimension differs from the family dimension");
      for (std::size_t j = 1; j < t.times.size(); ++j) {
        const double dt = t.times[j] - t.times[j - 1];
        const Coord vel{(t.vertices[j][0] - t.vertices[j - 1][0]) / dt,
                        (t.vertices[j][1] - t.vertices[j - 1][1]) / dt};
        const double dev = norm({vel[0] - fam.velocity[0], vel[1] - fam.velocity[1]});
        if (dev > options.delta * (1.0 + 1e-9)) {
          throw PreconditionError("tube tangent deviates by " + std::to_string(dev) + " > delta");
        }
      }
    }
  }

  const double power = 1.0 / dimension;
  const double h = options.voxel;
  const double cell = std::pow(h, dimension + 1);
  const double rr = ball_radius * ball_radius;
  const auto slices = static_cast<long>(std::ceil(2.0 * ball_radius / h));
  using Key = std::pair<long, long>;
  for (long s = 0; s < slices; ++s) {
    const double t = -ball_radius + (s + 0.5) * h;
    if (t * t > rr) continue;
    std::vector<std::map<Key, double>> sums(families.size());
    for (std::size_t f = 0; f < families.size(); ++f) {
      for (const auto& tube : families[f].tubes) {
        if (t < tube.times.front() || t > tube.times.back()) continue;
        const Coord p = tube.position(t);
        const double r = tube.radius;
        const long i0 = static_cast<long>(std::floor((p[0] - r) / h)), i1 = static_cast<long>(std::ceil((p[0] + r) / h));
        long j0 = 0, j1 = 0;
        if (dimension == 2) {
          j0 = static_cast<long>(std::floor((p[1] - r) / h));
          j1 = static_cast<long>(std::ceil((p[1] + r) / h));
        }
        for (long i = i0; i <= i1; ++i) {
          for (long j = j0; j <= j1; ++j) {
            const double x0 = (i + 0.5) * h;
            const double x1 = dimension == 2 ? (j + 0.5) * h : 0.0;
            const double e0 = x0 - p[0], e1 = dimension == 2 ? x1 - p[1] : 0.0;
            if (e0 * e0 + e1 * e1 > r * r) continue;
            if (x0 * x0 + x1 * x1 + t * t > rr) continue;
            sums[f][{i, j}] += tube.weight;
          }
        }
      }
    }
    for (const auto& [key, first] : sums[0]) {
      double prod = std::pow(first, power);
      for (std::size_t f = 1; f < sums.size() && prod > 0.0; ++f) {
        const auto it = sums[f].find(key);
        prod = it == sums[f].end() ? 0.0 : prod * std::pow(it->second, power);
      }
      res.lhs += prod * cell;
    }
  }
  res.rhs = 1.0;
  for (const auto& fam : families) {
    double w = 0.0;
    for (const auto& t : fam.tubes) w += t.weight;
    res.rhs *= std::pow(w, power);
  }
  res.ratio = res.rhs > 0.0 ? res.lhs / res.rhs : 0.0;
  return res;
}

std::vector<TubeFamily> synthetic_families(int dimension, int tubes_per_family, double delta, double ball_radius,
                                           std::uint64_t seed) {
  if (dimension != 1 && dimension != 2) throw StructuralError("synthetic families support d = 1 and d = 2");
  std::mt19937_64 rng(seed);
  std::mt19937_64 wiggle(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Coord> velocities;
  if (dimension == 1) {
    velocities = {{-1.0, 0.0}, {1.0, 0.0}};
  } else {
    for (int i = 0; i < 3; ++i) {
      const double a = 2.0 * std::numbers::pi * i / 3.0;
      velocities.push_back({1.5 * std::cos(a), 1.5 * std::sin(a)});
    }
  }
  const int steps = static_cast<int>(std::ceil(2.0 * ball_radius));
  auto in_disc = [&](std::mt19937_64& gen, double radius) {
    if (dimension == 1) return Coord{radius * (2.0 * unit(gen) - 1.0), 0.0};
    const double r = radius * std::sqrt(unit(gen));
    const double a = 2.0 * std::numbers::pi * unit(gen);
    return Coord{r * std::cos(a), r * std::sin(a)};
  };
  std::vector<TubeFamily> out;
  for (const auto& c : velocities) {
    TubeFamily fam;
    fam.velocity = c;
    for (int k = 0; k < tubes_per_family; ++k) {
      Tube t;
      t.dimension = dimension;
      t.radius = 1.0;
      t.weight = 0.5 + unit(rng);
      const Coord origin = in_disc(rng, 4.0);
      std::vector<Coord> vel(steps);
      for (auto& v : vel) {
        const Coord p = in_disc(wiggle, 0.9 * delta);
        v = {c[0] + p[0], c[1] + p[1]};
      }
      const double dt = 2.0 * ball_radius / steps;
      std::vector<Coord> pos(steps + 1);
      pos[0] = {0.0, 0.0};
      for (int j = 0; j < steps; ++j) pos[j + 1] = {pos[j][0] + vel[j][0] * dt, pos[j][1] + vel[j][1] * dt};
      const int mid = steps / 2;
      const Coord shift{origin[0] - pos[mid][0], origin[1] - pos[mid][1]};
      for (int j = 0; j <= steps; ++j) {
        t.times.push_back(-ball_radius + j * dt);
        t.vertices.push_back({pos[j][0] + shift[0], dimension == 2 ? pos[j][1] + shift[1] : 0.0});
      }
      fam.tubes.push_back(std::move(t));
    }
    out.push_back(std::move(fam));
  }
  return out;
}

SlopeFit loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw PreconditionError("slope fit needs two or more matched points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw PreconditionError("slope fit needs positive values");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  SlopeFit f;
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

}  // namespace slt
