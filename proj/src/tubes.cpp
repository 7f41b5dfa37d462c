#include "slt/tubes.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "slt/errors.hpp"

namespace slt {

namespace {

double wrap(double x, double period) {
  if (period <= 0.0) return x;
  double r = std::fmod(x + 0.5 * period, period);
  if (r < 0.0) r += period;
  return r - 0.5 * period;
}

double distance(const Coord& a, const Coord& b, int d, double period) {
  const double e0 = wrap(a[0] - b[0], period);
  const double e1 = d == 2 ? wrap(a[1] - b[1], period) : 0.0;
  return std::sqrt(e0 * e0 + e1 * e1);
}

/// Relative slack on the membership radius so vertices exactly at distance r
/// are not lost to rounding.
constexpr double kRadiusSlack = 1e-12;

/// Layer index and fraction of a lattice-frame time.
std::pair<std::size_t, double> locate(double t, double t_start, double tau, std::size_t layers) {
  const double q = (t - t_start) / tau;
  const double last = static_cast<double>(layers - 1);
  if (q < -1e-9 || q > last + 1e-9) {
    throw PreconditionError("time " + std::to_string(t) + " lies outside the decomposition's layer span");
  }
  auto i = static_cast<std::size_t>(std::max(0.0, std::floor(q + 1e-9)));
  if (i >= layers - 1) return {layers - 1, 0.0};
  return {i, std::clamp(q - static_cast<double>(i), 0.0, 1.0)};
}

Coord lattice_position(const LatticeGraph& g, int site, const std::vector<int>& step, double s) {
  const auto c = g.coordinates(site);
  Coord p{static_cast<double>(c[0]), g.dimension() == 2 ? static_cast<double>(c[1]) : 0.0};
  if (!step.empty()) {
    p[0] += s * step[0];
    if (g.dimension() == 2) p[1] += s * step[1];
  }
  return p;
}

/// Edge centers and masses active at a lattice time.
struct ActiveEdge {
  Coord center;
  Numerator mass;
  int site;
};

std::vector<ActiveEdge> active_edges(const TubeDecomposition& dec, double t, std::size_t* layer_out) {
  const auto& g = dec.graph();
  const auto [i, s] = locate(t, dec.layer_time(0), dec.tau(), dec.layer_count());
  if (layer_out) *layer_out = i;
  std::vector<ActiveEdge> out;
  for (std::size_t u = 0; u < g.size(); ++u) {
    const int site = static_cast<int>(u);
    if (i + 1 == dec.layer_count()) {
      const Numerator m = dec.node_mass(i, site);
      if (m > 0) out.push_back({lattice_position(g, site, {}, 0.0), m, site});
      continue;
    }
    const auto nbrs = g.out_neighbors(site);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      const Numerator m = dec.edge_mass(i, site, k);
      if (m == 0) continue;
      out.push_back({lattice_position(g, site, g.step_offset(site, nbrs[k]), s), m, site});
    }
  }
  return out;
}

Numerator sum_covering(const std::vector<ActiveEdge>& edges, const Coord& x, int d, double period, double r) {
  Numerator f = 0;
  for (const auto& e : edges) {
    if (distance(x, e.center, d, period) <= r * (1.0 + kRadiusSlack)) f += e.mass;
  }
  return f;
}

}  // namespace

Coord Tube::position(double t) const {
  if (times.empty()) throw StructuralError("tube has no vertices");
  if (t <= times.front()) return vertices.front();
  if (t >= times.back()) return vertices.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto j = static_cast<std::size_t>(it - times.begin());
  const double s = (t - times[j - 1]) / (times[j] - times[j - 1]);
  const Coord& a = vertices[j - 1];
  const Coord& b = vertices[j];
  return {a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])};
}

bool Tube::contains(const Coord& x, double t) const {
  if (times.empty() || t < times.front() || t > times.back()) return false;
  return distance(x, position(t), dimension, period) <= radius;
}

double Tube::max_speed() const {
  double v = 0.0;
  for (std::size_t j = 1; j < times.size(); ++j) {
    const double dx = vertices[j][0] - vertices[j - 1][0];
    const double dy = vertices[j][1] - vertices[j - 1][1];
    v = std::max(v, std::sqrt(dx * dx + dy * dy) / (times[j] - times[j - 1]));
  }
  return v;
}

TubeDecomposition::TubeDecomposition(PathEnsemble ensemble, WaveField field, double t_start, TubeFrame frame,
                                     DecompositionMetadata metadata)
    : ensemble_(std::move(ensemble)),
      field_(std::move(field)),
      t_start_(t_start),
      frame_(frame),
      metadata_(std::move(metadata)) {
  if (!(metadata_.tau > 0.0)) throw PreconditionError("tube decomposition needs tau > 0");
  if (!graph().is_torus()) throw StructuralError("tube decomposition needs a lattice torus");
  const Rational den(denominator());
  const auto marginals = ensemble_.edge_marginals();
  edge_mass_.resize(marginals.size());
  for (std::size_t i = 0; i < marginals.size(); ++i) {
    edge_mass_[i].resize(marginals[i].size());
    for (std::size_t u = 0; u < marginals[i].size(); ++u) {
      for (const auto& q : marginals[i][u]) {
        const Rational scaled = q * den;
        if (boost::multiprecision::denominator(scaled) != 1) {
          throw NumericalIntegrityError("edge mass is not a multiple of the denominator");
        }
        edge_mass_[i][u].push_back(static_cast<Numerator>(boost::multiprecision::numerator(scaled)));
      }
    }
  }
}

double TubeDecomposition::speed_limit() const { return 3.0 * std::sqrt(static_cast<double>(dimension())) / tau(); }

std::pair<Coord, double> TubeDecomposition::to_lattice(const Coord& x, double t) const {
  const double tl = t / frame_.time_scale;
  return {{(x[0] - frame_.drift[0] * t) / frame_.space_scale, (x[1] - frame_.drift[1] * t) / frame_.space_scale},
          tl};
}

Coord TubeDecomposition::to_physical_position(const Coord& lattice_x, double lattice_t) const {
  const double t = to_physical_time(lattice_t);
  return {frame_.space_scale * lattice_x[0] + frame_.drift[0] * t,
          dimension() == 2 ? frame_.space_scale * lattice_x[1] + frame_.drift[1] * t : 0.0};
}

Numerator TubeDecomposition::cover_at_lattice(const Coord& x, double t) const {
  const auto edges = active_edges(*this, t, nullptr);
  return sum_covering(edges, x, dimension(), graph().side(), radius());
}

TubeDecomposition TubeDecomposition::reframed(const TubeFrame& frame, DecompositionMetadata metadata) const {
  TubeDecomposition copy = *this;
  copy.frame_ = frame;
  copy.metadata_ = std::move(metadata);
  return copy;
}

TubeDecomposition decompose_layers(const WaveField& field, GraphPtr graph, const WeightLayers& layers, double tau,
                                   double t_start, const DecomposeOptions& options) {
  auto lf = layered_decomposition(layers, graph, FlowOptions{options.allow_slack, options.slack});
  DecompositionMetadata meta;
  meta.tau = tau;
  meta.layers = static_cast<int>(layers.layer_count());
  meta.denominator = layers.denominator();
  meta.slack_layers = lf.slack_layers;
  const double t_end = t_start + tau * static_cast<double>(layers.layer_count() - 1);
  meta.time_range = std::max(0.0, std::min(-t_start, t_end));
  TubeFrame frame;
  frame.period = graph->side();
  return TubeDecomposition(PathEnsemble(std::move(lf)), field, t_start, frame, std::move(meta));
}

TubeDecomposition decompose(const WaveField& u0, const MuKernel& mu, double tau, double time_range,
                            const DecomposeOptions& options) {
  if (!(tau > 0.0)) throw PreconditionError("decompose: tau must be positive");
  if (!(time_range > 0.0)) throw PreconditionError("decompose: time range must be positive");
  const int half = static_cast<int>(std::ceil(time_range / tau - 1e-12)) + 1;
  const int layers = 2 * half;
  const auto mw = mass_weights(u0, mu, tau, layers, {options.denominator_log2, options.drift_tolerance});
  auto dec = decompose_layers(u0, mu.lattice(), mw.layers, tau, -half * tau, options);
  DecompositionMetadata meta = dec.metadata();
  meta.time_range = time_range;
  meta.max_drift = mw.max_drift;
  meta.quantization_residue = mw.quantization.residue;
  meta.kernel_dilation = mu.dilation();
  TubeFrame frame;
  frame.period = u0.grid().length();
  return dec.reframed(frame, std::move(meta));
}

std::vector<Numerator> evaluate_cover(const TubeDecomposition& dec, std::span<const SpaceTimePoint> points) {
  std::vector<Numerator> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    const auto [xl, tl] = dec.to_lattice(p.x, p.t);
    out.push_back(dec.cover_at_lattice(xl, tl));
  }
  return out;
}

std::vector<Numerator> evaluate_cover_slice(const TubeDecomposition& dec, double t, std::span<const Coord> xs) {
  const double tl = t / dec.frame().time_scale;
  const auto edges = active_edges(dec, tl, nullptr);
  std::vector<Numerator> out;
  out.reserve(xs.size());
  for (const auto& x : xs) {
    const auto [xl, unused] = dec.to_lattice(x, t);
    out.push_back(sum_covering(edges, xl, dec.dimension(), dec.graph().side(), dec.radius()));
  }
  return out;
}

std::vector<WeightedSegment> weighted_segments(const TubeDecomposition& dec) {
  const auto& g = dec.graph();
  const double radius = dec.radius() * dec.frame().space_scale;
  std::vector<WeightedSegment> out;
  for (std::size_t i = 0; i + 1 < dec.layer_count(); ++i) {
    const double ta = dec.layer_time(i);
    const double tb = dec.layer_time(i + 1);
    for (std::size_t u = 0; u < g.size(); ++u) {
      const int site = static_cast<int>(u);
      const auto nbrs = g.out_neighbors(site);
      for (std::size_t k = 0; k < nbrs.size(); ++k) {
        const Numerator m = dec.edge_mass(i, site, k);
        if (m == 0) continue;
        const auto step = g.step_offset(site, nbrs[k]);
        out.push_back({dec.to_physical_time(ta), dec.to_physical_time(tb),
                       dec.to_physical_position(lattice_position(g, site, step, 0.0), ta),
                       dec.to_physical_position(lattice_position(g, site, step, 1.0), tb), radius, m});
      }
    }
  }
  return out;
}

DominationReport verify_domination(const WaveField& u0, const TubeDecomposition& dec,
                                   const DominationOptions& options) {
  if (!(u0.grid() == dec.field().grid())) {
    throw StructuralError("verify_domination: field grid differs from the decomposition's lattice-frame grid");
  }
  const Grid& g = u0.grid();
  const int d = g.dimension();
  const double range = dec.metadata().time_range / dec.frame().time_scale;
  const double den = static_cast<double>(dec.denominator());
  const double r = dec.radius();
  const double period = dec.graph().side();
  const int side = dec.graph().side();

  std::vector<double> times;
  auto add_time = [&](double t) {
    if (t >= -range - 1e-12 && t <= range + 1e-12) times.push_back(std::clamp(t, -range, range));
  };
  add_time(-range);
  for (std::size_t i = 0; i < dec.layer_count(); ++i) {
    add_time(dec.layer_time(i));
    if (i + 1 < dec.layer_count()) add_time(dec.layer_time(i) + 0.5 * dec.tau());
  }
  add_time(range);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  std::vector<std::size_t> sample_index;
  const int stride = std::max(1, options.space_stride);
  for (int j0 = 0; j0 < g.points(); j0 += stride) {
    for (int j1 = 0; j1 < (d == 2 ? g.points() : 1); j1 += stride) sample_index.push_back(g.flatten(j0, j1));
  }

  std::vector<std::vector<double>> inten(times.size());
  double peak = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    inten[k] = intensity(propagate(u0, times[k] - u0.time()));
    for (std::size_t i : sample_index) peak = std::max(peak, inten[k][i]);
  }

  DominationReport report;
  report.times = times;
  const double floor = options.floor * peak;
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::size_t layer = 0;
    const auto edges = active_edges(dec, times[k], &layer);
    for (std::size_t i : sample_index) {
      const Coord x = g.point(i);
      const Numerator f = sum_covering(edges, x, d, period, r);
      ++report.samples;
      const int c0 = static_cast<int>(std::floor(x[0] + 1e-12)) % side;
      const int c1 = d == 2 ? static_cast<int>(std::floor(x[1] + 1e-12)) % side : 0;
      const std::vector<int> cell = d == 2 ? std::vector<int>{c0, c1} : std::vector<int>{c0};
      const Numerator prism = dec.node_mass(layer, dec.graph().site_at(cell));
      const double v = inten[k][i];
      if (f < prism) {
        report.prism_bound_holds = false;
        throw DominationFailure("prism lower bound fails", {x, times[k], v, f, prism});
      }
      if (f == 0) {
        if (v > floor && peak > 0.0) throw DominationFailure("cover vanishes where the intensity does not", {x, times[k], v, f, prism});
        continue;
      }
      const double ratio = v / (static_cast<double>(f) / den);
      if (ratio > report.constant) {
        report.constant = ratio;
        report.witness = {x, times[k], v, f, prism};
      }
    }
  }
  return report;
}

EfficiencyReport verify_efficiency(const TubeDecomposition& dec, const WaveField& u0) {
  const int d = dec.dimension();
  const double m = mass(u0);
  const double r = dec.radius() * dec.frame().space_scale;
  const double base = std::pow(10.0 * d, d) * std::pow(3.0, d);
  EfficiencyReport rep;
  rep.bound = base * (1.0 + 1e-6);
  const Rational z = fixed_to_rational(dec.total_weight(), dec.denominator());
  Rational lhs = z;
  for (int i = 0; i < d; ++i) lhs *= Rational(r);
  const Rational rhs = Rational(base) * (Rational(1) + Rational(1, 1'000'000)) * Rational(m);
  rep.within_bound = lhs <= rhs;
  rep.constant = m > 0.0 ? to_double(lhs) / m : 0.0;
  return rep;
}

double admissible_scale(const Grid& grid, double rho) {
  if (!(rho > 0.0)) throw ConfigurationError("scale must be positive");
  const double target = rho * grid.length();
  const int m = grid.points();
  for (int side = std::max(3, static_cast<int>(std::ceil(target - 1e-9))); side <= m / 4; ++side) {
    if (m % side == 0) return side / grid.length();
  }
  throw ConfigurationError("no lattice side >= " + std::to_string(target) + " fits the grid with 4 points per unit");
}

TubeDecomposition scaled_decompose(const WaveField& u0, const Coord& xi, double rho, double tau, double time_range,
                                   double dilation, const DecomposeOptions& options) {
  const double scale = admissible_scale(u0.grid(), rho);
  const auto moved = galilean_rescale(u0, xi, scale, RescaleDirection::Forward);
  const MuKernel mu(moved.grid(), dilation);
  auto dec = decompose(moved, mu, tau, time_range * scale * scale, options);
  TubeFrame frame{1.0 / scale, 1.0 / (scale * scale), {2.0 * xi[0], 2.0 * xi[1]}, u0.grid().length()};
  DecompositionMetadata meta = dec.metadata();
  meta.time_range = time_range;
  meta.xi = xi;
  meta.rho = scale;
  return dec.reframed(frame, std::move(meta));
}

std::vector<Tube> materialize(const TubeDecomposition& dec, double threshold, std::size_t max_tubes) {
  const auto paths = enumerate_paths(dec.ensemble(), Rational(threshold), max_tubes);
  const auto& g = dec.graph();
  const int d = dec.dimension();
  std::vector<Tube> tubes;
  tubes.reserve(paths.size());
  for (const auto& p : paths) {
    Tube t;
    t.dimension = d;
    t.radius = dec.radius() * dec.frame().space_scale;
    t.weight = to_double(p.weight);
    t.period = dec.frame().period;
    t.sites = p.sites;
    Coord pos = lattice_position(g, p.sites.front(), {}, 0.0);
    for (std::size_t i = 0; i < p.sites.size(); ++i) {
      if (i > 0) {
        const auto step = g.step_offset(p.sites[i - 1], p.sites[i]);
        pos[0] += step[0];
        if (d == 2) pos[1] += step[1];
      }
      t.times.push_back(dec.to_physical_time(dec.layer_time(i)));
      t.vertices.push_back(dec.to_physical_position(pos, dec.layer_time(i)));
    }
    tubes.push_back(std::move(t));
  }
  return tubes;
}

nlohmann::json decomposition_to_json(const TubeDecomposition& dec) {
  using nlohmann::json;
  const auto& m = dec.metadata();
  const auto& g = dec.graph();
  json edges = json::array();
  for (std::size_t i = 0; i + 1 < dec.layer_count(); ++i) {
    for (std::size_t u = 0; u < g.size(); ++u) {
      const auto nbrs = g.out_neighbors(static_cast<int>(u));
      for (std::size_t k = 0; k < nbrs.size(); ++k) {
        const Numerator x = dec.edge_mass(i, static_cast<int>(u), k);
        if (x > 0) edges.push_back({i, u, nbrs[k], x});
      }
    }
  }
  const auto& f = dec.frame();
  return {{"dimension", dec.dimension()},
          {"lattice_side", g.side()},
          {"tau", m.tau},
          {"time_range", m.time_range},
          {"layers", m.layers},
          {"t_start", dec.layer_time(0)},
          {"denominator", m.denominator},
          {"total_weight", dec.total_weight()},
          {"radius", dec.radius() * f.space_scale},
          {"speed_limit", dec.speed_limit() * f.space_scale / f.time_scale},
          {"max_drift", m.max_drift},
          {"slack_layers", m.slack_layers},
          {"quantization_residue", m.quantization_residue},
          {"xi", {m.xi[0], m.xi[1]}},
          {"rho", m.rho},
          {"kernel_dilation", m.kernel_dilation},
          {"frame",
           {{"space_scale", f.space_scale},
            {"time_scale", f.time_scale},
            {"drift", {f.drift[0], f.drift[1]}},
            {"period", f.period}}},
          {"node_mass", dec.ensemble().layers().layers()},
          {"edge_mass", std::move(edges)}};
}

void write_tubes_csv(const std::vector<Tube>& tubes, std::ostream& out) {
  out << "tube,weight,radius,vertex,t,x0,x1\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < tubes.size(); ++k) {
    const auto& t = tubes[k];
    for (std::size_t i = 0; i < t.times.size(); ++i) {
      out << k << ',' << t.weight << ',' << t.radius << ',' << i << ',' << t.times[i] << ',' << t.vertices[i][0]
          << ',' << t.vertices[i][1] << '\n';
    }
  }
}

}  // namespace slt
