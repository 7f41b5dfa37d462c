// Acceptance suite: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../support/oracles.hpp"
#include "slt/errors.hpp"
#include "slt/estimates.hpp"
#include "slt/experiment.hpp"
#include "slt/intersection.hpp"
#include "slt/lattice_flow.hpp"
#include "slt/max_flow.hpp"
#include "slt/mu_kernel.hpp"
#include "slt/schrodinger.hpp"
#include "slt/tubes.hpp"

using namespace slt;

namespace {

struct Outcome {
  bool passed = true;
  std::string detail;
};

std::string num(double x) {
  std::ostringstream s;
  s.precision(4);
  s << x;
  return s.str();
}

std::vector<WaveField> random_fields(const Grid& g, const FrequencyWindow& w, int count, std::uint64_t seed) {
  std::vector<WaveField> out;
  for (int i = 0; i < count; ++i) out.push_back(make_band_limited(g, w, Profile::RandomPhase, seed + i));
  return out;
}

Outcome flow_exactness() {
  std::mt19937_64 rng(20240601);
  int feasible_ok = 0, infeasible_ok = 0;
  std::string failure;
  for (int k = 0; k < 200; ++k) {
    const int d = k % 2 == 0 ? 1 : 2;
    const int side = d == 1 ? std::uniform_int_distribution<int>(3, 64)(rng) : std::uniform_int_distribution<int>(3, 8)(rng);
    const int n_layers = std::uniform_int_distribution<int>(2, 8)(rng);
    const int support = std::uniform_int_distribution<int>(1, 12)(rng);
    const auto raw = oracle::pushed_forward_layers(rng, d, side, n_layers, support, Numerator{1} << 30);
    const WeightLayers w(raw, Numerator{1} << 30);
    const auto g = make_torus(d, side);
    const auto lf = layered_decomposition(w, g, {});
    bool ok = lf.slack_layers.empty();
    for (std::size_t i = 0; i + 1 < w.layer_count(); ++i) {
      ok = ok && lf.flows[i].out_marginal() == w.layer(i) && lf.flows[i].in_marginal(*g) == w.layer(i + 1);
      for (const auto& row : lf.flows[i].out) {
        for (Numerator x : row) ok = ok && x >= 0;
      }
    }
    if (ok) ++feasible_ok;
    else if (failure.empty()) failure = "feasible instance " + std::to_string(k) + " broke a marginal identity";
  }
  int tried = 0;
  while (infeasible_ok < 50 && tried < 5000) {
    ++tried;
    const int d = tried % 2 == 0 ? 1 : 2;
    const int side = d == 1 ? std::uniform_int_distribution<int>(4, 16)(rng) : 4;
    const int n = d == 1 ? side : 16;
    std::vector<Numerator> w1(n, 0), w2(n, 0);
    std::uniform_int_distribution<int> site(0, n - 1);
    std::uniform_int_distribution<Numerator> mass(1, 1000);
    const int s1 = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int j = 0; j < s1; ++j) w1[site(rng)] += mass(rng);
    Numerator total = 0;
    for (auto x : w1) total += x;
    const int s2 = std::uniform_int_distribution<int>(1, 3)(rng);
    Numerator left = total;
    for (int j = 0; j < s2; ++j) {
      const Numerator chunk = j + 1 == s2 ? left : std::uniform_int_distribution<Numerator>(0, left)(rng);
      w2[site(rng)] += chunk;
      left -= chunk;
    }
    if (!oracle::brute_force_violation(d, side, w1, w2)) continue;
    const WeightLayers w({w1, w2}, 1000);
    try {
      layered_decomposition(w, make_torus(d, side), {});
      if (failure.empty()) failure = "infeasible instance decomposed";
    } catch (const InfeasibleFlowError& e) {
      Numerator lhs = 0;
      for (int a : e.violating_set()) lhs += w1[a];
      const Numerator rhs = oracle::neighborhood_mass(d, side, e.violating_set(), w2);
      if (lhs > rhs && lhs == e.lhs() && rhs == e.rhs()) ++infeasible_ok;
      else if (failure.empty()) failure = "reported cut not confirmed by brute force";
    }
  }
  Outcome o;
  o.passed = feasible_ok == 200 && infeasible_ok == 50;
  o.detail = std::to_string(feasible_ok) + "/200 feasible exact, " + std::to_string(infeasible_ok) +
             "/50 infeasible cuts confirmed" + (failure.empty() ? "" : "; " + failure);
  return o;
}

Outcome mfmc() {
  std::mt19937_64 rng(77);
  int agree = 0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 16)(rng);
    FlowNetwork net(n, 0, n - 1);
    std::bernoulli_distribution edge(0.35);
    std::uniform_int_distribution<Numerator> cap(0, 1'000'000'000'000);
    for (std::size_t u = 0; u < n; ++u) {
      for (std::size_t v = u + 1; v < n; ++v) {
        if (!edge(rng)) continue;
        if (std::bernoulli_distribution(0.5)(rng)) net.set_capacity(u, v, cap(rng));
        else net.set_capacity(v, u, cap(rng));
      }
    }
    if (max_flow(net).value == oracle::exhaustive_min_cut(net)) ++agree;
  }
  return {agree == 100, std::to_string(agree) + "/100 networks match exhaustive min cut"};
}

/// f(x,t) from explicit path enumeration, as a rational.
Rational enumerated_cover(const std::vector<WeightedPath>& paths, int side, double t_start, double tau, double x,
                          double t, double radius) {
  Rational total = 0;
  const double s = (t - t_start) / tau;
  const auto last = static_cast<double>(paths.front().sites.size() - 1);
  const std::size_t i = static_cast<std::size_t>(std::min(std::floor(s), last - 1.0));
  const double frac = s - static_cast<double>(i);
  for (const auto& p : paths) {
    const int a = p.sites[i], b = p.sites[i + 1];
    int step = ((b - a) % side + side) % side;
    if (step > side / 2) step -= side;
    const double pos = a + frac * step;
    double dist = std::fmod(std::abs(x - pos), static_cast<double>(side));
    dist = std::min(dist, side - dist);
    if (dist <= radius + 1e-12) total += p.weight;
  }
  return total;
}

Outcome path_marginals() {
  std::mt19937_64 rng(4242);
  int ok = 0;
  std::string failure;
  const int side = 32;
  const auto g = make_torus(1, side);
  const Grid grid(1, side, 128);
  const auto field = WaveField::zero(grid, {{0.0, 0.0}, 1.0});
  for (int k = 0; k < 50; ++k) {
    std::vector<std::vector<Numerator>> raw;
    int max_support = 0;
    do {
      raw = oracle::pushed_forward_layers(rng, 1, side, 3, 2, 64);
      max_support = 0;
      for (const auto& l : raw) max_support = std::max<int>(max_support, std::count_if(l.begin(), l.end(), [](Numerator x) { return x > 0; }));
    } while (max_support > 6);
    const WeightLayers w(raw, 64);
    const double tau = 0.5, t_start = -0.5;
    const auto dec = decompose_layers(field, g, w, tau, t_start, {});
    const auto paths = enumerate_paths(dec.ensemble(), Rational(0));
    bool good = true;
    for (std::size_t i = 0; i < 3; ++i) {
      std::vector<Rational> marg(side, 0);
      for (const auto& p : paths) marg[p.sites[i]] += p.weight;
      for (int a = 0; a < side; ++a) good = good && marg[a] * 64 == Rational(w.at(i, a));
    }
    std::vector<SpaceTimePoint> pts;
    for (double t : {-0.5, -0.25, 0.0, 0.25, 0.5}) {
      for (int a = 0; a < side; ++a) pts.push_back({{static_cast<double>(a), 0.0}, t});
    }
    const auto f = evaluate_cover(dec, pts);
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const Rational e = enumerated_cover(paths, side, t_start, tau, pts[j].x[0], pts[j].t, dec.radius());
      good = good && e * Rational(dec.denominator()) == Rational(f[j]);
    }
    if (good) ++ok;
    else if (failure.empty()) failure = "instance " + std::to_string(k);
  }
  return {ok == 50, std::to_string(ok) + "/50 instances match enumeration" + (failure.empty() ? "" : "; " + failure)};
}

Outcome propagator() {
  const double length = 32.0, sigma = 1.0, x0 = 16.0;
  const Grid g(1, length, 256);
  const double xi = 2.0 * std::numbers::pi / length * 8;
  std::vector<Complex> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = oracle::gaussian_packet(g.point(i)[0], 0.0, length, sigma, x0, xi, 6);
  const WaveField u0(g, v, {{xi, 0.0}, 10.0}, 0.0);
  double err = 0.0, drift = 0.0, group = 0.0;
  const double m0 = mass(u0);
  for (double t : {0.1, 0.5, 1.0, 2.0}) {
    const auto ut = propagate(u0, t);
    for (std::size_t i = 0; i < g.size(); ++i) {
      err = std::max(err, std::abs(ut.values()[i] - oracle::gaussian_packet(g.point(i)[0], t, length, sigma, x0, xi, 12)));
    }
  }
  for (int k = 1; k <= 100; ++k) drift = std::max(drift, std::abs(mass(propagate(u0, 0.1 * k)) - m0) / m0);
  const auto split = propagate(propagate(u0, 3.7), 2.9);
  const auto whole = propagate(u0, 6.6);
  for (std::size_t i = 0; i < g.size(); ++i) group = std::max(group, std::abs(split.values()[i] - whole.values()[i]));
  return {err <= 1e-8 && drift <= 1e-12 && group <= 1e-12,
          "sup error " + num(err) + ", mass drift " + num(drift) + ", group law " + num(group)};
}

Outcome kernel_suite() {
  double pou = 0.0;
  for (auto [d, length, points] : {std::tuple{1, 16.0, 64}, std::tuple{2, 8.0, 32}, std::tuple{1, 8.0, 256}}) {
    const MuKernel mu(Grid(d, length, points), 2.0);
    std::vector<int> all(mu.site_count());
    for (std::size_t a = 0; a < all.size(); ++a) all[a] = static_cast<int>(a);
    for (double x : mu.translate_sum(all)) pou = std::max(pou, std::abs(x - 1.0));
  }
  const Grid g(1, 16.0, 64);
  const MuKernel mu(g, 2.0);
  const auto fields = random_fields(g, {{0.0, 0.0}, 2.0}, 50, 900);
  const auto cal = calibrate_tau(fields, mu);
  double worst = std::numeric_limits<double>::infinity();
  bool all_pass = true;
  std::size_t checks = 0;
  for (const auto& u : fields) {
    const auto r = verify_fs(u, mu, cal.tau, {200, 8, 11});
    worst = std::min(worst, r.worst_margin);
    all_pass = all_pass && r.passed;
    checks += r.checks;
  }
  return {pou <= 1e-10 && all_pass && worst >= 0.0,
          "partition error " + num(pou) + ", tau " + num(cal.tau) + ", worst FS margin " + num(worst) + " over " +
              std::to_string(checks) + " checks"};
}

Outcome theorem_assembly() {
  const Grid g(1, 16.0, 64);
  const MuKernel mu(g, 2.0);
  const auto fields = random_fields(g, {{0.0, 0.0}, 1.0}, 20, 5000);
  const auto cal = calibrate_tau(fields, mu);
  int dominated = 0, efficient = 0;
  double worst_eff = 0.0, worst_dom = 0.0;
  std::string failure;
  for (const auto& u : fields) {
    try {
      const auto dec = decompose(u, mu, cal.tau, 1.0);
      const auto dom = verify_domination(u, dec);
      if (dom.passed && dom.prism_bound_holds) ++dominated;
      worst_dom = std::max(worst_dom, dom.constant);
      const auto eff = verify_efficiency(dec, u);
      if (eff.within_bound) ++efficient;
      worst_eff = std::max(worst_eff, eff.constant);
    } catch (const std::exception& e) {
      if (failure.empty()) failure = e.what();
    }
  }
  return {dominated == 20 && efficient == 20,
          std::to_string(dominated) + "/20 dominated (max C_dom " + num(worst_dom) + "), " + std::to_string(efficient) +
              "/20 efficient (max " + num(worst_eff) + " vs bound 30)" + (failure.empty() ? "" : "; " + failure)};
}

Outcome symmetry() {
  const Grid g(1, 16.0, 64);
  const MuKernel mu(g, 2.0);
  const auto u0 = make_band_limited(g, {{0.0, 0.0}, 1.0}, Profile::RandomPhase, 31);
  const double tau = 0.25, range = 1.0;
  const auto plain = decompose(u0, mu, tau, range);
  const auto scaled = scaled_decompose(u0, {0.0, 0.0}, 1.0, tau, range);
  bool exact = plain.layer_count() == scaled.layer_count() && plain.denominator() == scaled.denominator() &&
               plain.total_weight() == scaled.total_weight();
  for (std::size_t i = 0; exact && i + 1 < plain.layer_count(); ++i) {
    for (std::size_t a = 0; a < plain.graph().size(); ++a) {
      for (std::size_t k = 0; k < plain.graph().out_neighbors(static_cast<int>(a)).size(); ++k) {
        exact = exact && plain.edge_mass(i, static_cast<int>(a), k) == scaled.edge_mass(i, static_cast<int>(a), k);
      }
    }
  }

  const Coord xi{2.0 * std::numbers::pi / 16.0 * 4, 0.0};
  const auto boosted = galilean_rescale(u0, xi, 1.0, RescaleDirection::Inverse);
  const auto moving = scaled_decompose(boosted, xi, 1.0, tau, range);
  const auto still = materialize(plain, 1e-3);
  const auto moved = materialize(moving, 1e-3);
  std::map<std::vector<int>, const Tube*> by_sites;
  for (const auto& t : still) by_sites[t.sites] = &t;
  double dev = 0.0;
  std::size_t matched = 0;
  for (const auto& t : moved) {
    const auto it = by_sites.find(t.sites);
    if (it == by_sites.end()) continue;
    ++matched;
    for (std::size_t i = 0; i < t.times.size(); ++i) {
      const double sheared = it->second->vertices[i][0] + 2.0 * xi[0] * it->second->times[i];
      dev = std::max({dev, std::abs(t.vertices[i][0] - sheared), std::abs(t.times[i] - it->second->times[i])});
    }
  }
  const bool boost_ok = matched == moved.size() && matched == still.size() && matched > 0 && dev <= 1e-9;
  return {exact && boost_ok, std::string("identity frame ") + (exact ? "bit-exact" : "differs") + ", " +
                                 std::to_string(matched) + "/" + std::to_string(still.size()) +
                                 " boosted tubes matched, max vertex deviation " + num(dev)};
}

Outcome bilinear_sweep() {
  ExperimentConfig c = config_from_json(nlohmann::json{
      {"dimension", 1},
      {"grid", {{"L", 16}, {"M", 64}}},
      {"ensemble", {{"count", 1}, {"seed", 1}}},
      {"bilinear", {{"M", 1}, {"N", {8, 16, 32}}, {"seeds", {1, 2, 3}}, {"L", 16}, {"grid_M", 256}}}});
  const auto rep = run_experiment(c, Stage::Bilinear, {"", 4, false});
  int sandwiches = 0, total = 0;
  for (const auto& a : rep.json["assertions"]) {
    if (a["op"] != "bilinear_via_tubes") continue;
    ++total;
    if (a["passed"].get<bool>()) ++sandwiches;
  }
  const double trend = rep.json["bilinear"]["trend"].get<double>();
  return {rep.passed && total == 9 && sandwiches == 9,
          "common constant " + num(rep.json["bilinear"]["common_constant"].get<double>()) + ", trend " +
              num(100 * trend) + "%, sandwich " + std::to_string(sandwiches) + "/" + std::to_string(total)};
}

Outcome intersection_law() {
  const double r1 = 0.5, r2 = 0.25;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0, mc_err = 0.0;
  for (double dv : {4.0, 8.0, 16.0, 32.0}) {
    const TubeSegment a{-1.0, 1.0, {0.0, 0.0}, {0.0, 0.0}, r1};
    const TubeSegment b{-1.0, 1.0, {-dv, 0.0}, {dv, 0.0}, r2};
    const double vol = segment_intersection_volume(a, b, 1, 0.0, -1.0, 1.0);
    lo = std::min(lo, vol * dv);
    hi = std::max(hi, vol * dv);
    const TubeSegment an{-1.0 / dv, 1.0 / dv, {0.0, 0.0}, {0.0, 0.0}, r1};
    const TubeSegment bn{-1.0 / dv, 1.0 / dv, {-1.0, 0.0}, {1.0, 0.0}, r2};
    const double mc = oracle::monte_carlo_volume(an, bn, 1, 4'000'000, 17 + static_cast<std::uint64_t>(dv));
    mc_err = std::max(mc_err, std::abs(mc - vol) / vol);
  }
  const TubeSegment a2{0.0, 2.0, {0.0, 0.0}, {1.0, 0.0}, 1.0};
  const TubeSegment b2{0.0, 2.0, {2.0, -1.0}, {-1.0, 1.0}, 0.7};
  const double v2 = segment_intersection_volume(a2, b2, 2, 0.0, 0.0, 2.0);
  const double mc2 = oracle::monte_carlo_volume(a2, b2, 2, 4'000'000, 99);
  mc_err = std::max(mc_err, std::abs(mc2 - v2) / v2);
  const double spread = hi / lo - 1.0;
  const double law = std::abs(hi / straight_crossing_volume(r1, r2, 1.0) - 1.0);
  return {spread <= 0.02 && law <= 0.02 && mc_err <= 0.01,
          "vol*dv spread " + num(100 * spread) + "%, vs 4 r1 r2 " + num(100 * law) + "%, Monte-Carlo " +
              num(100 * mc_err) + "%"};
}

Outcome multilinear() {
  const std::vector<double> radii{8, 16, 32, 64};
  std::vector<double> ratios;
  double wedge = 0.0;
  for (double r : radii) {
    const auto fams = synthetic_families(2, 10, 0.1, r, 2024);
    const auto res = multilinear_overlap(fams, 2, r, {0.25, 0.1, 0.1});
    ratios.push_back(res.ratio);
    wedge = res.wedge;
  }
  const double slope = loglog_slope(radii, ratios).slope;
  return {slope < 0.5, "wedge " + num(wedge) + ", ratios " + num(ratios[0]) + " .. " + num(ratios.back()) +
                           ", log-log slope " + num(slope)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"flow exactness", flow_exactness},     {"max-flow min-cut", mfmc},
      {"path marginals", path_marginals},     {"propagator", propagator},
      {"kernel suite", kernel_suite},         {"theorem assembly", theorem_assembly},
      {"symmetry", symmetry},                 {"bilinear sweep", bilinear_sweep},
      {"intersection law", intersection_law}, {"multilinear overlap", multilinear},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %zu (%s): %s [%.1fs]\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.passed) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
