#include "cgp/volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cgp {

namespace {

constexpr double kChordTolerance = 1e-6;
constexpr int kChordRetries = 32;
constexpr int kChordScanSteps = 32;
constexpr double kMaxGridNodes = 1e7;

Point along(PointView c, PointView u, double t, const Box& box) {
  Point x(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) x[k] = std::clamp(c[k] + t * u[k], box.lower[k], box.upper[k]);
  return x;
}

// Largest member parameter on the segment of the chord that contains 0. A
// coarse scan brackets the first exit before bisecting, so the chord never
// jumps to another component of a non-convex set; jumping would make the
// proposal depend on the current state and bias the chain.
double chord_end(PointView c, PointView u, double outside, const Membership& member, const Box& box) {
  double inside = 0.0;
  double exit = outside;
  bool found = false;
  for (int k = 1; k <= kChordScanSteps; ++k) {
    const double t = outside * k / kChordScanSteps;
    if (!member(along(c, u, t, box))) {
      exit = t;
      found = true;
      break;
    }
    inside = t;
  }
  if (!found) return outside;
  while (std::abs(exit - inside) > kChordTolerance) {
    const double mid = 0.5 * (inside + exit);
    if (member(along(c, u, mid, box))) {
      inside = mid;
    } else {
      exit = mid;
    }
  }
  return inside;
}

double log_or_neg_inf(double p) { return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity(); }

// Propagates hit-and-run chains from `seeds` until `n` states inside
// `member` are collected.
PointSet propagate(const PointSet& seeds, const Membership& member, const Box& box, int n, int burn_in, Rng& rng) {
  PointSet out(seeds.dimension());
  out.reserve(static_cast<std::size_t>(n));
  const std::size_t m = seeds.size();
  const int per_seed = static_cast<int>((static_cast<std::size_t>(n) + m - 1) / m);
  for (std::size_t s = 0; s < m && static_cast<int>(out.size()) < n; ++s) {
    Point x = seeds.point(s);
    for (int b = 0; b < burn_in; ++b) x = hit_and_run_step(x, member, box, rng);
    for (int j = 0; j < per_seed && static_cast<int>(out.size()) < n; ++j) {
      x = hit_and_run_step(x, member, box, rng);
      out.push_back(x);
    }
  }
  return out;
}

/// A sampler that finds no member does not prove A_t empty: at sigma = 0 it
/// can shrink to the measure-zero set {x*}. If a sampled location is still
/// active the estimate keeps volume 0 but is not an anomaly, and the active
/// locations serve as the member pool.
void settle_empty_estimate(const CertificateSnapshot& snapshot, ActiveSetEstimate& est) {
  if (!est.anomaly || !est.member_pool.empty()) return;
  PointSet members(snapshot.dimension());
  for (const auto& r : snapshot.records()) {
    if (snapshot.is_active(r.location)) members.push_back(r.location);
  }
  if (members.empty()) return;
  est.anomaly = false;
  est.member_pool = std::move(members);
}

}  // namespace

int default_grid_points(int dimension) {
  if (dimension <= 3) return 100;
  if (dimension == 4) return 32;
  return 24;
}

ActiveSetEstimate grid_volume(const CertificateSnapshot& snapshot, int points_per_axis) {
  const int d = snapshot.dimension();
  if (d > 5) throw std::invalid_argument("grid_volume supports d <= 5; use the nested-mc estimator");
  if (points_per_axis < 1) throw std::invalid_argument("grid_volume: points_per_axis must be >= 1");
  const double nodes = std::pow(static_cast<double>(points_per_axis), d);
  if (nodes > kMaxGridNodes) {
    throw std::invalid_argument("grid_volume: " + std::to_string(points_per_axis) + "^" + std::to_string(d) +
                                " nodes exceeds 1e7; lower points_per_axis or use nested-mc");
  }
  const Box& box = snapshot.domain();
  const auto total = static_cast<std::size_t>(nodes);
  ActiveSetEstimate est;
  est.method = VolumeMethod::Grid;
  est.grid_points_per_axis = points_per_axis;
  est.member_pool = PointSet(d);
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  Point x(static_cast<std::size_t>(d));
  std::size_t active = 0;
  for (std::size_t node = 0; node < total; ++node) {
    for (int k = 0; k < d; ++k) {
      x[k] = box.lower[k] + (box.upper[k] - box.lower[k]) * (idx[k] + 0.5) / points_per_axis;
    }
    if (snapshot.is_active(x)) {
      ++active;
      est.member_pool.push_back(x);
    }
    for (int k = 0; k < d; ++k) {
      if (++idx[k] < points_per_axis) break;
      idx[k] = 0;
    }
  }
  est.volume_fraction = static_cast<double>(active) / static_cast<double>(total);
  const double lv = log_or_neg_inf(est.volume_fraction);
  est.log_volume_ci = {lv, lv};
  est.anomaly = active == 0;
  settle_empty_estimate(snapshot, est);
  return est;
}

Point hit_and_run_move(PointView current, PointView direction, const Membership& member, const Box& box,
                       const std::function<double()>& draw) {
  double t_lo = -std::numeric_limits<double>::infinity();
  double t_hi = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < current.size(); ++k) {
    const double u = direction[k];
    if (u == 0.0) continue;
    const double a = (box.lower[k] - current[k]) / u;
    const double b = (box.upper[k] - current[k]) / u;
    t_lo = std::max(t_lo, std::min(a, b));
    t_hi = std::min(t_hi, std::max(a, b));
  }
  if (!std::isfinite(t_lo) || !std::isfinite(t_hi)) return {current.begin(), current.end()};
  t_lo = std::min(t_lo, 0.0);
  t_hi = std::max(t_hi, 0.0);
  const double hi = chord_end(current, direction, t_hi, member, box);
  const double lo = chord_end(current, direction, t_lo, member, box);
  if (hi - lo <= 0.0) return {current.begin(), current.end()};
  for (int attempt = 0; attempt < kChordRetries; ++attempt) {
    const double s = lo + draw() * (hi - lo);
    Point x = along(current, direction, s, box);
    if (member(x)) return x;
  }
  return {current.begin(), current.end()};
}

Point hit_and_run_step(PointView current, const Membership& member, const Box& box, Rng& rng) {
  const Point u = rng.direction(static_cast<int>(current.size()));
  return hit_and_run_move(current, u, member, box, [&rng] { return rng.uniform(); });
}

Point hit_and_run_step(PointView current, const Membership& member, Rng& rng) {
  return hit_and_run_step(current, member, Box::unit(static_cast<int>(current.size())), rng);
}

SubsetSimulation subset_simulation(const Box& box, const LevelFunction& level, const NestedConfig& config,
                                   Rng& rng) {
  const int d = box.dimension();
  const int n = config.samples_per_level;
  const int keep = std::max(1, static_cast<int>(std::lround(config.p0 * n)));
  SubsetSimulation out;

  PointSet samples(d);
  samples.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) samples.push_back(rng.uniform_point(box));
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[i] = level(samples[i]);

  double log_p = 0.0;
  while (true) {
    const auto members = static_cast<int>(std::count_if(g.begin(), g.end(), [](double v) { return v >= 0.0; }));
    if (members >= keep) {
      log_p += std::log(static_cast<double>(members) / n);
      out.final_members = PointSet(d);
      for (std::size_t i = 0; i < samples.size(); ++i) {
        if (g[i] >= 0.0) out.final_members.push_back(samples[i]);
      }
      break;
    }
    if (out.levels >= config.max_levels) {
      out.anomaly = true;
      return out;
    }
    std::vector<double> sorted = g;
    std::nth_element(sorted.begin(), sorted.begin() + (keep - 1), sorted.end(), std::greater<>());
    const double threshold = sorted[keep - 1];
    PointSet seeds(d);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (g[i] >= threshold) seeds.push_back(samples[i]);
    }
    log_p += std::log(static_cast<double>(seeds.size()) / n);
    ++out.levels;
    const Membership member = [&level, threshold](PointView x) { return level(x) >= threshold; };
    samples = propagate(seeds, member, box, n, config.burn_in, rng);
    g.resize(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) g[i] = level(samples[i]);
  }
  out.probability = std::exp(log_p);
  return out;
}

SubsetSimulation nested_fixed_levels(const Box& box, const std::vector<Membership>& levels,
                                     const NestedConfig& config, Rng& rng) {
  const int d = box.dimension();
  const int n = config.samples_per_level;
  SubsetSimulation out;
  PointSet samples(d);
  for (int i = 0; i < n; ++i) samples.push_back(rng.uniform_point(box));
  double p = 1.0;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    PointSet members(d);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (levels[k](samples[i])) members.push_back(samples[i]);
    }
    p *= static_cast<double>(members.size()) / static_cast<double>(samples.size());
    ++out.levels;
    if (members.empty()) {
      out.anomaly = true;
      out.probability = 0.0;
      return out;
    }
    if (k + 1 == levels.size()) {
      out.final_members = std::move(members);
      break;
    }
    samples = propagate(members, levels[k], box, n, config.burn_in, rng);
  }
  out.probability = p;
  return out;
}

ActiveSetEstimate nested_volume(const CertificateSnapshot& snapshot, const NestedConfig& config, Rng& rng) {
  const double ell = snapshot.active_bound();
  const LevelFunction level = [&snapshot, ell](PointView x) {
    if (snapshot.region() && !snapshot.region()->contains(x)) return -std::numeric_limits<double>::infinity();
    return snapshot.envelope(x) - ell;
  };
  ActiveSetEstimate est;
  est.method = VolumeMethod::NestedMc;
  est.nested = config;
  est.member_pool = PointSet(snapshot.dimension());
  double sum = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < config.repeats; ++r) {
    Rng rep = rng.split(static_cast<std::uint64_t>(r));
    SubsetSimulation sim = subset_simulation(snapshot.domain(), level, config, rep);
    const double v = sim.anomaly ? 0.0 : sim.probability;
    est.anomaly = est.anomaly || sim.anomaly;
    est.levels = std::max(est.levels, sim.levels);
    sum += v;
    lo = std::min(lo, log_or_neg_inf(v));
    hi = std::max(hi, log_or_neg_inf(v));
    if (est.member_pool.empty() && !sim.anomaly) est.member_pool = std::move(sim.final_members);
  }
  est.volume_fraction = sum / config.repeats;
  est.log_volume_ci = {lo, hi};
  if (est.volume_fraction == 0.0) est.anomaly = true;
  settle_empty_estimate(snapshot, est);
  return est;
}

PointSet sample_active_pool(const CertificateSnapshot& snapshot, int count, Rng& rng) {
  const int d = snapshot.dimension();
  const Box& box = snapshot.domain();
  PointSet pool(d);
  pool.reserve(static_cast<std::size_t>(count));
  const int max_attempts = std::max(1000, 100 * count);
  int attempts = 0;
  while (static_cast<int>(pool.size()) < count && attempts < max_attempts) {
    Point x = rng.uniform_point(box);
    ++attempts;
    if (snapshot.is_active(x)) pool.push_back(x);
    if (attempts >= 200 && static_cast<double>(pool.size()) < 0.01 * attempts) break;
  }
  if (static_cast<int>(pool.size()) >= count) return pool;

  // Hit-and-run fallback seeded at the highest-LCB active record.
  std::vector<std::size_t> order(snapshot.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&snapshot](std::size_t a, std::size_t b) {
    const auto& ra = snapshot.record(a);
    const auto& rb = snapshot.record(b);
    return ra.mean - ra.radius > rb.mean - rb.radius;
  });
  std::optional<Point> seed;
  for (std::size_t i : order) {
    if (snapshot.is_active(snapshot.record(i).location)) {
      seed = snapshot.record(i).location;
      break;
    }
  }
  if (!seed && !pool.empty()) seed = pool.point(0);
  if (!seed) {
    throw AnomalyError("active set appears empty (no member found); the Lipschitz estimate may be too small");
  }
  const Membership member = [&snapshot](PointView x) { return snapshot.is_active(x); };
  Point x = *seed;
  for (int b = 0; b < 10; ++b) x = hit_and_run_step(x, member, box, rng);
  while (static_cast<int>(pool.size()) < count) {
    x = hit_and_run_step(x, member, box, rng);
    pool.push_back(x);
  }
  return pool;
}

ActiveSetEstimate estimate_active_set(const CertificateSnapshot& snapshot, const VolumeSpec& spec, Rng& rng) {
  VolumeMethod method = spec.method;
  if (method == VolumeMethod::Auto) method = snapshot.dimension() <= 5 ? VolumeMethod::Grid : VolumeMethod::NestedMc;
  if (method == VolumeMethod::Grid) {
    const int m = spec.grid_points_per_axis > 0 ? spec.grid_points_per_axis : default_grid_points(snapshot.dimension());
    return grid_volume(snapshot, m);
  }
  return nested_volume(snapshot, spec.nested, rng);
}

GapReport gap_report(const CertificateSnapshot& snapshot, const ActiveSetEstimate& estimate) {
  return gap_report(snapshot, estimate.member_pool);
}

}  // namespace cgp
