#include "cgp/trust_region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "cgp/maximizer.hpp"
#include "cgp/sobol.hpp"

namespace cgp {

namespace {

constexpr double kImprovementTol = 1e-9;

double domain_half_diameter(int d) { return 0.5 * std::sqrt(static_cast<double>(d)); }

double best_mean_in(const SampleStore& store, const Box& box) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& r : store.records()) {
    if (box.contains(r.location)) best = std::max(best, r.mean);
  }
  return best;
}

}  // namespace

Box TrustRegion::box() const {
  Box b;
  b.lower.resize(center.size());
  b.upper.resize(center.size());
  for (std::size_t k = 0; k < center.size(); ++k) {
    b.lower[k] = std::max(0.0, center[k] - radius);
    b.upper[k] = std::min(1.0, center[k] + radius);
  }
  return b;
}

TrustRegion update_radius(TrustRegion region, RegionEvent event, const TrustRegionParams& params,
                          const Point* next_center) {
  const double cap = domain_half_diameter(static_cast<int>(region.center.size()));
  switch (event) {
    case RegionEvent::Success:
      region.radius = std::min(2.0 * region.radius, cap);
      region.failures = 0;
      break;
    case RegionEvent::Failure:
      if (++region.failures >= params.tau_fail) {
        region.radius = std::max(0.5 * region.radius, params.r_min);
        region.failures = 0;
      }
      break;
    case RegionEvent::Restart:
      if (next_center == nullptr) throw std::invalid_argument("update_radius: restart needs a new center");
      region.center = *next_center;
      region.radius = std::min(params.r0, cap);
      region.failures = 0;
      region.visits = 0;
      region.restarts += 1;
      break;
  }
  region.radius_history.push_back(region.radius);
  return region;
}

double local_lower_certificate(const CertificateSnapshot& snapshot, const Box& region) {
  double ell = -std::numeric_limits<double>::infinity();
  for (const auto& r : snapshot.records()) {
    if (region.contains(r.location)) ell = std::max(ell, r.mean - r.radius);
  }
  return ell;
}

double region_upper_bound(const CertificateSnapshot& snapshot, const Box& region, Rng& rng,
                          const RegionBoundOptions& options) {
  const int d = snapshot.dimension();
  double u = -std::numeric_limits<double>::infinity();
  Point center(d);
  for (int k = 0; k < d; ++k) center[k] = 0.5 * (region.lower[k] + region.upper[k]);
  u = std::max(u, snapshot.envelope(center));
  std::size_t best_local = snapshot.size();
  for (std::size_t i = 0; i < snapshot.size(); ++i) {
    const auto& r = snapshot.record(i);
    if (!region.contains(r.location)) continue;
    u = std::max(u, snapshot.envelope(r.location));
    if (best_local == snapshot.size() || r.mean > snapshot.record(best_local).mean) best_local = i;
  }
  if (d <= 10) {
    Point corner(d);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
      for (int k = 0; k < d; ++k) corner[k] = (mask >> k) & 1 ? region.upper[k] : region.lower[k];
      u = std::max(u, snapshot.envelope(corner));
    }
  }
  std::vector<Point> starts;
  starts.push_back(center);
  if (best_local < snapshot.size()) starts.push_back(snapshot.record(best_local).location);
  while (static_cast<int>(starts.size()) < options.restarts) starts.push_back(rng.uniform_point(region));
  const ScoreFunction env = [&snapshot](PointView x) { return Scored{snapshot.envelope(x), 0.0}; };
  const Feasibility any = [](PointView) { return true; };
  const ScoredPoint found = maximize_with_restarts(starts, env, any, region, options.budget, rng);
  return std::max(u, found.score.value);
}

bool region_certified_below(const CertificateSnapshot& snapshot, const Box& region, double threshold, int max_cells) {
  const int d = snapshot.dimension();
  const double L = snapshot.lipschitz();
  struct Cell {
    Box box;
    double upper;  // sound bound on max U over the cell
  };
  auto bound = [&](const Box& b) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : snapshot.records()) {
      double s2 = 0.0;
      for (int k = 0; k < d; ++k) {
        const double far = std::max(std::abs(r.location[k] - b.lower[k]), std::abs(r.location[k] - b.upper[k]));
        s2 += far * far;
      }
      best = std::min(best, r.mean + r.radius + L * std::sqrt(s2));
    }
    return best;
  };
  auto cmp = [](const Cell& a, const Cell& b) { return a.upper < b.upper; };
  std::priority_queue<Cell, std::vector<Cell>, decltype(cmp)> queue(cmp);
  queue.push({region, bound(region)});
  Point center(d);
  for (int cells = 1;; ++cells) {
    const Cell top = queue.top();
    if (top.upper < threshold) return true;
    for (int k = 0; k < d; ++k) center[k] = 0.5 * (top.box.lower[k] + top.box.upper[k]);
    if (snapshot.envelope(center) >= threshold || cells >= max_cells) return false;
    queue.pop();
    int axis = 0;
    for (int k = 1; k < d; ++k) {
      if (top.box.upper[k] - top.box.lower[k] > top.box.upper[axis] - top.box.lower[axis]) axis = k;
    }
    Box lo = top.box, hi = top.box;
    lo.upper[axis] = center[axis];
    hi.lower[axis] = center[axis];
    queue.push({lo, bound(lo)});
    queue.push({hi, bound(hi)});
  }
}

TrResult tr_run(const NoisyObjective& objective, const RunConfig& config) {
  if (config.stopping.kind != StoppingRule::Kind::FixedBudget) {
    throw ConfigError("trust-region mode supports only the fixed-budget stopping rule");
  }
  CgpEngine engine(objective, config);
  const TrustRegionParams& params = config.trust;
  const int d = config.dimension;
  Rng root(config.seed);
  Rng bound_rng = root.split("tr-bounds");
  SobolSequence centers(d, root.split("tr-centers").next_u64());

  std::vector<TrustRegion> regions(static_cast<std::size_t>(params.n_trust));
  for (int j = 0; j < params.n_trust; ++j) {
    TrustRegion& r = regions[static_cast<std::size_t>(j)];
    r.id = j;
    r.center = j < static_cast<int>(params.initial_centers.size()) ? params.initial_centers[static_cast<std::size_t>(j)]
                                                                   : centers.next();
    r.radius = std::min(params.r0, domain_half_diameter(d));
    r.radius_history.push_back(r.radius);
  }
  {
    std::vector<Point> pts;
    for (const auto& r : regions) pts.push_back(r.center);
    engine.initialize(pts);
  }

  auto refresh_local = [&](TrustRegion& r, const CertificateSnapshot& snap) {
    const Box b = r.box();
    r.local_ell = local_lower_certificate(snap, b);
    r.best_local_mean = best_mean_in(engine.store(), b);
  };

  while (engine.budget_left()) {
    const int iter = engine.begin_iteration();
    CertificateSnapshot snap = engine.snapshot();
    const double ell = snap.ell();
    std::vector<double> u(regions.size());
    for (std::size_t j = 0; j < regions.size(); ++j) {
      Rng rr = bound_rng.split(static_cast<std::uint64_t>(iter) * 1024u + j);
      u[j] = region_upper_bound(snap, regions[j].box(), rr, {config.maximizer_restarts, params.bound_budget});
    }
    // certified restarts; new centers get one evaluation each
    std::vector<std::size_t> restarted;
    for (std::size_t j = 0; j < regions.size(); ++j) {
      // the estimate only gates the check: a restart needs a proven bound
      if (!certified_restart_check(u[j], ell)) continue;
      if (!region_certified_below(snap, regions[j].box(), ell)) continue;
      TrustRegion& r = regions[j];
      r.restart_log.push_back({engine.observations(), r.center, r.radius, u[j], ell});
      const Point c = centers.next();
      r = update_radius(std::move(r), RegionEvent::Restart, params, &c);
      restarted.push_back(j);
    }
    if (!restarted.empty()) {
      for (std::size_t j : restarted) {
        if (!engine.budget_left()) break;
        const std::size_t idx = engine.observe(regions[j].center, ell, static_cast<int>(j));
        (void)idx;
      }
      if (!engine.budget_left()) break;
      snap = engine.snapshot();
      for (std::size_t j : restarted) {
        Rng rr = bound_rng.split(static_cast<std::uint64_t>(iter) * 1024u + 512u + j);
        u[j] = region_upper_bound(snap, regions[j].box(), rr, {config.maximizer_restarts, params.bound_budget});
      }
    }
    std::size_t pick = 0;
    for (std::size_t j = 1; j < regions.size(); ++j) {
      if (u[j] > u[pick]) pick = j;
    }
    TrustRegion& region = regions[pick];
    const Box box = region.box();
    const double before = best_mean_in(engine.store(), box);
    const CertificateSnapshot local = snap.localized(local_lower_certificate(snap, box), box);
    Point x;
    try {
      x = select_query(local, engine.acquisition_rng(), {config.maximizer_restarts, config.maximizer_budget});
    } catch (const AnomalyError&) {
      // the best local record always satisfies U >= local ell; reaching here
      // means the sampler found no member, so fall back to the center
      x = region.center;
    }
    const int rid = static_cast<int>(pick);
    engine.observe(x, snap.ell(), rid);
    if (params.replicate) engine.replicate(local, snap.ell(), rid, [&local](std::size_t i) { return local.domain().contains(local.record(i).location); });
    region.visits += 1;
    region.total_visits += 1;
    const double now = best_mean_in(engine.store(), box);
    region = update_radius(std::move(region), now > before + kImprovementTol ? RegionEvent::Success : RegionEvent::Failure,
                           params);
  }

  TrResult out;
  const CertificateSnapshot final_snap = engine.snapshot();
  for (auto& r : regions) refresh_local(r, final_snap);
  std::size_t winner = 0;
  for (std::size_t j = 1; j < regions.size(); ++j) {
    if (regions[j].best_local_mean > regions[winner].best_local_mean) winner = j;
  }
  out.run = engine.finish(StopReason::Budget);
  const Box wbox = regions[winner].box();
  out.run.certificate = final_snap.localized(regions[winner].local_ell, wbox);
  out.regions = std::move(regions);
  out.winner = static_cast<int>(winner);
  return out;
}

std::vector<RegionAudit> region_visit_audit(const TrResult& result, const NoisyObjective& objective, Rng& rng,
                                            int probes) {
  const auto& meta = objective.metadata();
  std::vector<RegionAudit> out;
  if (!meta.optimum_value || !meta.optimizer) return out;
  for (const auto& r : result.regions) {
    RegionAudit a;
    a.region = r.id;
    a.visits = r.total_visits;
    a.restarts = r.restarts;
    const Box b = r.box();
    double sup = objective.noiseless(r.center);
    Point best = r.center;
    for (int k = 0; k < probes; ++k) {
      const Point p = rng.uniform_point(b);
      const double v = objective.noiseless(p);
      if (v > sup) sup = v, best = p;
    }
    if (b.contains(*meta.optimizer)) sup = *meta.optimum_value;
    const ScoreFunction f = [&objective](PointView x) { return Scored{objective.noiseless(x), 0.0}; };
    const Feasibility any = [](PointView) { return true; };
    sup = std::max(sup, maximize_es(best, f, any, b, 500, rng).score.value);
    a.gap = std::max(0.0, *meta.optimum_value - sup);
    for (const auto& ev : r.restart_log) {
      TrustRegion old;
      old.center = ev.old_center;
      old.radius = ev.old_radius;
      if (old.box().contains(*meta.optimizer)) a.false_restarts += 1;
    }
    out.push_back(a);
  }
  return out;
}

}  // namespace cgp
