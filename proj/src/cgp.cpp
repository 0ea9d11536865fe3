#include "cgp/cgp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cgp/maximizer.hpp"

namespace cgp {

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::Budget: return "budget";
    case StopReason::VolumeThreshold: return "volume-threshold";
    case StopReason::GapThreshold: return "gap-threshold";
    case StopReason::Anomaly: return "anomaly";
  }
  return "budget";
}

double score(const CertificateSnapshot& snapshot, PointView x) {
  const auto [env, dist] = snapshot.envelope_and_distance(x);
  return env - snapshot.lipschitz() * dist;
}

Point select_query(const CertificateSnapshot& snapshot, Rng& rng, const MaximizerOptions& options) {
  const PointSet pool = sample_active_pool(snapshot, options.restarts, rng);
  std::vector<Point> starts;
  starts.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) starts.push_back(pool.point(i));
  const ScoreFunction objective = [&snapshot](PointView x) {
    const auto [env, dist] = snapshot.envelope_and_distance(x);
    return Scored{env - snapshot.lipschitz() * dist, dist};
  };
  const Feasibility feasible = [&snapshot](PointView x) { return snapshot.is_active(x); };
  return maximize_with_restarts(starts, objective, feasible, snapshot.domain(), options.budget, rng).x;
}

int replication_count(double radius, double beta_target) {
  if (!(beta_target > 0.0)) throw std::invalid_argument("replication_count: beta_target must be > 0");
  const double ratio = radius / beta_target;
  return std::max(1, static_cast<int>(std::ceil(ratio * ratio - 1e-12)));
}

bool stopping_check(const StoppingRule& rule, const GapReport* gap, const ActiveSetEstimate* estimate) {
  switch (rule.kind) {
    case StoppingRule::Kind::FixedBudget: return false;
    case StoppingRule::Kind::VolumeBelow:
      return estimate != nullptr && !estimate->anomaly && estimate->volume_fraction < rule.threshold;
    case StoppingRule::Kind::GapBelow: return gap != nullptr && gap->eps < rule.threshold;
  }
  return false;
}

CgpEngine::CgpEngine(const NoisyObjective& objective, const RunConfig& config)
    : objective_(objective),
      config_(config),
      store_(config.dimension),
      root_(config.seed),
      acquisition_(root_.split("acquisition")),
      volume_(root_.split("volume")),
      noise_(root_.split("noise")),
      lipschitz_(config.lipschitz) {
  config_.validate();
  if (objective.dimension() != config.dimension) throw ConfigError("objective and config dimensions differ");
  if (!(std::abs(objective.sigma() - config.sigma) <= 1e-15)) {
    throw ConfigError("config sigma must match the objective's noise scale");
  }
}

CertificateSnapshot CgpEngine::snapshot() const {
  return CertificateSnapshot::from_store(store_, lipschitz_, config_.sigma, config_.delta, config_.budget);
}

std::size_t CgpEngine::observe(PointView x, double row_ell, int region) {
  const double y = objective_.evaluate(x, noise_);
  const std::size_t idx = store_.ingest(x, y);
  TraceRow row;
  row.t = store_.total();
  row.iteration = iteration_;
  row.query.assign(x.begin(), x.end());
  row.y = y;
  row.ell = row_ell;
  row.gap = last_gap_;
  row.vol_fraction = pending_volume_;
  pending_volume_.reset();
  const auto& best = store_[store_.best_index()];
  row.best_mean = best.mean;
  if (const auto& fstar = objective_.metadata().optimum_value) row.regret = *fstar - objective_.noiseless(best.location);
  row.lipschitz = lipschitz_;
  row.region = region;
  trace_.push_back(std::move(row));
  return idx;
}

void CgpEngine::initialize_uniform() { initialize({acquisition_.uniform_point(config_.dimension)}); }

void CgpEngine::initialize(const std::vector<Point>& points,
                           const std::function<double(const SampleStore&)>& choose_lipschitz) {
  const std::size_t first = trace_.size();
  std::vector<std::size_t> touched;
  for (const Point& x : points) {
    if (!budget_left()) break;
    touched.push_back(observe(x, -std::numeric_limits<double>::infinity()));
  }
  if (choose_lipschitz) lipschitz_ = choose_lipschitz(store_);
  const double ell = snapshot().ell();
  for (std::size_t k = first; k < trace_.size(); ++k) {
    trace_[k].ell = ell;
    trace_[k].lipschitz = lipschitz_;
  }
  if (on_observations && !touched.empty()) on_observations(touched);
}

std::vector<std::size_t> CgpEngine::replicate(const CertificateSnapshot& current, double row_ell, int region,
                                              const std::function<bool(std::size_t)>& allow) {
  std::vector<std::size_t> touched;
  if (config_.sigma == 0.0 || !budget_left()) return touched;
  const int t = store_.total();
  // the schedule is indexed by iterations (queries), not by observations
  const double target = beta_target(std::max(1, iteration_), config_.sigma, config_.budget, config_.delta);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < current.size(); ++i) {
    const auto& r = current.record(i);
    if (r.radius > target && (!allow || allow(i)) && current.is_active(r.location)) candidates.push_back(i);
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&current](std::size_t a, std::size_t b) {
    return current.record(a).radius > current.record(b).radius;
  });
  int cap = (config_.budget - t) / 2;
  for (std::size_t i : candidates) {
    if (cap <= 0) break;
    const int reps = std::min(cap, replication_count(current.record(i).radius, target));
    const Point loc = current.record(i).location;
    for (int k = 0; k < reps; ++k) observe(loc, row_ell, region);
    cap -= reps;
    touched.push_back(i);
  }
  return touched;
}

CgpEngine::Status CgpEngine::step() {
  if (!budget_left()) {
    stop_reason_ = StopReason::Budget;
    return Status::Stopped;
  }
  ++iteration_;
  const CertificateSnapshot snap = snapshot();
  refreshed_ = false;
  if (iteration_ % config_.volume_every == 0) {
    Rng vol = volume_.split(static_cast<std::uint64_t>(iteration_));
    const ActiveSetEstimate est = estimate_active_set(snap, config_.volume, vol);
    std::optional<GapReport> gap;
    if (!est.member_pool.empty()) gap = gap_report(snap, est);
    refreshed_ = true;
    last_volume_ = est.volume_fraction;
    pending_volume_ = est.volume_fraction;
    if (gap) last_gap_ = gap;
    if (stopping_check(config_.stopping, gap ? &*gap : nullptr, &est)) {
      stop_reason_ = config_.stopping.kind == StoppingRule::Kind::VolumeBelow ? StopReason::VolumeThreshold
                                                                               : StopReason::GapThreshold;
      return Status::Stopped;
    }
  }
  Point x;
  try {
    x = select_query(snap, acquisition_, {config_.maximizer_restarts, config_.maximizer_budget});
  } catch (const AnomalyError&) {
    pending_volume_.reset();
    stop_reason_ = StopReason::Anomaly;
    return Status::Anomaly;
  }
  const double row_ell = snap.ell();
  const std::size_t idx = observe(x, row_ell);
  if (on_observations) on_observations({idx});
  const std::vector<std::size_t> touched = replicate(snap, row_ell);
  if (!touched.empty() && on_observations) on_observations(touched);
  return Status::Continue;
}

RunResult CgpEngine::finish(StopReason reason, std::string message) const {
  RunResult out;
  const std::size_t best = store_.best_index();
  out.best_point = store_[best].location;
  out.best_mean = store_[best].mean;
  out.certificate = snapshot();
  out.trace = trace_;
  out.stop_reason = reason;
  if (const auto& fstar = objective_.metadata().optimum_value) {
    out.final_regret = *fstar - objective_.noiseless(out.best_point);
  }
  out.store = store_;
  out.lipschitz = lipschitz_;
  out.iterations = iteration_;
  out.last_volume = last_volume_;
  out.last_gap = last_gap_;
  out.message = std::move(message);
  return out;
}

RunResult cgp_run(const NoisyObjective& objective, const RunConfig& config) {
  CgpEngine engine(objective, config);
  engine.initialize_uniform();
  while (true) {
    switch (engine.step()) {
      case CgpEngine::Status::Continue: continue;
      case CgpEngine::Status::Stopped: return engine.finish(engine.stop_reason());
      case CgpEngine::Status::Anomaly:
        return engine.finish(StopReason::Anomaly, "active set empty under the known-L assumption");
    }
  }
}

}  // namespace cgp
