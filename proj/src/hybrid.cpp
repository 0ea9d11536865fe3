#include "cgp/hybrid.hpp"

#include <algorithm>
#include <cmath>

namespace cgp {

namespace {

constexpr int kDeferIterations = 10;
constexpr int kMleEvery = 20;
constexpr std::size_t kRefitEveryAfter = 200;
constexpr int kRefitStride = 5;

}  // namespace

std::string to_string(Phase2 phase) { return phase == Phase2::Gp ? "gp" : "cgp"; }

double local_lipschitz(const CertificateSnapshot& snapshot) {
  // A sampled location pins the envelope to its own UCB, so membership is
  // judged from the other records (leave-one-out).
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < snapshot.size(); ++i) {
    const auto& loc = snapshot.record(i).location;
    if (snapshot.region() && !snapshot.region()->contains(loc)) continue;
    if (snapshot.size() == 1 || snapshot.reaches_ell(snapshot.envelope_excluding(loc, i))) active.push_back(i);
  }
  if (active.size() < 2) throw std::invalid_argument("local_lipschitz needs two active records");
  // quotients are anchored at the best-mean record: they measure how fast f
  // falls away from the incumbent, which is what separates a cone from a
  // smooth peak once A_t has shrunk around it
  std::size_t anchor = active.front();
  for (std::size_t i : active) {
    if (snapshot.record(i).mean > snapshot.record(anchor).mean) anchor = i;
  }
  const auto& rb = snapshot.record(anchor);
  double best = 0.0;
  for (std::size_t i : active) {
    if (i == anchor) continue;
    const auto& rj = snapshot.record(i);
    const double num = std::abs(rb.mean - rj.mean) - (rb.radius + rj.radius);
    if (num > 0.0) best = std::max(best, num / distance(rb.location, rj.location));
  }
  return best;
}

double smoothness_ratio(double local, double global) {
  if (!(global > 0.0)) throw std::invalid_argument("smoothness_ratio: global Lipschitz must be > 0");
  return std::max(0.0, local / global);
}

HybridResult hybrid_run(const NoisyObjective& objective, const RunConfig& config) {
  const HybridParams& hp = config.hybrid;
  CgpEngine engine(objective, config);
  engine.initialize_uniform();
  const double phase1_cap = hp.phase1_budget_fraction * config.budget;

  auto finish = [&](HybridResult&& out, StopReason reason, std::string message) {
    out.run = engine.finish(reason, std::move(message));
    return std::move(out);
  };

  HybridResult out;
  // phase 1
  while (true) {
    const CgpEngine::Status status = engine.step();
    if (status == CgpEngine::Status::Anomaly) {
      return finish(std::move(out), StopReason::Anomaly, "active set empty under the known-L assumption");
    }
    if (status == CgpEngine::Status::Stopped) return finish(std::move(out), engine.stop_reason(), {});
    const bool small = engine.refreshed_last_step() && engine.last_volume() && *engine.last_volume() < hp.phase1_volume;
    if (small || engine.observations() > phase1_cap || !engine.budget_left()) break;
  }

  HybridDecision& decision = out.decision;
  auto freeze = [&]() {
    out.frozen = engine.snapshot();
    decision.t_switch = engine.observations();
    decision.frozen_certificate =
        export_certificate(*out.frozen, {"hybrid", config.seed, decision.t_switch});
  };
  freeze();
  std::optional<double> rho;
  for (int attempt = 0; attempt < 2 && !rho; ++attempt) {
    try {
      rho = smoothness_ratio(local_lipschitz(*out.frozen), engine.lipschitz());
    } catch (const std::invalid_argument&) {
      if (attempt == 1) break;
      for (int k = 0; k < kDeferIterations && engine.budget_left(); ++k) {
        const CgpEngine::Status status = engine.step();
        if (status == CgpEngine::Status::Anomaly) {
          return finish(std::move(out), StopReason::Anomaly, "active set empty under the known-L assumption");
        }
        if (status == CgpEngine::Status::Stopped) break;
      }
      freeze();
    }
  }
  if (rho) {
    decision.rho_hat = *rho;
    decision.phase2 = *rho < hp.rho_thresh ? Phase2::Gp : Phase2::Cgp;
  } else {
    decision.rho_available = false;
    decision.phase2 = Phase2::Cgp;
    decision.warning = "local Lipschitz estimate unavailable; continuing with CGP";
  }

  if (decision.phase2 == Phase2::Cgp) {
    while (true) {
      const CgpEngine::Status status = engine.step();
      if (status == CgpEngine::Status::Continue) continue;
      if (status == CgpEngine::Status::Anomaly) {
        return finish(std::move(out), StopReason::Anomaly, "active set empty under the known-L assumption");
      }
      return finish(std::move(out), engine.stop_reason(), {});
    }
  }

  // phase 2: GP-UCB over pools drawn from the frozen active set
  const CertificateSnapshot& frozen = *out.frozen;
  Rng gp_rng = Rng(config.seed).split("gp");
  Rng pool_rng = gp_rng.split("pool");
  Rng mle_rng = gp_rng.split("mle");
  std::optional<GpModel> model;
  GpHyper hyper;
  std::size_t last_fit_size = 0;
  int since_mle = kMleEvery;
  const double ell = frozen.ell();
  while (engine.budget_left()) {
    engine.begin_iteration();
    const SampleStore& store = engine.store();
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < store.size(); ++i) {
      if (frozen.is_active(store[i].location)) train.push_back(i);
    }
    if (train.size() > kGpMaxPoints) train.erase(train.begin(), train.end() - static_cast<std::ptrdiff_t>(kGpMaxPoints));
    const bool refit = !model || train.size() <= kRefitEveryAfter ||
                       train.size() >= last_fit_size + static_cast<std::size_t>(kRefitStride);
    if (refit && !train.empty()) {
      PointSet xs(config.dimension);
      std::vector<double> ys, noise;
      double centre = 0.0;
      for (std::size_t i : train) centre += store[i].mean;
      centre /= static_cast<double>(train.size());
      for (std::size_t i : train) {
        xs.push_back(store[i].location);
        ys.push_back(store[i].mean - centre);
        noise.push_back(config.sigma * config.sigma / store[i].count);
      }
      const bool mle = hp.mle && since_mle >= kMleEvery;
      model = gp_fit(xs, ys, noise, mle ? HyperMode::Mle : HyperMode::Fixed, hyper, mle_rng);
      if (mle) {
        hyper = model->hyper();
        decision.refits.push_back(hyper);
        since_mle = 0;
      }
      last_fit_size = train.size();
    }
    PointSet pool;
    try {
      pool = sample_active_pool(frozen, config.volume.pool_size, pool_rng);
    } catch (const AnomalyError&) {
      return finish(std::move(out), StopReason::Anomaly, "frozen active set has no members");
    }
    Point x = model ? gp_ucb_select(*model, engine.observations(), config.delta, pool) : pool.point(0);
    engine.observe(x, ell);
    since_mle += 1;
  }
  return finish(std::move(out), StopReason::Budget, {});
}

}  // namespace cgp
