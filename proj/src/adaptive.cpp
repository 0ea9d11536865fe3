#include "cgp/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "cgp/sobol.hpp"

namespace cgp {

int eligibility_threshold(int budget, double delta, double sigma) {
  if (sigma == 0.0) return 1;
  return std::max(1, static_cast<int>(std::ceil(std::log(budget / delta))));
}

std::vector<std::pair<std::size_t, std::size_t>> eligible_pairs(const SampleStore& store, int budget, double delta,
                                                                double sigma) {
  const int threshold = eligibility_threshold(budget, delta, sigma);
  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (store[i].count >= threshold) ok.push_back(i);
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < ok.size(); ++a) {
    for (std::size_t b = a + 1; b < ok.size(); ++b) pairs.emplace_back(ok[a], ok[b]);
  }
  return pairs;
}

bool detect_violation(const CertificateSnapshot& snapshot, std::size_t i, std::size_t j) {
  const auto& a = snapshot.record(i);
  const auto& b = snapshot.record(j);
  const double d = distance(a.location, b.location);
  if (!(d > 0.0)) throw std::invalid_argument("detect_violation: records share a location");
  // a pair sitting exactly on a cone of slope L must not fire through rounding
  const double lhs = std::abs(a.mean - b.mean) - 2.0 * (a.radius + b.radius);
  const double rhs = snapshot.lipschitz() * d;
  return lhs - rhs > 1e-12 * std::max(1.0, std::abs(rhs));
}

LipschitzInit init_lipschitz(const SampleStore& store) {
  double best = 0.0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    for (std::size_t j = i + 1; j < store.size(); ++j) {
      const double d = distance(store[i].location, store[j].location);
      if (d > 0.0) best = std::max(best, std::abs(store[i].mean - store[j].mean) / d);
    }
  }
  if (!(best > kLipschitzFloor)) return {kLipschitzFloor, true};
  return {best, false};
}

LipschitzInit init_lipschitz(const NoisyObjective& objective, int k, Rng& rng) {
  if (k < 2) throw ConfigError("init_lipschitz needs at least two warm samples");
  SampleStore store(objective.dimension());
  for (const Point& x : sobol_init(objective.dimension(), k, rng.next_u64())) store.ingest(x, objective.evaluate(x, rng));
  return init_lipschitz(store);
}

DoublingMonitor::DoublingMonitor(CgpEngine& engine)
    : engine_(engine),
      threshold_(eligibility_threshold(engine.config().budget, engine.config().delta, engine.config().sigma)) {
  log_.initial = engine.lipschitz();
  log_.final_value = engine.lipschitz();
}

void DoublingMonitor::double_once(std::size_t i, std::size_t j) {
  const double before = engine_.lipschitz();
  engine_.set_lipschitz(2.0 * before);
  log_.events.push_back({engine_.observations(), i, j, before, 2.0 * before});
  log_.final_value = engine_.lipschitz();
}

void DoublingMonitor::double_on_anomaly() {
  const std::size_t none = std::numeric_limits<std::size_t>::max();
  double_once(none, none);
}

void DoublingMonitor::scan(const std::vector<std::size_t>& fresh) {
  const SampleStore& store = engine_.store();
  std::vector<std::size_t> fresh_ok;
  for (std::size_t i : fresh) {
    if (store[i].count >= threshold_) fresh_ok.push_back(i);
  }
  if (fresh_ok.empty()) return;
  std::sort(fresh_ok.begin(), fresh_ok.end());
  fresh_ok.erase(std::unique(fresh_ok.begin(), fresh_ok.end()), fresh_ok.end());
  const CertificateSnapshot base = engine_.snapshot();
  for (std::size_t i : fresh_ok) {
    for (std::size_t j = 0; j < store.size(); ++j) {
      if (j == i || store[j].count < threshold_) continue;
      // a pair of two fresh records is visited once
      if (j < i && std::binary_search(fresh_ok.begin(), fresh_ok.end(), j)) continue;
      while (!exhausted() && detect_violation(base.with_lipschitz(engine_.lipschitz()), i, j)) {
        double_once(std::min(i, j), std::max(i, j));
      }
      if (exhausted()) return;
    }
  }
}

void mark_certificate_validity(RunResult& result) {
  for (auto& row : result.trace) row.cert_valid = row.lipschitz == result.lipschitz;
}

AdaptiveResult adaptive_run(const NoisyObjective& objective, const RunConfig& config) {
  CgpEngine engine(objective, config);
  std::unique_ptr<DoublingMonitor> monitor;
  if (config.lipschitz > 0.0) {
    engine.initialize_uniform();
  } else {
    Rng shift = Rng(config.seed).split("sobol-shift");
    const auto warm = sobol_init(config.dimension, std::min(config.warm_samples, config.budget), shift.next_u64());
    engine.initialize(warm, [](const SampleStore& store) { return init_lipschitz(store).value; });
  }
  monitor = std::make_unique<DoublingMonitor>(engine);
  engine.on_observations = [&monitor](const std::vector<std::size_t>& fresh) { monitor->scan(fresh); };
  // warm samples are scanned once the monitor exists
  {
    std::vector<std::size_t> all(engine.store().size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    monitor->scan(all);
  }

  auto finish = [&](StopReason reason, std::string message) {
    monitor->finalize();
    AdaptiveResult out{engine.finish(reason, std::move(message)), monitor->log()};
    mark_certificate_validity(out.run);
    return out;
  };
  while (true) {
    if (monitor->exhausted()) return finish(StopReason::Anomaly, "more than 64 doubling events");
    switch (engine.step()) {
      case CgpEngine::Status::Continue: break;
      case CgpEngine::Status::Stopped: return finish(engine.stop_reason(), {});
      case CgpEngine::Status::Anomaly: monitor->double_on_anomaly(); break;
    }
  }
}

}  // namespace cgp
