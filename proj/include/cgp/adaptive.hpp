#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "cgp/cgp.hpp"

namespace cgp {

struct DoublingEvent {
  int t = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  double before = 0.0;
  double after = 0.0;
};

struct DoublingLog {
  double initial = 0.0;
  double final_value = 0.0;
  std::vector<DoublingEvent> events;
};

/// ceil(ln(T / delta)); 1 when sigma == 0 (exact observations need no
/// replication before their differences are trustworthy).
int eligibility_threshold(int budget, double delta, double sigma);

/// Unordered pairs (i < j) whose counts both reach the threshold.
std::vector<std::pair<std::size_t, std::size_t>> eligible_pairs(const SampleStore& store, int budget, double delta,
                                                                double sigma = 1.0);

/// |mu_i - mu_j| - 2 (r_i + r_j) > L d(x_i, x_j), radii taken from the snapshot.
bool detect_violation(const CertificateSnapshot& snapshot, std::size_t i, std::size_t j);

struct LipschitzInit {
  double value = 0.0;
  bool floored = false;
};

inline constexpr double kLipschitzFloor = 1e-3;

/// Largest pairwise difference quotient, floored at kLipschitzFloor.
LipschitzInit init_lipschitz(const SampleStore& store);
/// Evaluates `k` seeded Sobol points (noise from `rng`) and returns the quotient.
LipschitzInit init_lipschitz(const NoisyObjective& objective, int k, Rng& rng);

struct AdaptiveResult {
  RunResult run;
  DoublingLog log;
};

inline constexpr int kMaxDoublings = 64;

AdaptiveResult adaptive_run(const NoisyObjective& objective, const RunConfig& config);

/// Doubling machinery shared with the hybrid driver.
class DoublingMonitor {
 public:
  explicit DoublingMonitor(CgpEngine& engine);

  /// Scans pairs touching `fresh` records; doubles L until none is violated.
  void scan(const std::vector<std::size_t>& fresh);
  /// Empty active set: one doubling without a witnessing pair.
  void double_on_anomaly();
  bool exhausted() const { return static_cast<int>(log_.events.size()) > kMaxDoublings; }
  const DoublingLog& log() const { return log_; }
  void finalize() { log_.final_value = engine_.lipschitz(); }

 private:
  void double_once(std::size_t i, std::size_t j);

  CgpEngine& engine_;
  DoublingLog log_;
  int threshold_;
};

/// Marks rows whose Lipschitz value equals the final one.
void mark_certificate_validity(RunResult& result);

}  // namespace cgp
