#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cgp/certificate.hpp"
#include "cgp/model.hpp"
#include "cgp/volume.hpp"

namespace cgp {

/// One observation of a run.
struct TraceRow {
  int t = 0;          // 1-based observation index
  int iteration = 0;  // 0 for initialisation
  Point query;
  double y = 0.0;
  double ell = 0.0;  // lower certificate of the iteration that issued the query
  std::optional<GapReport> gap;
  std::optional<double> vol_fraction;  // set on the first row after a refresh
  double best_mean = 0.0;
  std::optional<double> regret;
  double lipschitz = 0.0;
  bool cert_valid = true;
  int region = -1;
};

enum class StopReason { Budget, VolumeThreshold, GapThreshold, Anomaly };
std::string to_string(StopReason reason);

struct RunResult {
  Point best_point;
  double best_mean = 0.0;
  std::optional<CertificateSnapshot> certificate;
  std::vector<TraceRow> trace;
  StopReason stop_reason = StopReason::Budget;
  std::optional<double> final_regret;
  SampleStore store{1};
  double lipschitz = 0.0;
  int iterations = 0;
  std::optional<double> last_volume;
  std::optional<GapReport> last_gap;
  std::string message;
};

struct MaximizerOptions {
  int restarts = 10;
  int budget = 2000;
};

/// U_t(x) - L min_i d(x, x_i).
double score(const CertificateSnapshot& snapshot, PointView x);

/// Approximate argmax of the score over A_t (restricted to the snapshot's
/// region, if any). Ties prefer points farther from existing samples.
/// Throws AnomalyError when no active starting point exists.
Point select_query(const CertificateSnapshot& snapshot, Rng& rng, const MaximizerOptions& options = {});

/// ceil((r / beta)^2); beta must be positive.
int replication_count(double radius, double beta_target);

/// Inputs must come from the same iteration. A null report never triggers.
bool stopping_check(const StoppingRule& rule, const GapReport* gap, const ActiveSetEstimate* estimate);

/// Step-wise certificate-guided pruning loop. Adaptive, hybrid and
/// trust-region drivers reuse its observation and replication plumbing.
class CgpEngine {
 public:
  enum class Status { Continue, Stopped, Anomaly };

  CgpEngine(const NoisyObjective& objective, const RunConfig& config);

  const RunConfig& config() const { return config_; }
  const SampleStore& store() const { return store_; }
  const NoisyObjective& objective() const { return objective_; }
  const std::vector<TraceRow>& trace() const { return trace_; }
  int observations() const { return store_.total(); }
  bool budget_left() const { return store_.total() < config_.budget; }
  int iteration() const { return iteration_; }
  /// For drivers with their own loop; returns the new iteration number.
  int begin_iteration() { return ++iteration_; }
  double lipschitz() const { return lipschitz_; }
  void set_lipschitz(double lipschitz) { lipschitz_ = lipschitz; }
  std::optional<double> last_volume() const { return last_volume_; }
  std::optional<GapReport> last_gap() const { return last_gap_; }
  bool refreshed_last_step() const { return refreshed_; }
  StopReason stop_reason() const { return stop_reason_; }
  Rng& acquisition_rng() { return acquisition_; }
  Rng& volume_rng() { return volume_; }

  CertificateSnapshot snapshot() const;

  /// Evaluates the objective at x, ingests, appends a trace row and returns
  /// the record index.
  std::size_t observe(PointView x, double row_ell, int region = -1);
  /// One uniform sample to seed the certificate.
  void initialize_uniform();
  /// Observes every point; rows are stamped with the certificate that holds
  /// once all are ingested. `choose_lipschitz`, when set, fixes L first.
  void initialize(const std::vector<Point>& points,
                  const std::function<double(const SampleStore&)>& choose_lipschitz = {});

  /// Replicates active records (under `current`) whose radius exceeds
  /// beta_target(k), k the iteration index; spends at most half of the remaining budget. `allow`
  /// filters eligible records. Returns the indices touched.
  std::vector<std::size_t> replicate(const CertificateSnapshot& current, double row_ell, int region = -1,
                                     const std::function<bool(std::size_t)>& allow = {});

  /// One iteration: refresh monitors every `volume_every`
  /// iterations, check the stopping rule, select, observe, replicate.
  Status step();

  /// Called after each batch of new observations with the touched records.
  std::function<void(const std::vector<std::size_t>&)> on_observations;

  RunResult finish(StopReason reason, std::string message = {}) const;

 private:
  const NoisyObjective& objective_;
  RunConfig config_;
  SampleStore store_;
  Rng root_;
  Rng acquisition_;
  Rng volume_;
  Rng noise_;
  double lipschitz_;
  int iteration_ = 0;
  std::vector<TraceRow> trace_;
  std::optional<double> last_volume_;
  std::optional<GapReport> last_gap_;
  std::optional<double> pending_volume_;
  bool refreshed_ = false;
  StopReason stop_reason_ = StopReason::Budget;
};

/// Full run with a known Lipschitz constant.
RunResult cgp_run(const NoisyObjective& objective, const RunConfig& config);

}  // namespace cgp
