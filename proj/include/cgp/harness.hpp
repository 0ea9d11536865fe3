#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cgp/adaptive.hpp"
#include "cgp/benchmarks.hpp"
#include "cgp/hybrid.hpp"
#include "cgp/trust_region.hpp"

namespace cgp {

/// T Sobol points, one observation each; the best observed value wins.
RunResult random_baseline(const NoisyObjective& objective, const RunConfig& config);
RunResult random_baseline(const NoisyObjective& objective, int budget, std::uint64_t seed);

inline constexpr int kGpUcbWarm = 5;
inline constexpr int kGpUcbCandidates = 4096;

/// Five Sobol warm points, then GP-UCB over a fixed 4096-point Sobol
/// candidate set. Budget must not exceed kGpMaxPoints.
RunResult gp_ucb_baseline(const NoisyObjective& objective, const RunConfig& config);
RunResult gp_ucb_baseline(const NoisyObjective& objective, int budget, double delta, std::uint64_t seed);

/// One (Vol, eps) series per run.
using ShrinkageSeries = std::vector<std::pair<double, double>>;

struct AlphaEstimate {
  double alpha = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t points = 0;
  int resamples_used = 0;
};

/// Least-squares slope s of log Vol on log eps over points with Vol in (0,1)
/// and eps > 0; alpha = d - s. The CI is the 2.5/97.5 percentile range of a
/// bootstrap over runs. Throws std::invalid_argument with fewer than five
/// usable points or no spread in log eps.
AlphaEstimate estimate_alpha(const std::vector<ShrinkageSeries>& runs, int dimension, int resamples = 1000,
                             std::uint64_t seed = 0);

enum class Method { Cgp, Adaptive, TrustRegion, Hybrid, Random, GpUcb };
std::string to_string(Method method);
Method method_from_string(const std::string& s);

/// Everything one run produces, whichever driver ran it.
struct MethodOutcome {
  Method method = Method::Cgp;
  RunResult run;
  std::optional<DoublingLog> doubling;
  std::vector<TrustRegion> regions;
  int winner = -1;
  std::optional<HybridDecision> hybrid;
  std::optional<double> optimum_value;  // f*, for the true gap f* - ell
};

/// Config mode is set from the method.
MethodOutcome run_method(Method method, const NoisyObjective& objective, RunConfig config);

struct ExperimentSpec {
  std::string benchmark;
  int dimension = 2;
  BenchmarkParams params;
  Method method = Method::Cgp;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir = "results";
  /// Seed is overwritten per run. When `lipschitz_given` is false the
  /// benchmark's registered L* is used (adaptive: finite-difference start).
  RunConfig config;
  bool lipschitz_given = false;
};

/// Strict parse: unknown keys, bad types and invalid values raise ConfigError.
ExperimentSpec parse_experiment_spec(const std::string& json_text);

/// Per-run result document (stable key order, no timing data).
std::string result_json(const MethodOutcome& outcome, const ExperimentSpec& spec, std::uint64_t seed);
/// Trace CSV; adaptive runs add cert_valid and trust-region runs add region.
std::string trace_csv(const MethodOutcome& outcome, int dimension);

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::optional<double> final_regret;
  std::string stop_reason;
  int observations = 0;
  double final_ell = 0.0;
  std::optional<double> last_volume;
  std::optional<double> last_eps;
  double lipschitz = 0.0;
};

struct ExperimentSummary {
  std::vector<SeedOutcome> runs;
  std::string aggregate;  // aggregate.json contents
  int anomalies = 0;
  int failures = 0;
};

/// Threads from CGP_THREADS (default: hardware concurrency, at least 1).
/// Throws ConfigError on a malformed value.
int thread_count_from_env();

/// Runs every seed (in parallel), writes seed_<s>/{trace.csv, result.json,
/// certificate.json[, frozen_certificate.json]} and aggregate.json.
ExperimentSummary run_experiment(const ExperimentSpec& spec, int threads = 0);

/// Reads (Vol, eps) series from every trace.csv below `dir`, and the
/// dimension from the header. Throws ConfigError when none is found.
std::pair<std::vector<ShrinkageSeries>, int> read_shrinkage_traces(const std::filesystem::path& dir);

/// Certificate for a finished run directory; `region` selects a trust-region
/// local certificate using the region's final box.
std::string export_run_certificate(const std::filesystem::path& run_dir, std::optional<int> region);

std::string format_real(double v);

}  // namespace cgp
