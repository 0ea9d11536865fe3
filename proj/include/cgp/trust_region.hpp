#pragma once

#include <optional>
#include <vector>

#include "cgp/cgp.hpp"

namespace cgp {

struct RestartEvent {
  int t = 0;
  Point old_center;
  double old_radius = 0.0;
  double upper_bound = 0.0;  // u_j at restart time
  double ell = 0.0;          // global lower certificate at restart time
};

struct TrustRegion {
  int id = 0;
  Point center;
  double radius = 0.2;
  double local_ell = 0.0;  // -inf when no record lies inside
  double best_local_mean = 0.0;
  int failures = 0;
  int restarts = 0;
  int visits = 0;         // since the last restart
  int total_visits = 0;
  std::vector<double> radius_history;
  std::vector<RestartEvent> restart_log;

  /// Cube of side 2r around the center, clipped to the unit cube.
  Box box() const;
};

enum class RegionEvent { Success, Failure, Restart };

/// Applies one event. `next_center` is required for Restart.
TrustRegion update_radius(TrustRegion region, RegionEvent event, const TrustRegionParams& params,
                          const Point* next_center = nullptr);

struct RegionBoundOptions {
  int restarts = 10;
  int budget = 500;
};

/// Estimate of max_{x in box} U_t(x): restart ES from region-uniform starts
/// plus exact candidates (center, corners when d <= 10, records inside the
/// box). Used to rank regions; it can fall short of the true maximum.
double region_upper_bound(const CertificateSnapshot& snapshot, const Box& region, Rng& rng,
                          const RegionBoundOptions& options = {});

/// True only when max_{x in box} U_t(x) < threshold is proven by branch and
/// bound on cells, using min_i [UCB_i + L max_{y in cell} d(y, x_i)] as the
/// cell bound. Gives up (false) after `max_cells` cells or when a cell center
/// reaches the threshold.
bool region_certified_below(const CertificateSnapshot& snapshot, const Box& region, double threshold,
                            int max_cells = 2048);

/// u_j < ell (strict).
inline bool certified_restart_check(double upper_bound, double ell) { return upper_bound < ell; }

/// max LCB over records inside the box, -inf if none.
double local_lower_certificate(const CertificateSnapshot& snapshot, const Box& region);

struct TrResult {
  RunResult run;
  std::vector<TrustRegion> regions;
  int winner = 0;
};

TrResult tr_run(const NoisyObjective& objective, const RunConfig& config);

struct RegionAudit {
  int region = 0;
  int visits = 0;
  double gap = 0.0;  // f* - sup over the region's final box
  int restarts = 0;
  /// Restarts whose box contained the known optimizer.
  int false_restarts = 0;
};

/// Needs optimum value and optimizer metadata; returns empty otherwise.
/// The per-region supremum is approximated from `probes` uniform points plus
/// the center and a local ES.
std::vector<RegionAudit> region_visit_audit(const TrResult& result, const NoisyObjective& objective, Rng& rng,
                                            int probes = 4096);

}  // namespace cgp
