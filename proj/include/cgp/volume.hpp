#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "cgp/certificate.hpp"
#include "cgp/model.hpp"

namespace cgp {

/// Estimated volume fraction of A_t together with a pool of member points.
struct ActiveSetEstimate {
  double volume_fraction = 0.0;
  /// log-volume interval; degenerate for the grid method.
  std::pair<double, double> log_volume_ci{0.0, 0.0};
  PointSet member_pool;
  VolumeMethod method = VolumeMethod::Grid;
  int grid_points_per_axis = 0;
  NestedConfig nested;
  int levels = 0;
  /// Empty estimate or estimator failure (possible Lipschitz underestimate).
  bool anomaly = false;
};

using Membership = std::function<bool(PointView)>;
using LevelFunction = std::function<double(PointView)>;

int default_grid_points(int dimension);

/// Fraction of cell-centred grid nodes that are active. Rejects d > 5 and
/// grids above 1e7 nodes with std::invalid_argument.
ActiveSetEstimate grid_volume(const CertificateSnapshot& snapshot, int points_per_axis);

/// One hit-and-run move along a given direction. `draw` supplies uniforms in
/// [0,1) for the position on the chord (first call) and for retries.
Point hit_and_run_move(PointView current, PointView direction, const Membership& member, const Box& box,
                       const std::function<double()>& draw);

/// Random direction, chord by bisection (tolerance 1e-6), uniform point on it.
Point hit_and_run_step(PointView current, const Membership& member, Rng& rng);
Point hit_and_run_step(PointView current, const Membership& member, const Box& box, Rng& rng);

/// Result of one subset-simulation replication.
struct SubsetSimulation {
  double probability = 0.0;
  PointSet final_members;
  int levels = 0;
  bool anomaly = false;
};

/// Adaptive subset simulation for P[level(x) >= 0] under the uniform law on
/// `box`; intermediate thresholds are empirical p0-quantiles.
SubsetSimulation subset_simulation(const Box& box, const LevelFunction& level, const NestedConfig& config,
                                   Rng& rng);

/// Product-law estimate through a fixed chain of nested membership sets.
SubsetSimulation nested_fixed_levels(const Box& box, const std::vector<Membership>& levels,
                                     const NestedConfig& config, Rng& rng);

/// Nested-set ratio estimator of Vol(A_t) with `repeats` replications.
ActiveSetEstimate nested_volume(const CertificateSnapshot& snapshot, const NestedConfig& config, Rng& rng);

/// Up to `count` active points: uniform rejection, then hit-and-run from the
/// best-LCB active record when acceptance falls below 1%. Throws AnomalyError
/// when no member can be found.
PointSet sample_active_pool(const CertificateSnapshot& snapshot, int count, Rng& rng);

/// Dispatches on spec.method (auto: grid for d <= 5, nested otherwise).
ActiveSetEstimate estimate_active_set(const CertificateSnapshot& snapshot, const VolumeSpec& spec, Rng& rng);

GapReport gap_report(const CertificateSnapshot& snapshot, const ActiveSetEstimate& estimate);

}  // namespace cgp
