#pragma once

#include <string>

#include "cgp/cgp.hpp"
#include "cgp/gp.hpp"

namespace cgp {

enum class Phase2 { Gp, Cgp };
std::string to_string(Phase2 phase);

struct HybridDecision {
  int t_switch = 0;
  double rho_hat = 0.0;
  bool rho_available = true;
  Phase2 phase2 = Phase2::Cgp;
  std::string frozen_certificate;  // exported at t_switch, never modified
  std::string warning;
  std::vector<GpHyper> refits;  // hyperparameters after each phase-2 mle refit
};

/// Noise-deflated difference quotient max_j (|mu_b - mu_j| - (r_b + r_j))_+ / d
/// between the best-mean record b and every other record inside A_t. A
/// record is inside A_t when the envelope of the remaining records reaches
/// ell at its location. Throws std::invalid_argument with fewer than two
/// such records.
double local_lipschitz(const CertificateSnapshot& snapshot);

/// L_local / L_global clamped at 0; L_global must be positive.
double smoothness_ratio(double local, double global);

struct HybridResult {
  RunResult run;
  HybridDecision decision;
  std::optional<CertificateSnapshot> frozen;
};

HybridResult hybrid_run(const NoisyObjective& objective, const RunConfig& config);

}  // namespace cgp
