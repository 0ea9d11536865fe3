#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <vector>

#include "cgp/model.hpp"

namespace cgp {

inline constexpr std::size_t kGpMaxPoints = 500;

struct GpHyper {
  double lengthscale = 0.2;
  double signal_variance = 1.0;
};

/// s2 (1 + sqrt5 r / l + 5 r^2 / (3 l^2)) exp(-sqrt5 r / l).
double matern52(PointView a, PointView b, double lengthscale, double signal_variance);
double matern52_r(double r, double lengthscale, double signal_variance);

enum class HyperMode { Fixed, Mle };

struct GpPosterior {
  double mean = 0.0;
  double variance = 0.0;
};

/// Exact GP with zero prior mean. Immutable after fit.
class GpModel {
 public:
  const PointSet& inputs() const { return x_; }
  const Eigen::VectorXd& targets() const { return y_; }
  const GpHyper& hyper() const { return hyper_; }
  double jitter() const { return jitter_; }
  const Eigen::MatrixXd& cholesky() const { return chol_; }
  double log_marginal_likelihood() const { return lml_; }
  std::size_t size() const { return static_cast<std::size_t>(y_.size()); }

 private:
  friend GpModel gp_fit_fixed(const PointSet&, const std::vector<double>&, const std::vector<double>&, const GpHyper&);
  PointSet x_;
  Eigen::VectorXd y_;
  Eigen::VectorXd noise_;
  GpHyper hyper_;
  double jitter_ = 0.0;
  Eigen::MatrixXd chol_;  // lower factor of K + diag(noise) + jitter I
  Eigen::VectorXd alpha_;
  double lml_ = 0.0;
  friend GpPosterior gp_posterior(const GpModel&, PointView);
  friend std::vector<GpPosterior> gp_posterior(const GpModel&, const PointSet&);
};

/// Cholesky of K + diag(noise) + jitter I, jitter escalating 1e-10 -> 1e-6.
/// `noise` holds one variance per point. Throws std::runtime_error when the
/// factorization fails at the largest jitter and std::invalid_argument on bad
/// input (empty, more than kGpMaxPoints, size mismatch).
GpModel gp_fit_fixed(const PointSet& points, const std::vector<double>& values, const std::vector<double>& noise,
                     const GpHyper& hyper);

/// Mle mode maximizes the log marginal likelihood over (lengthscale, signal
/// variance) in the log box [1e-3, 10]^2 by a multi-start ES seeded at `hyper`
/// and a fixed 3x3 grid.
GpModel gp_fit(const PointSet& points, const std::vector<double>& values, const std::vector<double>& noise,
               HyperMode mode, const GpHyper& hyper, Rng& rng, int mle_budget = 300);
/// Homoscedastic convenience overload.
GpModel gp_fit(const PointSet& points, const std::vector<double>& values, double noise_variance, HyperMode mode,
               const GpHyper& hyper, Rng& rng, int mle_budget = 300);

/// Log marginal likelihood for the given hypers (-inf when factorization fails).
double gp_log_marginal_likelihood(const PointSet& points, const std::vector<double>& values,
                                  const std::vector<double>& noise, const GpHyper& hyper);

GpPosterior gp_posterior(const GpModel& model, PointView x);
/// Posterior at every point of the set; one triangular solve for the batch.
std::vector<GpPosterior> gp_posterior(const GpModel& model, const PointSet& xs);

/// 2 ln(t^2 pi^2 / (6 delta)).
double gp_ucb_beta(int t, double delta);

/// argmax over the pool of mean + sqrt(beta_t) sd; first wins ties.
std::size_t gp_ucb_select_index(const GpModel& model, int t, double delta, const PointSet& pool);
Point gp_ucb_select(const GpModel& model, int t, double delta, const PointSet& pool);

}  // namespace cgp
