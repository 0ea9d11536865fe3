#include "cgp/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "cgp/maximizer.hpp"

namespace cgp {

namespace {

constexpr double kJitterStart = 1e-10;
constexpr double kJitterMax = 1e-6;
constexpr double kLogLow = -6.907755278982137;  // ln 1e-3
constexpr double kLogHigh = 2.302585092994046;  // ln 10

void check_inputs(const PointSet& points, const std::vector<double>& values, const std::vector<double>& noise) {
  if (points.empty()) throw std::invalid_argument("gp_fit needs at least one point");
  if (points.size() > kGpMaxPoints) throw std::invalid_argument("gp_fit is capped at 500 training points");
  if (values.size() != points.size() || noise.size() != points.size()) {
    throw std::invalid_argument("gp_fit: points, values and noise sizes differ");
  }
  for (double v : noise) {
    if (!(v >= 0.0)) throw std::invalid_argument("gp_fit: noise variances must be >= 0");
  }
}

Eigen::MatrixXd kernel_matrix(const PointSet& x, const GpHyper& h) {
  const Eigen::Index n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = h.signal_variance;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = matern52(x[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(j)], h.lengthscale,
                                h.signal_variance);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

}  // namespace

double matern52_r(double r, double lengthscale, double signal_variance) {
  if (!(lengthscale > 0.0)) throw std::invalid_argument("matern52: lengthscale must be > 0");
  const double s = std::sqrt(5.0) * r / lengthscale;
  return signal_variance * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

double matern52(PointView a, PointView b, double lengthscale, double signal_variance) {
  return matern52_r(distance(a, b), lengthscale, signal_variance);
}

GpModel gp_fit_fixed(const PointSet& points, const std::vector<double>& values, const std::vector<double>& noise,
                     const GpHyper& hyper) {
  check_inputs(points, values, noise);
  if (!(hyper.lengthscale > 0.0) || !(hyper.signal_variance > 0.0)) {
    throw std::invalid_argument("gp_fit: hyperparameters must be positive");
  }
  GpModel m;
  m.x_ = points;
  const Eigen::Index n = static_cast<Eigen::Index>(points.size());
  m.y_ = Eigen::Map<const Eigen::VectorXd>(values.data(), n);
  m.noise_ = Eigen::Map<const Eigen::VectorXd>(noise.data(), n);
  m.hyper_ = hyper;
  Eigen::MatrixXd k = kernel_matrix(points, hyper);
  k.diagonal() += m.noise_;
  for (double jitter = kJitterStart; jitter <= kJitterMax * 1.0000001; jitter *= 10.0) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(kj);
    if (llt.info() != Eigen::Success) continue;
    Eigen::MatrixXd l = llt.matrixL();
    if ((l.diagonal().array() <= 0.0).any()) continue;
    m.jitter_ = jitter;
    m.chol_ = std::move(l);
    m.alpha_ = llt.solve(m.y_);
    m.lml_ = -0.5 * m.y_.dot(m.alpha_) - m.chol_.diagonal().array().log().sum() -
             0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    return m;
  }
  throw std::runtime_error("gp_fit: kernel matrix not positive definite at maximum jitter");
}

double gp_log_marginal_likelihood(const PointSet& points, const std::vector<double>& values,
                                  const std::vector<double>& noise, const GpHyper& hyper) {
  try {
    return gp_fit_fixed(points, values, noise, hyper).log_marginal_likelihood();
  } catch (const std::runtime_error&) {
    return -std::numeric_limits<double>::infinity();
  }
}

GpModel gp_fit(const PointSet& points, const std::vector<double>& values, const std::vector<double>& noise,
               HyperMode mode, const GpHyper& hyper, Rng& rng, int mle_budget) {
  if (mode == HyperMode::Fixed) return gp_fit_fixed(points, values, noise, hyper);
  check_inputs(points, values, noise);
  auto clamp_log = [](double v) { return std::clamp(std::log(v), kLogLow, kLogHigh); };
  std::vector<Point> starts{{clamp_log(hyper.lengthscale), clamp_log(hyper.signal_variance)}};
  for (double ls : {0.05, 0.3, 2.0}) {
    for (double s2 : {0.1, 1.0, 5.0}) starts.push_back({std::log(ls), std::log(s2)});
  }
  const ScoreFunction lml = [&](PointView z) {
    return Scored{gp_log_marginal_likelihood(points, values, noise, {std::exp(z[0]), std::exp(z[1])}), 0.0};
  };
  const Feasibility any = [](PointView) { return true; };
  const Box box{{kLogLow, kLogLow}, {kLogHigh, kLogHigh}};
  const ScoredPoint best = maximize_with_restarts(starts, lml, any, box, mle_budget, rng);
  GpHyper h{std::exp(best.x[0]), std::exp(best.x[1])};
  if (!std::isfinite(best.score.value)) h = hyper;
  return gp_fit_fixed(points, values, noise, h);
}

GpModel gp_fit(const PointSet& points, const std::vector<double>& values, double noise_variance, HyperMode mode,
               const GpHyper& hyper, Rng& rng, int mle_budget) {
  return gp_fit(points, values, std::vector<double>(values.size(), noise_variance), mode, hyper, rng, mle_budget);
}

GpPosterior gp_posterior(const GpModel& model, PointView x) {
  const Eigen::Index n = static_cast<Eigen::Index>(model.size());
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i) = matern52(x, model.x_[static_cast<std::size_t>(i)], model.hyper_.lengthscale, model.hyper_.signal_variance);
  }
  GpPosterior p;
  p.mean = k.dot(model.alpha_);
  const Eigen::VectorXd v = model.chol_.triangularView<Eigen::Lower>().solve(k);
  p.variance = std::max(0.0, model.hyper_.signal_variance - v.squaredNorm());
  return p;
}

std::vector<GpPosterior> gp_posterior(const GpModel& model, const PointSet& xs) {
  const Eigen::Index n = static_cast<Eigen::Index>(model.size());
  const Eigen::Index m = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd k(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      k(i, j) = matern52(xs[static_cast<std::size_t>(j)], model.x_[static_cast<std::size_t>(i)],
                         model.hyper_.lengthscale, model.hyper_.signal_variance);
    }
  }
  const Eigen::VectorXd mean = k.transpose() * model.alpha_;
  model.chol_.triangularView<Eigen::Lower>().solveInPlace(k);
  const Eigen::VectorXd explained = k.colwise().squaredNorm().transpose();
  std::vector<GpPosterior> out(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) {
    out[static_cast<std::size_t>(j)] = {mean(j), std::max(0.0, model.hyper_.signal_variance - explained(j))};
  }
  return out;
}

double gp_ucb_beta(int t, double delta) {
  if (t < 1) throw std::invalid_argument("gp_ucb_beta: t must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
  const double tt = static_cast<double>(t);
  return 2.0 * std::log(tt * tt * std::numbers::pi * std::numbers::pi / (6.0 * delta));
}

std::size_t gp_ucb_select_index(const GpModel& model, int t, double delta, const PointSet& pool) {
  if (pool.empty()) throw std::invalid_argument("gp_ucb_select: empty candidate pool");
  const double root_beta = std::sqrt(std::max(0.0, gp_ucb_beta(t, delta)));
  const std::vector<GpPosterior> post = gp_posterior(model, pool);
  std::size_t best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const GpPosterior& p = post[i];
    const double v = p.mean + root_beta * std::sqrt(p.variance);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  return best;
}

Point gp_ucb_select(const GpModel& model, int t, double delta, const PointSet& pool) {
  return pool.point(gp_ucb_select_index(model, t, delta, pool));
}

}  // namespace cgp
