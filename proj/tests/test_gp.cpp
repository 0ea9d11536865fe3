#include <doctest.h>

#include <Eigen/LU>

#include "cgp/gp.hpp"
#include "helpers.hpp"

using namespace cgp;

namespace {

PointSet random_points(int d, int n, Rng& rng) {
  PointSet p(d);
  for (int k = 0; k < n; ++k) p.push_back(rng.uniform_point(d));
  return p;
}

}  // namespace

TEST_SUITE("gp") {
  TEST_CASE("matern 5/2 values") {
    const double oracle = (1 + std::sqrt(5.0) + 5.0 / 3.0) * std::exp(-std::sqrt(5.0));
    CHECK(matern52_r(1.0, 1.0, 1.0) == doctest::Approx(0.52399).epsilon(1e-4 / 0.52399));
    CHECK(matern52_r(1.0, 1.0, 1.0) == doctest::Approx(oracle).epsilon(1e-14));
    CHECK(matern52(Point{0.3, 0.4}, Point{0.3, 0.4}, 0.2, 2.5) == 2.5);
    CHECK(matern52_r(20 * 0.1, 0.1, 3.0) < 1e-8 * 3.0);
    CHECK(matern52(Point{0.1, 0.2}, Point{0.7, 0.9}, 0.3, 1.0) == matern52(Point{0.7, 0.9}, Point{0.1, 0.2}, 0.3, 1.0));
  }

  TEST_CASE("interpolation without noise") {
    PointSet one(1);
    one.push_back(Point{0.4});
    const GpModel m1 = gp_fit_fixed(one, {0.7}, {0.0}, GpHyper{});
    CHECK(gp_posterior(m1, Point{0.4}).mean == doctest::Approx(0.7).epsilon(1e-9));
    Rng rng(1);
    const PointSet xs = random_points(2, 5, rng);
    std::vector<double> ys;
    for (std::size_t k = 0; k < xs.size(); ++k) ys.push_back(std::sin(4 * xs[k][0]) + xs[k][1]);
    const GpModel m = gp_fit_fixed(xs, ys, std::vector<double>(5, 0.0), GpHyper{0.3, 1.0});
    for (std::size_t k = 0; k < xs.size(); ++k) {
      CHECK(std::abs(gp_posterior(m, xs[k]).mean - ys[k]) < 1e-6);
      CHECK(gp_posterior(m, xs[k]).variance <= 1e-6);
    }
  }

  TEST_CASE("prior reversion far from data") {
    PointSet xs(1);
    xs.push_back(Point{0.0});
    const GpModel m = gp_fit_fixed(xs, {1.0}, {0.0}, GpHyper{0.01, 2.0});
    const GpPosterior p = gp_posterior(m, Point{1.0});
    CHECK(std::abs(p.mean) < 1e-6);
    CHECK(p.variance == doctest::Approx(2.0).epsilon(1e-6));
  }

  TEST_CASE("one-point posterior formula") {
    // distance with k = 0.5 by bisection on the kernel
    double lo = 0.0, hi = 5.0;
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      (matern52_r(mid, 1.0, 1.0) > 0.5 ? lo : hi) = mid;
    }
    PointSet xs(1);
    xs.push_back(Point{0.0});
    const GpModel m = gp_fit_fixed(xs, {0.8}, {0.0}, GpHyper{1.0 / lo, 1.0});
    const GpPosterior p = gp_posterior(m, Point{1.0});
    CHECK(p.mean == doctest::Approx(0.5 * 0.8).epsilon(1e-8));
    CHECK(p.variance == doctest::Approx(1.0 - 0.25).epsilon(1e-8));
  }

  TEST_CASE("mean matches a direct linear solve") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
      const PointSet xs = random_points(3, 12, rng);
      std::vector<double> ys, noise;
      for (std::size_t k = 0; k < xs.size(); ++k) {
        ys.push_back(rng.normal());
        noise.push_back(0.01 + 0.01 * rng.uniform());
      }
      const GpHyper h{0.4, 1.3};
      const GpModel m = gp_fit_fixed(xs, ys, noise, h);
      Eigen::MatrixXd K(12, 12);
      Eigen::VectorXd y(12);
      for (int i = 0; i < 12; ++i) {
        y(i) = ys[static_cast<std::size_t>(i)];
        for (int j = 0; j < 12; ++j) K(i, j) = matern52(xs[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(j)], h.lengthscale, h.signal_variance);
        K(i, i) += noise[static_cast<std::size_t>(i)] + m.jitter();
      }
      const Eigen::VectorXd alpha = K.fullPivLu().solve(y);
      const Point x = rng.uniform_point(3);
      Eigen::VectorXd kx(12);
      for (int i = 0; i < 12; ++i) kx(i) = matern52(x, xs[static_cast<std::size_t>(i)], h.lengthscale, h.signal_variance);
      CHECK(gp_posterior(m, x).mean == doctest::Approx(kx.dot(alpha)).epsilon(1e-8));
      for (Eigen::Index i = 0; i < m.cholesky().rows(); ++i) CHECK(m.cholesky()(i, i) > 0.0);
    }
  }

  TEST_CASE("adding data never increases variance") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
      const int n = 2 + static_cast<int>(rng.uniform() * 10);
      const PointSet xs = random_points(2, n, rng);
      std::vector<double> ys(static_cast<std::size_t>(n)), noise(static_cast<std::size_t>(n), 1e-3);
      for (auto& y : ys) y = rng.normal();
      PointSet fewer(2);
      for (int k = 0; k + 1 < n; ++k) fewer.push_back(xs[static_cast<std::size_t>(k)]);
      const GpHyper h{0.2 + rng.uniform(), 1.0};
      const GpModel big = gp_fit_fixed(xs, ys, noise, h);
      const GpModel small = gp_fit_fixed(fewer, {ys.begin(), ys.end() - 1}, {noise.begin(), noise.end() - 1}, h);
      for (int k = 0; k < 20; ++k) {
        const Point x = rng.uniform_point(2);
        CHECK(gp_posterior(big, x).variance <= gp_posterior(small, x).variance + 1e-8);
      }
    }
  }

  TEST_CASE("batched posterior equals pointwise posterior") {
    Rng rng(5);
    const PointSet xs = random_points(2, 20, rng);
    std::vector<double> ys(20);
    for (auto& y : ys) y = rng.normal();
    const GpModel m = gp_fit_fixed(xs, ys, std::vector<double>(20, 1e-2), GpHyper{});
    const PointSet probes = random_points(2, 50, rng);
    const auto batch = gp_posterior(m, probes);
    for (std::size_t k = 0; k < probes.size(); ++k) {
      const GpPosterior p = gp_posterior(m, probes[k]);
      CHECK(batch[k].mean == doctest::Approx(p.mean).epsilon(1e-10));
      CHECK(batch[k].variance == doctest::Approx(p.variance).epsilon(1e-8));
    }
  }

  TEST_CASE("mle recovers the likelihood-optimal lengthscale") {
    Rng rng(6);
    const PointSet xs = random_points(1, 25, rng);
    std::vector<double> ys;
    for (std::size_t k = 0; k < xs.size(); ++k) ys.push_back(std::sin(6 * xs[k][0]));
    const std::vector<double> noise(xs.size(), 1e-4);
    double best_ll = -INFINITY, best_l = 0.0;
    for (int i = 0; i < 60; ++i) {
      for (int j = 0; j < 60; ++j) {
        const GpHyper h{std::exp(std::log(1e-3) + (std::log(10.0) - std::log(1e-3)) * i / 59.0),
                        std::exp(std::log(1e-3) + (std::log(10.0) - std::log(1e-3)) * j / 59.0)};
        const double ll = gp_log_marginal_likelihood(xs, ys, noise, h);
        if (ll > best_ll) best_ll = ll, best_l = h.lengthscale;
      }
    }
    Rng mle(7);
    const GpModel m = gp_fit(xs, ys, noise, HyperMode::Mle, GpHyper{}, mle);
    CHECK(m.hyper().lengthscale <= 3 * best_l);
    CHECK(m.hyper().lengthscale >= best_l / 3);
    CHECK(m.log_marginal_likelihood() >= best_ll - 1.0);
  }

  TEST_CASE("ucb beta and selection") {
    const double oracle = 2 * std::log(100 * M_PI * M_PI / 0.3);
    CHECK(gp_ucb_beta(10, 0.05) == doctest::Approx(16.20).epsilon(0.01 / 16.20));
    CHECK(gp_ucb_beta(10, 0.05) == doctest::Approx(oracle).epsilon(1e-14));
    Rng rng(8);
    const PointSet xs = random_points(1, 8, rng);
    std::vector<double> ys;
    for (std::size_t k = 0; k < xs.size(); ++k) ys.push_back(-std::abs(xs[k][0] - 0.6));
    const GpModel m = gp_fit_fixed(xs, ys, std::vector<double>(8, 0.0), GpHyper{0.1, 1.0});
    PointSet single(1);
    single.push_back(Point{0.123});
    CHECK(gp_ucb_select(m, 5, 0.05, single) == Point{0.123});
    // at the training inputs the variance vanishes: UCB picks the best value
    std::size_t best = 0;
    for (std::size_t k = 1; k < ys.size(); ++k) if (ys[k] > ys[best]) best = k;
    CHECK(gp_ucb_select_index(m, 5, 0.05, xs) == best);
  }

  TEST_CASE("fit errors") {
    PointSet none(1);
    CHECK_THROWS_AS(gp_fit_fixed(none, {}, {}, GpHyper{}), std::invalid_argument);
    PointSet one(1);
    one.push_back(Point{0.2});
    CHECK_THROWS_AS(gp_fit_fixed(one, {1.0, 2.0}, {0.0}, GpHyper{}), std::invalid_argument);
    Rng rng(9);
    const PointSet many = random_points(1, 501, rng);
    CHECK_THROWS_AS(gp_fit_fixed(many, std::vector<double>(501, 0.0), std::vector<double>(501, 0.1), GpHyper{}),
                    std::invalid_argument);
  }

  TEST_CASE("duplicate inputs are regularised by noise") {
    PointSet xs(1);
    for (int k = 0; k < 4; ++k) xs.push_back(Point{0.5});
    const GpModel m = gp_fit_fixed(xs, {1.0, 1.2, 0.8, 1.0}, std::vector<double>(4, 0.01), GpHyper{});
    CHECK(gp_posterior(m, Point{0.5}).mean == doctest::Approx(1.0).epsilon(0.05));
  }
}
