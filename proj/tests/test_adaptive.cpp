#include <doctest.h>

#include "cgp/adaptive.hpp"
#include "cgp/benchmarks.hpp"
#include "helpers.hpp"

using namespace cgp;
using test::rec;

namespace {

RunConfig adaptive_config(const NoisyObjective& f, int budget, double L0, std::uint64_t seed) {
  RunConfig c;
  c.dimension = f.dimension();
  c.budget = budget;
  c.sigma = f.sigma();
  c.lipschitz = L0;
  c.mode = Mode::Adaptive;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_SUITE("adaptive") {
  TEST_CASE("eligibility threshold and pairs") {
    CHECK(eligibility_threshold(200, 0.05, 0.1) == 9);
    CHECK(eligibility_threshold(200, 0.05, 0.0) == 1);
    SampleStore s(1);
    for (int k = 0; k < 9; ++k) s.ingest(Point{0.1}, 0.0);
    for (int k = 0; k < 9; ++k) s.ingest(Point{0.5}, 0.0);
    for (int k = 0; k < 8; ++k) s.ingest(Point{0.9}, 0.0);
    const auto pairs = eligible_pairs(s, 200, 0.05);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0] == std::pair<std::size_t, std::size_t>{0, 1});
    SampleStore one(1);
    one.ingest(Point{0.1}, 0.0);
    CHECK(eligible_pairs(one, 200, 0.05).empty());
    SampleStore ones(1);
    for (int k = 0; k < 5; ++k) ones.ingest(Point{k / 5.0}, 0.0);
    CHECK(eligible_pairs(ones, 200, 0.05).empty());
  }

  TEST_CASE("violation examples") {
    const CertificateSnapshot s(1, 2.0, 0.1, 0.05, 100, {rec({0.2}, 0.9, 0.05), rec({0.4}, -0.1, 0.05)});
    CHECK(detect_violation(s, 0, 1));
    CHECK_FALSE(detect_violation(s.with_lipschitz(4.0), 0, 1));
    const CertificateSnapshot eq(1, 0.01, 0.1, 0.05, 100, {rec({0.2}, 0.5, 0.0), rec({0.4}, 0.5, 0.0)});
    CHECK_FALSE(detect_violation(eq, 0, 1));
    const CertificateSnapshot dup(1, 1.0, 0.1, 0.05, 100, {rec({0.2}, 0.5, 0.0), rec({0.2}, 0.1, 0.0)});
    CHECK_THROWS(detect_violation(dup, 0, 1));
  }

  TEST_CASE("init_lipschitz examples") {
    Rng rng(1);
    const NoisyObjective flat(1, [](PointView) { return 0.3; }, 0.0);
    const LipschitzInit a = init_lipschitz(flat, 10, rng);
    CHECK(a.floored);
    CHECK(a.value == kLipschitzFloor);
    const NoisyObjective lin(1, [](PointView x) { return x[0]; }, 0.0);
    CHECK(init_lipschitz(lin, 5, rng).value == doctest::Approx(1.0).epsilon(1e-12));
    const LipschitzInit c = init_lipschitz(test::abs_peak_1d(0.0), 10, rng);
    CHECK(c.value > 0.0);
    CHECK(c.value <= 1.0 + 1e-12);
    CHECK_THROWS_AS(init_lipschitz(lin, 1, rng), ConfigError);
  }

  TEST_CASE("init_lipschitz matches brute-force quotients") {
    SampleStore s(2);
    Rng rng(2);
    std::vector<std::pair<Point, double>> pts;
    for (int k = 0; k < 10; ++k) {
      const Point x = rng.uniform_point(2);
      const double y = std::sin(3 * x[0]) + x[1] * x[1];
      s.ingest(x, y);
      pts.emplace_back(x, y);
    }
    double best = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        best = std::max(best, std::abs(pts[i].second - pts[j].second) / distance(pts[i].first, pts[j].first));
      }
    }
    CHECK(init_lipschitz(s).value == doctest::Approx(best).epsilon(1e-14));
  }

  TEST_CASE("no doubling when L0 >= L* without noise") {
    const NoisyObjective f = test::abs_peak_1d(0.0);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const AdaptiveResult r = adaptive_run(f, adaptive_config(f, 100, 2.0, seed));
      CHECK(r.log.events.empty());
      CHECK(r.log.final_value == 2.0);
    }
  }

  TEST_CASE("underestimated L doubles at most seven times and lands in [L*, 2L*]") {
    const NoisyObjective f = test::abs_peak_1d(0.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const AdaptiveResult r = adaptive_run(f, adaptive_config(f, 100, 0.01, seed));
      CHECK(r.log.events.size() <= 7);
      CHECK(r.log.final_value >= 1.0 - 1e-12);
      CHECK(r.log.final_value <= 2.0 + 1e-12);
      for (const auto& e : r.log.events) CHECK(e.after == 2 * e.before);
      for (std::size_t k = 1; k < r.log.events.size(); ++k) CHECK(r.log.events[k].t >= r.log.events[k - 1].t);
      // after the last doubling the optimum is never pruned
      CHECK(r.run.certificate->is_active(Point{0.3}));
      for (const auto& row : r.run.trace) {
        if (row.cert_valid) CHECK(row.lipschitz == r.log.final_value);
      }
    }
  }

  TEST_CASE("no false doubling on any benchmark") {
    for (const auto& [name, d] : std::vector<std::pair<std::string, int>>{{"needle", 2}, {"bump", 2}, {"branin", 2}, {"levy", 2}}) {
      const Benchmark b = make_benchmark(name, d, {}, 0.0);
      const double L = *b.objective.metadata().lipschitz;
      Rng rng(4);
      SampleStore s(d);
      for (int k = 0; k < 60; ++k) {
        const Point x = rng.uniform_point(d);
        s.ingest(x, b.objective.noiseless(x));
      }
      const auto snap = CertificateSnapshot::from_store(s, L, 0.0, 0.05, 100);
      int violations = 0;
      for (const auto& [i, j] : eligible_pairs(s, 100, 0.05, 0.0)) violations += detect_violation(snap, i, j);
      CAPTURE(name);
      CHECK(violations == 0);
    }
  }

  TEST_CASE("noisy run started above L* sees no violation") {
    const NoisyObjective f = test::abs_peak_1d(0.1);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      CHECK(adaptive_run(f, adaptive_config(f, 150, 2.0, seed)).log.events.empty());
    }
  }

  TEST_CASE("warm-start initialisation when L0 is not given") {
    const NoisyObjective f = test::abs_peak_1d(0.0);
    const AdaptiveResult r = adaptive_run(f, adaptive_config(f, 60, 0.0, 3));
    CHECK(r.log.initial > 0.0);
    CHECK(r.log.initial <= 1.0 + 1e-12);
    CHECK(r.run.trace.size() == 60);
    for (int k = 0; k < 10; ++k) CHECK(r.run.trace[static_cast<std::size_t>(k)].iteration == 0);
  }

  TEST_CASE("a 100x underestimate costs no regret once doubling has caught up") {
    // noiseless: the doubling rule reaches [L*, 2L*] and the final incumbent
    // matches the oracle run
    const Benchmark b = make_benchmark("needle", 1, {{"p", 1}}, 0.0);
    const double L = *b.objective.metadata().lipschitz;
    std::vector<double> low, exact;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const AdaptiveResult r = adaptive_run(b.objective, adaptive_config(b.objective, 200, L / 100, seed));
      const AdaptiveResult o = adaptive_run(b.objective, adaptive_config(b.objective, 200, L, seed));
      CHECK(r.log.events.size() <= 7);
      CHECK(o.log.events.empty());
      low.push_back(*r.run.final_regret);
      exact.push_back(*o.run.final_regret);
    }
    CHECK(test::median(low) <= 1.25 * test::median(exact) + 1e-9);
  }

  TEST_CASE("no doubling from rounding when L equals the true slope") {
    // f(0) and f(0.3) sit exactly on the cone of slope L*; |mu_i - mu_j| and L d
    // can differ in the last bit
    const Benchmark b = make_benchmark("needle", 1, {{"p", 1}}, 0.0);
    const double L = *b.objective.metadata().lipschitz;
    for (double x : {0.0, 0.1, 1.0, 0.7, 0.29999999842091962}) {
      const double fx = b.objective.noiseless(Point{x});
      const CertificateSnapshot s(1, L, 0.0, 0.05, 10, {test::rec({x}, fx, 0.0), test::rec({0.3}, 1.0, 0.0)});
      if (x != 0.3) CHECK_FALSE(detect_violation(s, 0, 1));
    }
  }
}
