#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "cgp/model.hpp"
#include "cgp/sobol.hpp"
#include "helpers.hpp"

using namespace cgp;

TEST_SUITE("model") {
  TEST_CASE("distance examples") {
    CHECK(distance(Point{0, 0}, Point{0, 0}) == 0.0);
    CHECK(distance(Point{0, 0}, Point{1, 1}) == doctest::Approx(1.41421356).epsilon(1e-8));
    CHECK(distance(Point{0.2}, Point{0.9}) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK_THROWS_AS(distance(Point{0.2}, Point{0.9, 0.1}), std::invalid_argument);
  }

  TEST_CASE("distance is symmetric and zero only at equality") {
    Rng rng(5);
    for (int k = 0; k < 200; ++k) {
      const Point a = rng.uniform_point(3), b = rng.uniform_point(3);
      CHECK(distance(a, b) == distance(b, a));
      CHECK(distance(a, b) > 0.0);
    }
  }

  TEST_CASE("sobol determinism and distinctness") {
    const auto a = sobol_init(1, 1, 42), b = sobol_init(1, 1, 42);
    REQUIRE(a.size() == 1);
    CHECK(a == b);
    const auto four = sobol_init(1, 4, 7);
    std::set<double> distinct;
    for (const auto& p : four) distinct.insert(p[0]);
    CHECK(distinct.size() == 4);
    CHECK(sobol_init(3, 8, 1) != sobol_init(3, 8, 2));
  }

  TEST_CASE("unscrambled sobol matches scipy reference points") {
    std::ifstream f(CGP_TEST_DATA_DIR "/sobol_scipy_d10.txt");
    REQUIRE(f.good());
    int d = 0, n = 0;
    f >> d >> n;
    SobolSequence seq(d);
    for (int i = 0; i < n; ++i) {
      const Point p = seq.next();
      for (int k = 0; k < d; ++k) {
        double ref = 0.0;
        f >> ref;
        CHECK(p[k] == ref);
      }
    }
  }

  TEST_CASE("seeded sobol keeps the net property") {
    // first 16 points of a 2-d Sobol set hit every cell of a 4x4 grid once
    for (std::uint64_t seed : {0u, 1u, 99u}) {
      const auto pts = sobol_init(2, 16, seed);
      std::set<int> cells;
      for (const auto& p : pts) cells.insert(static_cast<int>(p[0] * 4) * 4 + static_cast<int>(p[1] * 4));
      CHECK(cells.size() == 16);
    }
  }

  TEST_CASE("sobol star discrepancy beats uniform random") {
    auto disc = [](const std::vector<Point>& pts) {
      double worst = 0.0;
      for (int i = 1; i <= 16; ++i) {
        for (int j = 1; j <= 16; ++j) {
          const double a = i / 16.0, b = j / 16.0;
          int inside = 0;
          for (const auto& p : pts) inside += (p[0] < a && p[1] < b);
          worst = std::max(worst, std::abs(inside / static_cast<double>(pts.size()) - a * b));
        }
      }
      return worst;
    };
    const double sobol = disc(sobol_init(2, 256, 3));
    Rng rng(11);
    double mean = 0.0;
    for (int r = 0; r < 100; ++r) {
      std::vector<Point> pts;
      for (int i = 0; i < 256; ++i) pts.push_back(rng.uniform_point(2));
      mean += disc(pts) / 100.0;
    }
    CHECK(sobol < mean);
  }

  TEST_CASE("ingest examples") {
    SampleStore s(1);
    s.ingest(Point{0.5}, 1.0);
    REQUIRE(s.size() == 1);
    CHECK(s[0].count == 1);
    CHECK(s[0].mean == 1.0);
    s.ingest(Point{0.5}, 0.0);
    CHECK(s.size() == 1);
    CHECK(s[0].count == 2);
    CHECK(s[0].mean == 0.5);
    s.ingest(Point{0.25}, 0.3);
    CHECK(s.size() == 2);
    CHECK(s.total() == 3);
    CHECK_THROWS_AS(s.ingest(Point{0.5}, std::nan("")), std::invalid_argument);
    CHECK_THROWS_AS(s.ingest(Point{0.5}, INFINITY), std::invalid_argument);
    CHECK_THROWS_AS(s.ingest(Point{1.5}, 0.0), std::invalid_argument);
  }

  TEST_CASE("ingest mean equals direct summation") {
    Rng rng(17);
    for (int stream = 0; stream < 1000; ++stream) {
      SampleStore s(2);
      const Point x = rng.uniform_point(2);
      const int n = 1 + static_cast<int>(rng.uniform() * 20);
      double sum = 0.0;
      for (int k = 0; k < n; ++k) {
        const double y = rng.normal();
        sum += y;
        s.ingest(x, y);
      }
      CHECK(s[0].mean == doctest::Approx(sum / n).epsilon(1e-14));
      CHECK(s.total() == n);
    }
  }

  TEST_CASE("store counts") {
    Rng rng(3);
    SampleStore s(2);
    std::vector<Point> locs;
    for (int k = 0; k < 10; ++k) locs.push_back(rng.uniform_point(2));
    for (int k = 0; k < 100; ++k) s.ingest(locs[static_cast<std::size_t>(rng.uniform() * 10)], rng.normal());
    int sum = 0;
    for (const auto& r : s.records()) sum += r.count;
    CHECK(sum == s.total());
    CHECK(s.size() <= 10);
  }

  TEST_CASE("best index prefers the earliest record on ties") {
    SampleStore s(1);
    s.ingest(Point{0.1}, 0.5);
    s.ingest(Point{0.2}, 0.7);
    s.ingest(Point{0.3}, 0.7);
    CHECK(s.best_index() == 1);
  }

  TEST_CASE("child streams ignore parent consumption") {
    Rng a(9), b(9);
    for (int k = 0; k < 100; ++k) a.uniform();
    Rng ca = a.split("noise"), cb = b.split("noise");
    for (int k = 0; k < 10; ++k) CHECK(ca.next_u64() == cb.next_u64());
    CHECK(Rng(9).split("noise").next_u64() != Rng(9).split("volume").next_u64());
  }

  TEST_CASE("config defaults and validation") {
    RunConfig c;
    CHECK(c.trust.n_trust == 5);
    CHECK(c.trust.r0 == 0.2);
    CHECK(c.trust.r_min == 0.01);
    CHECK(c.trust.tau_fail == 10);
    CHECK(c.hybrid.rho_thresh == 0.5);
    CHECK(c.hybrid.phase1_volume == 0.1);
    CHECK(c.hybrid.phase1_budget_fraction == doctest::Approx(1.0 / 3.0));
    CHECK_NOTHROW(c.validate());
    c.delta = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.delta = 0.05;
    c.budget = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.budget = 10;
    c.lipschitz = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.mode = Mode::Adaptive;
    CHECK_NOTHROW(c.validate());
  }

  TEST_CASE("noise model") {
    const NoisyObjective f = test::abs_peak_1d(0.0);
    Rng rng(1);
    CHECK(f.evaluate(Point{0.3}, rng) == 1.0);
    const NoisyObjective g = f.with_sigma(0.5);
    double sum = 0.0, sq = 0.0;
    for (int k = 0; k < 20000; ++k) {
      const double e = g.evaluate(Point{0.3}, rng) - 1.0;
      sum += e;
      sq += e * e;
    }
    CHECK(std::abs(sum / 20000) < 0.02);
    CHECK(std::sqrt(sq / 20000) == doctest::Approx(0.5).epsilon(0.03));
  }
}
