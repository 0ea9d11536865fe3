#include <doctest.h>

#include "cgp/benchmarks.hpp"
#include "cgp/certificate.hpp"
#include "cgp/volume.hpp"
#include "helpers.hpp"

using namespace cgp;
using test::rec;

namespace {

CertificateSnapshot snap1d(std::vector<CertificateRecord> r, double L) {
  return CertificateSnapshot(1, L, 0.1, 0.05, 100, std::move(r));
}

CertificateSnapshot noiseless_snapshot(const NoisyObjective& f, int n, double L, std::uint64_t seed) {
  Rng rng(seed);
  SampleStore s(f.dimension());
  for (int k = 0; k < n; ++k) {
    const Point x = rng.uniform_point(f.dimension());
    s.ingest(x, f.noiseless(x));
  }
  return CertificateSnapshot::from_store(s, L, 0.0, 0.05, 100);
}

}  // namespace

TEST_SUITE("certificate") {
  TEST_CASE("confidence radius against direct arithmetic") {
    // independent oracle: the closed form in long double
    const long double oracle4 = 0.1L * std::sqrt(2.0L * std::log(2.0L * 10 * 200 / 0.05L) / 4.0L);
    CHECK(confidence_radius(0.1, 4, 10, 200, 0.05) == doctest::Approx(0.23759).epsilon(1e-5 / 0.23759));
    CHECK(confidence_radius(0.1, 4, 10, 200, 0.05) == doctest::Approx(static_cast<double>(oracle4)).epsilon(1e-14));
    CHECK(confidence_radius(0.1, 16, 10, 200, 0.05) == doctest::Approx(0.11879).epsilon(1e-5 / 0.11879));
    CHECK(confidence_radius(0.1, 16, 10, 200, 0.05) ==
          doctest::Approx(confidence_radius(0.1, 4, 10, 200, 0.05) / 2).epsilon(1e-14));
    CHECK(confidence_radius(0.0, 3, 7, 100, 0.1) == 0.0);
    CHECK_THROWS_AS(confidence_radius(0.1, 1, 1, 10, 0.0), ConfigError);
    CHECK_THROWS_AS(confidence_radius(0.1, 1, 1, 10, 1.0), ConfigError);
  }

  TEST_CASE("confidence radius monotone in n and linear in sigma") {
    for (int n = 1; n < 50; ++n) CHECK(confidence_radius(0.1, n + 1, 5, 100, 0.05) < confidence_radius(0.1, n, 5, 100, 0.05));
    CHECK(confidence_radius(0.3, 2, 5, 100, 0.05) == doctest::Approx(3 * confidence_radius(0.1, 2, 5, 100, 0.05)));
  }

  TEST_CASE("beta target schedule") {
    const double oracle = 0.1 * std::sqrt(2.0 * std::log(2.0 * 200 * 200 / 0.05) / 100);
    CHECK(beta_target(100, 0.1, 200, 0.05) == doctest::Approx(0.053452).epsilon(1e-5 / 0.053452));
    CHECK(beta_target(100, 0.1, 200, 0.05) == doctest::Approx(oracle).epsilon(1e-14));
    CHECK(beta_target(400, 0.1, 200, 0.05) == doctest::Approx(beta_target(100, 0.1, 200, 0.05) / 2).epsilon(1e-14));
    CHECK(beta_target(5, 0.0, 200, 0.05) == 0.0);
  }

  TEST_CASE("lower certificate") {
    std::vector<CertificateRecord> one{rec({0.1}, 0.5, 0.1)};
    CHECK(lower_certificate(one) == doctest::Approx(0.4));
    std::vector<CertificateRecord> two{rec({0.1}, 0.5, 0.1), rec({0.2}, 0.7, 0.05)};
    CHECK(lower_certificate(two) == doctest::Approx(0.65));
    CHECK_THROWS(lower_certificate(std::vector<CertificateRecord>{}));
    CHECK_THROWS(CertificateSnapshot::from_store(SampleStore(1), 1.0, 0.0, 0.05, 10));
  }

  TEST_CASE("envelope and slack examples") {
    const auto one = snap1d({rec({0.2}, 0.5, 0.1)}, 2.0);
    CHECK(one.envelope(Point{0.2}) == doctest::Approx(0.6));
    CHECK(one.envelope(Point{0.5}) == doctest::Approx(1.2));
    CHECK(one.slack(Point{0.2}) == doctest::Approx(0.1));
    CHECK(one.slack(Point{0.5}) == doctest::Approx(0.7));
    const auto two = snap1d({rec({0.2}, 0.5, 0.1), rec({0.6}, 0.7, 0.05)}, 2.0);
    CHECK(two.envelope(Point{0.5}) == doctest::Approx(0.95));
    CHECK(two.slack(Point{0.5}) == doctest::Approx(std::min(0.1 + 0.6, 0.05 + 0.2)));
  }

  TEST_CASE("is_active examples") {
    const auto s = snap1d({rec({0.6}, 0.9, 0.02), rec({0.2}, 0.5, 0.1)}, 0.5);
    CHECK(s.ell() == doctest::Approx(0.88));
    CHECK(s.envelope(Point{0.0}) == doctest::Approx(0.7));
    CHECK_FALSE(s.is_active(Point{0.0}));
    // L = 0.5 is too small for these records: the record at 0.2 caps U(0.6) at 0.8 < ell
    CHECK_FALSE(s.is_active(Point{0.6}));
    const auto ok = snap1d({rec({0.6}, 0.9, 0.02), rec({0.2}, 0.5, 0.1)}, 1.0);
    CHECK(ok.is_active(ok.record(ok.best_lcb_index()).location));
    const auto wide = snap1d({rec({0.6}, 0.9, 1.5), rec({0.2}, 0.5, 2.0)}, 0.5);
    for (int k = 0; k <= 100; ++k) CHECK(wide.is_active(Point{k / 100.0}));
  }

  TEST_CASE("ties count as active") {
    // U(0.5) = 0.4 + 0.1 = 0.5 = ell
    const CertificateSnapshot s(1, 1.0, 0.0, 0.05, 10, {rec({0.4}, 0.4, 0.0), rec({0.9}, 0.5, 0.0)});
    CHECK(s.envelope(Point{0.5}) == doctest::Approx(0.5));
    CHECK(s.is_active(Point{0.5}));
  }

  TEST_CASE("gap assembly") {
    const GapReport g = assemble_gap(0.05, 2.0, 0.1, 0.2);
    CHECK(g.eps == doctest::Approx(0.7));
    const CertificateSnapshot s(1, 2.0, 0.0, 0.05, 10, {rec({0.25}, 0.6, 0.0)});
    PointSet pool(1);
    for (int k = 0; k <= 100; ++k) pool.push_back(Point{k / 100.0});
    const GapReport h = gap_report(s, pool);
    CHECK(h.beta == 0.0);
    CHECK(h.eta_hat == doctest::Approx(0.75));
    CHECK(h.gamma_hat == doctest::Approx(2.0 * 0.75));
    CHECK(h.eps == doctest::Approx(2 * 2.0 * 0.75 + 1.5));
    CHECK_THROWS_AS(gap_report(s, PointSet(1)), std::invalid_argument);
  }

  TEST_CASE("gap report matches brute-force grid oracle on the worked example") {
    const auto s = snap1d({rec({0.6}, 0.9, 0.02), rec({0.2}, 0.5, 0.1)}, 0.5);
    PointSet pool(1);
    for (int k = 0; k < 10000; ++k) {
      const Point x{(k + 0.5) / 10000};
      if (s.is_active(x)) pool.push_back(x);
    }
    REQUIRE(!pool.empty());
    // oracle loops written out independently of gap_report
    double beta = 0.0;
    for (const auto& r : s.records()) {
      double u = INFINITY;
      for (const auto& q : s.records()) u = std::min(u, q.mean + q.radius + 0.5 * std::abs(r.location[0] - q.location[0]));
      if (u >= s.ell()) beta = std::max(beta, r.radius);
    }
    double eta = 0.0, gamma = 0.0;
    for (std::size_t k = 0; k < pool.size(); ++k) {
      const double x = pool[k][0];
      double dmin = INFINITY, u = INFINITY;
      for (const auto& q : s.records()) {
        dmin = std::min(dmin, std::abs(x - q.location[0]));
        u = std::min(u, q.mean + q.radius + 0.5 * std::abs(x - q.location[0]));
      }
      eta = std::max(eta, dmin);
      gamma = std::max(gamma, u - s.ell());
    }
    const GapReport g = gap_report(s, pool);
    CHECK(g.beta == doctest::Approx(beta));
    CHECK(g.eta_hat == doctest::Approx(eta).epsilon(1e-4));
    CHECK(g.gamma_hat == doctest::Approx(gamma).epsilon(1e-4));
    CHECK(g.eps == doctest::Approx(2 * (g.beta + 0.5 * g.eta_hat) + g.gamma_hat));
    CHECK(g.beta >= 0);
    CHECK(g.eta_hat >= 0);
    CHECK(g.gamma_hat >= 0);
  }

  TEST_CASE("export round trip") {
    Rng rng(4);
    std::vector<CertificateRecord> r;
    for (int k = 0; k < 12; ++k) r.push_back(rec(rng.uniform_point(3), rng.normal(), 0.1 + rng.uniform(), 1 + k));
    const CertificateSnapshot s(3, 1.7, 0.1, 0.05, 300, r);
    const std::string doc = export_certificate(s, {"cgp", 5, 40});
    const CertificateDocument back = import_certificate(doc);
    CHECK(export_certificate(back.snapshot, back.run) == doc);
    CHECK(back.run.method == "cgp");
    CHECK(back.run.seed == 5);
    for (int k = 0; k < 100; ++k) {
      const Point x = rng.uniform_point(3);
      CHECK(back.snapshot.is_active(x) == s.is_active(x));
      CHECK(back.snapshot.envelope(x) == s.envelope(x));
    }
    const CertificateSnapshot local = s.localized(0.1, Box{{0.1, 0.1, 0.1}, {0.6, 0.7, 0.8}});
    const std::string ldoc = export_certificate(local);
    CHECK(export_certificate(import_certificate(ldoc).snapshot) == ldoc);
    CHECK_THROWS_AS(import_certificate("{\"dimension\": 1"), ConfigError);
    CHECK_THROWS_AS(import_certificate("{\"schema_version\": 1, \"dimension\": 1, \"lipschitz\": 1, \"sigma\": 0, "
                                       "\"delta\": 0.05, \"budget\": 10, \"ell\": 0, \"records\": []}"),
                    ConfigError);
  }

  TEST_CASE("envelope validity and slack bound on analytic benchmarks") {
    struct Case {
      const char* name;
      int d;
      BenchmarkParams p;
    };
    const std::vector<Case> cases{{"needle", 1, {{"p", 1}}}, {"needle", 2, {{"p", 2}}}, {"needle", 3, {{"p", 1}}},
                                  {"bump", 1, {{"eps", 0.2}, {"L", 1}}}, {"bump", 2, {{"eps", 0.1}, {"L", 1}}}};
    for (const auto& c : cases) {
      const Benchmark b = make_benchmark(c.name, c.d, c.p, 0.0);
      const double L = *b.objective.metadata().lipschitz;
      const auto s = noiseless_snapshot(b.objective, 25, L, 3);
      const int m = c.d == 1 ? 10000 : c.d == 2 ? 100 : 22;
      int violations = 0;
      for (const Point& x : test::grid_points(c.d, m)) {
        const double f = b.objective.noiseless(x);
        const double u = s.envelope(x);
        if (f > u + 1e-12 || u > f + 2 * s.slack(x) + 1e-12) ++violations;
      }
      CAPTURE(c.name);
      CHECK(violations == 0);
      CHECK(s.ell() <= *b.objective.metadata().optimum_value);
    }
  }

  TEST_CASE("envelope is L-Lipschitz") {
    Rng rng(8);
    std::vector<CertificateRecord> r;
    for (int k = 0; k < 20; ++k) r.push_back(rec(rng.uniform_point(2), rng.uniform(), 0.1 * rng.uniform()));
    const CertificateSnapshot s(2, 1.3, 0.1, 0.05, 100, r);
    for (int k = 0; k < 1000; ++k) {
      const Point a = rng.uniform_point(2), b = rng.uniform_point(2);
      CHECK(std::abs(s.envelope(a) - s.envelope(b)) <= 1.3 * distance(a, b) + 1e-12);
    }
  }

  TEST_CASE("monotone pruning under frozen radii") {
    Rng rng(12);
    std::vector<CertificateRecord> r;
    for (int k = 0; k < 10; ++k) r.push_back(rec(rng.uniform_point(2), rng.uniform(), 0.05 * rng.uniform()));
    const CertificateSnapshot before(2, 2.0, 0.1, 0.05, 100, r);
    r.push_back(rec(rng.uniform_point(2), rng.uniform(), 0.05 * rng.uniform()));
    const CertificateSnapshot after(2, 2.0, 0.1, 0.05, 100, r);
    CHECK(after.ell() >= before.ell());
    for (int k = 0; k < 2000; ++k) {
      const Point x = rng.uniform_point(2);
      CHECK(after.envelope(x) <= before.envelope(x));
      if (after.is_active(x)) CHECK(before.is_active(x));
    }
  }

  TEST_CASE("noiseless containment: active points are 2-Delta optimal") {
    const Benchmark b = make_benchmark("needle", 2, {{"p", 2}}, 0.0);
    const double L = *b.objective.metadata().lipschitz;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto s = noiseless_snapshot(b.objective, 30, L, seed);
      const ActiveSetEstimate est = grid_volume(s, 100);
      const GapReport g = gap_report(s, est);
      const double delta_hat = g.beta + L * g.eta_hat + g.gamma_hat / 2;
      for (std::size_t k = 0; k < est.member_pool.size(); ++k) {
        CHECK(b.objective.noiseless(est.member_pool[k]) >= 1.0 - 2 * delta_hat - 1e-12);
      }
      CHECK(s.is_active(*b.objective.metadata().optimizer));
    }
  }

  TEST_CASE("radii vanish without noise and are positive with noise") {
    SampleStore st(1);
    st.ingest(Point{0.2}, 0.1);
    st.ingest(Point{0.7}, 0.3);
    const auto z = CertificateSnapshot::from_store(st, 1.0, 0.0, 0.05, 10);
    const auto p = CertificateSnapshot::from_store(st, 1.0, 0.1, 0.05, 10);
    for (const auto& r : z.records()) CHECK(r.radius == 0.0);
    for (const auto& r : p.records()) CHECK(r.radius > 0.0);
    CHECK(p.ell() == doctest::Approx(lower_certificate(p.records())));
  }
}
