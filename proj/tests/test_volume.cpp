#include <doctest.h>

#include "cgp/volume.hpp"
#include "helpers.hpp"

using namespace cgp;
using test::rec;

namespace {

/// A_t is roughly the disk of radius 0.3 about the centre: a high record at
/// the centre fixes ell = 1 and a ring of lower records prunes everything
/// farther than about 0.3 from it.
CertificateSnapshot disk_snapshot() {
  std::vector<CertificateRecord> r{rec({0.5, 0.5}, 1.0, 0.0)};
  for (int k = 0; k < 48; ++k) {
    const double a = 2 * M_PI * k / 48;
    r.push_back(rec({0.5 + 0.6 * std::cos(a), 0.5 + 0.6 * std::sin(a)}, 0.7, 0.0));
  }
  // ring points outside the cube are fine for the envelope; clamp for validity
  for (auto& q : r) {
    for (double& c : q.location) c = std::clamp(c, 0.0, 1.0);
  }
  return CertificateSnapshot(2, 1.0, 0.0, 0.05, 100, r);
}

double draws_from(std::vector<double> seq, std::size_t& pos) { return seq[std::min(pos++, seq.size() - 1)]; }

}  // namespace

TEST_SUITE("volume") {
  TEST_CASE("grid: nothing prunable") {
    const CertificateSnapshot s(2, 1.0, 0.1, 0.05, 10, {rec({0.2, 0.2}, 0.5, 3.0), rec({0.7, 0.1}, 0.4, 3.0)});
    const ActiveSetEstimate e = grid_volume(s, 50);
    CHECK(e.volume_fraction == 1.0);
    CHECK(e.member_pool.size() == 2500);
    CHECK_FALSE(e.anomaly);
  }

  TEST_CASE("grid: hand-solved interval") {
    // 0.2 + |x - 0.9| >= 0.8  <=>  x <= 0.3
    const CertificateSnapshot s(1, 1.0, 0.0, 0.05, 10, {rec({0.25}, 0.8, 0.0), rec({0.9}, 0.2, 0.0)});
    const ActiveSetEstimate e = grid_volume(s, 100);
    CHECK(std::abs(e.volume_fraction - 0.30) <= 0.01 + 1e-12);
    CHECK(e.log_volume_ci.first == e.log_volume_ci.second);
    for (std::size_t k = 0; k < e.member_pool.size(); ++k) CHECK(e.member_pool[k][0] <= 0.3);
  }

  TEST_CASE("grid: inconsistent snapshot is empty and flagged") {
    const CertificateSnapshot s(1, 1.0, 0.0, 0.05, 10, {rec({0.25}, 0.8, 0.0)}, 5.0);
    const ActiveSetEstimate e = grid_volume(s, 100);
    CHECK(e.volume_fraction == 0.0);
    CHECK(e.anomaly);
  }

  TEST_CASE("grid guards") {
    const CertificateSnapshot s6(6, 1.0, 0.0, 0.05, 10, {rec(Point(6, 0.5), 0.8, 0.0)});
    CHECK_THROWS_AS(grid_volume(s6, 4), std::invalid_argument);
    const CertificateSnapshot s3(3, 1.0, 0.0, 0.05, 10, {rec(Point(3, 0.5), 0.8, 0.0)});
    CHECK_THROWS_AS(grid_volume(s3, 300), std::invalid_argument);
    CHECK(default_grid_points(2) == 100);
    CHECK(default_grid_points(4) == 32);
  }

  TEST_CASE("hit-and-run chord examples") {
    const Membership all = [](PointView) { return true; };
    const Membership half = [](PointView x) { return x[0] <= 0.5; };
    const Box cube = Box::unit(2);
    std::size_t pos = 0;
    auto draw = [&pos](std::vector<double> v) {
      pos = 0;
      return [v, &pos]() { return draws_from(v, pos); };
    };
    Point p = hit_and_run_move(Point{0.5, 0.5}, Point{1, 0}, all, cube, draw({0.25}));
    CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(p[1] == doctest::Approx(0.5));
    p = hit_and_run_move(Point{0.5, 0.5}, Point{1, 0}, half, cube, draw({0.5}));
    CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-5));
    CHECK(p[1] == doctest::Approx(0.5));
    p = hit_and_run_move(Point{0.5, 0.5}, Point{0, 1}, all, cube, draw({0.9}));
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.9).epsilon(1e-6));
  }

  TEST_CASE("hit-and-run stays in the membership set") {
    const Membership disk = [](PointView x) { return (x[0] - 0.5) * (x[0] - 0.5) + (x[1] - 0.5) * (x[1] - 0.5) <= 0.09; };
    Rng rng(2);
    Point cur{0.5, 0.5};
    for (int k = 0; k < 2000; ++k) {
      cur = hit_and_run_step(cur, disk, rng);
      REQUIRE(disk(cur));
    }
  }

  TEST_CASE("hit-and-run is uniform on the cube (chi-square, 16 cells)") {
    const Membership all = [](PointView) { return true; };
    Rng rng(21);
    Point cur{0.5, 0.5};
    for (int k = 0; k < 100; ++k) cur = hit_and_run_step(cur, all, rng);
    std::vector<int> cells(16, 0);
    const int n = 10000;
    // consecutive chain states are correlated; thin so the chi-square reference applies
    for (int k = 0; k < n; ++k) {
      for (int j = 0; j < 10; ++j) cur = hit_and_run_step(cur, all, rng);
      cells[static_cast<std::size_t>(std::min(3, int(cur[0] * 4)) * 4 + std::min(3, int(cur[1] * 4)))]++;
    }
    double chi2 = 0.0;
    for (int c : cells) chi2 += (c - n / 16.0) * (c - n / 16.0) / (n / 16.0);
    CHECK(chi2 < 30.578);  // 99th percentile, 15 degrees of freedom
  }

  TEST_CASE("nested: everything active at level zero") {
    const CertificateSnapshot s(2, 1.0, 0.1, 0.05, 10, {rec({0.2, 0.2}, 0.5, 3.0)});
    Rng rng(1);
    const ActiveSetEstimate e = nested_volume(s, NestedConfig{}, rng);
    CHECK(e.volume_fraction == doctest::Approx(1.0));
  }

  TEST_CASE("nested: product law over fixed levels") {
    const std::vector<Membership> levels{[](PointView x) { return x[0] <= 0.5; },
                                         [](PointView x) { return x[0] <= 0.5 && x[1] <= 0.5; }};
    Rng rng(3);
    const SubsetSimulation r = nested_fixed_levels(Box::unit(2), levels, NestedConfig{}, rng);
    CHECK(r.probability == doctest::Approx(0.25).epsilon(0.2));
    CHECK(std::abs(r.probability - 0.25) <= 0.05);
  }

  TEST_CASE("nested agrees with a fine grid on a disk-shaped active set") {
    const CertificateSnapshot s = disk_snapshot();
    const double grid = grid_volume(s, 1000).volume_fraction;
    CHECK(grid == doctest::Approx(M_PI * 0.09).epsilon(0.15));
    Rng rng(5);
    const ActiveSetEstimate e = nested_volume(s, NestedConfig{}, rng);
    CHECK(std::abs(e.volume_fraction - grid) <= 0.15 * grid);
    CHECK(std::log(e.volume_fraction) >= e.log_volume_ci.first - 1e-12);
    CHECK(std::log(e.volume_fraction) <= e.log_volume_ci.second + 1e-12);
    for (std::size_t k = 0; k < e.member_pool.size(); ++k) CHECK(s.is_active(e.member_pool[k]));
  }

  TEST_CASE("active pool") {
    Rng rng(6);
    const CertificateSnapshot open(1, 1.0, 0.1, 0.05, 10, {rec({0.2}, 0.5, 3.0)});
    CHECK(sample_active_pool(open, 64, rng).size() == 64);
    const CertificateSnapshot interval(1, 1.0, 0.0, 0.05, 10, {rec({0.25}, 0.8, 0.0), rec({0.9}, 0.2, 0.0)});
    const PointSet pool = sample_active_pool(interval, 200, rng);
    CHECK(pool.size() == 200);
    for (std::size_t k = 0; k < pool.size(); ++k) CHECK(pool[k][0] <= 0.3 + 1e-12);
    const CertificateSnapshot empty(1, 1.0, 0.0, 0.05, 10, {rec({0.25}, 0.8, 0.0)}, 5.0);
    CHECK_THROWS_AS(sample_active_pool(empty, 10, rng), AnomalyError);
  }

  TEST_CASE("tiny active set falls back to hit-and-run") {
    // balls of radius 0.075 around a 9x9 lattice prune all but slivers and a
    // small patch around the incumbent
    std::vector<CertificateRecord> r{rec({0.5, 0.5}, 1.0, 0.0)};
    for (int i = 0; i < 9; ++i) {
      for (int j = 0; j < 9; ++j) {
        if (i == 4 && j == 4) continue;
        r.push_back(rec({(i + 0.5) / 9, (j + 0.5) / 9}, 0.915, 0.0));
      }
    }
    const CertificateSnapshot s(2, 1.0, 0.0, 0.05, 10, r);
    const double vol = grid_volume(s, 100).volume_fraction;
    CHECK(vol < 0.01);
    CHECK(vol > 0.0);
    Rng rng(7);
    const PointSet pool = sample_active_pool(s, 50, rng);
    CHECK(pool.size() == 50);
    for (std::size_t k = 0; k < pool.size(); ++k) CHECK(s.is_active(pool[k]));
  }

  TEST_CASE("membership does not depend on the volume method") {
    const CertificateSnapshot s = disk_snapshot();
    Rng rng(9);
    std::vector<bool> before;
    std::vector<Point> probes;
    for (int k = 0; k < 200; ++k) probes.push_back(rng.uniform_point(2));
    for (const auto& p : probes) before.push_back(s.is_active(p));
    VolumeSpec nested;
    nested.method = VolumeMethod::NestedMc;
    estimate_active_set(s, nested, rng);
    grid_volume(s, 100);
    for (std::size_t k = 0; k < probes.size(); ++k) CHECK(s.is_active(probes[k]) == before[k]);
  }

  TEST_CASE("auto dispatch") {
    Rng rng(1);
    const CertificateSnapshot s2(2, 1.0, 0.0, 0.05, 10, {rec({0.5, 0.5}, 0.8, 0.0)});
    CHECK(estimate_active_set(s2, VolumeSpec{}, rng).method == VolumeMethod::Grid);
    const CertificateSnapshot s8(8, 1.0, 0.0, 0.05, 10, {rec(Point(8, 0.5), 0.8, 0.0)});
    VolumeSpec v;
    v.nested.samples_per_level = 100;
    v.nested.repeats = 2;
    const ActiveSetEstimate e = estimate_active_set(s8, v, rng);
    CHECK(e.method == VolumeMethod::NestedMc);
    CHECK(e.volume_fraction == doctest::Approx(1.0));
  }
}
