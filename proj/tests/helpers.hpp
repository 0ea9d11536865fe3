#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cgp/certificate.hpp"
#include "cgp/model.hpp"

namespace cgp::test {

/// f(x) = 1 - |x - 0.3| on [0,1]; slope exactly 1.
inline NoisyObjective abs_peak_1d(double sigma) {
  ObjectiveMetadata m;
  m.optimum_value = 1.0;
  m.optimizer = Point{0.3};
  m.lipschitz = 1.0;
  m.noise_sigma = sigma;
  return NoisyObjective(1, [](PointView x) { return 1.0 - std::abs(x[0] - 0.3); }, sigma, m);
}

/// f(x) = 1 - (x - 0.3)^2 on [0,1]; L* = 1.4 at x = 1.
inline NoisyObjective quadratic_1d(double sigma) {
  ObjectiveMetadata m;
  m.optimum_value = 1.0;
  m.optimizer = Point{0.3};
  m.lipschitz = 1.4;
  m.noise_sigma = sigma;
  return NoisyObjective(1, [](PointView x) { return 1.0 - (x[0] - 0.3) * (x[0] - 0.3); }, sigma, m);
}

inline CertificateRecord rec(Point x, double mean, double radius, int n = 1) {
  return CertificateRecord{std::move(x), n, mean, radius};
}

/// Cell-centred grid over [0,1]^d with m points per axis.
inline std::vector<Point> grid_points(int d, int m) {
  std::vector<Point> out;
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  while (true) {
    Point p(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) p[k] = (idx[k] + 0.5) / m;
    out.push_back(p);
    int k = 0;
    while (k < d && ++idx[k] == m) idx[k++] = 0;
    if (k == d) break;
  }
  return out;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace cgp::test
