#include "cgp/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>

namespace cgp {

namespace {

constexpr int kProbePoints = 1000000;

double param(const BenchmarkParams& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void reject_unknown_params(const BenchmarkParams& params, std::initializer_list<const char*> allowed,
                           const std::string& name) {
  for (const auto& [key, value] : params) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError("benchmark '" + name + "' has no parameter '" + key + "'");
    }
  }
}

/// (0.3, 0.7, 0.3, ...)
Point default_peak(int d) {
  Point x(d);
  for (int k = 0; k < d; ++k) x[k] = k % 2 == 0 ? 0.3 : 0.7;
  return x;
}

double farthest_corner_distance(const Point& x) {
  double s = 0.0;
  for (double v : x) {
    const double m = std::max(v, 1.0 - v);
    s += m * m;
  }
  return std::sqrt(s);
}

struct Classical {
  std::function<double(PointView)> raw;  // minimization form in original coordinates
  Point lower;
  Point upper;
  Point minimizer;  // original coordinates
};

Point to_original(PointView u, const Point& lower, const Point& upper) {
  Point x(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) x[k] = lower[k] + u[k] * (upper[k] - lower[k]);
  return x;
}

struct CachedScale {
  double raw_low;
  double raw_high;
  double lipschitz;
};

std::mutex cache_mutex;
std::map<std::pair<std::string, int>, CachedScale> scale_cache;

Benchmark classical_benchmark(const std::string& name, int d, const Classical& c, double sigma) {
  const Point lower = c.lower;
  const Point upper = c.upper;
  auto raw = c.raw;
  // maximization form: g(u) = -raw(x(u))
  auto g = [raw, lower, upper](PointView u) { return -raw(to_original(u, lower, upper)); };
  Point xstar(d);
  for (int k = 0; k < d; ++k) xstar[k] = (c.minimizer[k] - lower[k]) / (upper[k] - lower[k]);

  CachedScale scale{};
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = scale_cache.find({name, d});
    if (it != scale_cache.end()) scale = it->second;
  }
  if (scale.raw_high == scale.raw_low) {
    Rng probe(0x9e3779b97f4a7c15ULL);
    double low = g(xstar);
    Point u(d);
    for (int i = 0; i < kProbePoints; ++i) {
      for (int k = 0; k < d; ++k) u[k] = probe.uniform();
      low = std::min(low, g(u));
    }
    scale.raw_low = low;
    scale.raw_high = g(xstar);
    const double span = scale.raw_high - scale.raw_low;
    const double lo = scale.raw_low;
    scale.lipschitz = empirical_lipschitz([&g, lo, span](PointView x) { return (g(x) - lo) / span; }, d);
    std::lock_guard<std::mutex> lock(cache_mutex);
    scale_cache[{name, d}] = scale;
  }
  const double lo = scale.raw_low;
  const double span = scale.raw_high - scale.raw_low;
  ObjectiveMetadata meta;
  meta.optimum_value = 1.0;
  meta.optimizer = xstar;
  meta.lipschitz = scale.lipschitz;
  meta.lipschitz_is_empirical = true;
  meta.noise_sigma = sigma;
  Benchmark b{name, d,
              NoisyObjective(d, [g, lo, span](PointView u) { return (g(u) - lo) / span; }, sigma, meta),
              Normalization{lower, upper, scale.raw_low, scale.raw_high}};
  return b;
}

void require_dimension(const std::string& name, int d, int expected) {
  if (d != expected) {
    throw ConfigError("benchmark '" + name + "' is defined only for d=" + std::to_string(expected));
  }
}

}  // namespace

const std::vector<std::string>& benchmark_names() {
  static const std::vector<std::string> names{"needle", "bump", "branin", "hartmann6", "ackley", "levy", "rosenbrock"};
  return names;
}

double branin_raw(double x1, double x2) {
  const double pi = std::numbers::pi;
  const double b = 5.1 / (4.0 * pi * pi);
  const double c = 5.0 / pi;
  const double t = 1.0 / (8.0 * pi);
  const double q = x2 - b * x1 * x1 + c * x1 - 6.0;
  return q * q + 10.0 * (1.0 - t) * std::cos(x1) + 10.0;
}

double hartmann6_raw(PointView x) {
  static const double alpha[4] = {1.0, 1.2, 3.0, 3.2};
  static const double A[4][6] = {{10, 3, 17, 3.5, 1.7, 8},
                                 {0.05, 10, 17, 0.1, 8, 14},
                                 {3, 3.5, 1.7, 10, 17, 8},
                                 {17, 8, 0.05, 10, 0.1, 14}};
  static const double P[4][6] = {{0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
                                 {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
                                 {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
                                 {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    double inner = 0.0;
    for (int k = 0; k < 6; ++k) inner += A[i][k] * (x[k] - P[i][k]) * (x[k] - P[i][k]);
    s += alpha[i] * std::exp(-inner);
  }
  return -s;
}

double ackley_raw(PointView x) {
  const double d = static_cast<double>(x.size());
  double s1 = 0.0, s2 = 0.0;
  for (double v : x) {
    s1 += v * v;
    s2 += std::cos(2.0 * std::numbers::pi * v);
  }
  return -20.0 * std::exp(-0.2 * std::sqrt(s1 / d)) - std::exp(s2 / d) + 20.0 + std::numbers::e;
}

double levy_raw(PointView x) {
  const std::size_t d = x.size();
  auto w = [&](std::size_t i) { return 1.0 + (x[i] - 1.0) / 4.0; };
  const double pi = std::numbers::pi;
  const double w0 = w(0);
  double s = std::sin(pi * w0) * std::sin(pi * w0);
  for (std::size_t i = 0; i + 1 < d; ++i) {
    const double wi = w(i);
    const double sn = std::sin(pi * wi + 1.0);
    s += (wi - 1.0) * (wi - 1.0) * (1.0 + 10.0 * sn * sn);
  }
  const double wd = w(d - 1);
  const double sd = std::sin(2.0 * pi * wd);
  s += (wd - 1.0) * (wd - 1.0) * (1.0 + sd * sd);
  return s;
}

double rosenbrock_raw(PointView x) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    const double b = 1.0 - x[i];
    s += 100.0 * a * a + b * b;
  }
  return s;
}

double empirical_lipschitz(const std::function<double(PointView)>& f, int dimension, int pairs) {
  Rng rng(0x5bd1e995ULL + static_cast<std::uint64_t>(dimension));
  double best = 0.0;
  Point a(dimension), b(dimension);
  for (int i = 0; i < pairs; ++i) {
    for (int k = 0; k < dimension; ++k) a[k] = rng.uniform();
    if (i % 2 == 0) {
      // short-range pair: step length log-uniform in [1e-4, 1e-1]
      const double h = std::pow(10.0, rng.uniform(-4.0, -1.0));
      const Point dir = rng.direction(dimension);
      for (int k = 0; k < dimension; ++k) b[k] = std::clamp(a[k] + h * dir[k], 0.0, 1.0);
    } else {
      for (int k = 0; k < dimension; ++k) b[k] = rng.uniform();
    }
    const double dist = distance(a, b);
    if (dist > 0.0) best = std::max(best, std::abs(f(a) - f(b)) / dist);
  }
  return 1.1 * best;
}

Benchmark make_benchmark(const std::string& name, int d, const BenchmarkParams& params, double sigma) {
  if (d < 1) throw ConfigError("benchmark dimension must be >= 1");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("noise sigma must be finite and >= 0");

  if (name == "needle") {
    reject_unknown_params(params, {"p"}, name);
    const double p = param(params, "p", 1.0);
    if (p != 1.0 && p != 2.0) throw ConfigError("needle exponent p must be 1 or 2");
    const Point xstar = default_peak(d);
    const double maxdist = farthest_corner_distance(xstar);
    const double scale = 1.0 / std::pow(maxdist, p);
    ObjectiveMetadata meta;
    meta.optimum_value = 1.0;
    meta.optimizer = xstar;
    meta.lipschitz = p * scale * std::pow(maxdist, p - 1.0);
    meta.noise_sigma = sigma;
    meta.alpha = d - d / p;
    auto f = [xstar, scale, p](PointView x) {
      const double r = distance(x, xstar);
      return 1.0 - scale * (p == 1.0 ? r : r * r);
    };
    return {name, d, NoisyObjective(d, f, sigma, meta), Normalization{Point(d, 0.0), Point(d, 1.0), 0.0, 1.0}};
  }
  if (name == "bump") {
    reject_unknown_params(params, {"eps", "L"}, name);
    const double eps = param(params, "eps", 0.1);
    const double L = param(params, "L", 1.0);
    if (!(eps > 0.0 && eps <= 1.0) || !(L > 0.0)) throw ConfigError("bump needs eps in (0,1] and L > 0");
    const Point xstar = default_peak(d);
    ObjectiveMetadata meta;
    meta.optimum_value = 1.0;
    meta.optimizer = xstar;
    meta.lipschitz = L;
    meta.noise_sigma = sigma;
    meta.alpha = 0.0;
    auto f = [xstar, eps, L](PointView x) {
      return (1.0 - eps) + eps * std::max(0.0, 1.0 - L * distance(x, xstar) / eps);
    };
    return {name, d, NoisyObjective(d, f, sigma, meta), Normalization{Point(d, 0.0), Point(d, 1.0), 0.0, 1.0}};
  }
  if (name == "branin") {
    reject_unknown_params(params, {}, name);
    require_dimension(name, d, 2);
    Classical c{[](PointView x) { return branin_raw(x[0], x[1]); }, {-5.0, 0.0}, {10.0, 15.0}, {std::numbers::pi, 2.275}};
    return classical_benchmark(name, d, c, sigma);
  }
  if (name == "hartmann6") {
    reject_unknown_params(params, {}, name);
    require_dimension(name, d, 6);
    Classical c{hartmann6_raw, Point(6, 0.0), Point(6, 1.0),
                {0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573}};
    return classical_benchmark(name, d, c, sigma);
  }
  if (name == "ackley") {
    reject_unknown_params(params, {}, name);
    Classical c{ackley_raw, Point(d, -32.768), Point(d, 32.768), Point(d, 0.0)};
    return classical_benchmark(name, d, c, sigma);
  }
  if (name == "levy") {
    reject_unknown_params(params, {}, name);
    Classical c{levy_raw, Point(d, -10.0), Point(d, 10.0), Point(d, 1.0)};
    return classical_benchmark(name, d, c, sigma);
  }
  if (name == "rosenbrock") {
    reject_unknown_params(params, {}, name);
    if (d < 2) throw ConfigError("rosenbrock needs d >= 2");
    Classical c{rosenbrock_raw, Point(d, -5.0), Point(d, 10.0), Point(d, 1.0)};
    return classical_benchmark(name, d, c, sigma);
  }
  std::ostringstream msg;
  msg << "unknown benchmark '" << name << "'; choices:";
  for (const auto& n : benchmark_names()) msg << ' ' << n;
  throw ConfigError(msg.str());
}

}  // namespace cgp
