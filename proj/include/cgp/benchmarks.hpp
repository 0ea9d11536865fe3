#pragma once

#include <map>
#include <string>
#include <vector>

#include "cgp/model.hpp"

namespace cgp {

using BenchmarkParams = std::map<std::string, double>;

/// Affine map from [0,1]^d to the classical box, plus the value rescaling.
struct Normalization {
  Point lower;
  Point upper;
  double raw_low = 0.0;   // raw (maximization-form) value mapped to 0
  double raw_high = 1.0;  // raw value mapped to 1
};

struct Benchmark {
  std::string name;
  int dimension = 0;
  NoisyObjective objective;
  Normalization normalization;
};

const std::vector<std::string>& benchmark_names();

/// Parameters: needle {p}, bump {eps, L}; others take none.
/// Throws ConfigError for unknown names, wrong dimensions or bad parameters.
Benchmark make_benchmark(const std::string& name, int dimension, const BenchmarkParams& params = {},
                         double sigma = 0.0);

/// 1.1 x the largest difference quotient seen over `pairs` probe pairs (half
/// short-range, half uniform); deterministic.
double empirical_lipschitz(const std::function<double(PointView)>& f, int dimension, int pairs = 1000000);

/// Classical forms (minimization, original coordinates).
double branin_raw(double x1, double x2);
double hartmann6_raw(PointView x);
double ackley_raw(PointView x);
double levy_raw(PointView x);
double rosenbrock_raw(PointView x);

}  // namespace cgp
