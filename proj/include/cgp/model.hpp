#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cgp {

/// A location in the unit hypercube [0,1]^d.
using Point = std::vector<double>;
using PointView = std::span<const double>;

/// Invalid configuration or malformed input document (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The active set became empty or the run otherwise left the good event in a
/// detectable way (CLI exit code 3).
class AnomalyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Euclidean distance; throws std::invalid_argument on dimension mismatch.
double distance(PointView a, PointView b);
double squared_distance(PointView a, PointView b);

bool in_unit_cube(PointView x);

/// Axis-aligned box inside the unit cube.
struct Box {
  Point lower;
  Point upper;

  static Box unit(int dimension);
  int dimension() const { return static_cast<int>(lower.size()); }
  bool contains(PointView x) const;
  double volume() const;
};

/// Contiguous storage for many points of the same dimension.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(int dimension) : dim_(dimension) {}

  int dimension() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / static_cast<std::size_t>(dim_); }
  bool empty() const { return data_.empty(); }
  PointView operator[](std::size_t i) const {
    return {data_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  void push_back(PointView x);
  void reserve(std::size_t n) { data_.reserve(n * static_cast<std::size_t>(dim_)); }
  Point point(std::size_t i) const {
    auto v = (*this)[i];
    return {v.begin(), v.end()};
  }
  const std::vector<double>& raw() const { return data_; }

 private:
  int dim_ = 0;
  std::vector<double> data_;
};

/// Seeded random stream. Child streams are derived from the root seed and a
/// label, never from the parent's consumption state, so adding draws to one
/// stream leaves every other stream untouched.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  Rng split(std::string_view label) const;
  Rng split(std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  std::uint64_t next_u64() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

  Point uniform_point(int dimension);
  Point uniform_point(const Box& box);
  /// Uniform direction on the unit sphere.
  Point direction(int dimension);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

/// One distinct sampled location.
struct SampleRecord {
  Point location;
  int count = 0;
  double sum = 0.0;
  double mean = 0.0;
};

/// Distinct sampled locations with counts and running means. Identity is
/// exact coordinate equality.
class SampleStore {
 public:
  explicit SampleStore(int dimension);

  /// Adds one observation and returns the index of the affected record.
  std::size_t ingest(PointView x, double y);

  int dimension() const { return dim_; }
  const std::vector<SampleRecord>& records() const { return records_; }
  const SampleRecord& operator[](std::size_t i) const { return records_[i]; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  /// Total number of observations t.
  int total() const { return total_; }
  std::optional<std::size_t> find(PointView x) const;
  /// argmax of the empirical mean; earliest record wins ties.
  std::size_t best_index() const;

 private:
  int dim_;
  int total_ = 0;
  std::vector<SampleRecord> records_;
  std::map<Point, std::size_t> index_;
};

/// Optional ground truth attached to synthetic objectives.
struct ObjectiveMetadata {
  std::optional<double> optimum_value;
  std::optional<Point> optimizer;
  std::optional<double> lipschitz;
  bool lipschitz_is_empirical = false;
  std::optional<double> noise_sigma;
  std::optional<double> alpha;
};

/// f(x) plus Gaussian noise of scale sigma.
class NoisyObjective {
 public:
  using Function = std::function<double(PointView)>;

  NoisyObjective(int dimension, Function f, double sigma, ObjectiveMetadata metadata = {});

  int dimension() const { return dim_; }
  double sigma() const { return sigma_; }
  const ObjectiveMetadata& metadata() const { return meta_; }

  double evaluate(PointView x, Rng& noise) const;
  double noiseless(PointView x) const { return f_(x); }
  NoisyObjective with_sigma(double sigma) const;

 private:
  int dim_;
  Function f_;
  double sigma_;
  ObjectiveMetadata meta_;
};

enum class Mode { KnownL, Adaptive, TrustRegion, Hybrid };

struct StoppingRule {
  enum class Kind { FixedBudget, VolumeBelow, GapBelow };
  Kind kind = Kind::FixedBudget;
  double threshold = 0.0;

  static StoppingRule fixed_budget() { return {}; }
  static StoppingRule volume_below(double v) { return {Kind::VolumeBelow, v}; }
  static StoppingRule gap_below(double g) { return {Kind::GapBelow, g}; }
};

struct NestedConfig {
  double p0 = 0.1;
  int samples_per_level = 1000;
  int burn_in = 10;
  int repeats = 8;
  int max_levels = 64;
};

enum class VolumeMethod { Auto, Grid, NestedMc };

struct VolumeSpec {
  VolumeMethod method = VolumeMethod::Auto;
  int grid_points_per_axis = 0;  // 0: 100 for d <= 3, 32 for d = 4, 24 for d = 5
  NestedConfig nested;
  int pool_size = 512;
};

struct TrustRegionParams {
  int n_trust = 5;
  double r0 = 0.2;
  double r_min = 0.01;
  int tau_fail = 10;
  int bound_budget = 500;  // envelope evaluations per region upper bound
  bool replicate = false;  // within-region replication after each query
  std::vector<Point> initial_centers;  // overrides Sobol centers when non-empty
};

struct HybridParams {
  double rho_thresh = 0.5;
  double phase1_volume = 0.1;
  double phase1_budget_fraction = 1.0 / 3.0;
  bool mle = true;
};

struct RunConfig {
  int dimension = 1;
  int budget = 100;
  double delta = 0.05;
  double sigma = 0.0;
  /// Initial Lipschitz estimate. In adaptive mode a non-positive value
  /// requests finite-difference initialisation from warm Sobol samples.
  double lipschitz = 1.0;
  Mode mode = Mode::KnownL;
  std::uint64_t seed = 0;
  StoppingRule stopping;
  VolumeSpec volume;
  int volume_every = 10;
  int maximizer_budget = 2000;
  int maximizer_restarts = 10;
  int warm_samples = 10;
  TrustRegionParams trust;
  HybridParams hybrid;

  /// Throws ConfigError.
  void validate() const;
};

std::string to_string(Mode mode);
Mode mode_from_string(std::string_view s);

}  // namespace cgp
