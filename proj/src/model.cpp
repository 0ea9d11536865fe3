#include "cgp/model.hpp"

#include <algorithm>
#include <cmath>

namespace cgp {

double squared_distance(PointView a, PointView b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("distance: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

double distance(PointView a, PointView b) { return std::sqrt(squared_distance(a, b)); }

bool in_unit_cube(PointView x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

Box Box::unit(int dimension) {
  return {Point(static_cast<std::size_t>(dimension), 0.0), Point(static_cast<std::size_t>(dimension), 1.0)};
}

bool Box::contains(PointView x) const {
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] < lower[k] || x[k] > upper[k]) return false;
  }
  return true;
}

double Box::volume() const {
  double v = 1.0;
  for (std::size_t k = 0; k < lower.size(); ++k) v *= upper[k] - lower[k];
  return v;
}

void PointSet::push_back(PointView x) {
  if (static_cast<int>(x.size()) != dim_) throw std::invalid_argument("PointSet: dimension mismatch");
  data_.insert(data_.end(), x.begin(), x.end());
}

// splitmix64 finaliser
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(mix_seed(seed, 0)) {}

Rng Rng::split(std::string_view label) const { return Rng(mix_seed(seed_, fnv1a(label))); }

Rng Rng::split(std::uint64_t index) const { return Rng(mix_seed(seed_ ^ 0xA5A5A5A5A5A5A5A5ULL, index)); }

double Rng::uniform() {
  // 53 random bits -> [0, 1)
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() { return normal_(engine_); }

Point Rng::uniform_point(int dimension) {
  Point x(static_cast<std::size_t>(dimension));
  for (auto& v : x) v = uniform();
  return x;
}

Point Rng::uniform_point(const Box& box) {
  Point x(box.lower.size());
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = uniform(box.lower[k], box.upper[k]);
  return x;
}

Point Rng::direction(int dimension) {
  Point u(static_cast<std::size_t>(dimension));
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& v : u) {
      v = normal();
      norm2 += v * v;
    }
  } while (norm2 < 1e-300);
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& v : u) v *= inv;
  return u;
}

SampleStore::SampleStore(int dimension) : dim_(dimension) {
  if (dimension < 1) throw std::invalid_argument("SampleStore: dimension must be >= 1");
}

std::size_t SampleStore::ingest(PointView x, double y) {
  if (static_cast<int>(x.size()) != dim_) throw std::invalid_argument("ingest: dimension mismatch");
  if (!in_unit_cube(x)) throw std::invalid_argument("ingest: location outside [0,1]^d");
  if (!std::isfinite(y)) throw std::invalid_argument("ingest: non-finite observation rejected");
  Point key(x.begin(), x.end());
  auto [it, inserted] = index_.try_emplace(key, records_.size());
  if (inserted) records_.push_back(SampleRecord{std::move(key), 0, 0.0, 0.0});
  auto& rec = records_[it->second];
  rec.count += 1;
  rec.sum += y;
  rec.mean = rec.sum / rec.count;
  ++total_;
  return it->second;
}

std::optional<std::size_t> SampleStore::find(PointView x) const {
  auto it = index_.find(Point(x.begin(), x.end()));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t SampleStore::best_index() const {
  if (records_.empty()) throw std::logic_error("best_index: empty store");
  std::size_t best = 0;
  for (std::size_t i = 1; i < records_.size(); ++i) {
    if (records_[i].mean > records_[best].mean) best = i;
  }
  return best;
}

NoisyObjective::NoisyObjective(int dimension, Function f, double sigma, ObjectiveMetadata metadata)
    : dim_(dimension), f_(std::move(f)), sigma_(sigma), meta_(std::move(metadata)) {
  if (sigma < 0.0) throw ConfigError("noise sigma must be >= 0");
  meta_.noise_sigma = sigma;
}

double NoisyObjective::evaluate(PointView x, Rng& noise) const {
  const double fx = f_(x);
  if (sigma_ == 0.0) return fx;
  return fx + sigma_ * noise.normal();
}

NoisyObjective NoisyObjective::with_sigma(double sigma) const { return NoisyObjective(dim_, f_, sigma, meta_); }

void RunConfig::validate() const {
  if (dimension < 1) throw ConfigError("dimension must be >= 1");
  if (budget < 1) throw ConfigError("budget must be a positive integer");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be >= 0");
  if (mode != Mode::Adaptive && !(lipschitz > 0.0)) throw ConfigError("lipschitz must be > 0");
  if (stopping.kind != StoppingRule::Kind::FixedBudget && !(stopping.threshold > 0.0)) {
    throw ConfigError("stopping threshold must be > 0");
  }
  if (volume_every < 1) throw ConfigError("volume_every must be >= 1");
  if (maximizer_budget < maximizer_restarts || maximizer_restarts < 1) {
    throw ConfigError("maximizer budget must cover at least one evaluation per restart");
  }
  if (!(volume.nested.p0 > 0.0 && volume.nested.p0 < 1.0)) throw ConfigError("nested p0 must lie in (0,1)");
  if (volume.nested.samples_per_level < 10 || volume.nested.repeats < 1) {
    throw ConfigError("nested estimator needs >= 10 samples per level and >= 1 repeat");
  }
  if (volume.pool_size < 1) throw ConfigError("pool_size must be >= 1");
  if (trust.n_trust < 1) throw ConfigError("n_trust must be >= 1");
  if (!(trust.r_min > 0.0 && trust.r_min <= trust.r0)) throw ConfigError("need 0 < r_min <= r0");
  if (trust.tau_fail < 1) throw ConfigError("tau_fail must be >= 1");
  if (!(hybrid.phase1_budget_fraction > 0.0 && hybrid.phase1_budget_fraction <= 1.0)) {
    throw ConfigError("phase1 budget fraction must lie in (0,1]");
  }
  if (warm_samples < 2) throw ConfigError("warm_samples must be >= 2");
}

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::KnownL: return "known-L";
    case Mode::Adaptive: return "adaptive";
    case Mode::TrustRegion: return "trust-region";
    case Mode::Hybrid: return "hybrid";
  }
  return "known-L";
}

Mode mode_from_string(std::string_view s) {
  if (s == "known-L" || s == "cgp") return Mode::KnownL;
  if (s == "adaptive") return Mode::Adaptive;
  if (s == "trust-region") return Mode::TrustRegion;
  if (s == "hybrid") return Mode::Hybrid;
  throw ConfigError("unknown mode '" + std::string(s) + "'");
}

}  // namespace cgp
