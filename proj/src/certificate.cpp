#include "cgp/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace cgp {

namespace {

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
}

/// Squared distance, abandoned (returning +inf) once the partial sum exceeds
/// `limit`. Checked every 8 coordinates to keep the inner loop tight.
inline double squared_distance_below(const double* x, const double* c, std::size_t d, double limit) {
  double s = 0.0;
  std::size_t k = 0;
  while (k < d) {
    const std::size_t end = std::min(d, k + 8);
    for (; k < end; ++k) {
      const double diff = x[k] - c[k];
      s += diff * diff;
    }
    if (s > limit) return std::numeric_limits<double>::infinity();
  }
  return s;
}

/// Squared radius beyond which a cone of height `base` cannot go below
/// `bound`, padded so that rounding never discards a contributing record.
constexpr double kActiveTolerance = 1e-12;

inline double cone_limit(double bound, double base, double lipschitz) {
  if (!std::isfinite(bound)) return std::numeric_limits<double>::infinity();
  const double r = (bound - base) / lipschitz;
  return r * r * (1.0 + 1e-9) + 1e-300;
}

}  // namespace

double confidence_radius(double sigma, int count, int n_locations, int budget, double delta) {
  check_delta(delta);
  if (count < 1 || n_locations < 1 || budget < 1) {
    throw std::invalid_argument("confidence_radius: counts and budget must be >= 1");
  }
  if (sigma == 0.0) return 0.0;
  const double log_term = std::log(2.0 * n_locations * static_cast<double>(budget) / delta);
  return sigma * std::sqrt(2.0 * log_term / count);
}

double beta_target(int t, double sigma, int budget, double delta) {
  check_delta(delta);
  if (t < 1 || budget < 1) throw std::invalid_argument("beta_target: t and budget must be >= 1");
  if (sigma == 0.0) return 0.0;
  const double tt = static_cast<double>(budget);
  return sigma * std::sqrt(2.0 * std::log(2.0 * tt * tt / delta) / t);
}

double lower_certificate(std::span<const CertificateRecord> records) {
  if (records.empty()) throw std::invalid_argument("lower certificate undefined before the first sample");
  double ell = -std::numeric_limits<double>::infinity();
  for (const auto& r : records) ell = std::max(ell, r.mean - r.radius);
  return ell;
}

CertificateSnapshot::CertificateSnapshot(int dimension, double lipschitz, double sigma, double delta, int budget,
                                         std::vector<CertificateRecord> records, std::optional<double> ell,
                                         std::optional<Box> region)
    : dim_(dimension),
      lipschitz_(lipschitz),
      sigma_(sigma),
      delta_(delta),
      budget_(budget),
      records_(std::move(records)),
      ell_(ell ? *ell : lower_certificate(records_)),
      region_(std::move(region)),
      domain_(region_ ? *region_ : Box::unit(dimension)) {
  if (records_.empty()) throw std::invalid_argument("certificate snapshot needs at least one record");
  if (!(lipschitz > 0.0)) throw std::invalid_argument("certificate snapshot needs a positive Lipschitz constant");
  coords_.reserve(records_.size() * static_cast<std::size_t>(dim_));
  ucb_.reserve(records_.size());
  for (const auto& r : records_) {
    if (static_cast<int>(r.location.size()) != dim_) throw std::invalid_argument("record dimension mismatch");
    coords_.insert(coords_.end(), r.location.begin(), r.location.end());
    ucb_.push_back(r.mean + r.radius);
  }
}

CertificateSnapshot CertificateSnapshot::from_store(const SampleStore& store, double lipschitz, double sigma,
                                                    double delta, int budget) {
  std::vector<CertificateRecord> recs;
  recs.reserve(store.size());
  const int n_locations = static_cast<int>(store.size());
  for (const auto& r : store.records()) {
    recs.push_back({r.location, r.count, r.mean, confidence_radius(sigma, r.count, n_locations, budget, delta)});
  }
  return CertificateSnapshot(store.dimension(), lipschitz, sigma, delta, budget, std::move(recs));
}

double CertificateSnapshot::envelope(PointView x) const {
  const std::size_t d = static_cast<std::size_t>(dim_);
  double best = std::numeric_limits<double>::infinity();
  const double* c = coords_.data();
  for (std::size_t i = 0; i < ucb_.size(); ++i, c += d) {
    const double a = ucb_[i];
    if (a >= best) continue;
    const double s = squared_distance_below(x.data(), c, d, cone_limit(best, a, lipschitz_));
    if (std::isfinite(s)) best = std::min(best, a + lipschitz_ * std::sqrt(s));
  }
  return best;
}

double CertificateSnapshot::envelope_excluding(PointView x, std::size_t skip) const {
  const std::size_t d = static_cast<std::size_t>(dim_);
  double best = std::numeric_limits<double>::infinity();
  const double* c = coords_.data();
  for (std::size_t i = 0; i < ucb_.size(); ++i, c += d) {
    const double a = ucb_[i];
    if (i == skip || a >= best) continue;
    const double s = squared_distance_below(x.data(), c, d, cone_limit(best, a, lipschitz_));
    if (std::isfinite(s)) best = std::min(best, a + lipschitz_ * std::sqrt(s));
  }
  return best;
}

double CertificateSnapshot::slack(PointView x) const {
  const std::size_t d = static_cast<std::size_t>(dim_);
  double best = std::numeric_limits<double>::infinity();
  const double* c = coords_.data();
  for (std::size_t i = 0; i < records_.size(); ++i, c += d) {
    const double a = records_[i].radius;
    if (a >= best) continue;
    const double s = squared_distance_below(x.data(), c, d, cone_limit(best, a, lipschitz_));
    if (std::isfinite(s)) best = std::min(best, a + lipschitz_ * std::sqrt(s));
  }
  return best;
}

double CertificateSnapshot::active_bound() const {
  return ell_ - kActiveTolerance * std::max(1.0, std::abs(ell_));
}

bool CertificateSnapshot::is_active(PointView x) const {
  if (region_ && !region_->contains(x)) return false;
  // Early exit: any single cone below ell already excludes x. The bound is
  // relaxed by a few ulps so that a noiseless optimizer sitting exactly on a
  // cone surface is not pruned by rounding in mean + L d.
  const double bound = active_bound();
  const std::size_t d = static_cast<std::size_t>(dim_);
  const double* c = coords_.data();
  for (std::size_t i = 0; i < ucb_.size(); ++i, c += d) {
    const double gap = bound - ucb_[i];
    if (gap <= 0.0) continue;
    const double s = squared_distance_below(x.data(), c, d, cone_limit(bound, ucb_[i], lipschitz_));
    if (std::isfinite(s) && ucb_[i] + lipschitz_ * std::sqrt(s) < bound) return false;
  }
  return true;
}

double CertificateSnapshot::min_distance(PointView x) const {
  const std::size_t d = static_cast<std::size_t>(dim_);
  double best = std::numeric_limits<double>::infinity();
  const double* c = coords_.data();
  for (std::size_t i = 0; i < records_.size(); ++i, c += d) {
    best = std::min(best, squared_distance_below(x.data(), c, d, best));
  }
  return std::sqrt(best);
}

std::pair<double, double> CertificateSnapshot::envelope_and_distance(PointView x) const {
  const std::size_t d = static_cast<std::size_t>(dim_);
  double env = std::numeric_limits<double>::infinity();
  double best_d2 = std::numeric_limits<double>::infinity();
  const double* c = coords_.data();
  for (std::size_t i = 0; i < ucb_.size(); ++i, c += d) {
    const double limit = ucb_[i] < env ? std::max(best_d2, cone_limit(env, ucb_[i], lipschitz_)) : best_d2;
    const double s = squared_distance_below(x.data(), c, d, limit);
    if (!std::isfinite(s)) continue;
    best_d2 = std::min(best_d2, s);
    if (ucb_[i] < env) env = std::min(env, ucb_[i] + lipschitz_ * std::sqrt(s));
  }
  return {env, std::sqrt(best_d2)};
}

std::size_t CertificateSnapshot::best_lcb_index() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < records_.size(); ++i) {
    if (records_[i].mean - records_[i].radius > records_[best].mean - records_[best].radius) best = i;
  }
  return best;
}

double CertificateSnapshot::max_radius() const {
  double m = 0.0;
  for (const auto& r : records_) m = std::max(m, r.radius);
  return m;
}

CertificateSnapshot CertificateSnapshot::with_lipschitz(double lipschitz) const {
  return CertificateSnapshot(dim_, lipschitz, sigma_, delta_, budget_, records_, ell_, region_);
}

CertificateSnapshot CertificateSnapshot::localized(double local_ell, const Box& region) const {
  return CertificateSnapshot(dim_, lipschitz_, sigma_, delta_, budget_, records_, local_ell, region);
}

GapReport assemble_gap(double beta, double lipschitz, double eta_hat, double gamma_hat) {
  return {beta, eta_hat, gamma_hat, 2.0 * (beta + lipschitz * eta_hat) + gamma_hat};
}

GapReport gap_report(const CertificateSnapshot& snapshot, const PointSet& member_pool) {
  if (member_pool.empty()) {
    throw std::invalid_argument("gap_report: empty member pool; re-estimate the active set");
  }
  double beta = 0.0;
  for (const auto& r : snapshot.records()) {
    if (snapshot.is_active(r.location)) beta = std::max(beta, r.radius);
  }
  double eta = 0.0;
  double max_env = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < member_pool.size(); ++p) {
    const auto x = member_pool[p];
    eta = std::max(eta, snapshot.min_distance(x));
    max_env = std::max(max_env, snapshot.envelope(x));
  }
  const double gamma = std::max(0.0, max_env - snapshot.ell());
  return assemble_gap(beta, snapshot.lipschitz(), eta, gamma);
}

namespace {

void put_real(std::ostringstream& os, double v) {
  if (!std::isfinite(v)) {
    os << "null";
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}

void put_vector(std::ostringstream& os, const Point& v) {
  os << '[';
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) os << ',';
    put_real(os, v[k]);
  }
  os << ']';
}

void put_string(std::ostringstream& os, const std::string& s) { os << nlohmann::json(s).dump(); }

double get_real(const nlohmann::json& j) {
  if (j.is_null()) return -std::numeric_limits<double>::infinity();
  return j.get<double>();
}

}  // namespace

std::string export_certificate(const CertificateSnapshot& snapshot, const CertificateRunInfo& run) {
  std::ostringstream os;
  os << "{\n  \"schema_version\": 1,\n  \"dimension\": " << snapshot.dimension() << ",\n  \"lipschitz\": ";
  put_real(os, snapshot.lipschitz());
  os << ",\n  \"sigma\": ";
  put_real(os, snapshot.sigma());
  os << ",\n  \"delta\": ";
  put_real(os, snapshot.delta());
  os << ",\n  \"budget\": " << snapshot.budget() << ",\n  \"ell\": ";
  put_real(os, snapshot.ell());
  if (snapshot.region()) {
    os << ",\n  \"region\": {\"lower\": ";
    put_vector(os, snapshot.region()->lower);
    os << ", \"upper\": ";
    put_vector(os, snapshot.region()->upper);
    os << '}';
  }
  os << ",\n  \"run\": {\"method\": ";
  put_string(os, run.method);
  os << ", \"seed\": " << run.seed << ", \"t\": " << run.t << "}";
  os << ",\n  \"records\": [";
  for (std::size_t i = 0; i < snapshot.size(); ++i) {
    const auto& r = snapshot.record(i);
    os << (i ? ",\n    " : "\n    ") << "{\"x\": ";
    put_vector(os, r.location);
    os << ", \"n\": " << r.count << ", \"mean\": ";
    put_real(os, r.mean);
    os << ", \"radius\": ";
    put_real(os, r.radius);
    os << '}';
  }
  os << "\n  ]\n}\n";
  return os.str();
}

CertificateDocument import_certificate(std::string_view json) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("certificate: ") + e.what());
  }
  try {
    if (doc.at("schema_version").get<int>() != 1) throw ConfigError("certificate: unsupported schema_version");
    const int dim = doc.at("dimension").get<int>();
    std::vector<CertificateRecord> recs;
    for (const auto& r : doc.at("records")) {
      recs.push_back({r.at("x").get<Point>(), r.at("n").get<int>(), r.at("mean").get<double>(),
                      r.at("radius").get<double>()});
    }
    if (recs.empty()) throw ConfigError("certificate: no records");
    std::optional<Box> region;
    if (doc.contains("region")) {
      region = Box{doc["region"].at("lower").get<Point>(), doc["region"].at("upper").get<Point>()};
    }
    CertificateRunInfo run;
    if (doc.contains("run")) {
      run.method = doc["run"].value("method", "");
      run.seed = doc["run"].value("seed", std::uint64_t{0});
      run.t = doc["run"].value("t", 0);
    }
    CertificateSnapshot snap(dim, doc.at("lipschitz").get<double>(), doc.at("sigma").get<double>(),
                             doc.at("delta").get<double>(), doc.at("budget").get<int>(), std::move(recs),
                             get_real(doc.at("ell")), std::move(region));
    return {std::move(snap), std::move(run)};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("certificate: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("certificate: ") + e.what());
  }
}

void write_certificate_file(const std::string& path, const std::string& document) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << document;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cgp
