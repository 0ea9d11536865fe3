#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cgp/model.hpp"

namespace cgp {

/// sigma * sqrt(2 ln(2 N_t T / delta) / n_i).
double confidence_radius(double sigma, int count, int n_locations, int budget, double delta);

/// Replication target sigma * sqrt(2 ln(2 T^2 / delta) / t).
double beta_target(int t, double sigma, int budget, double delta);

struct CertificateRecord {
  Point location;
  int count = 1;
  double mean = 0.0;
  double radius = 0.0;
};

/// max_i (mean_i - radius_i); throws std::invalid_argument when empty.
double lower_certificate(std::span<const CertificateRecord> records);

/// Frozen certificate state: records with confidence radii, the Lipschitz
/// estimate and the lower certificate. Immutable after construction, so all
/// queries are safe from concurrent readers.
///
/// A snapshot may carry a region box (trust-region local certificates), in
/// which case membership additionally requires the point to lie in the box.
class CertificateSnapshot {
 public:
  CertificateSnapshot(int dimension, double lipschitz, double sigma, double delta, int budget,
                      std::vector<CertificateRecord> records, std::optional<double> ell = std::nullopt,
                      std::optional<Box> region = std::nullopt);

  /// Radii recomputed from the store with the current N_t.
  static CertificateSnapshot from_store(const SampleStore& store, double lipschitz, double sigma, double delta,
                                        int budget);

  int dimension() const { return dim_; }
  double lipschitz() const { return lipschitz_; }
  double sigma() const { return sigma_; }
  double delta() const { return delta_; }
  int budget() const { return budget_; }
  double ell() const { return ell_; }
  std::size_t size() const { return records_.size(); }
  const std::vector<CertificateRecord>& records() const { return records_; }
  const CertificateRecord& record(std::size_t i) const { return records_[i]; }
  const std::optional<Box>& region() const { return region_; }
  /// The box searched by samplers: the region when present, else the unit cube.
  const Box& domain() const { return domain_; }

  /// U_t(x) = min_i [mean_i + r_i + L d(x, x_i)].
  double envelope(PointView x) const;
  /// rho_t(x) = min_i [r_i + L d(x, x_i)].
  double slack(PointView x) const;
  /// U_t(x) >= ell (ties active), and x inside the region if one is set.
  bool is_active(PointView x) const;
  /// Envelope value u counts as reaching ell; the comparison allows a
  /// relative 1e-12 of rounding so that points on a cone surface stay active.
  bool reaches_ell(double u) const { return u >= active_bound(); }
  double active_bound() const;
  double min_distance(PointView x) const;
  /// Envelope built from every record except `skip`.
  double envelope_excluding(PointView x, std::size_t skip) const;
  /// {U_t(x), min_i d(x, x_i)} in one pass.
  std::pair<double, double> envelope_and_distance(PointView x) const;
  /// Index of the record attaining ell (earliest on ties).
  std::size_t best_lcb_index() const;
  double max_radius() const;

  CertificateSnapshot with_lipschitz(double lipschitz) const;
  CertificateSnapshot localized(double local_ell, const Box& region) const;

 private:
  int dim_;
  double lipschitz_;
  double sigma_;
  double delta_;
  int budget_;
  std::vector<CertificateRecord> records_;
  double ell_;
  std::optional<Box> region_;
  Box domain_;
  std::vector<double> coords_;  // flat copy of record locations
  std::vector<double> ucb_;
};

/// Computable progress quantities; eps = 2 (beta + L eta) + gamma.
struct GapReport {
  double beta = 0.0;
  double eta_hat = 0.0;
  double gamma_hat = 0.0;
  double eps = 0.0;
};

GapReport assemble_gap(double beta, double lipschitz, double eta_hat, double gamma_hat);

/// Gap report from a pool of active-set members. Throws std::invalid_argument
/// on an empty pool (the caller should re-estimate A_t).
GapReport gap_report(const CertificateSnapshot& snapshot, const PointSet& member_pool);

/// Run context written next to the certificate; not needed for membership.
struct CertificateRunInfo {
  std::string method;
  std::uint64_t seed = 0;
  int t = 0;
};

struct CertificateDocument {
  CertificateSnapshot snapshot;
  CertificateRunInfo run;
};

/// Self-contained JSON certificate; reals carry 17 significant digits so the
/// document round-trips exactly.
std::string export_certificate(const CertificateSnapshot& snapshot, const CertificateRunInfo& run = {});
/// Throws ConfigError on a malformed document.
CertificateDocument import_certificate(std::string_view json);

void write_certificate_file(const std::string& path, const std::string& document);
std::string read_text_file(const std::string& path);

}  // namespace cgp
