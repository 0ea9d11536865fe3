#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "cgp/harness.hpp"
#include "cgp/volume.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAnomaly = 3;

struct BenchInfo {
  const char* name;
  const char* dimensions;
  const char* params;
  const char* lipschitz;
};

const BenchInfo kBenchInfo[] = {
    {"needle", "any", "p in {1,2} (default 1)", "analytic"},
    {"bump", "any", "eps (default 0.1), L (default 1)", "analytic"},
    {"branin", "2", "-", "empirical"},
    {"hartmann6", "6", "-", "empirical"},
    {"ackley", "any", "-", "empirical"},
    {"levy", "any", "-", "empirical"},
    {"rosenbrock", ">= 2", "-", "empirical"},
};

std::string read_input(const std::string& path) {
  if (!std::ifstream(path)) throw cgp::ConfigError("cannot open " + path);
  return cgp::read_text_file(path);
}

int cmd_run(const std::string& config_path) {
  const cgp::ExperimentSpec spec = cgp::parse_experiment_spec(read_input(config_path));
  const cgp::ExperimentSummary summary = cgp::run_experiment(spec);
  std::cout << summary.aggregate;
  for (const auto& r : summary.runs) {
    if (!r.ok) std::cerr << "warning: seed " << r.seed << " failed: " << r.error << "\n";
  }
  if (summary.failures == static_cast<int>(summary.runs.size())) return kExitFailure;
  if (summary.anomalies > 0) {
    std::cerr << summary.anomalies << " run(s) ended on an empty active set\n";
    return kExitAnomaly;
  }
  return kExitOk;
}

int cmd_bench_list() {
  std::printf("%-12s %-10s %-34s %s\n", "name", "dimension", "parameters", "L*");
  for (const auto& b : kBenchInfo) std::printf("%-12s %-10s %-34s %s\n", b.name, b.dimensions, b.params, b.lipschitz);
  return kExitOk;
}

int cmd_volume(const std::string& cert_path, const std::string& method, std::uint64_t seed) {
  const cgp::CertificateDocument doc = cgp::import_certificate(read_input(cert_path));
  cgp::VolumeSpec spec;
  if (method == "grid") spec.method = cgp::VolumeMethod::Grid;
  else if (method == "nested-mc") spec.method = cgp::VolumeMethod::NestedMc;
  else if (method != "auto") throw cgp::ConfigError("unknown volume method '" + method + "'");
  cgp::Rng rng(seed);
  const cgp::ActiveSetEstimate est = cgp::estimate_active_set(doc.snapshot, spec, rng);
  nlohmann::ordered_json out;
  out["estimate"] = est.volume_fraction;
  out["ci_low"] = std::exp(est.log_volume_ci.first);
  out["ci_high"] = std::exp(est.log_volume_ci.second);
  out["method"] = est.method == cgp::VolumeMethod::Grid ? "grid" : "nested-mc";
  out["anomaly"] = est.anomaly;
  if (!est.member_pool.empty()) {
    const cgp::GapReport g = cgp::gap_report(doc.snapshot, est);
    out["gap"] = {{"beta", g.beta}, {"eta_hat", g.eta_hat}, {"gamma_hat", g.gamma_hat}, {"eps", g.eps}};
  }
  std::cout << out.dump(2) << "\n";
  return est.anomaly ? kExitAnomaly : kExitOk;
}

int cmd_alpha(const std::string& dir, int resamples, std::uint64_t seed) {
  const auto [runs, dimension] = cgp::read_shrinkage_traces(dir);
  cgp::AlphaEstimate a;
  try {
    a = cgp::estimate_alpha(runs, dimension, resamples, seed);
  } catch (const std::invalid_argument& e) {
    throw cgp::ConfigError(e.what());
  }
  nlohmann::ordered_json out;
  out["dimension"] = dimension;
  out["runs"] = runs.size();
  out["points"] = a.points;
  out["slope"] = a.slope;
  out["alpha_hat"] = a.alpha;
  out["ci"] = {a.ci_low, a.ci_high};
  out["resamples_used"] = a.resamples_used;
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

int cmd_export(const std::string& run_dir, std::optional<int> region, const std::string& out_path) {
  const std::string doc = cgp::export_run_certificate(run_dir, region);
  if (out_path.empty()) {
    std::cout << doc;
  } else {
    cgp::write_certificate_file(out_path, doc);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certificate-guided pruning for noisy Lipschitz maximization"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment spec (JSON)");
  run->add_option("--config", config_path, "Experiment spec file")->required();

  bool list = false;
  auto* bench = app.add_subcommand("bench", "Benchmark registry");
  bench->add_flag("--list", list, "List registered benchmarks");

  std::string cert_path;
  std::string vol_method = "auto";
  std::uint64_t vol_seed = 0;
  auto* volume = app.add_subcommand("volume", "Estimate Vol(A_t) of an exported certificate");
  volume->add_option("--cert", cert_path, "Certificate JSON")->required();
  volume->add_option("--method", vol_method, "auto, grid or nested-mc");
  volume->add_option("--seed", vol_seed, "Seed for the Monte Carlo estimator");

  std::string traces_dir;
  int resamples = 1000;
  std::uint64_t alpha_seed = 0;
  auto* alpha = app.add_subcommand("alpha", "Estimate the margin exponent from shrinkage traces");
  alpha->add_option("--traces", traces_dir, "Directory searched for trace.csv files")->required();
  alpha->add_option("--resamples", resamples, "Bootstrap resamples");
  alpha->add_option("--seed", alpha_seed, "Bootstrap seed");

  std::string run_dir;
  std::optional<int> region;
  std::string out_path;
  auto* exp = app.add_subcommand("export-cert", "Print the certificate of a finished run");
  exp->add_option("--run", run_dir, "Run directory (seed_<s>)")->required();
  exp->add_option("--region", region, "Trust-region id for a local certificate");
  exp->add_option("--out", out_path, "Write to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config_path);
    if (*bench) {
      if (!list) {
        std::cerr << "bench: pass --list\n";
        return kExitConfig;
      }
      return cmd_bench_list();
    }
    if (*volume) return cmd_volume(cert_path, vol_method, vol_seed);
    if (*alpha) return cmd_alpha(traces_dir, resamples, alpha_seed);
    if (*exp) return cmd_export(run_dir, region, out_path);
  } catch (const cgp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const cgp::AnomalyError& e) {
    std::cerr << "anomaly: " << e.what() << "\n";
    return kExitAnomaly;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}
