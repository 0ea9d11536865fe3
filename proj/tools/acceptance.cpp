// Acceptance checks: one PASS/FAIL line per criterion.
#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cgp/harness.hpp"
#include "cgp/volume.hpp"

using namespace cgp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

RunConfig config_for(const NoisyObjective& f, int budget, double lipschitz, std::uint64_t seed, Mode mode = Mode::KnownL) {
  RunConfig c;
  c.dimension = f.dimension();
  c.budget = budget;
  c.sigma = f.sigma();
  c.lipschitz = lipschitz;
  c.mode = mode;
  c.seed = seed;
  return c;
}

/// Certificate held after the first `t` observations of a run.
CertificateSnapshot snapshot_at(const RunResult& r, const RunConfig& c, std::size_t t, double lipschitz) {
  SampleStore store(c.dimension);
  for (std::size_t k = 0; k < t; ++k) store.ingest(r.trace[k].query, r.trace[k].y);
  return CertificateSnapshot::from_store(store, lipschitz, c.sigma, c.delta, c.budget);
}

std::vector<Point> grid(int d, int m) {
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

Outcome good_event_coverage() {
  const Benchmark b = make_benchmark("needle", 1, {{"p", 1}}, 0.1);
  const double L = *b.objective.metadata().lipschitz;
  int held = 0;
  const int runs = 200;
  for (int s = 0; s < runs; ++s) {
    const RunConfig c = config_for(b.objective, 200, L, static_cast<std::uint64_t>(s));
    const RunResult r = cgp_run(b.objective, c);
    bool ok = r.certificate->ell() <= 1.0;
    for (const auto& row : r.trace) ok = ok && row.ell <= 1.0;
    held += ok;
  }
  const double frac = static_cast<double>(held) / runs;
  return {frac >= 0.93, "ell_t <= f* throughout in " + std::to_string(held) + "/200 runs (" + fmt("%.3f", frac) + ")"};
}

Outcome envelope_validity() {
  const std::vector<std::tuple<std::string, int, BenchmarkParams>> cases{
      {"needle", 1, {{"p", 1}}}, {"needle", 2, {{"p", 1}}}, {"needle", 2, {{"p", 2}}}, {"needle", 3, {{"p", 1}}},
      {"bump", 2, {}},           {"branin", 2, {}},         {"ackley", 2, {}},         {"levy", 2, {}},
      {"rosenbrock", 2, {}}};
  long violations = 0, checks = 0;
  for (const auto& [name, d, params] : cases) {
    const Benchmark b = make_benchmark(name, d, params, 0.0);
    const double L = *b.objective.metadata().lipschitz;
    const RunConfig c = config_for(b.objective, 100, L, 1);
    const RunResult r = cgp_run(b.objective, c);
    const int m = d == 1 ? 10000 : d == 2 ? 100 : 22;  // about 1e4 nodes
    const auto nodes = grid(d, m);
    std::vector<double> fx;
    for (const auto& x : nodes) fx.push_back(b.objective.noiseless(x));
    for (std::size_t t : {20u, 40u, 60u, 80u, 100u}) {
      const auto s = snapshot_at(r, c, std::min(t, r.trace.size()), L);
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        const double u = s.envelope(nodes[k]);
        const double tol = 1e-9 * std::max(1.0, std::abs(u));
        ++checks;
        if (fx[k] > u + tol || u > fx[k] + 2 * s.slack(nodes[k]) + tol) ++violations;
      }
    }
  }
  return {violations == 0, std::to_string(violations) + " violations in " + std::to_string(checks) + " checks (9 benchmark configs, 5 checkpoints)"};
}

Outcome optimum_contained() {
  long misses = 0, checks = 0;
  for (const auto& [name, d, params] : std::vector<std::tuple<std::string, int, BenchmarkParams>>{
           {"needle", 1, {{"p", 1}}}, {"needle", 2, {{"p", 1}}}, {"needle", 2, {{"p", 2}}}, {"bump", 2, {}}, {"branin", 2, {}}}) {
    const Benchmark b = make_benchmark(name, d, params, 0.0);
    const double L = *b.objective.metadata().lipschitz;
    const Point& xs = *b.objective.metadata().optimizer;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const RunConfig c = config_for(b.objective, 100, L, seed);
      const RunResult r = cgp_run(b.objective, c);
      for (std::size_t t = 1; t <= r.trace.size(); ++t) {
        ++checks;
        misses += !snapshot_at(r, c, t, L).is_active(xs);
      }
    }
  }
  const Benchmark nb = make_benchmark("needle", 2, {{"p", 1}}, 0.1);
  const double L = *nb.objective.metadata().lipschitz;
  int member = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const RunResult r = cgp_run(nb.objective, config_for(nb.objective, 100, L, seed));
    member += r.certificate->is_active(*nb.objective.metadata().optimizer);
  }
  const double freq = member / 200.0;
  return {misses == 0 && freq >= 0.93, "sigma=0: " + std::to_string(misses) + " misses in " + std::to_string(checks) +
                                           " iteration checks; sigma=0.1 needle(d=2): x* active at T in " +
                                           std::to_string(member) + "/200"};
}

Outcome shrinkage() {
  const Benchmark b = make_benchmark("needle", 2, {{"p", 1}}, 0.1);
  const double L = *b.objective.metadata().lipschitz;
  std::vector<double> vols;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const RunResult r = cgp_run(b.objective, config_for(b.objective, 100, L, seed));
    vols.push_back(grid_volume(*r.certificate, 100).volume_fraction);
  }
  const double med = median(vols);
  return {med < 0.05, "median grid Vol(A_100) = " + fmt("%.4f", med) + " (target < 0.05)"};
}

Outcome adaptive_doubling() {
  const Benchmark b = make_benchmark("needle", 1, {{"p", 1}}, 0.0);
  const double L = *b.objective.metadata().lipschitz;
  std::size_t worst = 0;
  double lo = INFINITY, hi = 0.0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const AdaptiveResult r = adaptive_run(b.objective, config_for(b.objective, 200, L / 100, seed, Mode::Adaptive));
    worst = std::max(worst, r.log.events.size());
    lo = std::min(lo, r.log.final_value / L);
    hi = std::max(hi, r.log.final_value / L);
  }
  const Benchmark nb = make_benchmark("needle", 1, {{"p", 1}}, 0.1);
  std::size_t false_events = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    false_events += adaptive_run(nb.objective, config_for(nb.objective, 200, 2 * L, seed, Mode::Adaptive)).log.events.size();
  }
  const bool pass = worst <= 7 && lo >= 1.0 && hi <= 2.0 && false_events == 0;
  return {pass, "sigma=0, L0=L*/100: max doublings " + std::to_string(worst) + ", final L/L* in [" + fmt("%.3f", lo) +
                    ", " + fmt("%.3f", hi) + "]; sigma=0.1, L0=2L*: " + std::to_string(false_events) +
                    " doublings over 100 seeds"};
}

Outcome no_false_restarts() {
  int false0 = 0, runs_with_false = 0;
  const Benchmark b0 = make_benchmark("needle", 2, {{"p", 1}}, 0.0);
  const double L = *b0.objective.metadata().lipschitz;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const TrResult r = tr_run(b0.objective, config_for(b0.objective, 100, L, seed, Mode::TrustRegion));
    Rng rng(seed);
    for (const auto& a : region_visit_audit(r, b0.objective, rng, 256)) false0 += a.false_restarts;
  }
  const Benchmark b1 = make_benchmark("needle", 2, {{"p", 1}}, 0.1);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const TrResult r = tr_run(b1.objective, config_for(b1.objective, 100, L, seed, Mode::TrustRegion));
    Rng rng(seed);
    int f = 0;
    for (const auto& a : region_visit_audit(r, b1.objective, rng, 64)) f += a.false_restarts;
    runs_with_false += f > 0;
  }
  const double freq = runs_with_false / 200.0;
  return {false0 == 0 && freq <= 0.07, "sigma=0: " + std::to_string(false0) + " restarts of a region holding x* (30 seeds); sigma=0.1: " +
                                           std::to_string(runs_with_false) + "/200 runs with such a restart"};
}

Outcome high_dimensional() {
  const Benchmark b = make_benchmark("bump", 50, {{"eps", 1.0}, {"L", 0.2}}, 0.1);
  std::vector<double> tr, rnd;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RunConfig c = config_for(b.objective, 500, 0.2, seed, Mode::TrustRegion);
    tr.push_back(*tr_run(b.objective, c).run.final_regret);
    rnd.push_back(*random_baseline(b.objective, 500, seed).final_regret);
  }
  const double mt = median(tr), mr = median(rnd);
  return {mt < mr, "bump(d=50): median regret CGP-TR " + fmt("%.4f", mt) + " vs Sobol random " + fmt("%.4f", mr)};
}

Outcome hybrid_switching() {
  int quad_gp = 0, cone_cgp = 0, identical = 0, runs = 0;
  for (const auto& [p, is_quad] : std::vector<std::pair<double, bool>>{{2.0, true}, {1.0, false}}) {
    const Benchmark b = make_benchmark("needle", 2, {{"p", p}}, 0.0);
    const double L = *b.objective.metadata().lipschitz;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const HybridResult r = hybrid_run(b.objective, config_for(b.objective, 100, L, seed, Mode::Hybrid));
      if (is_quad) quad_gp += r.decision.phase2 == Phase2::Gp;
      else cone_cgp += r.decision.phase2 == Phase2::Cgp;
      ++runs;
      const std::string again = export_certificate(*r.frozen, {"hybrid", seed, r.decision.t_switch});
      const CertificateDocument doc = import_certificate(r.decision.frozen_certificate);
      identical += again == r.decision.frozen_certificate && export_certificate(doc.snapshot, doc.run) == again;
    }
  }
  return {quad_gp >= 8 && cone_cgp >= 8 && identical == runs,
          "quadratic -> gp in " + std::to_string(quad_gp) + "/10, cone -> cgp in " + std::to_string(cone_cgp) +
              "/10, frozen certificate identical in " + std::to_string(identical) + "/" + std::to_string(runs) + " (sigma=0)"};
}

Outcome stopping_economics() {
  const Benchmark b = make_benchmark("hartmann6", 6, {}, 0.1);
  const double L = *b.objective.metadata().lipschitz;
  int early = 0;
  std::vector<double> stop_regret, fixed_regret;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    RunConfig c = config_for(b.objective, 200, L, seed);
    fixed_regret.push_back(*cgp_run(b.objective, c).final_regret);
    c.stopping = StoppingRule::volume_below(0.1);
    const RunResult r = cgp_run(b.objective, c);
    early += r.stop_reason == StopReason::VolumeThreshold;
    stop_regret.push_back(*r.final_regret);
  }
  const double ms = median(stop_regret), mf = median(fixed_regret);
  return {early >= 25 && ms <= 2 * mf, "Vol<10% stopped early in " + std::to_string(early) + "/30; median regret " +
                                           fmt("%.4f", ms) + " vs fixed budget " + fmt("%.4f", mf)};
}

Outcome volume_agreement() {
  int within = 0, covered = 0;
  Rng gen(2024);
  for (int k = 0; k < 20; ++k) {
    const int n = 5 + static_cast<int>(gen.uniform() * 25);
    const double L = 1.0 + 2.0 * gen.uniform();
    // means come from a 0.8L-Lipschitz function perturbed within each radius,
    // so every certificate is consistent and A_t is non-empty
    std::vector<std::pair<Point, double>> peaks;
    for (int j = 0; j < 3; ++j) peaks.emplace_back(gen.uniform_point(2), gen.uniform());
    auto g = [&](const Point& x) {
      double v = -1e300;
      for (const auto& [c, h] : peaks) v = std::max(v, h - 0.8 * L * distance(x, c));
      return v;
    };
    std::vector<CertificateRecord> recs;
    for (int i = 0; i < n; ++i) {
      const Point x = gen.uniform_point(2);
      const double r = 0.02 + 0.08 * gen.uniform();
      recs.push_back({x, 1, g(x) + r * (2.0 * gen.uniform() - 1.0), r});
    }
    const CertificateSnapshot s(2, L, 0.1, 0.05, 100, recs);
    const double truth = grid_volume(s, 1000).volume_fraction;
    Rng rng(static_cast<std::uint64_t>(k));
    const ActiveSetEstimate e = nested_volume(s, NestedConfig{}, rng);
    within += std::abs(e.volume_fraction - truth) <= 0.15 * truth;
    covered += std::log(truth) >= e.log_volume_ci.first && std::log(truth) <= e.log_volume_ci.second;
  }
  return {within >= 16 && covered >= 18, "nested within 15% of the 1e6-node grid in " + std::to_string(within) +
                                             "/20, CI covers it in " + std::to_string(covered) + "/20"};
}

Outcome alpha_recovery() {
  // exact synthetic traces: Vol = c eps^(d - alpha)
  bool exact = true;
  for (const auto& [d, alpha] : std::vector<std::pair<int, double>>{{2, 0.0}, {2, 1.0}, {3, 1.5}, {5, 2.5}}) {
    std::vector<ShrinkageSeries> runs(4);
    for (int r = 0; r < 4; ++r) {
      for (int k = 1; k <= 10; ++k) {
        const double eps = 0.5 * std::pow(0.8, k + 0.25 * r);
        runs[static_cast<std::size_t>(r)].emplace_back(0.3 * std::pow(eps, d - alpha), eps);
      }
    }
    exact = exact && std::abs(estimate_alpha(runs, d, 100, 1).alpha - alpha) <= 1e-9;
  }
  const Benchmark b = make_benchmark("needle", 2, {{"p", 1}}, 0.1);
  const double L = *b.objective.metadata().lipschitz;
  std::vector<ShrinkageSeries> runs;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const RunResult r = cgp_run(b.objective, config_for(b.objective, 200, L, seed));
    ShrinkageSeries s;
    for (const auto& row : r.trace) {
      if (row.vol_fraction && row.gap) s.emplace_back(*row.vol_fraction, row.gap->eps);
    }
    runs.push_back(s);
  }
  const AlphaEstimate a = estimate_alpha(runs, 2, 1000, 7);
  const double width = a.ci_high - a.ci_low;
  return {exact && a.alpha < 2.0 && width < 1.0, std::string("synthetic exact: ") + (exact ? "ok" : "off") +
                                                     "; needle(d=2) alpha_hat " + fmt("%.3f", a.alpha) + ", CI width " +
                                                     fmt("%.3f", width)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "cgp_acceptance_determinism";
  int compared = 0, differing = 0;
  for (const char* method : {"cgp", "adaptive", "trust-region", "hybrid", "random", "gp-ucb"}) {
    std::vector<std::string> first;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = root / (std::string(method) + "_" + std::to_string(rep));
      fs::remove_all(out);
      ExperimentSpec spec = parse_experiment_spec(std::string(R"({"benchmark": "needle", "dimension": 2, "method": ")") +
                                                  method + R"(", "seeds": [3, 4], "config": {"budget": 60, "sigma": 0.1}})");
      spec.output_dir = out;
      run_experiment(spec, rep + 1);
      std::vector<std::string> files;
      for (const auto& e : fs::recursive_directory_iterator(out)) {
        if (e.is_regular_file()) files.push_back(fs::relative(e.path(), out).string() + "\n" + slurp(e.path()));
      }
      std::sort(files.begin(), files.end());
      if (rep == 0) {
        first = files;
      } else {
        compared += static_cast<int>(files.size());
        differing += files != first;
      }
    }
  }
  fs::remove_all(root);
  return {differing == 0, std::to_string(compared) + " files over 6 methods; " + std::to_string(differing) +
                              " methods with differing output (1 vs 2 threads)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  std::vector<int> known;
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--known-failures", known, "Criteria whose failure is documented; they do not fail the exit code");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"good-event coverage", good_event_coverage},   {"envelope/slack validity", envelope_validity},
      {"certificate contains x*", optimum_contained}, {"shrinkage", shrinkage},
      {"adaptive doubling", adaptive_doubling},       {"no false restarts", no_false_restarts},
      {"high-dimensional viability", high_dimensional}, {"hybrid switching", hybrid_switching},
      {"stopping economics", stopping_economics},     {"volume estimator agreement", volume_agreement},
      {"alpha recovery", alpha_recovery},             {"determinism", determinism}};

  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool is_known = std::find(known.begin(), known.end(), id) != known.end();
    if (!o.pass && !is_known) ++unexpected;
    std::printf("%2d %-28s %s  %s [%.1fs]\n", id, criteria[i].first.c_str(),
                o.pass ? "PASS" : (is_known ? "FAIL (known)" : "FAIL"), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return unexpected == 0 ? 0 : 1;
}
