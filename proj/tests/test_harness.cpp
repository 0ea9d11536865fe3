#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <sstream>

#include "cgp/harness.hpp"
#include "helpers.hpp"

using namespace cgp;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cgp_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("benchmarks hit their optimum") {
    for (const std::string& name : benchmark_names()) {
      const int d = name == "branin" ? 2 : name == "hartmann6" ? 6 : 3;
      const Benchmark b = make_benchmark(name, d);
      const auto& m = b.objective.metadata();
      REQUIRE(m.optimizer.has_value());
      CHECK(std::abs(b.objective.noiseless(*m.optimizer) - *m.optimum_value) < 1e-9);
      Rng rng(42);
      for (int k = 0; k < 2000; ++k) CHECK(b.objective.noiseless(rng.uniform_point(d)) <= *m.optimum_value + 1e-9);
    }
  }

  TEST_CASE("registered Lipschitz constants bound the difference quotients") {
    for (const auto& [name, d, params] : std::vector<std::tuple<std::string, int, BenchmarkParams>>{
             {"needle", 3, {{"p", 1}}}, {"needle", 2, {{"p", 2}}}, {"bump", 4, {{"eps", 0.1}, {"L", 1.0}}}, {"branin", 2, {}}, {"levy", 2, {}}}) {
      const Benchmark b = make_benchmark(name, d, params);
      const double L = *b.objective.metadata().lipschitz;
      Rng rng(7);
      double worst = 0.0;
      for (int k = 0; k < 100000; ++k) {
        const Point a = rng.uniform_point(d);
        Point c = a;
        const bool near = k % 2 == 0;
        for (auto& v : c) v = near ? std::clamp(v + 1e-3 * (rng.uniform() - 0.5), 0.0, 1.0) : rng.uniform();
        const double dist = distance(a, c);
        if (dist > 0) worst = std::max(worst, std::abs(b.objective.noiseless(a) - b.objective.noiseless(c)) / dist);
      }
      INFO(name);
      CHECK(worst <= L * (1 + 1e-9));
    }
  }

  TEST_CASE("benchmark values and errors") {
    const Benchmark bump = make_benchmark("bump", 3, {{"eps", 0.1}, {"L", 1.0}});
    CHECK(bump.objective.noiseless(Point{0.95, 0.05, 0.95}) == doctest::Approx(0.9));
    CHECK(branin_raw(std::numbers::pi, 2.275) == doctest::Approx(0.397887).epsilon(1e-6));
    CHECK(branin_raw(-std::numbers::pi, 12.275) == doctest::Approx(0.397887).epsilon(1e-6));
    const Benchmark needle = make_benchmark("needle", 2);
    CHECK(*needle.objective.metadata().alpha == 0.0);
    CHECK(*make_benchmark("needle", 4, {{"p", 2}}).objective.metadata().alpha == 2.0);
    try {
      make_benchmark("nosuch", 2);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      for (const auto& n : benchmark_names()) CHECK(msg.find(n) != std::string::npos);
    }
    CHECK_THROWS_AS(make_benchmark("branin", 3), ConfigError);
    CHECK_THROWS_AS(make_benchmark("needle", 2, {{"p", 3}}), ConfigError);
    CHECK_THROWS_AS(make_benchmark("needle", 2, {{"q", 1}}), ConfigError);
  }

  TEST_CASE("alpha estimate on synthetic shrinkage") {
    // Vol = c eps^(d - alpha) with alpha = 1 in d = 3
    std::vector<ShrinkageSeries> runs;
    for (int r = 0; r < 5; ++r) {
      ShrinkageSeries s;
      for (int k = 1; k <= 8; ++k) {
        const double eps = 0.9 * std::pow(0.7, k + r * 0.1);
        s.emplace_back(0.5 * eps * eps, eps);
      }
      runs.push_back(s);
    }
    const AlphaEstimate a = estimate_alpha(runs, 3, 200, 1);
    CHECK(a.alpha == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(a.slope == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(a.ci_low <= a.alpha + 1e-9);
    CHECK(a.ci_high >= a.alpha - 1e-9);
    CHECK(a.points == 40);

    std::vector<ShrinkageSeries> cube(1);
    for (int k = 1; k <= 6; ++k) cube[0].emplace_back(std::pow(0.1 * k, 3), 0.1 * k);
    CHECK(std::abs(estimate_alpha(cube, 3, 50, 2).alpha) < 1e-9);

    // volumes outside (0,1) are dropped
    std::vector<ShrinkageSeries> few{{{1.0, 0.5}, {0.0, 0.2}, {0.1, 0.3}, {0.2, 0.4}}};
    CHECK_THROWS_AS(estimate_alpha(few, 2), std::invalid_argument);
    std::vector<ShrinkageSeries> flat{{{0.1, 0.5}, {0.2, 0.5}, {0.3, 0.5}, {0.4, 0.5}, {0.5, 0.5}}};
    CHECK_THROWS_AS(estimate_alpha(flat, 2), std::invalid_argument);
  }

  TEST_CASE("random baseline") {
    const Benchmark b = make_benchmark("needle", 256, {}, 0.0);
    const RunResult one = random_baseline(b.objective, 1, 3);
    CHECK(one.trace.size() == 1);
    const RunResult r = random_baseline(b.objective, 64, 3);
    REQUIRE(r.trace.size() == 64);
    const Point& xs = *b.objective.metadata().optimizer;
    double nearest = INFINITY;
    for (const auto& row : r.trace) nearest = std::min(nearest, distance(row.query, xs));
    CHECK(*r.final_regret <= *b.objective.metadata().lipschitz * nearest + 1e-12);
    const RunResult again = random_baseline(b.objective, 64, 3);
    CHECK(again.best_point == r.best_point);
    CHECK(random_baseline(b.objective, 64, 4).best_point != r.best_point);
    // rows carry the certificate after each point is ingested
    for (std::size_t k = 1; k < r.trace.size(); ++k) CHECK(r.trace[k].ell >= r.trace[k - 1].ell);
  }

  TEST_CASE("gp-ucb baseline finds a smooth 1-d peak") {
    const NoisyObjective f = test::quadratic_1d(0.01);
    std::vector<double> regrets;
    for (std::uint64_t seed = 0; seed < 3; ++seed) regrets.push_back(*gp_ucb_baseline(f, 30, 0.05, seed).final_regret);
    CHECK(test::median(regrets) <= 0.05);
    CHECK_THROWS_AS(gp_ucb_baseline(f, 501, 0.05, 0), ConfigError);
  }

  TEST_CASE("method names") {
    for (Method m : {Method::Cgp, Method::Adaptive, Method::TrustRegion, Method::Hybrid, Method::Random, Method::GpUcb}) {
      CHECK(method_from_string(to_string(m)) == m);
    }
    CHECK_THROWS_AS(method_from_string("bogus"), ConfigError);
  }

  TEST_CASE("experiment file parsing") {
    const ExperimentSpec s = parse_experiment_spec(R"({"benchmark": "needle", "dimension": 3, "params": {"p": 2},
      "method": "adaptive", "seeds": [1, 2], "config": {"budget": 50, "sigma": 0.05, "lipschitz": 2.0,
      "stopping": {"rule": "gap-below", "threshold": 0.1}, "trust": {"n_trust": 3}}})");
    CHECK(s.dimension == 3);
    CHECK(s.method == Method::Adaptive);
    CHECK(s.seeds == std::vector<std::uint64_t>{1, 2});
    CHECK(s.config.budget == 50);
    CHECK(s.config.lipschitz == 2.0);
    CHECK(s.lipschitz_given);
    CHECK(s.config.stopping.kind == StoppingRule::Kind::GapBelow);
    CHECK(s.config.trust.n_trust == 3);
    CHECK_THROWS_AS(parse_experiment_spec("{"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_spec(R"({"seeds": [1]})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_spec(R"({"benchmark": "needle", "seeds": [1], "extra": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_spec(R"({"benchmark": "needle", "seeds": [1, 1]})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_spec(R"({"benchmark": "needle", "seeds": [1], "config": {"budget": "x"}})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_experiment_spec(R"({"benchmark": "needle", "seeds": [1], "method": "gp-ucb",
      "config": {"budget": 600}})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_spec(R"({"benchmark": "needle", "seeds": [1], "config": {"volume": {"method": "x"}}})"),
                    ConfigError);
  }

  TEST_CASE("trace headers per method") {
    const Benchmark b = make_benchmark("needle", 2, {}, 0.1);
    RunConfig c;
    c.dimension = 2;
    c.budget = 20;
    c.sigma = 0.1;
    c.lipschitz = *b.objective.metadata().lipschitz;
    const std::string base = "t,x0,x1,y,ell,beta,eta_hat,gamma_hat,eps,vol_fraction,best_mean,regret";
    CHECK(first_line(trace_csv(run_method(Method::Cgp, b.objective, c), 2)) == base);
    CHECK(first_line(trace_csv(run_method(Method::Adaptive, b.objective, c), 2)) == base + ",cert_valid");
    CHECK(first_line(trace_csv(run_method(Method::TrustRegion, b.objective, c), 2)) == base + ",region");
    const MethodOutcome r = run_method(Method::Random, b.objective, c);
    const std::string csv = trace_csv(r, 2);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 21);
  }

  TEST_CASE("experiment files, determinism and aggregation") {
    const fs::path out = fresh_dir("experiment");
    ExperimentSpec spec = parse_experiment_spec(R"({"benchmark": "needle", "dimension": 2, "method": "cgp",
      "seeds": [0, 1, 2], "config": {"budget": 40, "sigma": 0.1}})");
    spec.output_dir = out;
    const ExperimentSummary a = run_experiment(spec, 2);
    CHECK(a.failures == 0);
    for (int s = 0; s < 3; ++s) {
      const fs::path dir = out / ("seed_" + std::to_string(s));
      CHECK(fs::exists(dir / "trace.csv"));
      CHECK(fs::exists(dir / "result.json"));
      CHECK(fs::exists(dir / "certificate.json"));
    }
    CHECK(fs::exists(out / "aggregate.json"));
    const std::string seed1 = slurp(out / "seed_1" / "result.json");
    const ExperimentSummary b = run_experiment(spec, 1);
    CHECK(a.aggregate == b.aggregate);
    CHECK(slurp(out / "seed_1" / "result.json") == seed1);

    double sum = 0.0;
    for (int s = 0; s < 3; ++s) {
      const auto doc = nlohmann::json::parse(slurp(out / ("seed_" + std::to_string(s)) / "result.json"));
      sum += doc["final_regret"].get<double>();
    }
    const auto agg = nlohmann::json::parse(a.aggregate);
    CHECK(agg["final_regret"]["mean"].get<double>() == doctest::Approx(sum / 3).epsilon(1e-12));
    CHECK(agg["completed"].get<int>() == 3);

    const std::string cert = export_run_certificate(out / "seed_0", std::nullopt);
    CHECK(cert == slurp(out / "seed_0" / "certificate.json"));
    CHECK_THROWS_AS(export_run_certificate(out / "seed_0", 0), ConfigError);
    fs::remove_all(out);
  }

  TEST_CASE("shrinkage traces round trip through files") {
    const fs::path out = fresh_dir("alpha");
    ExperimentSpec spec = parse_experiment_spec(R"({"benchmark": "needle", "dimension": 2, "method": "cgp",
      "seeds": [0, 1], "config": {"budget": 60, "sigma": 0.0, "volume_every": 5}})");
    spec.output_dir = out;
    run_experiment(spec, 1);
    const auto [runs, d] = read_shrinkage_traces(out);
    CHECK(d == 2);
    CHECK(runs.size() == 2);
    for (const auto& s : runs) CHECK_FALSE(s.empty());
    CHECK_THROWS_AS(read_shrinkage_traces(fresh_dir("empty")), ConfigError);
    fs::remove_all(out);
  }

  TEST_CASE("thread count from the environment") {
    setenv("CGP_THREADS", "3", 1);
    CHECK(thread_count_from_env() == 3);
    setenv("CGP_THREADS", "abc", 1);
    CHECK_THROWS_AS(thread_count_from_env(), ConfigError);
    setenv("CGP_THREADS", "0", 1);
    CHECK_THROWS_AS(thread_count_from_env(), ConfigError);
    unsetenv("CGP_THREADS");
    CHECK(thread_count_from_env() >= 1);
  }

  TEST_CASE("reported gap bounds the regret once it is small" * doctest::description("bump sample complexity")) {
    // once eps_t is certified, the incumbent is within eps_t / 2 of f*
    const Benchmark b = make_benchmark("bump", 2, {{"eps", 0.2}, {"L", 1.0}}, 0.05);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      RunConfig c;
      c.dimension = 2;
      c.budget = 150;
      c.sigma = 0.05;
      c.lipschitz = 1.0;
      c.seed = seed;
      c.volume_every = 5;
      const RunResult r = cgp_run(b.objective, c);
      for (const auto& row : r.trace) {
        if (row.gap && row.regret) CHECK(*row.regret <= row.gap->eps / 2 + 1e-9);
      }
    }
  }
}
