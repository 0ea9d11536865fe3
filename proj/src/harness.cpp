#include "cgp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "cgp/sobol.hpp"

namespace cgp {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

RunConfig baseline_config(const NoisyObjective& objective, int budget, double delta, std::uint64_t seed) {
  RunConfig c;
  c.dimension = objective.dimension();
  c.budget = budget;
  c.delta = delta;
  c.sigma = objective.sigma();
  c.seed = seed;
  c.lipschitz = objective.metadata().lipschitz.value_or(1.0);
  return c;
}

std::uint64_t sobol_shift(std::uint64_t seed) { return Rng(seed).split("sobol-shift").next_u64(); }

}  // namespace

RunResult random_baseline(const NoisyObjective& objective, const RunConfig& config) {
  RunConfig c = config;
  c.mode = Mode::KnownL;
  CgpEngine engine(objective, c);
  for (const Point& x : sobol_init(c.dimension, c.budget, sobol_shift(c.seed))) {
    engine.begin_iteration();
    engine.initialize({x});
  }
  return engine.finish(StopReason::Budget);
}

RunResult random_baseline(const NoisyObjective& objective, int budget, std::uint64_t seed) {
  return random_baseline(objective, baseline_config(objective, budget, 0.05, seed));
}

RunResult gp_ucb_baseline(const NoisyObjective& objective, const RunConfig& config) {
  if (config.budget > static_cast<int>(kGpMaxPoints)) {
    throw ConfigError("gp-ucb baseline supports budgets up to " + std::to_string(kGpMaxPoints));
  }
  RunConfig c = config;
  c.mode = Mode::KnownL;
  CgpEngine engine(objective, c);
  const Rng root(c.seed);
  Rng mle_rng = root.split("gp").split("mle");
  for (const Point& x : sobol_init(c.dimension, std::min(kGpUcbWarm, c.budget), sobol_shift(c.seed))) {
    engine.begin_iteration();
    engine.initialize({x});
  }
  PointSet candidates(c.dimension);
  candidates.reserve(kGpUcbCandidates);
  for (const Point& x : sobol_init(c.dimension, kGpUcbCandidates, root.split("gp-candidates").next_u64())) {
    candidates.push_back(x);
  }

  GpHyper hyper;
  std::optional<GpModel> model;
  std::size_t fitted_n = 0;
  int last_mle = std::numeric_limits<int>::min() / 2;
  const double noise_var = c.sigma * c.sigma;
  while (engine.budget_left()) {
    engine.begin_iteration();
    const SampleStore& store = engine.store();
    const std::size_t n = store.size();
    if (!model || n <= 200 || n >= fitted_n + 5) {
      const std::size_t first = n > kGpMaxPoints ? n - kGpMaxPoints : 0;
      PointSet xs(c.dimension);
      std::vector<double> ys;
      std::vector<double> noise;
      for (std::size_t i = first; i < n; ++i) {
        xs.push_back(store[i].location);
        ys.push_back(store[i].mean);
        noise.push_back(noise_var / store[i].count);
      }
      const double centre = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
      for (double& y : ys) y -= centre;
      const bool mle = engine.observations() - last_mle >= 20;
      model = gp_fit(xs, ys, noise, mle ? HyperMode::Mle : HyperMode::Fixed, hyper, mle_rng);
      if (mle) last_mle = engine.observations();
      hyper = model->hyper();
      fitted_n = n;
    }
    engine.initialize({gp_ucb_select(*model, engine.observations() + 1, c.delta, candidates)});
  }
  return engine.finish(StopReason::Budget);
}

RunResult gp_ucb_baseline(const NoisyObjective& objective, int budget, double delta, std::uint64_t seed) {
  return gp_ucb_baseline(objective, baseline_config(objective, budget, delta, seed));
}

namespace {

struct Fit {
  double slope = 0.0;
  double intercept = 0.0;
  bool ok = false;
};

Fit least_squares(const std::vector<std::pair<double, double>>& xy) {
  Fit f;
  if (xy.size() < 2) return f;
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : xy) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(xy.size());
  my /= static_cast<double>(xy.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : xy) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (!(sxx > 1e-24)) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.ok = true;
  return f;
}

std::vector<std::pair<double, double>> usable_log_points(const ShrinkageSeries& s) {
  std::vector<std::pair<double, double>> out;
  for (const auto& [vol, eps] : s) {
    if (vol > 0.0 && vol < 1.0 && eps > 0.0 && std::isfinite(eps)) out.emplace_back(std::log(eps), std::log(vol));
  }
  return out;
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

AlphaEstimate estimate_alpha(const std::vector<ShrinkageSeries>& runs, int dimension, int resamples,
                             std::uint64_t seed) {
  if (dimension < 1) throw std::invalid_argument("estimate_alpha: dimension must be >= 1");
  std::vector<std::vector<std::pair<double, double>>> per_run;
  std::vector<std::pair<double, double>> pooled;
  for (const auto& s : runs) {
    per_run.push_back(usable_log_points(s));
    pooled.insert(pooled.end(), per_run.back().begin(), per_run.back().end());
  }
  if (pooled.size() < 5) {
    throw std::invalid_argument("estimate_alpha: fewer than 5 points with Vol in (0,1) and eps > 0");
  }
  const Fit fit = least_squares(pooled);
  if (!fit.ok) throw std::invalid_argument("estimate_alpha: degenerate window (no spread in log eps)");
  AlphaEstimate out;
  out.slope = fit.slope;
  out.intercept = fit.intercept;
  out.alpha = dimension - fit.slope;
  out.points = pooled.size();
  out.ci_low = out.ci_high = out.alpha;

  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, per_run.size() - 1);
  std::vector<double> boot;
  boot.reserve(static_cast<std::size_t>(std::max(resamples, 0)));
  for (int b = 0; b < resamples; ++b) {
    std::vector<std::pair<double, double>> sample;
    for (std::size_t k = 0; k < per_run.size(); ++k) {
      const auto& r = per_run[pick(rng.engine())];
      sample.insert(sample.end(), r.begin(), r.end());
    }
    const Fit f = least_squares(sample);
    if (f.ok && sample.size() >= 5) boot.push_back(dimension - f.slope);
  }
  out.resamples_used = static_cast<int>(boot.size());
  if (!boot.empty()) {
    out.ci_low = percentile(boot, 0.025);
    out.ci_high = percentile(boot, 0.975);
  }
  return out;
}

std::string to_string(Method method) {
  switch (method) {
    case Method::Cgp: return "cgp";
    case Method::Adaptive: return "adaptive";
    case Method::TrustRegion: return "trust-region";
    case Method::Hybrid: return "hybrid";
    case Method::Random: return "random";
    case Method::GpUcb: return "gp-ucb";
  }
  return "cgp";
}

Method method_from_string(const std::string& s) {
  for (Method m : {Method::Cgp, Method::Adaptive, Method::TrustRegion, Method::Hybrid, Method::Random, Method::GpUcb}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown method '" + s + "' (choices: cgp, adaptive, trust-region, hybrid, random, gp-ucb)");
}

MethodOutcome run_method(Method method, const NoisyObjective& objective, RunConfig config) {
  MethodOutcome out;
  out.method = method;
  out.optimum_value = objective.metadata().optimum_value;
  switch (method) {
    case Method::Cgp:
      config.mode = Mode::KnownL;
      out.run = cgp_run(objective, config);
      break;
    case Method::Adaptive: {
      config.mode = Mode::Adaptive;
      AdaptiveResult r = adaptive_run(objective, config);
      out.run = std::move(r.run);
      out.doubling = std::move(r.log);
      break;
    }
    case Method::TrustRegion: {
      config.mode = Mode::TrustRegion;
      TrResult r = tr_run(objective, config);
      out.run = std::move(r.run);
      out.regions = std::move(r.regions);
      out.winner = r.winner;
      break;
    }
    case Method::Hybrid: {
      config.mode = Mode::Hybrid;
      HybridResult r = hybrid_run(objective, config);
      out.run = std::move(r.run);
      out.hybrid = std::move(r.decision);
      break;
    }
    case Method::Random:
      config.mode = Mode::KnownL;
      out.run = random_baseline(objective, config);
      break;
    case Method::GpUcb:
      config.mode = Mode::KnownL;
      out.run = gp_ucb_baseline(objective, config);
      break;
  }
  return out;
}

namespace {

using json = nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& target, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    target = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

void read_int(const json& obj, const char* key, int& target, const std::string& where) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
  target = v.get<int>();
}

void read_real(const json& obj, const char* key, double& target, const std::string& where) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  target = v.get<double>();
}

StoppingRule parse_stopping(const json& j) {
  check_keys(j, {"rule", "threshold"}, "config.stopping");
  std::string rule = "fixed-budget";
  read(j, "rule", rule, "config.stopping");
  double threshold = 0.0;
  read_real(j, "threshold", threshold, "config.stopping");
  if (rule == "fixed-budget") return StoppingRule::fixed_budget();
  if (rule == "volume-below") return StoppingRule::volume_below(threshold);
  if (rule == "gap-below") return StoppingRule::gap_below(threshold);
  throw ConfigError("unknown stopping rule '" + rule + "' (choices: fixed-budget, volume-below, gap-below)");
}

VolumeSpec parse_volume(const json& j) {
  const std::string w = "config.volume";
  check_keys(j, {"method", "grid_points_per_axis", "pool_size", "nested"}, w);
  VolumeSpec v;
  std::string method = "auto";
  read(j, "method", method, w);
  if (method == "auto") v.method = VolumeMethod::Auto;
  else if (method == "grid") v.method = VolumeMethod::Grid;
  else if (method == "nested-mc") v.method = VolumeMethod::NestedMc;
  else throw ConfigError("unknown volume method '" + method + "' (choices: auto, grid, nested-mc)");
  read_int(j, "grid_points_per_axis", v.grid_points_per_axis, w);
  read_int(j, "pool_size", v.pool_size, w);
  if (j.contains("nested")) {
    const json& n = j.at("nested");
    const std::string wn = w + ".nested";
    check_keys(n, {"p0", "samples_per_level", "burn_in", "repeats", "max_levels"}, wn);
    read_real(n, "p0", v.nested.p0, wn);
    read_int(n, "samples_per_level", v.nested.samples_per_level, wn);
    read_int(n, "burn_in", v.nested.burn_in, wn);
    read_int(n, "repeats", v.nested.repeats, wn);
    read_int(n, "max_levels", v.nested.max_levels, wn);
  }
  return v;
}

void parse_config(const json& j, RunConfig& c, bool& lipschitz_given) {
  const std::string w = "config";
  check_keys(j,
             {"budget", "delta", "sigma", "lipschitz", "stopping", "volume", "volume_every", "maximizer_budget",
              "maximizer_restarts", "warm_samples", "trust", "hybrid"},
             w);
  read_int(j, "budget", c.budget, w);
  read_real(j, "delta", c.delta, w);
  read_real(j, "sigma", c.sigma, w);
  if (j.contains("lipschitz")) {
    read_real(j, "lipschitz", c.lipschitz, w);
    lipschitz_given = true;
  }
  if (j.contains("stopping")) c.stopping = parse_stopping(j.at("stopping"));
  if (j.contains("volume")) c.volume = parse_volume(j.at("volume"));
  read_int(j, "volume_every", c.volume_every, w);
  read_int(j, "maximizer_budget", c.maximizer_budget, w);
  read_int(j, "maximizer_restarts", c.maximizer_restarts, w);
  read_int(j, "warm_samples", c.warm_samples, w);
  if (j.contains("trust")) {
    const json& t = j.at("trust");
    const std::string wt = w + ".trust";
    check_keys(t, {"n_trust", "r0", "r_min", "tau_fail", "bound_budget", "replicate", "initial_centers"}, wt);
    read_int(t, "n_trust", c.trust.n_trust, wt);
    read_real(t, "r0", c.trust.r0, wt);
    read_real(t, "r_min", c.trust.r_min, wt);
    read_int(t, "tau_fail", c.trust.tau_fail, wt);
    read_int(t, "bound_budget", c.trust.bound_budget, wt);
    read(t, "replicate", c.trust.replicate, wt);
    read(t, "initial_centers", c.trust.initial_centers, wt);
  }
  if (j.contains("hybrid")) {
    const json& h = j.at("hybrid");
    const std::string wh = w + ".hybrid";
    check_keys(h, {"rho_thresh", "phase1_volume", "phase1_budget_fraction", "mle"}, wh);
    read_real(h, "rho_thresh", c.hybrid.rho_thresh, wh);
    read_real(h, "phase1_volume", c.hybrid.phase1_volume, wh);
    read_real(h, "phase1_budget_fraction", c.hybrid.phase1_budget_fraction, wh);
    read(h, "mle", c.hybrid.mle, wh);
  }
}

}  // namespace

ExperimentSpec parse_experiment_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("experiment spec is not valid JSON: ") + e.what());
  }
  check_keys(j, {"benchmark", "dimension", "params", "method", "seeds", "output_dir", "config"}, "spec");
  ExperimentSpec s;
  s.config.sigma = 0.1;
  if (!j.contains("benchmark")) throw ConfigError("spec.benchmark is required");
  read(j, "benchmark", s.benchmark, "spec");
  read_int(j, "dimension", s.dimension, "spec");
  if (j.contains("params")) {
    if (!j.at("params").is_object()) throw ConfigError("spec.params must be an object");
    for (const auto& [k, v] : j.at("params").items()) {
      if (!v.is_number()) throw ConfigError("spec.params." + k + " must be a number");
      s.params[k] = v.get<double>();
    }
  }
  std::string method = "cgp";
  read(j, "method", method, "spec");
  s.method = method_from_string(method);
  if (!j.contains("seeds")) throw ConfigError("spec.seeds is required");
  const json& seeds = j.at("seeds");
  if (!seeds.is_array() || seeds.empty()) throw ConfigError("spec.seeds must be a non-empty array");
  for (const json& v : seeds) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw ConfigError("spec.seeds entries must be non-negative integers");
    }
    s.seeds.push_back(v.get<std::uint64_t>());
  }
  if (std::set<std::uint64_t>(s.seeds.begin(), s.seeds.end()).size() != s.seeds.size()) {
    throw ConfigError("spec.seeds must be distinct");
  }
  std::string out = s.output_dir.string();
  read(j, "output_dir", out, "spec");
  s.output_dir = out;
  if (j.contains("config")) parse_config(j.at("config"), s.config, s.lipschitz_given);
  s.config.dimension = s.dimension;
  s.config.mode = s.method == Method::Adaptive       ? Mode::Adaptive
                  : s.method == Method::TrustRegion ? Mode::TrustRegion
                  : s.method == Method::Hybrid      ? Mode::Hybrid
                                                    : Mode::KnownL;
  if (s.method == Method::Adaptive && !s.lipschitz_given) s.config.lipschitz = 0.0;
  if (s.method == Method::GpUcb && s.config.budget > static_cast<int>(kGpMaxPoints)) {
    throw ConfigError("gp-ucb budgets are limited to " + std::to_string(kGpMaxPoints));
  }
  return s;
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

json real_or_null(std::optional<double> v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

json real_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

ojson gap_json(const std::optional<GapReport>& g) {
  if (!g) return nullptr;
  ojson o;
  o["beta"] = real_json(g->beta);
  o["eta_hat"] = real_json(g->eta_hat);
  o["gamma_hat"] = real_json(g->gamma_hat);
  o["eps"] = real_json(g->eps);
  return o;
}

ojson point_json(const Point& p) {
  ojson a = ojson::array();
  for (double v : p) a.push_back(v);
  return a;
}

std::string write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  return path.string();
}

}  // namespace

std::string result_json(const MethodOutcome& outcome, const ExperimentSpec& spec, std::uint64_t seed) {
  const RunResult& r = outcome.run;
  ojson o;
  o["method"] = to_string(outcome.method);
  o["benchmark"] = spec.benchmark;
  ojson params = ojson::object();
  for (const auto& [k, v] : spec.params) params[k] = v;
  o["params"] = params;
  o["dimension"] = spec.dimension;
  o["seed"] = seed;
  o["budget"] = spec.config.budget;
  o["sigma"] = spec.config.sigma;
  o["delta"] = spec.config.delta;
  o["observations"] = r.store.total();
  o["distinct_points"] = r.store.size();
  o["iterations"] = r.iterations;
  o["best_point"] = point_json(r.best_point);
  o["best_mean"] = r.best_mean;
  o["final_regret"] = real_or_null(r.final_regret);
  o["stop_reason"] = to_string(r.stop_reason);
  o["message"] = r.message;
  o["lipschitz"] = r.lipschitz;
  std::optional<double> ell;
  if (r.certificate) ell = r.certificate->ell();
  o["final_ell"] = real_or_null(ell);
  std::optional<double> gamma_true;
  if (ell && outcome.optimum_value) gamma_true = *outcome.optimum_value - *ell;
  o["gamma_true"] = real_or_null(gamma_true);
  o["last_volume"] = real_or_null(r.last_volume);
  o["last_gap"] = gap_json(r.last_gap);
  if (outcome.doubling) {
    const DoublingLog& log = *outcome.doubling;
    ojson d;
    d["initial"] = log.initial;
    d["final"] = log.final_value;
    ojson events = ojson::array();
    for (const auto& e : log.events) {
      ojson ev;
      ev["t"] = e.t;
      constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
      ev["i"] = e.i == none ? ojson(nullptr) : ojson(e.i);
      ev["j"] = e.j == none ? ojson(nullptr) : ojson(e.j);
      ev["before"] = e.before;
      ev["after"] = e.after;
      events.push_back(ev);
    }
    d["events"] = events;
    o["doubling_events"] = d;
  }
  if (!outcome.regions.empty()) {
    ojson regions = ojson::array();
    for (const TrustRegion& g : outcome.regions) {
      ojson reg;
      reg["id"] = g.id;
      reg["center"] = point_json(g.center);
      reg["radius"] = g.radius;
      reg["radius_history"] = point_json(g.radius_history);
      reg["restarts"] = g.restarts;
      reg["visits"] = g.total_visits;
      reg["local_ell"] = real_json(g.local_ell);
      reg["best_local_mean"] = real_json(g.best_local_mean);
      ojson log = ojson::array();
      for (const RestartEvent& e : g.restart_log) {
        ojson ev;
        ev["t"] = e.t;
        ev["old_center"] = point_json(e.old_center);
        ev["old_radius"] = e.old_radius;
        ev["upper_bound"] = real_json(e.upper_bound);
        ev["ell"] = real_json(e.ell);
        log.push_back(ev);
      }
      reg["restart_log"] = log;
      regions.push_back(reg);
    }
    o["regions"] = regions;
    o["winner"] = outcome.winner;
  }
  if (outcome.hybrid) {
    const HybridDecision& h = *outcome.hybrid;
    ojson hy;
    hy["t_switch"] = h.t_switch;
    hy["rho_hat"] = real_json(h.rho_hat);
    hy["rho_available"] = h.rho_available;
    hy["phase2"] = to_string(h.phase2);
    hy["warning"] = h.warning;
    ojson refits = ojson::array();
    for (const GpHyper& g : h.refits) refits.push_back({{"lengthscale", g.lengthscale}, {"signal_variance", g.signal_variance}});
    hy["refits"] = refits;
    o["hybrid"] = hy;
  }
  return o.dump(2) + "\n";
}

std::string trace_csv(const MethodOutcome& outcome, int dimension) {
  const bool adaptive = outcome.method == Method::Adaptive;
  const bool regions = outcome.method == Method::TrustRegion;
  std::ostringstream os;
  os << "t";
  for (int k = 0; k < dimension; ++k) os << ",x" << k;
  os << ",y,ell,beta,eta_hat,gamma_hat,eps,vol_fraction,best_mean,regret";
  if (adaptive) os << ",cert_valid";
  if (regions) os << ",region";
  os << '\n';
  for (const TraceRow& row : outcome.run.trace) {
    os << row.t;
    for (double v : row.query) os << ',' << format_real(v);
    os << ',' << format_real(row.y) << ',' << format_real(row.ell);
    if (row.gap) {
      os << ',' << format_real(row.gap->beta) << ',' << format_real(row.gap->eta_hat) << ','
         << format_real(row.gap->gamma_hat) << ',' << format_real(row.gap->eps);
    } else {
      os << ",,,,";
    }
    os << ',' << (row.vol_fraction ? format_real(*row.vol_fraction) : "");
    os << ',' << format_real(row.best_mean);
    os << ',' << (row.regret ? format_real(*row.regret) : "");
    if (adaptive) os << ',' << (row.cert_valid ? 1 : 0);
    if (regions) os << ',' << row.region;
    os << '\n';
  }
  return os.str();
}

int thread_count_from_env() {
  const char* env = std::getenv("CGP_THREADS");
  if (env == nullptr || *env == '\0') return std::max(1u, std::thread::hardware_concurrency());
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1 || v > 4096) throw ConfigError("CGP_THREADS must be a positive integer");
  return static_cast<int>(v);
}

namespace {

json summary_stats(std::vector<double> v) {
  json o;
  o["count"] = v.size();
  if (v.empty()) {
    o["median"] = nullptr;
    o["mean"] = nullptr;
    o["stderr"] = nullptr;
    return o;
  }
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double se = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size())) : 0.0;
  o["median"] = percentile(v, 0.5);
  o["mean"] = mean;
  o["stderr"] = se;
  return o;
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentSpec& spec, int threads) {
  if (threads <= 0) threads = thread_count_from_env();
  if (spec.seeds.empty()) throw ConfigError("experiment needs at least one seed");
  const Benchmark bench = make_benchmark(spec.benchmark, spec.dimension, spec.params, spec.config.sigma);
  RunConfig base = spec.config;
  base.dimension = spec.dimension;
  if (!spec.lipschitz_given && spec.method != Method::Adaptive) {
    base.lipschitz = bench.objective.metadata().lipschitz.value_or(1.0);
  }
  base.validate();
  fs::create_directories(spec.output_dir);

  ExperimentSummary summary;
  summary.runs.resize(spec.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= spec.seeds.size()) return;
      SeedOutcome& so = summary.runs[k];
      so.seed = spec.seeds[k];
      try {
        RunConfig cfg = base;
        cfg.seed = so.seed;
        const MethodOutcome out = run_method(spec.method, bench.objective, cfg);
        const fs::path dir = spec.output_dir / ("seed_" + std::to_string(so.seed));
        fs::create_directories(dir);
        write_text(dir / "trace.csv", trace_csv(out, spec.dimension));
        write_text(dir / "result.json", result_json(out, spec, so.seed));
        if (out.run.certificate) {
          write_text(dir / "certificate.json",
                     export_certificate(*out.run.certificate, {to_string(spec.method), so.seed, out.run.store.total()}));
        }
        if (out.hybrid) write_text(dir / "frozen_certificate.json", out.hybrid->frozen_certificate);
        so.ok = true;
        so.final_regret = out.run.final_regret;
        so.stop_reason = to_string(out.run.stop_reason);
        so.observations = out.run.store.total();
        so.final_ell = out.run.certificate ? out.run.certificate->ell() : 0.0;
        so.last_volume = out.run.last_volume;
        if (out.run.last_gap) so.last_eps = out.run.last_gap->eps;
        so.lipschitz = out.run.lipschitz;
      } catch (const std::exception& e) {
        so.ok = false;
        so.error = e.what();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(spec.seeds.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  json agg;
  agg["benchmark"] = spec.benchmark;
  agg["method"] = to_string(spec.method);
  agg["dimension"] = spec.dimension;
  agg["seeds"] = spec.seeds;
  std::vector<double> regrets, ells, vols, epss, lips, obs;
  std::map<std::string, int> reasons;
  json failures = json::array();
  for (const SeedOutcome& so : summary.runs) {
    if (!so.ok) {
      failures.push_back({{"seed", so.seed}, {"error", so.error}});
      ++summary.failures;
      continue;
    }
    if (so.final_regret) regrets.push_back(*so.final_regret);
    if (std::isfinite(so.final_ell)) ells.push_back(so.final_ell);
    if (so.last_volume) vols.push_back(*so.last_volume);
    if (so.last_eps) epss.push_back(*so.last_eps);
    lips.push_back(so.lipschitz);
    obs.push_back(so.observations);
    ++reasons[so.stop_reason];
    if (so.stop_reason == "anomaly") ++summary.anomalies;
  }
  agg["completed"] = summary.runs.size() - static_cast<std::size_t>(summary.failures);
  agg["failures"] = failures;
  if (summary.failures > 0) agg["warning"] = "aggregated over successful runs only";
  agg["final_regret"] = summary_stats(regrets);
  json cert;
  cert["final_ell"] = summary_stats(ells);
  cert["last_volume"] = summary_stats(vols);
  cert["last_eps"] = summary_stats(epss);
  cert["lipschitz"] = summary_stats(lips);
  agg["certificate"] = cert;
  json stopping;
  stopping["reasons"] = reasons;
  stopping["observations"] = summary_stats(obs);
  int early = 0;
  for (const SeedOutcome& so : summary.runs) {
    if (so.ok && so.observations < spec.config.budget) ++early;
  }
  stopping["stopped_before_budget"] = early;
  agg["stopping"] = stopping;
  summary.aggregate = agg.dump(2) + "\n";
  write_text(spec.output_dir / "aggregate.json", summary.aggregate);
  return summary;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::pair<std::vector<ShrinkageSeries>, int> read_shrinkage_traces(const fs::path& dir) {
  if (!fs::exists(dir)) throw ConfigError("trace directory does not exist: " + dir.string());
  std::vector<fs::path> files;
  if (fs::is_regular_file(dir)) {
    files.push_back(dir);
  } else {
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
      if (e.is_regular_file() && e.path().filename() == "trace.csv") files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no trace.csv found under " + dir.string());
  std::vector<ShrinkageSeries> runs;
  int dimension = -1;
  for (const fs::path& p : files) {
    std::ifstream f(p);
    std::string line;
    if (!std::getline(f, line)) throw ConfigError("empty trace file " + p.string());
    const auto header = split_csv(line);
    const auto col = [&](const std::string& name) {
      const auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) throw ConfigError(p.string() + ": missing column " + name);
      return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t vol_col = col("vol_fraction");
    const std::size_t eps_col = col("eps");
    const int d = static_cast<int>(std::count_if(header.begin(), header.end(), [](const std::string& h) {
      return h.size() > 1 && h[0] == 'x' && std::all_of(h.begin() + 1, h.end(), ::isdigit);
    }));
    if (dimension >= 0 && d != dimension) throw ConfigError("traces have different dimensions");
    dimension = d;
    ShrinkageSeries series;
    while (std::getline(f, line)) {
      const auto cells = split_csv(line);
      if (cells.size() <= std::max(vol_col, eps_col)) continue;
      if (cells[vol_col].empty() || cells[eps_col].empty()) continue;
      try {
        series.emplace_back(std::stod(cells[vol_col]), std::stod(cells[eps_col]));
      } catch (const std::exception&) {
        throw ConfigError(p.string() + ": unreadable number");
      }
    }
    runs.push_back(std::move(series));
  }
  return {runs, dimension};
}

std::string export_run_certificate(const fs::path& run_dir, std::optional<int> region) {
  const fs::path cert_path = run_dir / "certificate.json";
  if (!fs::exists(cert_path)) throw ConfigError("no certificate.json in " + run_dir.string());
  const std::string text = read_text_file(cert_path.string());
  if (!region) return text;
  const fs::path result_path = run_dir / "result.json";
  if (!fs::exists(result_path)) throw ConfigError("no result.json in " + run_dir.string());
  json result;
  try {
    result = json::parse(read_text_file(result_path.string()));
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("result.json: ") + e.what());
  }
  if (!result.contains("regions")) throw ConfigError("run has no trust regions; --region needs a trust-region run");
  const json& regions = result.at("regions");
  if (*region < 0 || static_cast<std::size_t>(*region) >= regions.size()) {
    throw ConfigError("region id out of range (run has " + std::to_string(regions.size()) + " regions)");
  }
  TrustRegion tr;
  tr.center = regions.at(static_cast<std::size_t>(*region)).at("center").get<Point>();
  tr.radius = regions.at(static_cast<std::size_t>(*region)).at("radius").get<double>();
  const Box box = tr.box();
  const CertificateDocument doc = import_certificate(text);
  const CertificateSnapshot& s = doc.snapshot;
  const CertificateSnapshot global(s.dimension(), s.lipschitz(), s.sigma(), s.delta(), s.budget(), s.records());
  const double local_ell = local_lower_certificate(global, box);
  if (!std::isfinite(local_ell)) throw ConfigError("region " + std::to_string(*region) + " contains no records");
  return export_certificate(global.localized(local_ell, box), doc.run);
}

}  // namespace cgp
