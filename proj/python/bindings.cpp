#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "cgp/benchmarks.hpp"
#include "cgp/harness.hpp"
#include "cgp/hybrid.hpp"
#include "cgp/volume.hpp"

namespace py = pybind11;
using namespace cgp;

namespace {

RunConfig config_from_json(const std::string& benchmark, int dimension, const std::string& config_json,
                           bool* lipschitz_given) {
  nlohmann::json spec = {{"benchmark", benchmark}, {"dimension", dimension}, {"seeds", {0}}};
  spec["config"] = nlohmann::json::parse(config_json);
  const ExperimentSpec parsed = parse_experiment_spec(spec.dump());
  *lipschitz_given = parsed.lipschitz_given;
  return parsed.config;
}

py::dict trace_columns(const RunResult& run, int dimension) {
  const auto n = static_cast<py::ssize_t>(run.trace.size());
  py::array_t<double> query({n, static_cast<py::ssize_t>(dimension)});
  py::array_t<double> y(n), ell(n), best(n), lipschitz(n), vol(n), eps(n), regret(n);
  py::array_t<int> t(n), iteration(n), region(n);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto q = query.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < n; ++i) {
    const TraceRow& row = run.trace[static_cast<std::size_t>(i)];
    for (int k = 0; k < dimension; ++k) q(i, k) = row.query[static_cast<std::size_t>(k)];
    t.mutable_at(i) = row.t;
    iteration.mutable_at(i) = row.iteration;
    region.mutable_at(i) = row.region;
    y.mutable_at(i) = row.y;
    ell.mutable_at(i) = row.ell;
    best.mutable_at(i) = row.best_mean;
    lipschitz.mutable_at(i) = row.lipschitz;
    vol.mutable_at(i) = row.vol_fraction.value_or(nan);
    eps.mutable_at(i) = row.gap ? row.gap->eps : nan;
    regret.mutable_at(i) = row.regret.value_or(nan);
  }
  py::dict out;
  out["t"] = t;
  out["iteration"] = iteration;
  out["query"] = query;
  out["y"] = y;
  out["ell"] = ell;
  out["best_mean"] = best;
  out["regret"] = regret;
  out["vol_fraction"] = vol;
  out["eps"] = eps;
  out["lipschitz"] = lipschitz;
  out["region"] = region;
  return out;
}

py::dict outcome_dict(const MethodOutcome& o, int dimension) {
  py::dict out;
  out["method"] = to_string(o.method);
  out["best_point"] = o.run.best_point;
  out["best_mean"] = o.run.best_mean;
  out["final_regret"] = o.run.final_regret ? py::cast(*o.run.final_regret) : py::none();
  out["stop_reason"] = to_string(o.run.stop_reason);
  out["lipschitz"] = o.run.lipschitz;
  out["observations"] = static_cast<int>(o.run.trace.size());
  out["trace"] = trace_columns(o.run, dimension);
  out["certificate"] = o.run.certificate ? py::cast(*o.run.certificate) : py::none();
  if (o.doubling) out["doublings"] = static_cast<int>(o.doubling->events.size());
  if (o.hybrid) out["switched_to_gp"] = o.hybrid->phase2 == Phase2::Gp;
  if (o.winner >= 0) out["winner"] = o.winner;
  return out;
}

}  // namespace

PYBIND11_MODULE(_cgp, m) {
  m.doc() = "Certificate-guided pruning for noisy Lipschitz maximisation";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<AnomalyError>(m, "AnomalyError", PyExc_RuntimeError);

  m.def("benchmark_names", &benchmark_names);

  py::class_<Benchmark>(m, "Benchmark")
      .def(py::init([](const std::string& name, int dimension, const BenchmarkParams& params, double sigma) {
             return make_benchmark(name, dimension, params, sigma);
           }),
           py::arg("name"), py::arg("dimension"), py::arg("params") = BenchmarkParams{}, py::arg("sigma") = 0.0)
      .def_readonly("name", &Benchmark::name)
      .def_readonly("dimension", &Benchmark::dimension)
      .def_property_readonly("sigma", [](const Benchmark& b) { return b.objective.sigma(); })
      .def_property_readonly("optimum_value", [](const Benchmark& b) { return b.objective.metadata().optimum_value; })
      .def_property_readonly("optimizer", [](const Benchmark& b) { return b.objective.metadata().optimizer; })
      .def_property_readonly("lipschitz", [](const Benchmark& b) { return b.objective.metadata().lipschitz; })
      .def("__call__", [](const Benchmark& b, const Point& x) {
        if (static_cast<int>(x.size()) != b.dimension) throw ConfigError("point has the wrong dimension");
        return b.objective.noiseless(x);
      });

  py::class_<CertificateSnapshot>(m, "Certificate")
      .def_property_readonly("dimension", &CertificateSnapshot::dimension)
      .def_property_readonly("lipschitz", &CertificateSnapshot::lipschitz)
      .def_property_readonly("ell", &CertificateSnapshot::ell)
      .def_property_readonly("size", &CertificateSnapshot::size)
      .def("envelope", [](const CertificateSnapshot& s, const Point& x) { return s.envelope(x); })
      .def("is_active", [](const CertificateSnapshot& s, const Point& x) { return s.is_active(x); })
      .def(
          "volume",
          [](const CertificateSnapshot& s, const std::string& method, std::uint64_t seed) {
            VolumeSpec spec;
            if (method == "grid") spec.method = VolumeMethod::Grid;
            else if (method == "nested-mc") spec.method = VolumeMethod::NestedMc;
            else if (method != "auto") throw ConfigError("unknown volume method '" + method + "'");
            Rng rng(seed);
            ActiveSetEstimate est;
            {
              py::gil_scoped_release release;
              est = estimate_active_set(s, spec, rng);
            }
            py::dict out;
            out["estimate"] = est.volume_fraction;
            out["ci_low"] = std::exp(est.log_volume_ci.first);
            out["ci_high"] = std::exp(est.log_volume_ci.second);
            out["anomaly"] = est.anomaly;
            return out;
          },
          py::arg("method") = "auto", py::arg("seed") = 0)
      .def("to_json", [](const CertificateSnapshot& s) { return export_certificate(s); })
      .def_static("from_json", [](const std::string& text) { return import_certificate(text).snapshot; });

  m.def(
      "run",
      [](const Benchmark& b, const std::string& method, std::uint64_t seed, const std::string& config_json) {
        bool given = false;
        RunConfig c = config_from_json(b.name, b.dimension, config_json, &given);
        if (!given) {
          const Method mm = method_from_string(method);
          c.lipschitz = mm == Method::Adaptive ? 0.0 : b.objective.metadata().lipschitz.value_or(1.0);
        }
        c.seed = seed;
        c.sigma = b.objective.sigma();
        MethodOutcome o;
        {
          py::gil_scoped_release release;
          o = run_method(method_from_string(method), b.objective, c);
        }
        return outcome_dict(o, b.dimension);
      },
      py::arg("benchmark"), py::arg("method") = "cgp", py::arg("seed") = 0, py::arg("config_json") = "{}");

  m.def(
      "run_function",
      [](const std::function<double(const Point&)>& f, int dimension, double sigma, const std::string& method,
         std::uint64_t seed, const std::string& config_json) {
        bool given = false;
        RunConfig c = config_from_json("needle", dimension, config_json, &given);
        const Method mm = method_from_string(method);
        if (!given && mm != Method::Adaptive && mm != Method::Random && mm != Method::GpUcb) {
          throw ConfigError("config.lipschitz is required for a user objective");
        }
        if (!given) c.lipschitz = 0.0;
        c.seed = seed;
        c.sigma = sigma;
        // the callable runs under the GIL on the calling thread
        const NoisyObjective objective(dimension, [&f](PointView x) { return f(Point(x.begin(), x.end())); }, sigma);
        return outcome_dict(run_method(mm, objective, c), dimension);
      },
      py::arg("f"), py::arg("dimension"), py::arg("sigma") = 0.0, py::arg("method") = "cgp", py::arg("seed") = 0,
      py::arg("config_json") = "{}");

  m.def(
      "run_experiment",
      [](const std::string& spec_json, int threads) {
        const ExperimentSpec spec = parse_experiment_spec(spec_json);
        py::gil_scoped_release release;
        return run_experiment(spec, threads).aggregate;
      },
      py::arg("spec_json"), py::arg("threads") = 0);

  m.def(
      "estimate_alpha",
      [](const std::vector<ShrinkageSeries>& runs, int dimension, int resamples, std::uint64_t seed) {
        const AlphaEstimate a = estimate_alpha(runs, dimension, resamples, seed);
        py::dict out;
        out["alpha"] = a.alpha;
        out["slope"] = a.slope;
        out["ci_low"] = a.ci_low;
        out["ci_high"] = a.ci_high;
        out["points"] = a.points;
        return out;
      },
      py::arg("runs"), py::arg("dimension"), py::arg("resamples") = 1000, py::arg("seed") = 0);
}
