import json
import math

import numpy as np
import pytest

import cgp


def test_benchmark_values():
    assert "needle" in cgp.benchmark_names()
    b = cgp.Benchmark("needle", 2, {"p": 1})
    assert b.dimension == 2
    assert b(b.optimizer) == pytest.approx(b.optimum_value)
    with pytest.raises(cgp.ConfigError):
        cgp.Benchmark("nope", 2)
    with pytest.raises(cgp.ConfigError):
        b([0.5])


def test_run_noiseless_needle():
    b = cgp.Benchmark("needle", 1, {"p": 1})
    r = cgp.run(b, "cgp", seed=3, config={"budget": 60})
    assert r["observations"] == 60
    assert r["stop_reason"] == "budget"
    trace = r["trace"]
    assert trace["query"].shape == (60, 1)
    assert np.all(np.diff(trace["t"]) == 1)
    # the lower certificate never exceeds f*
    assert np.all(trace["ell"] <= b.optimum_value + 1e-12)
    cert = r["certificate"]
    assert cert.is_active(b.optimizer)
    assert cert.envelope(b.optimizer) >= cert.ell


def test_run_is_deterministic():
    b = cgp.Benchmark("bump", 2, sigma=0.1)
    a = cgp.run(b, "cgp", seed=7, config={"budget": 40})
    c = cgp.run(b, "cgp", seed=7, config={"budget": 40})
    assert np.array_equal(a["trace"]["y"], c["trace"]["y"])
    assert a["best_point"] == c["best_point"]


def test_bad_config_raises():
    b = cgp.Benchmark("needle", 2)
    with pytest.raises(cgp.ConfigError):
        cgp.run(b, config={"budget": 10, "not_a_key": 1})


def test_run_function_and_certificate_round_trip():
    r = cgp.run_function(lambda x: 1.0 - abs(x[0] - 0.3), 1, sigma=0.05, method="cgp", seed=1,
                         config={"budget": 80, "lipschitz": 1.0})
    assert abs(r["best_point"][0] - 0.3) < 0.1
    cert = r["certificate"]
    again = cgp.Certificate.from_json(cert.to_json())
    assert again.ell == cert.ell
    v = cert.volume("grid")
    assert 0.0 < v["estimate"] <= 1.0
    assert not v["anomaly"]
    with pytest.raises(cgp.ConfigError):
        cgp.run_function(lambda x: x[0], 1, config={"budget": 10})


def test_estimate_alpha_exact():
    runs = []
    for r in range(4):
        eps = [0.5 * 0.8 ** (k + 0.25 * r) for k in range(1, 11)]
        runs.append([(0.3 * e ** 2.0, e) for e in eps])
    a = cgp.estimate_alpha(runs, 2, resamples=100, seed=1)
    assert a["alpha"] == pytest.approx(0.0, abs=1e-9)


def test_run_experiment(tmp_path):
    spec = {"benchmark": "needle", "dimension": 1, "method": "cgp", "seeds": [0, 1],
            "output_dir": str(tmp_path), "config": {"budget": 30}}
    agg = cgp.run_experiment(spec, threads=1)
    assert (tmp_path / "aggregate.json").exists()
    assert json.loads((tmp_path / "aggregate.json").read_text()) == agg
