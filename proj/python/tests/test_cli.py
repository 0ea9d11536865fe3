import json
import os
import subprocess
from pathlib import Path

import pytest

CLI = os.environ.get("CGP_CLI")
pytestmark = pytest.mark.skipif(not CLI, reason="CGP_CLI not set")


def cli(*args, threads=None):
    env = dict(os.environ)
    if threads is not None:
        env["CGP_THREADS"] = str(threads)
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, env=env)


def write_spec(path, out_dir, budget=40, volume_every=10, **extra):
    spec = {"benchmark": "needle", "dimension": 2, "method": "cgp", "seeds": [0, 1, 2],
            "output_dir": str(out_dir), "config": {"budget": budget, "sigma": 0.1, "volume_every": volume_every}}
    spec.update(extra)
    path.write_text(json.dumps(spec))
    return path


def test_bench_list():
    r = cli("bench", "--list")
    assert r.returncode == 0
    for name in ("needle", "bump", "branin", "hartmann6"):
        assert name in r.stdout


def test_config_errors_exit_2(tmp_path):
    assert cli("run", "--config", tmp_path / "missing.json").returncode == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"benchmark": "needle", "seeds": [0], "bogus": 1}')
    assert cli("run", "--config", bad).returncode == 2
    assert cli("frobnicate").returncode == 2
    assert cli("run").returncode == 2


def test_run_is_byte_identical_across_thread_counts(tmp_path):
    a = cli("run", "--config", write_spec(tmp_path / "a.json", tmp_path / "a"), threads=1)
    b = cli("run", "--config", write_spec(tmp_path / "b.json", tmp_path / "b"), threads=2)
    assert a.returncode == 0, a.stderr
    assert b.returncode == 0, b.stderr
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    assert files
    for f in files:
        if f.name == "aggregate.json":
            continue
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes(), f


def test_bad_thread_count_is_a_config_error(tmp_path):
    r = cli("run", "--config", write_spec(tmp_path / "a.json", tmp_path / "a"), threads="many")
    assert r.returncode == 2


def test_export_volume_and_alpha(tmp_path):
    assert cli("run", "--config", write_spec(tmp_path / "a.json", tmp_path / "a", budget=150, volume_every=1)).returncode == 0
    cert = tmp_path / "cert.json"
    r = cli("export-cert", "--run", tmp_path / "a" / "seed_0", "--out", cert)
    assert r.returncode == 0, r.stderr
    v = cli("volume", "--cert", cert, "--method", "grid")
    assert v.returncode == 0, v.stderr
    est = json.loads(v.stdout)
    assert 0.0 < est["estimate"] <= 1.0
    assert est["ci_low"] == est["ci_high"] == pytest.approx(est["estimate"])
    a = cli("alpha", "--traces", tmp_path / "a", "--resamples", 50)
    assert a.returncode == 0, a.stderr
    assert json.loads(a.stdout)["runs"] == 3
    assert cli("alpha", "--traces", tmp_path / "empty").returncode == 2
    assert cli("export-cert", "--run", tmp_path / "a" / "seed_0", "--region", 0).returncode == 2


def test_empty_active_set_exits_3(tmp_path):
    doc = {"schema_version": 1, "dimension": 1, "lipschitz": 0.1, "sigma": 0, "delta": 0.05, "budget": 2,
           "ell": 1.0, "run": {"method": "", "seed": 0, "t": 0},
           "records": [{"x": [0.0], "n": 1, "mean": 1.0, "radius": 0},
                       {"x": [1.0], "n": 1, "mean": 0.0, "radius": 0}]}
    path = tmp_path / "cert.json"
    path.write_text(json.dumps(doc))
    r = cli("volume", "--cert", path, "--method", "grid")
    assert r.returncode == 3
    assert json.loads(r.stdout)["anomaly"] is True
