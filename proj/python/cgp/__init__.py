"""Certificate-guided pruning for noisy Lipschitz maximisation on [0,1]^d."""

import json

from ._cgp import (
    AnomalyError,
    Benchmark,
    Certificate,
    ConfigError,
    benchmark_names,
)
from . import _cgp

__all__ = [
    "AnomalyError",
    "Benchmark",
    "Certificate",
    "ConfigError",
    "benchmark_names",
    "estimate_alpha",
    "run",
    "run_experiment",
    "run_function",
]


def run(benchmark, method="cgp", seed=0, config=None):
    """Runs one seed of `method` on a Benchmark.

    `config` takes the keys of the experiment file's "config" object. When
    it has no "lipschitz" the benchmark's registered constant is used.
    """
    return _cgp.run(benchmark, method, seed, json.dumps(config or {}))


def run_function(f, dimension, sigma=0.0, method="cgp", seed=0, config=None):
    """Maximises a Python callable f(x: list[float]) -> float over [0,1]^d.

    f is taken as the noiseless objective; observations add Gaussian noise of
    scale `sigma` drawn from the run's noise stream.
    """
    return _cgp.run_function(f, dimension, sigma, method, seed, json.dumps(config or {}))


def run_experiment(spec, threads=0):
    """Runs a full experiment spec (dict) and returns the aggregate summary."""
    return json.loads(_cgp.run_experiment(json.dumps(spec), threads))


def estimate_alpha(runs, dimension, resamples=1000, seed=0):
    """Fits the shrinkage exponent from per-run lists of (volume, eps) pairs."""
    return _cgp.estimate_alpha([[tuple(p) for p in r] for r in runs], dimension, resamples, seed)
