"""Compiled and pure-Python valuation kernels must agree exactly."""

import os
import random
import subprocess
import sys

import pytest

import coalsense.backend as backend
from coalsense.valuation import evaluate_partition

from conftest import make_scenario


def _have_compiled():
    try:
        backend.get_backend("compiled")
        return True
    except ImportError:
        return False


needs_compiled = pytest.mark.skipif(not _have_compiled(),
                                    reason="compiled kernel not built")


def random_case(rng):
    # every member ranks the whole shared pool, as real plans do
    n = rng.randint(1, 4)
    pool = rng.randint(max(2, n), 6)
    orderings = [tuple(rng.sample(range(pool), pool)) for _ in range(n)]
    thetas = [rng.uniform(0.05, 0.95) for _ in range(pool)]
    gains = [[rng.uniform(0.05, 3.0) for _ in range(pool)] for _ in range(n)]
    ext = [rng.uniform(0.0, 0.4) for _ in range(pool)]
    return orderings, thetas, gains, ext


@needs_compiled
def test_kernels_agree_bit_for_bit():
    py = backend.get_backend("python")
    cc = backend.get_backend("compiled")
    rng = random.Random(20240817)
    for _ in range(25):
        orderings, thetas, gains, ext = random_case(rng)
        a = py.evaluate_coalition(orderings, thetas, gains, ext, 1e-3, 10.0)
        b = cc.evaluate_coalition(orderings, thetas, gains, ext, 1e-3, 10.0)
        assert set(a) == set(b)
        for key in ("exp_capacity", "exp_power", "sel_prob"):
            assert a[key] == b[key], key  # exact, no tolerance
        assert a["total_prob"] == b["total_prob"]
        assert a["n_outcomes"] == b["n_outcomes"]


@needs_compiled
def test_partition_payoffs_identical_across_kernels(monkeypatch):
    sc = make_scenario(n=6, k=8, seed=11)
    partition = ((0, 1, 2), (3, 4), (5,))
    with_default = evaluate_partition(sc, partition)
    monkeypatch.setattr(backend, "evaluate_coalition",
                        backend.get_backend("python").evaluate_coalition)
    with_python = evaluate_partition(sc, partition)
    assert with_default == with_python


def test_backend_names():
    assert backend.backend_name() in ("python", "compiled")
    assert backend.get_backend("python").BACKEND_NAME == "python"
    with pytest.raises(ValueError):
        backend.get_backend("nope")


@pytest.mark.parametrize("forced", ["python", "compiled"])
def test_env_override_selects_kernel(forced):
    if forced == "compiled" and not _have_compiled():
        pytest.skip("compiled kernel not built")
    env = dict(os.environ, COALSENSE_BACKEND=forced)
    out = subprocess.run(
        [sys.executable, "-c",
         "from coalsense import backend; print(backend.backend_name())"],
        env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == forced
