"""The compiled kernels and the numpy fallback must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest

from noisebench import densmat
from noisebench.device import SyntheticDevice
from noisebench.noisemodel import _tables, plausible_device, predict_distribution

compiled = pytest.mark.skipif("compiled" not in densmat.BACKENDS, reason="extension not built")


@pytest.fixture
def restore_backend():
    name = densmat.backend_name()
    yield
    densmat.use_backend(name)


def both(fn):
    out = {}
    for name in ("compiled", "python"):
        densmat.use_backend(name)
        out[name] = fn()
    return out["compiled"], out["python"]


def rho_and_super(rng, w, k):
    a = rng.normal(size=(2**w, 2**w)) + 1j * rng.normal(size=(2**w, 2**w))
    rho = densmat.DensityMatrix(w, a @ a.conj().T)
    S = rng.normal(size=(4**k, 4**k)) + 1j * rng.normal(size=(4**k, 4**k))
    S[rng.random(S.shape) < 0.5] = 0  # exercise the sparse path
    return rho, S


@compiled
@pytest.mark.usefixtures("restore_backend")
class TestAgreement:
    @pytest.mark.parametrize("w", [1, 2, 4, 6])
    def test_one_qubit(self, w):
        rng = np.random.default_rng(w)
        for q in range(w):
            rho, S = rho_and_super(rng, w, 1)

            def run():
                r = rho.copy()
                densmat.apply_superop(r, S, [q])
                return r.data

            c, p = both(run)
            assert np.abs(c - p).max() < 1e-12 * max(1.0, np.abs(p).max())

    @pytest.mark.parametrize("w", [2, 3, 5])
    def test_two_qubit_any_order(self, w):
        rng = np.random.default_rng(100 + w)
        pairs = [(a, b) for a in range(w) for b in range(w) if a != b]
        for q1, q2 in pairs:
            rho, S = rho_and_super(rng, w, 2)

            def run():
                r = rho.copy()
                densmat.apply_superop(r, S, [q1, q2])
                return r.data

            c, p = both(run)
            assert np.abs(c - p).max() < 1e-11 * max(1.0, np.abs(p).max())

    @pytest.mark.parametrize("w", [1, 3, 5])
    def test_readout_sweep(self, w):
        rng = np.random.default_rng(7)
        probs = rng.dirichlet(np.ones(2**w))
        for q in range(w):
            def run():
                p = probs.copy()
                densmat.readout_sweep(p, 0.03, 0.07, q, w)
                return p

            c, p = both(run)
            assert np.abs(c - p).max() < 1e-15

    def test_end_to_end_predictions(self):
        hidden = plausible_device(4)
        circuits = SyntheticDevice(hidden, seed=1).circuits(4, 3, 5)

        def run():
            _tables.cache_clear()
            return np.array([predict_distribution(c, hidden).probs for c in circuits])

        c, p = both(run)
        assert np.abs(c - p).max() < 1e-13


def test_env_var_selects_fallback():
    env = dict(os.environ, NOISEBENCH_BACKEND="python")
    out = subprocess.run(
        [sys.executable, "-c", "from noisebench import densmat; print(densmat.backend_name())"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
