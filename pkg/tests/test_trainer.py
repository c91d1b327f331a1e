import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from noisebench.device import SyntheticDevice, run_synthetic
from noisebench.noisemodel import ideal_params, pack, plausible_device, uniform_params
from noisebench.trainer import (
    NonFiniteLossError,
    SpsaConfig,
    batch_loss,
    hellinger,
    kl_divergence,
    make_projection,
    spsa_minimize,
    train,
)


def simplex(rng, k, n=None):
    return rng.dirichlet(np.ones(k), size=n)


class TestHellinger:
    def test_identity(self):
        p = np.array([0.2, 0.3, 0.5])
        assert hellinger(p, p) == 0.0

    def test_orthogonal(self):
        assert hellinger([1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0, abs=1e-15)

    def test_half(self):
        expected = math.sqrt((math.sqrt(0.5) - 1) ** 2 + 0.5) / math.sqrt(2)
        assert hellinger([0.5, 0.5], [1.0, 0.0]) == pytest.approx(expected, abs=1e-15)
        assert hellinger([0.5, 0.5], [1.0, 0.0]) == pytest.approx(0.541196, abs=1e-6)

    def test_metric_axioms(self):
        rng = np.random.default_rng(0)
        for k in (2, 4, 8, 32):
            for p, q, r in simplex(rng, k, (250, 3)):
                assert hellinger(p, q) == hellinger(q, p)
                assert hellinger(p, r) <= hellinger(p, q) + hellinger(q, r) + 1e-12
                assert 0.0 <= hellinger(p, q) <= 1.0

    def test_errors(self):
        with pytest.raises(ValueError):
            hellinger([0.5, 0.5], [1.0, 0.0, 0.0])
        with pytest.raises(ValueError):
            hellinger([1.5, -0.5], [0.5, 0.5])


class TestKL:
    def test_identity(self):
        p = np.array([0.1, 0.9])
        assert kl_divergence(p, p) == pytest.approx(0.0, abs=1e-15)

    def test_ln2(self):
        assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-15)

    def test_clamped_zero(self):
        eps = 1e-9
        q = np.array([1.0, eps]) / (1.0 + eps)  # clamp then renormalise
        expected = 0.5 * math.log(0.5 / q[1]) + 0.5 * math.log(0.5 / q[0])
        got = kl_divergence([0.5, 0.5], [1.0, 0.0], epsilon=eps)
        assert math.isfinite(got) and got == pytest.approx(expected, rel=1e-12)

    def test_nonnegative(self):
        rng = np.random.default_rng(1)
        for p, q in simplex(rng, 8, (500, 2)):
            assert kl_divergence(p, q) >= 0.0

    def test_bad_epsilon(self):
        with pytest.raises(ValueError):
            kl_divergence([1.0], [1.0], epsilon=0.0)


@pytest.fixture(scope="module")
def big_batch():
    return SyntheticDevice(plausible_device(2), shots=2**18, seed=6).get_batch(2, 2, n=20)


@pytest.fixture(scope="module")
def batch():
    return SyntheticDevice(plausible_device(2), seed=2).get_batch(2, 2, n=8)


class TestBatchLoss:
    def test_self_consistent_floor(self, big_batch):
        assert batch_loss(plausible_device(2), big_batch) <= 0.02

    def test_ideal_worse_than_truth(self, big_batch):
        assert batch_loss(ideal_params(2), big_batch) > batch_loss(plausible_device(2), big_batch)

    def test_single_circuit(self, big_batch):
        from noisebench.device import counts_to_distribution
        from noisebench.noisemodel import predict_distribution

        one = big_batch.subset([3])
        p = plausible_device(2)
        direct = hellinger(predict_distribution(one.circuits[0], p), counts_to_distribution(one.records[0]))
        assert batch_loss(p, one) == direct

    def test_thread_count_irrelevant(self, big_batch):
        p = plausible_device(2)
        assert batch_loss(p, big_batch, threads=1) == batch_loss(p, big_batch, threads=3)

    def test_kl_metric(self, big_batch):
        assert batch_loss(plausible_device(2), big_batch, metric="kl") >= 0


def quadratic(target):
    return lambda v: float(np.sum((v - target) ** 2))


class TestSpsa:
    def test_two_evaluations_per_epoch(self):
        calls = []

        def loss(v):
            calls.append(v.copy())
            return float(np.sum(v**2))

        rep = spsa_minimize(loss, np.ones(3), SpsaConfig(epochs=7, seed=1))
        assert len(calls) == 1 + 2 * 7 == rep.n_evaluations
        assert len(rep.loss_history) == 8

    def test_reaches_optimum(self):
        rng = np.random.default_rng(2)
        target = rng.normal(size=5)
        u = rng.normal(size=5)
        rep = spsa_minimize(quadratic(target), target + u / np.linalg.norm(u), SpsaConfig(epochs=500, a=0.1, seed=3))
        assert np.linalg.norm(rep.final - target) <= 0.05

    def test_start_at_optimum_stays_close(self):
        target = np.array([0.3, -0.2, 0.5, 0.1])
        cfg = SpsaConfig(epochs=200, a=0.1, seed=4)
        seen = []

        def loss(v):
            seen.append(np.abs(v - target).max())
            return quadratic(target)(v)

        spsa_minimize(loss, target, cfg)
        # the probes never move further than the first perturbation
        assert max(seen) <= cfg.c + 1e-12

    def test_deterministic(self):
        cfg = SpsaConfig(epochs=30, seed=7)
        a = spsa_minimize(quadratic(np.zeros(3)), np.ones(3), cfg)
        b = spsa_minimize(quadratic(np.zeros(3)), np.ones(3), cfg)
        assert a.loss_history == b.loss_history and np.array_equal(a.final, b.final)

    def test_more_epochs_better(self):
        medians = []
        for epochs in (50, 200, 500):
            finals = []
            for s in range(20):
                rng = np.random.default_rng(s)
                t = rng.normal(size=4)
                rep = spsa_minimize(quadratic(t), t + 1.0 / 2, SpsaConfig(epochs=epochs, a=0.1, seed=s))
                finals.append(quadratic(t)(rep.final))
            medians.append(np.median(finals))
        assert medians[0] > medians[1] > medians[2]

    def test_projection_respected(self):
        lo = 0.25

        def project(v):
            return np.maximum(v, lo)

        def loss(v):
            assert (v >= lo).all()
            return float(np.sum(v**2))

        rep = spsa_minimize(loss, np.full(3, 0.2), SpsaConfig(epochs=50, a=0.5, seed=1), project)
        assert (rep.final >= lo).all()
        assert rep.loss_history[0] == pytest.approx(3 * lo**2)

    def test_model_projection_respected(self):
        n = 2
        proj = make_projection(n)

        def loss(v):
            assert np.array_equal(proj(v), v)
            return float(np.sum(v**2))

        # start on the boundary so every other probe would leave the domain
        start = pack(ideal_params(n))
        spsa_minimize(loss, start, SpsaConfig(epochs=100, a=0.5, seed=2), proj)

    def test_non_finite_aborts_with_epoch(self):
        def loss(v):
            return float("nan") if v[0] < 0.9 else float(np.sum(v**2))

        with pytest.raises(NonFiniteLossError) as err:
            spsa_minimize(loss, np.ones(2), SpsaConfig(epochs=100, a=1.0, seed=0))
        assert err.value.epoch >= 1

    @pytest.mark.parametrize("kw", [dict(epochs=0), dict(a=0.0), dict(c=-1.0), dict(alpha=1.5), dict(gamma=0.0)])
    def test_config_validation(self, kw):
        with pytest.raises(ValueError):
            SpsaConfig(**kw)

    def test_stability_default(self):
        assert SpsaConfig(epochs=300).stability == 30.0
        assert SpsaConfig(epochs=300, A=5.0).stability == 5.0


class TestProjection:
    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-1e4, 1e7, allow_nan=False), min_size=21, max_size=21))
    def test_idempotent_and_feasible(self, values):
        proj = make_projection(2)
        v = proj(np.array(values))
        assert np.array_equal(proj(v), v)
        t1, t2 = v[13:17:2], v[14:17:2]
        assert ((t1 >= 1.0) & (t1 <= 1e6)).all()
        assert ((t2 > 0) & (t2 <= t1)).all()
        probs = np.concatenate([v[:9], v[17:]])
        assert ((probs >= 0) & (probs <= 1)).all()

    def test_phi_unconstrained(self):
        proj = make_projection(1)
        v = pack(uniform_params(1, phi=0.0))
        v[4:6] = [-7.0, 9.0]  # phi_x, phi_sx
        assert np.array_equal(proj(v)[4:6], [-7.0, 9.0])


class TestTrain:
    def test_one_epoch(self, batch):
        rep = train(batch, plausible_device(2).scaled(0.5), cfg=SpsaConfig(epochs=1, seed=0))
        assert rep.n_evaluations == 3
        assert len(rep.loss_history) == 2

    def test_report_json(self, batch):
        rep = train(batch, plausible_device(2).scaled(0.5), cfg=SpsaConfig(epochs=2, seed=0))
        obj = rep.to_json()
        assert set(obj) == {"config", "loss_history", "initial_params", "final_params", "seed"}
        assert obj["final_params"]["n"] == 2

    def test_zero_noise_stays_at_floor(self):
        truth = ideal_params(2)
        b = SyntheticDevice(truth, shots=8192, seed=5).get_batch(2, 2, n=10)
        # floor: mean loss of the truth against independent resamples at the same shots
        floor = np.mean([batch_loss(truth, run_synthetic(b.circuits, truth, shots=8192, seed=s)) for s in range(50)])
        rep = train(b, truth, cfg=SpsaConfig(seed=1))
        # history holds probe means at +-c_k, so judge the iterate itself
        assert batch_loss(rep.final_params, b) <= floor

    def test_parameters_stay_valid(self, batch):
        rep = train(batch, plausible_device(2).scaled(0.5), cfg=SpsaConfig(epochs=20, a=0.5, seed=3))
        p = rep.final_params
        assert all(t2 <= t1 for t1, t2 in zip(p.t1, p.t2))
