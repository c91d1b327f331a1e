import math

import numpy as np
import pytest

from noisebench.channels import (
    PAULIS,
    ReadoutConfusion,
    X,
    Z,
    apply_readout,
    crosstalk_unitary,
    depolarizing_channel,
    state_prep_channel,
    thermal_channel,
    thermal_probabilities,
)
from noisebench.densmat import DensityMatrix, OutcomeDistribution, apply_kraus, completeness_residual, init_state
from oracles import choi, readout_matrix

PLUS = np.full((2, 2), 0.5, dtype=complex)
ONE = np.diag([0.0, 1.0]).astype(complex)


def kraus_map(kraus, rho):
    return sum(k @ rho @ k.conj().T for k in kraus)


def random_rho(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = a @ a.conj().T
    return m / np.trace(m)


class TestStatePrep:
    def test_zero_is_identity(self):
        rng = np.random.default_rng(0)
        rho = random_rho(rng, 2)
        assert np.allclose(kraus_map(state_prep_channel(0.0), rho), rho)

    def test_one_flips(self):
        assert np.allclose(kraus_map(state_prep_channel(1.0), init_state(1).data), ONE)

    def test_quarter(self):
        out = kraus_map(state_prep_channel(0.25), init_state(1).data)
        assert np.allclose(out, np.diag([0.75, 0.25]), atol=1e-15)

    @pytest.mark.parametrize("p", [-0.1, 1.1])
    def test_range(self, p):
        with pytest.raises(ValueError):
            state_prep_channel(p)


class TestDepolarizing:
    def test_zero_is_identity(self):
        rng = np.random.default_rng(1)
        rho = random_rho(rng, 4)
        assert np.allclose(kraus_map(depolarizing_channel(0.0, 2), rho), rho)

    def test_full_gives_mixed(self):
        rng = np.random.default_rng(2)
        out = kraus_map(depolarizing_channel(1.0, 1), random_rho(rng, 2))
        assert np.abs(out - np.eye(2) / 2).max() < 1e-14

    def test_plus_state_coherence(self):
        out = kraus_map(depolarizing_channel(0.1, 1), PLUS)
        assert out[0, 1].real == pytest.approx(0.45, abs=1e-15)

    @pytest.mark.parametrize("n", [1, 2])
    def test_matches_convex_form(self, n):
        rng = np.random.default_rng(10 + n)
        D = 2**n
        for lam in rng.uniform(0, 1, 10):
            rho = random_rho(rng, D)
            direct = (1 - lam) * rho + lam / D * np.eye(D)
            assert np.abs(kraus_map(depolarizing_channel(lam, n), rho) - direct).max() <= 1e-12

    def test_operator_count_and_weights(self):
        ks = depolarizing_channel(0.2, 2)
        assert len(ks) == 16
        w = [abs(k[np.nonzero(k)][0]) ** 2 for k in ks]
        assert w[0] == pytest.approx(1 - 15 * 0.2 / 16)
        assert all(v == pytest.approx(0.2 / 16) for v in w[1:])

    def test_bad_arity(self):
        with pytest.raises(ValueError):
            depolarizing_channel(0.1, 3)


class TestThermal:
    def test_zero_duration_is_identity(self):
        assert thermal_probabilities(50.0, 30.0, 0.0) == (1.0, 0.0, 0.0)
        ks = thermal_channel(50.0, 30.0, 0.0)
        rng = np.random.default_rng(3)
        rho = random_rho(rng, 2)
        assert np.allclose(kraus_map(ks, rho), rho)

    def test_ground_state_fixed(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            t1 = rng.uniform(1, 300)
            t2 = t1 * rng.uniform(0.01, 1)
            out = kraus_map(thermal_channel(t1, t2, rng.uniform(0, 500)), init_state(1).data)
            assert np.abs(out - init_state(1).data).max() <= 1e-15

    def test_half_life(self):
        t1, t2 = 100.0, 50.0
        tg = 100.0 * math.log(2)
        p_i, p_z, p_r = thermal_probabilities(t1, t2, tg)
        assert p_r == pytest.approx(0.5, abs=1e-15)
        assert p_z == pytest.approx(0.5 * (1 - math.exp(-tg / t2 + tg / t1)) / 2, abs=1e-15)
        out = kraus_map(thermal_channel(t1, t2, tg), ONE)
        assert out[1, 1].real == pytest.approx(1 - p_r, abs=1e-15)
        assert out[0, 0].real == pytest.approx(p_r, abs=1e-15)

    def test_coherence_decay(self):
        # off-diagonal decays like exp(-tg/T2) for the standard relaxation model
        t1, t2, tg = 80.0, 40.0, 7.0
        out = kraus_map(thermal_channel(t1, t2, tg), PLUS)
        assert abs(out[0, 1]) == pytest.approx(0.5 * math.exp(-tg / t2), rel=1e-12)

    @pytest.mark.parametrize("args", [(0.0, 1.0, 1.0), (1.0, -1.0, 1.0), (50.0, 60.0, 1.0), (50.0, 40.0, -1.0)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            thermal_channel(*args)


class TestCrosstalk:
    def test_zero(self):
        assert np.allclose(crosstalk_unitary(0.0), np.eye(2))

    def test_pi_is_x_up_to_phase(self):
        assert np.allclose(crosstalk_unitary(math.pi), -1j * X, atol=1e-15)

    def test_half_pi_population(self):
        u = crosstalk_unitary(math.pi / 2)
        assert abs(u[1, 0]) ** 2 == pytest.approx(0.5, abs=1e-15)


def _random_channels(rng):
    for _ in range(100):
        yield "state_prep", state_prep_channel(rng.uniform())
        yield "depol1", depolarizing_channel(rng.uniform(), 1)
        yield "depol2", depolarizing_channel(rng.uniform(), 2)
        t1 = rng.uniform(1, 500)
        yield "thermal", thermal_channel(t1, t1 * rng.uniform(0.001, 1), rng.uniform(0, 1000))
        yield "crosstalk", [crosstalk_unitary(rng.uniform(-10, 10))]


class TestCptp:
    def test_completeness_and_choi(self):
        for name, ks in _random_channels(np.random.default_rng(5)):
            assert completeness_residual(ks) <= 1e-10, name
            assert np.linalg.eigvalsh(choi(ks)).min() >= -1e-8, name

    def test_trace_preserved_on_random_states(self):
        rng = np.random.default_rng(6)
        kinds = [state_prep_channel(0.3), depolarizing_channel(0.4, 1), thermal_channel(30.0, 10.0, 5.0), [crosstalk_unitary(0.7)]]
        for _ in range(250):
            rho = DensityMatrix(1, random_rho(rng, 2))
            for ks in kinds:
                assert abs(apply_kraus(rho, ks, [0]).trace - 1) <= 1e-10


class TestReadout:
    def test_zero_confusion(self):
        d = OutcomeDistribution(2, np.array([0.1, 0.2, 0.3, 0.4]))
        out = apply_readout(d, ReadoutConfusion((0.0, 0.0), (0.0, 0.0)))
        assert np.array_equal(out.probs, d.probs)

    def test_single_qubit(self):
        out = apply_readout(OutcomeDistribution(1, np.array([1.0, 0.0])), ReadoutConfusion((0.3,), (0.0,)))
        assert np.allclose(out.probs, [0.7, 0.3], atol=1e-15)

    def test_two_qubits(self):
        out = apply_readout(OutcomeDistribution(2, np.array([1.0, 0, 0, 0])), ReadoutConfusion((0.1, 0.2), (0.0, 0.0)))
        assert np.allclose(out.probs, [0.72, 0.18, 0.08, 0.02], atol=1e-15)

    def test_matches_tensor_product(self):
        rng = np.random.default_rng(7)
        for w in (1, 2, 3, 4):
            p01, p10 = rng.uniform(0, 0.5, w), rng.uniform(0, 0.5, w)
            d = OutcomeDistribution(w, rng.dirichlet(np.ones(2**w)))
            out = apply_readout(d, ReadoutConfusion(tuple(p01), tuple(p10)))
            assert np.abs(out.probs - readout_matrix(p01, p10) @ d.probs).max() < 1e-15
            assert out.probs.min() >= 0 and abs(out.probs.sum() - 1) <= 1e-12

    def test_width_mismatch(self):
        with pytest.raises(ValueError):
            apply_readout(OutcomeDistribution(1, np.array([1.0, 0.0])), ReadoutConfusion((0.1, 0.1), (0.0, 0.0)))

    def test_probability_range(self):
        with pytest.raises(ValueError):
            ReadoutConfusion((1.5,), (0.0,))


def test_pauli_constants():
    assert np.allclose(PAULIS[1] @ PAULIS[2], 1j * PAULIS[3])
    assert np.array_equal(Z, np.diag([1, -1]))
