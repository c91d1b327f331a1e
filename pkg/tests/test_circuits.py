import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from noisebench.circuits import (
    Circuit,
    Gate,
    GateKind,
    circuit_unitary,
    cx,
    dump_circuits,
    efficient_su2,
    gate_matrix,
    load_circuits,
    n_angles,
    random_circuit_batch,
    rz,
    ry,
    sx,
    x,
)


def expected_gate_count(w, d):
    return math.ceil(d / 2) * 2 * w + (d // 2) * (w - 1)


class TestGate:
    def test_cnot_must_be_adjacent(self):
        with pytest.raises(ValueError):
            cx(0, 2)

    def test_distinct_qubits(self):
        with pytest.raises(ValueError):
            Gate(GateKind.CX, (1, 1))

    def test_rotation_needs_angle(self):
        with pytest.raises(ValueError):
            Gate(GateKind.RZ, (0,))

    def test_json_round_trip(self):
        for g in (x(0), sx(1), rz(2, 0.3), ry(0, -1.25), cx(1, 0)):
            assert Gate.from_json(g.to_json()) == g

    def test_qubit_outside_width(self):
        with pytest.raises(ValueError):
            Circuit(2, (x(2),))


class TestEfficientSU2:
    def test_three_layers_on_two_qubits(self):
        c = efficient_su2(2, 3, np.arange(8) * 0.1)
        kinds = [g.kind for g in c.gates]
        assert kinds.count(GateKind.RY) == 4 and kinds.count(GateKind.RZ) == 4
        assert kinds.count(GateKind.CX) == 1
        # rotation layer, entanglement layer, rotation layer
        assert kinds[:4] == [GateKind.RY, GateKind.RZ, GateKind.RY, GateKind.RZ]
        assert c.gates[4] == cx(0, 1)
        assert c.layer_tags == (1, 1, 1, 1, 2, 3, 3, 3, 3)

    def test_single_qubit_entangling_layer_is_empty(self):
        c = efficient_su2(1, 2, [0.4, 0.7])
        assert c.gates == (ry(0, 0.4), rz(0, 0.7))

    def test_w3_d5_has_22_gates(self):
        assert len(efficient_su2(3, 5, np.zeros(18)).gates) == 22

    def test_angle_count_mismatch(self):
        with pytest.raises(ValueError):
            efficient_su2(2, 3, np.zeros(7))

    def test_ry_precedes_rz_on_each_qubit(self):
        c = efficient_su2(3, 1, np.arange(6, dtype=float))
        assert [(g.kind, g.qubits[0], g.theta) for g in c.gates] == [
            (GateKind.RY, 0, 0.0), (GateKind.RZ, 0, 1.0),
            (GateKind.RY, 1, 2.0), (GateKind.RZ, 1, 3.0),
            (GateKind.RY, 2, 4.0), (GateKind.RZ, 2, 5.0),
        ]

    @settings(max_examples=30, deadline=None)
    @given(w=st.integers(1, 5), d=st.integers(1, 6))
    def test_gate_count_formula(self, w, d):
        c = efficient_su2(w, d, np.zeros(n_angles(w, d)))
        assert len(c.gates) == expected_gate_count(w, d)


class TestRandomBatch:
    def test_deterministic(self):
        a = random_circuit_batch(2, 3, 100, 42)
        b = random_circuit_batch(2, 3, 100, 42)
        assert a == b

    def test_seed_changes_angles(self):
        a = random_circuit_batch(2, 3, 100, 42)
        b = random_circuit_batch(2, 3, 100, 43)
        assert any(g1.theta != g2.theta for c1, c2 in zip(a, b) for g1, g2 in zip(c1.gates, c2.gates) if g1.theta is not None)

    def test_w5_d5_sizes(self):
        batch = random_circuit_batch(5, 5, 200, 7)
        assert len(batch) == 200
        assert all(len(c.gates) == 38 for c in batch)
        assert len({c.angle_seed for c in batch}) == 200

    def test_angles_in_period(self):
        for c in random_circuit_batch(3, 3, 50, 1):
            for g in c.gates:
                if g.theta is not None:
                    assert 0.0 <= g.theta < 2 * math.pi

    def test_needs_one_circuit(self):
        with pytest.raises(ValueError):
            random_circuit_batch(2, 2, 0, 1)


class TestMatrices:
    def test_rz_zero_is_identity(self):
        assert np.allclose(gate_matrix(rz(0, 0.0)), np.eye(2), atol=1e-15)

    def test_x(self):
        assert np.array_equal(gate_matrix(x(0)), np.array([[0, 1], [1, 0]]))

    def test_sx_squared_is_x_up_to_phase(self):
        s = gate_matrix(sx(0))
        prod = s @ s
        X = gate_matrix(x(0))
        k = np.argmax(np.abs(X))
        phase = prod.flat[k] / X.flat[k]
        assert np.abs(prod - phase * X).max() <= 1e-12

    def test_cnot_control_first(self):
        u = gate_matrix(cx(0, 1))
        assert u[3, 2] == 1 and u[2, 3] == 1 and u[1, 1] == 1

    @pytest.mark.parametrize("theta", [0.1, 1.3, -2.0, math.pi])
    def test_rotation_convention(self, theta):
        Y = np.array([[0, -1j], [1j, 0]])
        Zm = np.diag([1, -1])
        expm = lambda A: np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * A
        assert np.abs(gate_matrix(ry(0, theta)) - expm(Y)).max() < 1e-14
        assert np.abs(gate_matrix(rz(0, theta)) - expm(Zm)).max() < 1e-14

    def test_all_gates_unitary(self):
        rng = np.random.default_rng(0)
        for g in (x(0), sx(0), cx(0, 1), *(rz(0, t) for t in rng.uniform(0, 7, 5)), *(ry(0, t) for t in rng.uniform(0, 7, 5))):
            u = gate_matrix(g)
            assert np.abs(u.conj().T @ u - np.eye(len(u))).max() <= 1e-12

    def test_circuit_unitary_qubit_zero_is_msb(self):
        u = circuit_unitary(Circuit(2, (x(0),)))
        assert np.argmax(np.abs(u[:, 0])) == 2  # |00> -> |10>


class TestSerialisation:
    def test_round_trip_and_ids(self):
        batch = random_circuit_batch(3, 2, 5, 3)
        back = load_circuits(dump_circuits(batch))
        assert back == batch
        assert [c.circuit_id for c in back] == [c.circuit_id for c in batch]

    def test_id_changes_with_angle(self):
        a = Circuit(1, (rz(0, 0.5),))
        b = Circuit(1, (rz(0, 0.5000001),))
        assert a.circuit_id != b.circuit_id
