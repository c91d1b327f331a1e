"""Compilation to the native gate set {X, SX, Rz, CNOT}.

``Ry(t)`` is rewritten (in time order) as ``Rz(0) SX Rz(t + pi) SX Rz(pi)``,
which equals ``Ry(t)`` up to a global phase.  CNOTs whose control is the
higher-index qubit are flipped with Hadamards so every output CNOT has its
control on the lower index.

The optional peephole pass repeats until nothing changes:

* rotations with angle (mod 2pi) within ``angle_epsilon`` of 0 are dropped,
* Rz gates adjacent on a qubit are merged, angles reduced mod 2pi,
* two identical CNOTs with nothing in between on either qubit cancel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .circuits import TWO_PI, Circuit, Gate, GateKind, circuit_unitary, cx, rz, sx

# Euler pattern for Ry(theta): angles of the three Rz gates as (offset) added to
# (multiplier * theta).  Frozen by tests/test_transpiler.py::test_ry_pattern_constants.
RY_PATTERN = ((0.0, 0.0), (math.pi, 1.0), (math.pi, 0.0))

MAX_ORACLE_WIDTH = 6
EQUIV_TOL = 1e-9


@dataclass(frozen=True)
class TranspileOptions:
    optimize: Literal["none", "peephole"] = "peephole"
    angle_epsilon: float = 1e-12

    def __post_init__(self) -> None:
        if self.optimize not in ("none", "peephole"):
            raise ValueError(f"unknown optimize mode {self.optimize!r}")
        if self.angle_epsilon < 0:
            raise ValueError("angle_epsilon must be >= 0")


def _negligible(theta: float, eps: float) -> bool:
    t = theta % TWO_PI
    return t <= eps or TWO_PI - t <= eps


def _hadamard(q: int) -> list[Gate]:
    return [rz(q, math.pi / 2), sx(q), rz(q, math.pi / 2)]


def _lower(g: Gate, opts: TranspileOptions) -> list[Gate]:
    if g.kind is GateKind.RY:
        if opts.optimize == "peephole" and _negligible(g.theta, opts.angle_epsilon):
            return []
        q = g.qubits[0]
        (a0, a1), (b0, b1), (c0, c1) = RY_PATTERN
        return [rz(q, a0 + a1 * g.theta), sx(q), rz(q, b0 + b1 * g.theta), sx(q), rz(q, c0 + c1 * g.theta)]
    if g.kind is GateKind.CX and g.qubits[0] > g.qubits[1]:
        c, t = g.qubits
        return _hadamard(c) + _hadamard(t) + [cx(t, c)] + _hadamard(c) + _hadamard(t)
    if g.kind in (GateKind.X, GateKind.SX, GateKind.RZ, GateKind.CX):
        return [g]
    raise ValueError(f"unsupported gate kind {g.kind!r}")


def _peephole_pass(gates: list[Gate], eps: float) -> tuple[list[Gate], bool]:
    out: list[Gate | None] = []
    # index into ``out`` of the last gate on each qubit; None = unknown this pass
    last: dict[int, int | None] = {}
    changed = False
    for g in gates:
        if g.kind is GateKind.RZ:
            q = g.qubits[0]
            theta = g.theta % TWO_PI
            if _negligible(theta, eps):
                changed = True
                continue
            j = last.get(q)
            prev = out[j] if j is not None else None
            if prev is not None and prev.kind is GateKind.RZ:
                changed = True
                merged = (prev.theta + theta) % TWO_PI
                if _negligible(merged, eps):
                    out[j] = None
                    last[q] = None
                else:
                    out[j] = rz(q, merged)
                continue
            if theta != g.theta:
                g = rz(q, theta)
        elif g.kind is GateKind.CX:
            a, b = g.qubits
            ja, jb = last.get(a), last.get(b)
            if ja is not None and ja == jb and out[ja] == g:
                out[ja] = None
                last[a] = last[b] = None
                changed = True
                continue
        out.append(g)
        for q in g.qubits:
            last[q] = len(out) - 1
    return [g for g in out if g is not None], changed


def transpile(circuit: Circuit, opts: TranspileOptions | None = None) -> Circuit:
    opts = TranspileOptions() if opts is None else opts
    gates: list[Gate] = []
    for g in circuit.gates:
        gates.extend(_lower(g, opts))
    if opts.optimize == "peephole":
        changed = True
        while changed:
            gates, changed = _peephole_pass(gates, opts.angle_epsilon)
    return Circuit(circuit.width, tuple(gates), angle_seed=circuit.angle_seed)


def equivalent_up_to_phase(c1: Circuit, c2: Circuit, tol: float = EQUIV_TOL) -> tuple[bool, float]:
    """Compare dense unitaries up to a global phase.

    The phase is fixed from the largest-magnitude entry of the second
    unitary; returns ``(deviation <= tol, deviation)``.
    """
    if c1.width != c2.width:
        raise ValueError(f"width mismatch: {c1.width} vs {c2.width}")
    if c1.width > MAX_ORACLE_WIDTH:
        raise ValueError(f"dense comparison limited to width <= {MAX_ORACLE_WIDTH}")
    u1, u2 = circuit_unitary(c1), circuit_unitary(c2)
    k = np.unravel_index(np.abs(u2).argmax(), u2.shape)
    ratio = u1[k] / u2[k]
    phase = ratio / abs(ratio) if abs(ratio) > 0 else 1.0
    dev = float(np.abs(u1 - phase * u2).max())
    return dev <= tol, dev
