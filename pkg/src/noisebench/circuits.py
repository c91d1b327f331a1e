"""Circuit representation and EfficientSU2-style circuit generation.

Qubits are laid out on a line; two-qubit gates may only act on adjacent
qubits.  Rotations follow ``R_a(theta) = exp(-i theta/2 a)`` for every
Pauli axis ``a``.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .seeding import derive_seed, make_rng

TWO_PI = 2.0 * math.pi


class GateKind(str, enum.Enum):
    X = "x"
    SX = "sx"
    RZ = "rz"
    RY = "ry"
    CX = "cx"

    @property
    def n_qubits(self) -> int:
        return 2 if self is GateKind.CX else 1

    @property
    def parametric(self) -> bool:
        return self in (GateKind.RZ, GateKind.RY)


NATIVE_KINDS = frozenset({GateKind.X, GateKind.SX, GateKind.RZ, GateKind.CX})


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple[int, ...]
    theta: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != self.kind.n_qubits:
            raise ValueError(f"{self.kind.value} acts on {self.kind.n_qubits} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"repeated qubit in {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise ValueError(f"negative qubit index in {self.qubits}")
        if self.kind is GateKind.CX and abs(self.qubits[0] - self.qubits[1]) != 1:
            raise ValueError(f"CNOT on non-adjacent qubits {self.qubits}")
        if self.kind.parametric:
            if self.theta is None or not math.isfinite(self.theta):
                raise ValueError(f"{self.kind.value} needs a finite angle")
            object.__setattr__(self, "theta", float(self.theta))
        elif self.theta is not None:
            raise ValueError(f"{self.kind.value} takes no angle")

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind.value, "qubits": list(self.qubits)}
        if self.theta is not None:
            out["theta"] = self.theta
        return out

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "Gate":
        return cls(GateKind(obj["kind"]), tuple(obj["qubits"]), obj.get("theta"))


def x(q: int) -> Gate:
    return Gate(GateKind.X, (q,))


def sx(q: int) -> Gate:
    return Gate(GateKind.SX, (q,))


def rz(q: int, theta: float) -> Gate:
    return Gate(GateKind.RZ, (q,), theta)


def ry(q: int, theta: float) -> Gate:
    return Gate(GateKind.RY, (q,), theta)


def cx(control: int, target: int) -> Gate:
    return Gate(GateKind.CX, (control, target))


@dataclass(frozen=True)
class Circuit:
    width: int
    gates: tuple[Gate, ...] = ()
    layer_tags: tuple[int, ...] | None = None
    angle_seed: int | None = None
    _id: str = field(default="", init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.width < 1:
            raise ValueError(f"width must be >= 1, got {self.width}")
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if max(g.qubits) >= self.width:
                raise ValueError(f"gate {g} outside width {self.width}")
        if self.layer_tags is not None:
            object.__setattr__(self, "layer_tags", tuple(self.layer_tags))
            if len(self.layer_tags) != len(self.gates):
                raise ValueError("layer_tags must align with gates")

    @property
    def is_native(self) -> bool:
        return all(g.kind in NATIVE_KINDS for g in self.gates)

    def count(self, kind: GateKind) -> int:
        return sum(1 for g in self.gates if g.kind is kind)

    def __len__(self) -> int:
        return len(self.gates)

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"width": self.width, "gates": [g.to_json() for g in self.gates]}
        if self.layer_tags is not None:
            out["layer_tags"] = list(self.layer_tags)
        if self.angle_seed is not None:
            out["angle_seed"] = self.angle_seed
        return out

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "Circuit":
        return cls(
            width=int(obj["width"]),
            gates=tuple(Gate.from_json(g) for g in obj["gates"]),
            layer_tags=obj.get("layer_tags"),
            angle_seed=obj.get("angle_seed"),
        )

    @property
    def circuit_id(self) -> str:
        """Stable content hash of the width and gate list (angles bit-exact)."""
        if not self._id:
            payload = json.dumps(
                {"width": self.width, "gates": [g.to_json() for g in self.gates]},
                sort_keys=True,
                separators=(",", ":"),
            )
            object.__setattr__(self, "_id", hashlib.sha256(payload.encode()).hexdigest()[:16])
        return self._id


def n_rotation_layers(d: int) -> int:
    return (d + 1) // 2


def n_angles(w: int, d: int) -> int:
    return n_rotation_layers(d) * 2 * w


def efficient_su2(w: int, d: int, angles: Sequence[float], angle_seed: int | None = None) -> Circuit:
    """Alternating rotation/entanglement layers, starting with rotations.

    Odd layers (1, 3, ...) apply ``Ry`` then ``Rz`` on every qubit; even
    layers apply ``CNOT(q, q+1)`` for ascending ``q``.  ``angles`` is consumed
    in order: per rotation layer, per qubit, the ``Ry`` angle then the ``Rz``
    angle.
    """
    if w < 1 or d < 1:
        raise ValueError(f"need w >= 1 and d >= 1, got w={w}, d={d}")
    angles = [float(a) for a in angles]
    expected = n_angles(w, d)
    if len(angles) != expected:
        raise ValueError(f"expected {expected} angles for w={w}, d={d}, got {len(angles)}")

    gates: list[Gate] = []
    tags: list[int] = []
    it = iter(angles)
    for layer in range(1, d + 1):
        if layer % 2 == 1:
            for q in range(w):
                gates.append(ry(q, next(it)))
                gates.append(rz(q, next(it)))
                tags += [layer, layer]
        else:
            for q in range(w - 1):
                gates.append(cx(q, q + 1))
                tags.append(layer)
    return Circuit(w, tuple(gates), tuple(tags), angle_seed)


def random_circuit_batch(w: int, d: int, n: int, seed: int) -> list[Circuit]:
    """``n`` EfficientSU2 circuits with i.i.d. uniform angles on [0, 2pi).

    Circuit ``i`` draws its angles from its own stream seeded with
    ``derive_seed(seed, i)``; that sub-seed is kept as ``angle_seed``.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    out = []
    for i in range(n):
        sub = derive_seed(seed, i)
        angles = make_rng(sub).random(n_angles(w, d)) * TWO_PI
        out.append(efficient_su2(w, d, angles.tolist(), angle_seed=sub))
    return out


_X = np.array([[0, 1], [1, 0]], dtype=complex)
_SX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex)
_CX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def rz_matrix(theta: float) -> np.ndarray:
    e = np.exp(-0.5j * theta)
    return np.array([[e, 0], [0, e.conjugate()]], dtype=complex)


def ry_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def gate_matrix(g: Gate) -> np.ndarray:
    """Unitary of ``g`` on its own qubits (first listed qubit = high bit)."""
    if g.kind is GateKind.X:
        return _X.copy()
    if g.kind is GateKind.SX:
        return _SX.copy()
    if g.kind is GateKind.RZ:
        return rz_matrix(g.theta)
    if g.kind is GateKind.RY:
        return ry_matrix(g.theta)
    return _CX.copy()


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """Dense ``2^w x 2^w`` unitary by direct multiplication (small widths only)."""
    w = circuit.width
    u = np.eye(2**w, dtype=complex).reshape((2,) * (2 * w))
    for g in circuit.gates:
        m = gate_matrix(g).reshape((2,) * (2 * len(g.qubits)))
        k = len(g.qubits)
        u = np.tensordot(m, u, axes=(list(range(k, 2 * k)), list(g.qubits)))
        u = np.moveaxis(u, list(range(k)), list(g.qubits))
    return u.reshape(2**w, 2**w)


def load_circuits(obj: Any) -> list[Circuit]:
    if isinstance(obj, dict) and "circuits" in obj:
        obj = obj["circuits"]
    return [Circuit.from_json(c) for c in obj]


def dump_circuits(circuits: Iterable[Circuit]) -> dict[str, Any]:
    return {"circuits": [c.to_json() for c in circuits]}
