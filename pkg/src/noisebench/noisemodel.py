"""Trainable device noise model.

A model for an ``N``-qubit linear device has ``11N - 1`` scalar parameters.
The flat vector produced by :func:`pack` has this fixed layout::

    p_sp[q]                                  q = 0..N-1          (N)
    lambda_x[q], lambda_sx[q], lambda_rz[q]  q = 0..N-1          (3N)
    lambda_cx[q]                             pair (q, q+1)       (N-1)
    phi_x[q], phi_sx[q]                      q = 0..N-1          (2N)
    t1[q], t2[q]                             q = 0..N-1, in us   (2N)
    p01[q], p10[q]                           q = 0..N-1          (2N)

Within each block the qubit index is the outer loop.

Channel scheduling for a native circuit: state preparation on every
circuit qubit, then for each gate ``g`` on qubit(s) ``q``: the gate itself,
crosstalk ``Rx(phi_g(q))`` on the linear neighbours of ``q`` (``X`` and
``SX`` only), depolarization on the gate qubit(s) and single-qubit thermal
relaxation on each gate qubit.  Readout confusion is applied to the final
distribution.  Circuit qubit ``i`` is device qubit ``i``.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field, fields, replace
from typing import Any, Sequence

import numpy as np

from . import channels, densmat
from .channels import ReadoutConfusion
from .circuits import Circuit, Gate, GateKind, gate_matrix
from .densmat import OutcomeDistribution

_VECTOR_FIELDS = ("p_sp", "lam_x", "lam_sx", "lam_rz", "lam_cx", "phi_x", "phi_sx", "t1", "t2", "p01", "p10")
_PROB_FIELDS = ("p_sp", "lam_x", "lam_sx", "lam_rz", "lam_cx", "p01", "p10")


def n_params(n: int) -> int:
    return 11 * n - 1


@dataclass(frozen=True)
class GateTimes:
    """Gate durations in nanoseconds."""

    x: float = 35.0
    sx: float = 35.0
    rz: float = 0.0
    cx: float = 300.0

    def __post_init__(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"gate time {f.name} must be >= 0")

    def of(self, kind: GateKind) -> float:
        return {GateKind.X: self.x, GateKind.SX: self.sx, GateKind.RZ: self.rz, GateKind.CX: self.cx}[kind]

    def to_json(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "GateTimes":
        return cls(**{k: float(v) for k, v in obj.items()})


@dataclass(frozen=True)
class NoiseParams:
    n: int
    p_sp: tuple[float, ...]
    lam_x: tuple[float, ...]
    lam_sx: tuple[float, ...]
    lam_rz: tuple[float, ...]
    lam_cx: tuple[float, ...]
    phi_x: tuple[float, ...]
    phi_sx: tuple[float, ...]
    t1: tuple[float, ...]
    t2: tuple[float, ...]
    p01: tuple[float, ...]
    p10: tuple[float, ...]
    # False forces identity thermal channels (readout-only style models)
    thermal: bool = True

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"need n >= 1, got {self.n}")
        for name in _VECTOR_FIELDS:
            vals = tuple(float(v) for v in getattr(self, name))
            want = self.n - 1 if name == "lam_cx" else self.n
            if len(vals) != want:
                raise ValueError(f"{name} needs {want} values, got {len(vals)}")
            if not all(math.isfinite(v) for v in vals):
                raise ValueError(f"{name} contains non-finite values")
            object.__setattr__(self, name, vals)
        for name in _PROB_FIELDS:
            for v in getattr(self, name):
                if not 0.0 <= v <= 1.0:
                    raise ValueError(f"{name} entries must lie in [0, 1], got {v}")
        for a, b in zip(self.t1, self.t2):
            if not (a > 0 and 0 < b <= a):
                raise ValueError(f"need T1 > 0 and 0 < T2 <= T1, got T1={a}, T2={b}")

    def lam(self, kind: GateKind, q: int) -> float:
        return {
            GateKind.X: self.lam_x,
            GateKind.SX: self.lam_sx,
            GateKind.RZ: self.lam_rz,
            GateKind.CX: self.lam_cx,
        }[kind][q]

    def phi(self, kind: GateKind, q: int) -> float:
        return (self.phi_x if kind is GateKind.X else self.phi_sx)[q]

    def confusion(self, w: int | None = None) -> ReadoutConfusion:
        w = self.n if w is None else w
        return ReadoutConfusion(self.p01[:w], self.p10[:w])

    def scaled(self, factor: float) -> "NoiseParams":
        vals = {name: tuple(factor * v for v in getattr(self, name)) for name in _VECTOR_FIELDS}
        return replace(self, **vals)

    def to_json(self, times: GateTimes | None = None) -> dict[str, Any]:
        out: dict[str, Any] = {
            "n": self.n,
            "p_sp": list(self.p_sp),
            "lambda": {"x": list(self.lam_x), "sx": list(self.lam_sx), "rz": list(self.lam_rz), "cx": list(self.lam_cx)},
            "phi": {"x": list(self.phi_x), "sx": list(self.phi_sx)},
            "t1_us": list(self.t1),
            "t2_us": list(self.t2),
            "p01": list(self.p01),
            "p10": list(self.p10),
        }
        if not self.thermal:
            out["thermal"] = False
        if times is not None:
            out["gate_times_ns"] = times.to_json()
        return out

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "NoiseParams":
        try:
            lam, phi = obj["lambda"], obj["phi"]
            return cls(
                n=int(obj["n"]),
                p_sp=obj["p_sp"],
                lam_x=lam["x"],
                lam_sx=lam["sx"],
                lam_rz=lam["rz"],
                lam_cx=lam["cx"],
                phi_x=phi["x"],
                phi_sx=phi["sx"],
                t1=obj["t1_us"],
                t2=obj["t2_us"],
                p01=obj["p01"],
                p10=obj["p10"],
                thermal=bool(obj.get("thermal", True)),
            )
        except KeyError as exc:
            raise ValueError(f"params JSON is missing field {exc.args[0]!r}") from None


def gate_times_from_json(obj: dict[str, Any]) -> GateTimes | None:
    gt = obj.get("gate_times_ns")
    return None if gt is None else GateTimes.from_json(gt)


def pack(params: NoiseParams) -> np.ndarray:
    n = params.n
    out = list(params.p_sp)
    for q in range(n):
        out += [params.lam_x[q], params.lam_sx[q], params.lam_rz[q]]
    out += list(params.lam_cx)
    for q in range(n):
        out += [params.phi_x[q], params.phi_sx[q]]
    for q in range(n):
        out += [params.t1[q], params.t2[q]]
    for q in range(n):
        out += [params.p01[q], params.p10[q]]
    return np.array(out, dtype=float)


def unpack(vec: Sequence[float], n: int, thermal: bool = True) -> NoiseParams:
    """Inverse of :func:`pack`; clamps ``T2`` to at most ``T1``."""
    v = np.asarray(vec, dtype=float)
    if v.shape != (n_params(n),):
        raise ValueError(f"expected a vector of length {n_params(n)} for n={n}, got shape {v.shape}")
    pos = 0

    def take(k: int) -> np.ndarray:
        nonlocal pos
        chunk = v[pos : pos + k]
        pos += k
        return chunk

    p_sp = take(n)
    lam = take(3 * n).reshape(n, 3)
    lam_cx = take(n - 1)
    phi = take(2 * n).reshape(n, 2)
    t = take(2 * n).reshape(n, 2)
    ro = take(2 * n).reshape(n, 2)
    t1 = t[:, 0]
    t2 = np.minimum(t[:, 1], t1)
    return NoiseParams(
        n=n,
        p_sp=tuple(p_sp),
        lam_x=tuple(lam[:, 0]),
        lam_sx=tuple(lam[:, 1]),
        lam_rz=tuple(lam[:, 2]),
        lam_cx=tuple(lam_cx),
        phi_x=tuple(phi[:, 0]),
        phi_sx=tuple(phi[:, 1]),
        t1=tuple(t1),
        t2=tuple(t2),
        p01=tuple(ro[:, 0]),
        p10=tuple(ro[:, 1]),
        thermal=thermal,
    )


def uniform_params(
    n: int,
    *,
    p_sp: float = 0.0,
    lam_1q: float = 0.0,
    lam_cx: float = 0.0,
    phi: float = 0.0,
    t1: float = 100.0,
    t2: float = 100.0,
    p01: float = 0.0,
    p10: float = 0.0,
    thermal: bool = True,
) -> NoiseParams:
    """Same value on every qubit / pair."""
    return NoiseParams(
        n=n,
        p_sp=(p_sp,) * n,
        lam_x=(lam_1q,) * n,
        lam_sx=(lam_1q,) * n,
        lam_rz=(lam_1q,) * n,
        lam_cx=(lam_cx,) * (n - 1),
        phi_x=(phi,) * n,
        phi_sx=(phi,) * n,
        t1=(t1,) * n,
        t2=(t2,) * n,
        p01=(p01,) * n,
        p10=(p10,) * n,
        thermal=thermal,
    )


def ideal_params(n: int) -> NoiseParams:
    """No errors at all (thermal channels are identities)."""
    return uniform_params(n, thermal=False)


# Invented defaults for the synthetic device; not measured values.
PLAUSIBLE_DEVICE = dict(p_sp=0.005, lam_1q=0.0005, lam_cx=0.01, phi=0.02, t1=120.0, t2=90.0, p01=0.02, p10=0.025)


def plausible_device(n: int) -> NoiseParams:
    return uniform_params(n, **PLAUSIBLE_DEVICE)


def default_theta0(n: int) -> NoiseParams:
    """Training start point: the plausible-device preset scaled by 0.5."""
    return plausible_device(n).scaled(0.5)


def readout_only_params(p01: Sequence[float], p10: Sequence[float], n: int) -> NoiseParams:
    if len(p01) != n or len(p10) != n:
        raise ValueError(f"need {n} readout probabilities per direction, got {len(p01)} and {len(p10)}")
    base = uniform_params(n, thermal=False)
    return replace(base, p01=tuple(p01), p10=tuple(p10))


# --- channel programs -------------------------------------------------------


@dataclass(frozen=True)
class Step:
    """One operation of a channel program.

    ``kind`` is ``"unitary"``, ``"kraus"`` or ``"readout"``; ``label`` names
    the source (gate kind, or ``S``/``C``/``D``/``T``/``M`` for noise).
    """

    kind: str
    label: str
    targets: tuple[int, ...]
    operators: tuple[np.ndarray, ...] = ()
    superop: np.ndarray | None = field(default=None, repr=False, compare=False)
    confusion: ReadoutConfusion | None = None


@dataclass(frozen=True)
class ChannelProgram:
    width: int
    steps: tuple[Step, ...]

    def labels(self) -> list[tuple[str, tuple[int, ...]]]:
        return [(s.label, s.targets) for s in self.steps]


_GATE_CACHE: dict[GateKind, tuple[np.ndarray, np.ndarray]] = {}


def _gate_step(g: Gate) -> Step:
    label = g.kind.value.upper()
    if g.kind is GateKind.RZ:
        u = gate_matrix(g)
        # superoperator of a diagonal unitary is diagonal: u_a * conj(u_b)
        ph = np.exp(1j * g.theta)
        s = np.diag(np.array([1.0, ph.conjugate(), ph, 1.0], dtype=complex))
        return Step("unitary", label, g.qubits, (u,), s)
    if g.kind not in _GATE_CACHE:
        u = gate_matrix(g)
        s = densmat.superop([u])
        u.flags.writeable = s.flags.writeable = False
        _GATE_CACHE[g.kind] = (u, s)
    u, s = _GATE_CACHE[g.kind]
    return Step("unitary", label, g.qubits, (u,), s)


def schedule(circuit: Circuit, params: NoiseParams, times: GateTimes | None = None) -> ChannelProgram:
    times = GateTimes() if times is None else times
    w = circuit.width
    if w > params.n:
        raise ValueError(f"circuit width {w} exceeds device size {params.n}")
    steps: list[Step] = []
    for q in range(w):
        p = params.p_sp[q]
        steps.append(Step("kraus", "S", (q,), channels.state_prep_kraus(p), channels.state_prep_superop(p)))
    for g in circuit.gates:
        if g.kind not in (GateKind.X, GateKind.SX, GateKind.RZ, GateKind.CX):
            raise ValueError(f"non-native gate {g.kind.value} in circuit; transpile first")
        steps.append(_gate_step(g))
        if g.kind in (GateKind.X, GateKind.SX):
            q = g.qubits[0]
            phi = params.phi(g.kind, q)
            for nb in (q - 1, q + 1):
                if 0 <= nb < w:
                    steps.append(Step("unitary", "C", (nb,), channels.crosstalk_kraus(phi), channels.crosstalk_superop(phi)))
        if g.kind is GateKind.CX:
            pair = min(g.qubits)
            lam = params.lam_cx[pair]
            steps.append(Step("kraus", "D", g.qubits, channels.depolarizing_kraus(lam, 2), channels.depolarizing_superop(lam, 2)))
        else:
            q = g.qubits[0]
            lam = params.lam(g.kind, q)
            steps.append(Step("kraus", "D", g.qubits, channels.depolarizing_kraus(lam, 1), channels.depolarizing_superop(lam, 1)))
        tg_us = times.of(g.kind) * 1e-3 if params.thermal else 0.0
        for q in g.qubits:
            args = (params.t1[q], params.t2[q], tg_us)
            steps.append(Step("kraus", "T", (q,), channels.thermal_kraus(*args), channels.thermal_superop(*args)))
    steps.append(Step("readout", "M", tuple(range(w)), confusion=params.confusion(w)))
    return ChannelProgram(w, tuple(steps))


def execute(program: ChannelProgram) -> OutcomeDistribution:
    """Run a program on ``|0...0><0...0|``.

    Consecutive operations are fused before they reach the kernels: all
    single-qubit superoperators on a qubit since its last two-qubit
    operation are multiplied together, and so are consecutive two-qubit
    operations on the same pair.  Pending operations always act on
    disjoint qubits, so the application order among them is irrelevant.
    """
    w = program.width
    rho = densmat.init_state(w)
    single: dict[int, np.ndarray] = {}
    pairs: dict[tuple[int, ...], np.ndarray] = {}
    confusion = None

    def flush_single(q: int) -> None:
        s = single.pop(q, None)
        if s is not None:
            densmat.apply_superop(rho, s, (q,))

    def flush_pairs_touching(qs: tuple[int, ...], keep: tuple[int, ...] | None = None) -> None:
        for key in [k for k in pairs if k != keep and (k[0] in qs or k[1] in qs)]:
            densmat.apply_superop(rho, pairs.pop(key), key)

    for step in program.steps:
        if step.kind == "readout":
            confusion = step.confusion
            continue
        t = step.targets
        if len(t) == 1:
            q = t[0]
            flush_pairs_touching(t)
            prev = single.get(q)
            single[q] = step.superop if prev is None else step.superop @ prev
        else:
            for q in t:
                flush_single(q)
            flush_pairs_touching(t, keep=t)
            prev = pairs.get(t)
            pairs[t] = step.superop if prev is None else step.superop @ prev
    for q in list(single):
        flush_single(q)
    for key in list(pairs):
        densmat.apply_superop(rho, pairs.pop(key), key)

    dist = densmat.distribution(rho)
    if confusion is not None:
        dist = channels.apply_readout(dist, confusion)
    return dist


class _GateTables:
    """Fused per-gate superoperators for one ``(params, times, width)``.

    ``single[kind, q]`` is thermal @ depolarizing @ gate (``Rz`` stores the
    noise part only, to be combined with its angle), ``pair[q]`` is
    (thermal x thermal) @ depolarizing @ CNOT on ``(q, q+1)`` and
    ``crosstalk[kind, q]`` the neighbour rotation.
    """

    def __init__(self, params: NoiseParams, times: GateTimes, w: int):
        self.single: dict[tuple[GateKind, int], np.ndarray] = {}
        self.crosstalk: dict[tuple[GateKind, int], np.ndarray] = {}
        self.pair: dict[int, np.ndarray] = {}
        self.state_prep = [channels.state_prep_superop(params.p_sp[q]) for q in range(w)]
        scale = 1e-3 if params.thermal else 0.0

        def thermal(q: int, kind: GateKind) -> tuple:
            return (params.t1[q], params.t2[q], times.of(kind) * scale)

        for q in range(w):
            for kind in (GateKind.X, GateKind.SX, GateKind.RZ):
                noise = channels.thermal_superop(*thermal(q, kind)) @ channels.depolarizing_superop(params.lam(kind, q), 1)
                if kind is not GateKind.RZ:
                    noise = noise @ _gate_step(Gate(kind, (q,))).superop
                    self.crosstalk[kind, q] = channels.crosstalk_superop(params.phi(kind, q))
                self.single[kind, q] = noise
        for q in range(w - 1):
            tt = [np.kron(ka, kb) for ka in channels.thermal_kraus(*thermal(q, GateKind.CX))
                  for kb in channels.thermal_kraus(*thermal(q + 1, GateKind.CX))]
            cnot = _gate_step(Gate(GateKind.CX, (q, q + 1))).superop
            self.pair[q] = densmat.superop(tt) @ channels.depolarizing_superop(params.lam_cx[q], 2) @ cnot


@lru_cache(maxsize=16)
def _tables(params: NoiseParams, times: GateTimes, w: int) -> _GateTables:
    return _GateTables(params, times, w)


def _fast_distribution(circuit: Circuit, params: NoiseParams, times: GateTimes) -> OutcomeDistribution:
    w = circuit.width
    if w > params.n:
        raise ValueError(f"circuit width {w} exceeds device size {params.n}")
    tab = _tables(params, times, w)
    rho = densmat.init_state(w)
    single: dict[int, np.ndarray] = dict(enumerate(tab.state_prep))
    pairs: dict[int, np.ndarray] = {}  # keyed by lower qubit of (q, q+1)

    def touch(q: int) -> None:
        # apply any pending pair operation that involves qubit q
        for lo in (q - 1, q):
            s = pairs.pop(lo, None)
            if s is not None:
                densmat.apply_superop(rho, s, (lo, lo + 1))

    def push(q: int, s: np.ndarray) -> None:
        touch(q)
        prev = single.get(q)
        single[q] = s if prev is None else s @ prev

    for g in circuit.gates:
        kind = g.kind
        if kind is GateKind.CX:
            a, b = g.qubits
            if a > b:
                raise ValueError("CNOT control must be the lower qubit; transpile first")
            for q in (a, b):
                s = single.pop(q, None)
                if s is not None:
                    densmat.apply_superop(rho, s, (q,))
            for lo in (a - 1, b):
                s = pairs.pop(lo, None)
                if s is not None:
                    densmat.apply_superop(rho, s, (lo, lo + 1))
            prev = pairs.get(a)
            pairs[a] = tab.pair[a] if prev is None else tab.pair[a] @ prev
            continue
        q = g.qubits[0]
        if kind is GateKind.RZ:
            ph = np.exp(1j * g.theta)
            # noise @ diag(1, e^-i, e^i, 1): scale columns
            push(q, tab.single[kind, q] * np.array([1.0, ph.conjugate(), ph, 1.0]))
        elif kind in (GateKind.X, GateKind.SX):
            push(q, tab.single[kind, q])
            c = tab.crosstalk[kind, q]
            for nb in (q - 1, q + 1):
                if 0 <= nb < w:
                    push(nb, c)
        else:
            raise ValueError(f"non-native gate {kind.value} in circuit; transpile first")

    for q, s in single.items():
        densmat.apply_superop(rho, s, (q,))
    for lo, s in pairs.items():
        densmat.apply_superop(rho, s, (lo, lo + 1))
    dist = densmat.distribution(rho)
    return channels.apply_readout(dist, params.confusion(w))


def predict_distribution(circuit: Circuit, params: NoiseParams, times: GateTimes | None = None) -> OutcomeDistribution:
    """Exact model distribution (with readout error) for a native circuit.

    Equivalent to ``execute(schedule(circuit, params, times))`` but uses
    cached fused superoperators per gate.  Circuits with a CNOT controlled
    on the higher qubit (not produced by the transpiler) take the
    reference path.
    """
    times = GateTimes() if times is None else times
    if any(g.kind is GateKind.CX and g.qubits[0] > g.qubits[1] for g in circuit.gates):
        return execute(schedule(circuit, params, times))
    return _fast_distribution(circuit, params, times)


def predict_expval(circuit: Circuit, params: NoiseParams, times: GateTimes | None = None) -> float:
    return densmat.expval_zz(predict_distribution(circuit, params, times))
