"""Noise channel constructors.

Quantum channels are returned as lists of Kraus matrices.  Readout error is
classical and acts on an :class:`~noisebench.densmat.OutcomeDistribution`.
Durations passed to :func:`thermal_channel` only need to share a unit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import densmat
from .densmat import OutcomeDistribution

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, X, Y, Z)

_P0 = np.array([[1, 0], [0, 0]], dtype=complex)  # |0><0|
_LOWER = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|


def _check_prob(name: str, p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")
    return p


def state_prep_channel(p_sp: float) -> list[np.ndarray]:
    p = _check_prob("p_sp", p_sp)
    return [math.sqrt(1.0 - p) * I2, math.sqrt(p) * X]


def depolarizing_channel(lam: float, n: int = 1) -> list[np.ndarray]:
    """Uniform Pauli form of ``rho -> (1 - lam) rho + lam I / 2^n``."""
    lam = _check_prob("lambda", lam)
    if n not in (1, 2):
        raise ValueError(f"depolarizing channel supports n in {{1, 2}}, got {n}")
    d2 = 4**n
    out = []
    for idx, ps in enumerate(itertools.product(PAULIS, repeat=n)):
        op = ps[0] if n == 1 else np.kron(ps[0], ps[1])
        weight = 1.0 - (d2 - 1) * lam / d2 if idx == 0 else lam / d2
        out.append(math.sqrt(weight) * op)
    return out


def thermal_probabilities(t1: float, t2: float, tg: float) -> tuple[float, float, float]:
    """``(p_identity, p_z, p_reset)`` for relaxation during a gate of length ``tg``."""
    if not t1 > 0 or not t2 > 0:
        raise ValueError(f"T1 and T2 must be positive, got T1={t1}, T2={t2}")
    if t2 > t1:
        raise ValueError(f"T2 > T1 is not supported (T1={t1}, T2={t2})")
    if tg < 0:
        raise ValueError(f"gate time must be nonnegative, got {tg}")
    p_reset = -math.expm1(-tg / t1)
    p_z = (1.0 - p_reset) * (-math.expm1(-tg / t2 + tg / t1)) / 2.0
    return 1.0 - p_z - p_reset, p_z, p_reset


def thermal_channel(t1: float, t2: float, tg: float) -> list[np.ndarray]:
    p_i, p_z, p_reset = thermal_probabilities(t1, t2, tg)
    r = math.sqrt(p_reset)
    return [math.sqrt(p_i) * I2, math.sqrt(p_z) * Z, r * _P0, r * _LOWER]


def crosstalk_unitary(phi: float) -> np.ndarray:
    c, s = math.cos(phi / 2), math.sin(phi / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


@dataclass(frozen=True)
class ReadoutConfusion:
    p01: tuple[float, ...]
    p10: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "p01", tuple(_check_prob("p01", p) for p in self.p01))
        object.__setattr__(self, "p10", tuple(_check_prob("p10", p) for p in self.p10))
        if len(self.p01) != len(self.p10):
            raise ValueError("p01 and p10 must have the same length")

    @property
    def width(self) -> int:
        return len(self.p01)

    def matrix(self, q: int) -> np.ndarray:
        a, b = self.p01[q], self.p10[q]
        return np.array([[1 - a, b], [a, 1 - b]])


def apply_readout(dist: OutcomeDistribution, conf: ReadoutConfusion) -> OutcomeDistribution:
    """Apply the per-qubit confusion matrices one qubit at a time."""
    if conf.width != dist.width:
        raise ValueError(f"confusion covers {conf.width} qubits, distribution has {dist.width}")
    p = np.array(dist.probs, dtype=float)
    for q in range(dist.width):
        densmat.readout_sweep(p, conf.p01[q], conf.p10[q], q, dist.width)
    return OutcomeDistribution(dist.width, np.clip(p, 0.0, None))


# Caches keyed on the (hashable) channel parameters.  Cached arrays are
# read-only and shared between programs.


def _frozen(arrays):
    for a in arrays:
        a.flags.writeable = False
    return tuple(arrays)


@lru_cache(maxsize=4096)
def state_prep_kraus(p_sp: float) -> tuple[np.ndarray, ...]:
    return _frozen(state_prep_channel(p_sp))


@lru_cache(maxsize=4096)
def depolarizing_kraus(lam: float, n: int) -> tuple[np.ndarray, ...]:
    return _frozen(depolarizing_channel(lam, n))


@lru_cache(maxsize=4096)
def thermal_kraus(t1: float, t2: float, tg: float) -> tuple[np.ndarray, ...]:
    return _frozen(thermal_channel(t1, t2, tg))


@lru_cache(maxsize=4096)
def crosstalk_kraus(phi: float) -> tuple[np.ndarray, ...]:
    return _frozen([crosstalk_unitary(phi)])


@lru_cache(maxsize=4096)
def state_prep_superop(p_sp: float) -> np.ndarray:
    return _frozen([densmat.superop(state_prep_kraus(p_sp))])[0]


@lru_cache(maxsize=4096)
def depolarizing_superop(lam: float, n: int) -> np.ndarray:
    return _frozen([densmat.superop(depolarizing_kraus(lam, n))])[0]


@lru_cache(maxsize=4096)
def thermal_superop(t1: float, t2: float, tg: float) -> np.ndarray:
    return _frozen([densmat.superop(thermal_kraus(t1, t2, tg))])[0]


@lru_cache(maxsize=4096)
def crosstalk_superop(phi: float) -> np.ndarray:
    return _frozen([densmat.superop(crosstalk_kraus(phi))])[0]
