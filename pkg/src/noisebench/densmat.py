"""Dense density-matrix engine.

Basis index convention: qubit 0 is the most significant bit, so for
``w = 3`` the index of ``|q0 q1 q2>`` is ``4*q0 + 2*q1 + q2``.

Operators are applied through superoperators on the target qubits only,
never by building a full ``2^w x 2^w`` operator.  The inner loops live in
the compiled ``_kernels`` extension; when it is unavailable (or
``NOISEBENCH_BACKEND=python`` is set) the pure-numpy ``_kernels_py`` is
used instead.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

MAX_WIDTH = 12
UNITARY_TOL = 1e-8
COMPLETENESS_TOL = 1e-8
DIST_TOL = 1e-8

BACKENDS = {"python": _kernels_py}
if _kernels_c is not None:
    BACKENDS["compiled"] = _kernels_c


def _initial_backend():
    wanted = os.environ.get("NOISEBENCH_BACKEND", "").strip().lower()
    if wanted:
        if wanted not in BACKENDS:
            raise ImportError(f"NOISEBENCH_BACKEND={wanted!r} unavailable; have {sorted(BACKENDS)}")
        return BACKENDS[wanted]
    return _kernels_c if _kernels_c is not None else _kernels_py


_core = _initial_backend()


def backend_name() -> str:
    return _core.BACKEND_NAME


def use_backend(name: str) -> None:
    """Switch kernels at runtime (``"compiled"`` or ``"python"``)."""
    global _core
    if name not in BACKENDS:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {sorted(BACKENDS)}")
    _core = BACKENDS[name]


class SimulationError(RuntimeError):
    """Internal consistency failure (e.g. probabilities no longer sum to 1)."""


@dataclass
class DensityMatrix:
    width: int
    data: np.ndarray

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.width, self.data.copy())

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.data))


@dataclass(frozen=True)
class OutcomeDistribution:
    width: int
    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (2**self.width,):
            raise ValueError(f"expected {2**self.width} probabilities, got shape {p.shape}")
        object.__setattr__(self, "probs", p)

    def prob(self, bitstring: str) -> float:
        return float(self.probs[int(bitstring, 2)])


def check_width(w: int) -> None:
    if not 1 <= w <= MAX_WIDTH:
        raise ValueError(f"width must be in [1, {MAX_WIDTH}], got {w}")


def init_state(w: int) -> DensityMatrix:
    check_width(w)
    data = np.zeros((2**w, 2**w), dtype=complex)
    data[0, 0] = 1.0
    return DensityMatrix(w, data)


def superop(kraus: Sequence[np.ndarray]) -> np.ndarray:
    """``sum_i K_i (x) conj(K_i)``, acting on row-major vectorised blocks."""
    kraus = [np.asarray(k, dtype=complex) for k in kraus]
    return np.ascontiguousarray(sum(np.kron(k, k.conj()) for k in kraus))


def _check_targets(targets: Sequence[int], w: int, dim: int) -> tuple[int, ...]:
    targets = tuple(int(t) for t in targets)
    if len(set(targets)) != len(targets) or any(not 0 <= t < w for t in targets):
        raise ValueError(f"invalid targets {targets} for width {w}")
    if dim != 2 ** len(targets):
        raise ValueError(f"operator dimension {dim} does not match {len(targets)} target(s)")
    return targets


def apply_superop(rho: DensityMatrix, S: np.ndarray, targets: Sequence[int]) -> None:
    """In-place application of a 1- or 2-qubit superoperator (no validation)."""
    if len(targets) == 1:
        _core.apply_superop_1q(rho.data, S, targets[0], rho.width)
    elif len(targets) == 2:
        _core.apply_superop_2q(rho.data, S, targets[0], targets[1], rho.width)
    else:
        raise ValueError("only 1- and 2-qubit operators are supported")


def apply_unitary(rho: DensityMatrix, U: np.ndarray, targets: Sequence[int]) -> DensityMatrix:
    U = np.asarray(U, dtype=complex)
    targets = _check_targets(targets, rho.width, U.shape[0])
    dev = np.abs(U.conj().T @ U - np.eye(U.shape[0])).max()
    if dev > UNITARY_TOL:
        raise ValueError(f"operator is not unitary (max deviation {dev:.3e})")
    out = rho.copy()
    apply_superop(out, superop([U]), targets)
    return out


def completeness_residual(kraus: Sequence[np.ndarray]) -> float:
    dim = np.asarray(kraus[0]).shape[0]
    acc = sum(np.asarray(k).conj().T @ np.asarray(k) for k in kraus)
    return float(np.abs(acc - np.eye(dim)).max())


def apply_kraus(rho: DensityMatrix, kraus: Sequence[np.ndarray], targets: Sequence[int]) -> DensityMatrix:
    if not kraus:
        raise ValueError("empty Kraus list")
    targets = _check_targets(targets, rho.width, np.asarray(kraus[0]).shape[0])
    res = completeness_residual(kraus)
    if res > COMPLETENESS_TOL:
        raise ValueError(f"Kraus operators are not trace preserving (residual norm {res:.3e})")
    out = rho.copy()
    apply_superop(out, superop(kraus), targets)
    return out


def distribution(rho: DensityMatrix) -> OutcomeDistribution:
    p = np.clip(np.real(np.diagonal(rho.data)).copy(), 0.0, None)
    total = p.sum()
    if abs(total - 1.0) > DIST_TOL:
        raise SimulationError(f"outcome probabilities sum to {total!r}")
    return OutcomeDistribution(rho.width, p / total)


def parity_signs(w: int) -> np.ndarray:
    """``(-1)^popcount(b)`` for every basis index ``b``."""
    signs = np.ones(1)
    for _ in range(w):
        signs = np.concatenate([signs, -signs])
    return signs


def expval_zz(dist: OutcomeDistribution) -> float:
    return float(parity_signs(dist.width) @ dist.probs)


def readout_sweep(probs: np.ndarray, p01: float, p10: float, q: int, w: int) -> None:
    _core.readout_sweep(probs, float(p01), float(p10), int(q), int(w))
