"""Distribution losses and SPSA training of noise-model parameters."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np

from .device import ExperimentBatch, counts_to_distribution
from .densmat import OutcomeDistribution
from .noisemodel import GateTimes, NoiseParams, n_params, pack, predict_distribution, unpack
from .parallel import parallel_map
from .seeding import make_rng

KL_EPSILON = 1e-9
T1_BOUNDS_US = (1.0, 1e6)
T2_FLOOR_US = 1e-3


def _as_probs(p) -> np.ndarray:
    return np.asarray(p.probs if isinstance(p, OutcomeDistribution) else p, dtype=float)


def _check_pair(p: np.ndarray, q: np.ndarray) -> None:
    if p.shape != q.shape:
        raise ValueError(f"distribution sizes differ: {p.shape} vs {q.shape}")
    if (p < 0).any() or (q < 0).any():
        raise ValueError("distributions must be nonnegative")


def hellinger(P, Q) -> float:
    p, q = _as_probs(P), _as_probs(Q)
    _check_pair(p, q)
    h = math.sqrt(float(np.sum((np.sqrt(p) - np.sqrt(q)) ** 2))) / math.sqrt(2.0)
    return min(h, 1.0)


def kl_divergence(P, Q, epsilon: float = KL_EPSILON) -> float:
    """``sum p log(p/q)`` with ``Q`` clamped below at ``epsilon`` and renormalised."""
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    p, q = _as_probs(P), _as_probs(Q)
    _check_pair(p, q)
    q = np.maximum(q, epsilon)
    q = q / q.sum()
    mask = p > 0
    return max(float(np.sum(p[mask] * np.log(p[mask] / q[mask]))), 0.0)


METRICS: dict[str, Callable] = {"hellinger": hellinger, "kl": kl_divergence}


def _as_batches(batch) -> list[ExperimentBatch]:
    return [batch] if isinstance(batch, ExperimentBatch) else list(batch)


def batch_loss(
    params: NoiseParams,
    batch: ExperimentBatch | Sequence[ExperimentBatch],
    times: GateTimes | None = None,
    metric: Literal["hellinger", "kl"] = "hellinger",
    threads: int = 1,
) -> float:
    """Mean per-circuit distance between model and measured distributions."""
    fn = METRICS[metric]
    pairs = [(c, r) for b in _as_batches(batch) for c, r in zip(b.circuits, b.records)]
    if not pairs:
        raise ValueError("empty batch")

    def one(pair) -> float:
        c, r = pair
        return fn(predict_distribution(c, params, times), counts_to_distribution(r, c.width))

    values = parallel_map(one, pairs, threads)
    return math.fsum(values) / len(values)


@dataclass(frozen=True)
class SpsaConfig:
    epochs: int = 500
    a: float = 0.02
    c: float = 0.005
    alpha: float = 0.602
    gamma: float = 0.101
    A: float | None = None  # None -> 0.1 * epochs
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.a <= 0 or self.c <= 0:
            raise ValueError("a and c must be > 0")
        if not (0 < self.alpha <= 1 and 0 < self.gamma <= 1):
            raise ValueError("alpha and gamma must lie in (0, 1]")

    @property
    def stability(self) -> float:
        return 0.1 * self.epochs if self.A is None else self.A

    def to_json(self) -> dict:
        out = asdict(self)
        out["A"] = self.stability
        return out


@dataclass
class TrainReport:
    loss_history: list[float]
    initial: np.ndarray
    final: np.ndarray
    config: SpsaConfig
    wall_time: float = 0.0
    n_evaluations: int = 0
    initial_params: NoiseParams | None = None
    final_params: NoiseParams | None = None

    def to_json(self) -> dict:
        return {
            "config": self.config.to_json(),
            "loss_history": list(self.loss_history),
            "initial_params": self.initial_params.to_json() if self.initial_params else list(self.initial),
            "final_params": self.final_params.to_json() if self.final_params else list(self.final),
            "seed": self.config.seed,
        }


class NonFiniteLossError(FloatingPointError):
    def __init__(self, epoch: int, value: float):
        super().__init__(f"loss became non-finite ({value!r}) at epoch {epoch}")
        self.epoch = epoch


def spsa_minimize(
    loss: Callable[[np.ndarray], float],
    theta0: Sequence[float],
    cfg: SpsaConfig,
    project: Callable[[np.ndarray], np.ndarray] | None = None,
) -> TrainReport:
    """Minimise ``loss`` with simultaneous-perturbation gradient estimates.

    Epoch ``k`` (0-based) uses step ``a / (A + k + 1)**alpha`` and
    perturbation ``c / (k + 1)**gamma`` with Rademacher directions.  Both
    perturbed points are projected before evaluation.

    Exactly one evaluation happens at the start and two per epoch.
    ``loss_history[0]`` is the loss at the projected start point and
    ``loss_history[k + 1]`` the mean of the two probes of epoch ``k``, which
    straddle the iterate before that epoch's update.
    """
    project = (lambda v: v) if project is None else project
    rng = make_rng(cfg.seed)
    theta = project(np.array(theta0, dtype=float))
    start = time.perf_counter()

    def evaluate(v: np.ndarray, epoch: int) -> float:
        val = float(loss(v))
        if not math.isfinite(val):
            raise NonFiniteLossError(epoch, val)
        return val

    history = [evaluate(theta, 0)]
    n_eval = 1
    A = cfg.stability
    for k in range(cfg.epochs):
        ak = cfg.a / (A + k + 1) ** cfg.alpha
        ck = cfg.c / (k + 1) ** cfg.gamma
        delta = rng.integers(0, 2, size=theta.shape) * 2.0 - 1.0
        plus = evaluate(project(theta + ck * delta), k + 1)
        minus = evaluate(project(theta - ck * delta), k + 1)
        n_eval += 2
        ghat = (plus - minus) / (2.0 * ck * delta)
        theta = project(theta - ak * ghat)
        history.append(0.5 * (plus + minus))
    return TrainReport(history, np.array(theta0, dtype=float), theta, cfg, time.perf_counter() - start, n_eval)


def _layout_masks(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Boolean masks over the packed vector: probabilities, T1 entries, T2 entries."""
    size = n_params(n)
    prob = np.zeros(size, bool)
    t1 = np.zeros(size, bool)
    t2 = np.zeros(size, bool)
    prob[: n + 3 * n + (n - 1)] = True
    t_start = n + 3 * n + (n - 1) + 2 * n
    t1[t_start : t_start + 2 * n : 2] = True
    t2[t_start + 1 : t_start + 2 * n : 2] = True
    prob[t_start + 2 * n :] = True
    return prob, t1, t2


def make_projection(n: int) -> Callable[[np.ndarray], np.ndarray]:
    """Clamp probabilities to [0, 1], T1 to [1 us, 1 s] and T2 to (0, T1]."""
    prob, t1, t2 = _layout_masks(n)

    def project(v: np.ndarray) -> np.ndarray:
        out = np.array(v, dtype=float)
        out[prob] = np.clip(out[prob], 0.0, 1.0)
        out[t1] = np.clip(out[t1], *T1_BOUNDS_US)
        out[t2] = np.clip(out[t2], T2_FLOOR_US, out[t1])
        return out

    return project


def train(
    batch: ExperimentBatch | Sequence[ExperimentBatch],
    theta0: NoiseParams,
    times: GateTimes | None = None,
    cfg: SpsaConfig | None = None,
    metric: Literal["hellinger", "kl"] = "hellinger",
    threads: int = 1,
) -> TrainReport:
    cfg = SpsaConfig() if cfg is None else cfg
    n = theta0.n
    project = make_projection(n)

    def loss(v: np.ndarray) -> float:
        return batch_loss(unpack(v, n, theta0.thermal), batch, times, metric, threads)

    report = spsa_minimize(loss, pack(theta0), cfg, project)
    report.initial_params = theta0
    report.final_params = unpack(report.final, n, theta0.thermal)
    return report
