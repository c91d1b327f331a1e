"""Measurement data: counts records, synthetic device runs and batch files.

Bitstrings are written with qubit 0 first (most significant).  Synthetic
records get a fixed timestamp (``SOURCE_DATE_EPOCH`` if set, otherwise the
Unix epoch) so that regenerated batches are byte-identical.
"""

from __future__ import annotations

import datetime as _dt
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import densmat
from .circuits import Circuit
from .densmat import OutcomeDistribution
from .noisemodel import GateTimes, NoiseParams, gate_times_from_json, predict_distribution
from .seeding import derive_seed, make_rng

DEFAULT_SHOTS = 8192
SOURCES = ("synthetic", "imported")


class BatchFormatError(ValueError):
    """A batch file does not match the expected schema."""


def fixed_timestamp() -> str:
    epoch = int(os.environ.get("SOURCE_DATE_EPOCH", "0"))
    return _dt.datetime.fromtimestamp(epoch, _dt.timezone.utc).isoformat().replace("+00:00", "Z")


@dataclass(frozen=True)
class CountsRecord:
    circuit_id: str
    shots: int
    counts: dict[str, int]
    source: str = "synthetic"
    seed: int | None = None
    timestamp: str = field(default_factory=fixed_timestamp)

    def __post_init__(self) -> None:
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}, got {self.source!r}")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        total = sum(self.counts.values())
        if total != self.shots:
            raise ValueError(f"record {self.circuit_id}: counts sum to {total}, expected {self.shots} shots")
        if any(c < 0 for c in self.counts.values()):
            raise ValueError(f"record {self.circuit_id}: negative count")
        lengths = {len(b) for b in self.counts}
        if len(lengths) > 1:
            raise ValueError(f"record {self.circuit_id}: mixed bitstring lengths")

    @property
    def width(self) -> int:
        return len(next(iter(self.counts)))

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"circuit_id": self.circuit_id, "counts": dict(sorted(self.counts.items()))}
        if self.seed is not None:
            out["seed"] = self.seed
        out["source"] = self.source
        out["timestamp"] = self.timestamp
        return out


def sample_counts(
    dist: OutcomeDistribution,
    shots: int = DEFAULT_SHOTS,
    seed: int = 0,
    circuit_id: str = "",
) -> CountsRecord:
    """Draw ``shots`` outcomes by inverse-CDF sampling of uniform variates."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = np.asarray(dist.probs, dtype=float)
    if (p < 0).any() or abs(p.sum() - 1.0) > 1e-8:
        raise ValueError("invalid outcome distribution")
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    u = make_rng(seed).random(shots)
    idx = np.searchsorted(cdf, u, side="right")
    # u < 1 == cdf[-1] keeps idx in range; an empty interval (p == 0) is never hit
    idx = np.minimum(idx, len(p) - 1)
    hits = np.bincount(idx, minlength=len(p))
    w = dist.width
    counts = {format(i, f"0{w}b"): int(c) for i, c in enumerate(hits) if c}
    return CountsRecord(circuit_id, shots, counts, "synthetic", seed)


def counts_vector(rec: CountsRecord, width: int | None = None) -> np.ndarray:
    w = rec.width if width is None else width
    v = np.zeros(2**w)
    for b, c in rec.counts.items():
        v[int(b, 2)] = c
    return v


def counts_to_distribution(rec: CountsRecord, width: int | None = None) -> OutcomeDistribution:
    if rec.shots <= 0:
        raise ValueError("record has zero shots")
    w = rec.width if width is None else width
    return OutcomeDistribution(w, counts_vector(rec, w) / rec.shots)


def counts_expval(rec: CountsRecord) -> float:
    if rec.shots <= 0:
        raise ValueError("record has zero shots")
    even = sum(c for b, c in rec.counts.items() if b.count("1") % 2 == 0)
    return (2 * even - rec.shots) / rec.shots


@dataclass
class ExperimentBatch:
    w: int
    d: int
    circuits: list[Circuit]
    records: list[CountsRecord]
    shots: int = DEFAULT_SHOTS
    params_snapshot: NoiseParams | None = None
    times_snapshot: GateTimes | None = None

    def __post_init__(self) -> None:
        if len(self.records) != len(self.circuits):
            raise ValueError(f"{len(self.records)} records for {len(self.circuits)} circuits")

    def __len__(self) -> int:
        return len(self.circuits)

    def subset(self, idx: Sequence[int]) -> "ExperimentBatch":
        return ExperimentBatch(
            self.w,
            self.d,
            [self.circuits[i] for i in idx],
            [self.records[i] for i in idx],
            self.shots,
            self.params_snapshot,
            self.times_snapshot,
        )

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "w": self.w,
            "d": self.d,
            "shots": self.shots,
            "circuits": [c.to_json() for c in self.circuits],
            "records": [r.to_json() for r in self.records],
        }
        if self.params_snapshot is not None:
            out["params_snapshot"] = self.params_snapshot.to_json(self.times_snapshot)
        return out


def run_synthetic(
    circuits: Sequence[Circuit],
    hidden: NoiseParams,
    times: GateTimes | None = None,
    shots: int = DEFAULT_SHOTS,
    seed: int = 0,
    w: int | None = None,
    d: int = 0,
    distributions: Sequence[OutcomeDistribution] | None = None,
) -> ExperimentBatch:
    """Sample every circuit from the hidden model; circuit ``i`` uses ``derive_seed(seed, i)``.

    ``distributions`` may carry precomputed predictions of ``hidden`` to skip
    re-simulation (repeated sampling experiments).
    """
    times = GateTimes() if times is None else times
    records = []
    for i, c in enumerate(circuits):
        if not c.is_native:
            raise ValueError(f"circuit {i} is not native; transpile first")
        dist = distributions[i] if distributions is not None else predict_distribution(c, hidden, times)
        records.append(sample_counts(dist, shots, derive_seed(seed, i), c.circuit_id))
    width = w if w is not None else (circuits[0].width if circuits else 1)
    return ExperimentBatch(width, d, list(circuits), records, shots, hidden, times)


# --- batch files -------------------------------------------------------------


def _require(obj: Any, key: str, kind: type | tuple, where: str) -> Any:
    if not isinstance(obj, dict) or key not in obj:
        raise BatchFormatError(f"{where}: missing field {key!r}")
    val = obj[key]
    if not isinstance(val, kind) or isinstance(val, bool) and kind is not bool:
        raise BatchFormatError(f"{where}.{key}: expected {getattr(kind, '__name__', kind)}, got {type(val).__name__}")
    return val


def batch_from_json(obj: Any) -> ExperimentBatch:
    w = _require(obj, "w", int, "batch")
    d = _require(obj, "d", int, "batch")
    shots = _require(obj, "shots", int, "batch")
    raw_circuits = _require(obj, "circuits", list, "batch")
    raw_records = _require(obj, "records", list, "batch")
    if len(raw_circuits) != len(raw_records):
        raise BatchFormatError(f"batch: {len(raw_records)} records for {len(raw_circuits)} circuits")
    circuits = []
    for i, rc in enumerate(raw_circuits):
        try:
            circuits.append(Circuit.from_json(rc))
        except (KeyError, TypeError, ValueError) as exc:
            raise BatchFormatError(f"circuits[{i}]: {exc}") from None
    records = []
    for i, rr in enumerate(raw_records):
        where = f"records[{i}]"
        cid = _require(rr, "circuit_id", str, where)
        counts = _require(rr, "counts", dict, where)
        for b, c in counts.items():
            if not isinstance(c, int) or isinstance(c, bool) or c < 0:
                raise BatchFormatError(f"{where}.counts[{b!r}]: expected a nonnegative int")
            if len(b) != circuits[i].width or set(b) - {"0", "1"}:
                raise BatchFormatError(f"{where}.counts: bad bitstring {b!r} for width {circuits[i].width}")
        total = sum(counts.values())
        if total != shots:
            raise BatchFormatError(f"{where} (circuit_id {cid}): counts sum to {total}, expected {shots} shots")
        if cid != circuits[i].circuit_id:
            raise BatchFormatError(f"{where}: circuit_id {cid} does not match circuits[{i}] ({circuits[i].circuit_id})")
        source = rr.get("source", "imported")
        if source not in SOURCES:
            raise BatchFormatError(f"{where}.source: expected one of {SOURCES}, got {source!r}")
        seed = rr.get("seed")
        if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
            raise BatchFormatError(f"{where}.seed: expected int")
        ts = rr.get("timestamp", fixed_timestamp())
        records.append(CountsRecord(cid, shots, dict(counts), source, seed, ts))
    snapshot = times = None
    if obj.get("params_snapshot") is not None:
        try:
            snapshot = NoiseParams.from_json(obj["params_snapshot"])
            times = gate_times_from_json(obj["params_snapshot"])
        except (TypeError, ValueError) as exc:
            raise BatchFormatError(f"params_snapshot: {exc}") from None
    return ExperimentBatch(w, d, circuits, records, shots, snapshot, times)


def export_batch(batch: ExperimentBatch, path: str | os.PathLike) -> None:
    Path(path).write_text(json.dumps(batch.to_json(), indent=1) + "\n")


def import_batch(path: str | os.PathLike) -> ExperimentBatch:
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BatchFormatError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return batch_from_json(obj)
    except BatchFormatError as exc:
        raise BatchFormatError(f"{path}: {exc}") from None


def batch_filename(w: int, d: int) -> str:
    return f"batch_w{w}_d{d}.json"


class DirectoryDevice:
    """Serves imported batches from ``<root>/batch_w{w}_d{d}.json``."""

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)

    def get_batch(self, w: int, d: int) -> ExperimentBatch | None:
        p = self.root / batch_filename(w, d)
        return import_batch(p) if p.exists() else None


class SyntheticDevice:
    """Hidden-parameter stand-in for hardware.

    Cell ``(w, d)`` gets ``n`` fresh EfficientSU2 circuits (seed
    ``derive_seed(seed, w, d)``), compiled with the default transpiler and
    sampled from ``hidden``.
    """

    def __init__(
        self,
        hidden: NoiseParams,
        times: GateTimes | None = None,
        shots: int = DEFAULT_SHOTS,
        seed: int = 0,
        circuits_per_cell: int = 200,
    ):
        self.hidden = hidden
        self.times = GateTimes() if times is None else times
        self.shots = shots
        self.seed = seed
        self.circuits_per_cell = circuits_per_cell

    def circuits(self, w: int, d: int, n: int | None = None, seed: int | None = None) -> list[Circuit]:
        from .circuits import random_circuit_batch
        from .transpiler import transpile

        n = self.circuits_per_cell if n is None else n
        s = derive_seed(self.seed, w, d) if seed is None else seed
        return [transpile(c) for c in random_circuit_batch(w, d, n, s)]

    def get_batch(self, w: int, d: int, n: int | None = None, seed: int | None = None) -> ExperimentBatch:
        s = derive_seed(self.seed, w, d) if seed is None else seed
        circuits = self.circuits(w, d, n, s)
        return run_synthetic(circuits, self.hidden, self.times, self.shots, derive_seed(s, 1), w=w, d=d)
