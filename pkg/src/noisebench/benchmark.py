"""Volumetric benchmark of a noise model against device data.

For every width/depth cell the model's exact ``<Z...Z>`` prediction for each
compiled circuit is compared with the value estimated from the device
counts; the cell score ``L`` is the mean absolute difference.  Confidence
intervals come from a two-level percentile bootstrap (circuits, then shots).
Only the device side is resampled since model predictions are exact.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Protocol, Sequence

import numpy as np

from .device import CountsRecord, ExperimentBatch, counts_expval
from .noisemodel import GateTimes, NoiseParams, predict_expval
from .parallel import parallel_map
from .seeding import derive_seed, make_rng

DEFAULT_REPLICATES = 1000


@dataclass(frozen=True)
class GridSpec:
    widths: tuple[int, ...] = (1, 2, 3, 4, 5)
    depths: tuple[int, ...] = (1, 2, 3, 4, 5)
    circuits_per_cell: int = 200
    shots: int = 8192
    seed: int = 0
    replicates: int = DEFAULT_REPLICATES
    level: float = 0.95

    def __post_init__(self) -> None:
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        object.__setattr__(self, "depths", tuple(int(d) for d in self.depths))
        if not self.widths or not self.depths:
            raise ValueError("widths and depths must be nonempty")
        if self.circuits_per_cell < 1:
            raise ValueError("circuits_per_cell must be >= 1")

    @property
    def cells(self) -> list[tuple[int, int]]:
        return [(w, d) for w in self.widths for d in self.depths]

    def to_json(self) -> dict[str, Any]:
        out = asdict(self)
        out["widths"] = list(self.widths)
        out["depths"] = list(self.depths)
        return out

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "GridSpec":
        return cls(**obj)


@dataclass
class CellResult:
    w: int
    d: int
    L: float
    per_circuit: list[float]
    ci_low: float
    ci_high: float
    model_id: str = "model"
    shots: int = 0
    provenance: dict[str, Any] = field(default_factory=dict)

    @property
    def n_circuits(self) -> int:
        return len(self.per_circuit)

    def to_json(self) -> dict[str, Any]:
        return {
            "w": self.w,
            "d": self.d,
            "L": self.L,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "n_circuits": self.n_circuits,
            "shots": self.shots,
            "model_id": self.model_id,
            "per_circuit": list(self.per_circuit),
            "provenance": self.provenance,
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "CellResult":
        return cls(
            obj["w"], obj["d"], obj["L"], list(obj["per_circuit"]), obj["ci_low"], obj["ci_high"],
            obj.get("model_id", "model"), obj.get("shots", 0), obj.get("provenance", {}),
        )


def circuit_deviation(model_expval: float, hardware_expval: float) -> float:
    return abs(model_expval - hardware_expval)


def mean_deviation(per_circuit: Sequence[float]) -> float:
    return math.fsum(per_circuit) / len(per_circuit)


def bootstrap_ci(
    records: Sequence[CountsRecord],
    model_expvals: Sequence[float],
    B: int = DEFAULT_REPLICATES,
    level: float = 0.95,
    seed: int = 0,
) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean deviation.

    Each replicate draws ``n`` circuits with replacement, then redraws every
    chosen circuit's shots from its empirical distribution.  Only the
    parity of each shot enters ``<Z...Z>``, so resampling shots reduces
    exactly to a binomial draw on the even-parity fraction.
    """
    if not records:
        raise ValueError("bootstrap needs at least one circuit")
    if len(records) != len(model_expvals):
        raise ValueError("records and model expectation values are not aligned")
    if B < 100:
        raise ValueError("use at least 100 bootstrap replicates")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    n = len(records)
    shots = np.array([r.shots for r in records])
    p_even = np.array([(1.0 + counts_expval(r)) / 2.0 for r in records])
    model = np.asarray(model_expvals, dtype=float)

    rng = make_rng(seed)
    pick = rng.integers(0, n, size=(B, n))
    even = rng.binomial(shots[pick], p_even[pick])
    hw = 2.0 * even / shots[pick] - 1.0
    stats = np.abs(model[pick] - hw).mean(axis=1)
    tail = 100.0 * (1.0 - level) / 2.0
    lo, hi = np.percentile(stats, [tail, 100.0 - tail], method="linear")
    return float(lo), float(hi)


def _provenance(batch: ExperimentBatch) -> dict[str, Any]:
    ids = ",".join(r.circuit_id for r in batch.records)
    sources = sorted({r.source for r in batch.records})
    return {
        "circuits_sha256": hashlib.sha256(ids.encode()).hexdigest()[:16],
        "sources": sources,
        "has_params_snapshot": batch.params_snapshot is not None,
    }


def run_cell(
    w: int,
    d: int,
    model: NoiseParams,
    times: GateTimes | None,
    batch: ExperimentBatch,
    model_id: str = "model",
    replicates: int = DEFAULT_REPLICATES,
    level: float = 0.95,
    seed: int = 0,
    threads: int = 1,
    model_expvals: Sequence[float] | None = None,
) -> CellResult:
    if batch.w != w or batch.d != d:
        raise ValueError(f"batch holds cell ({batch.w}, {batch.d}), expected ({w}, {d})")
    if any(c.width != w for c in batch.circuits):
        raise ValueError(f"batch for width {w} contains circuits of another width")
    if model_expvals is None:
        model_expvals = parallel_map(lambda c: predict_expval(c, model, times), batch.circuits, threads)
    per = [circuit_deviation(m, counts_expval(r)) for m, r in zip(model_expvals, batch.records)]
    lo, hi = bootstrap_ci(batch.records, model_expvals, replicates, level, seed)
    return CellResult(w, d, mean_deviation(per), per, lo, hi, model_id, batch.shots, _provenance(batch))


class DeviceSource(Protocol):
    def get_batch(self, w: int, d: int) -> ExperimentBatch | None: ...


@dataclass
class BenchmarkGrid:
    spec: GridSpec
    model_id: str
    cells: dict[tuple[int, int], CellResult]
    missing: list[tuple[int, int]] = field(default_factory=list)
    model: NoiseParams | None = None

    def __getitem__(self, key: tuple[int, int]) -> CellResult:
        return self.cells[key]

    @property
    def max_L(self) -> float:
        return max((c.L for c in self.cells.values()), default=0.0)

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "model_id": self.model_id,
            "spec": self.spec.to_json(),
            "cells": [self.cells[k].to_json() for k in sorted(self.cells)],
            "missing": [list(k) for k in self.missing],
        }
        if self.model is not None:
            out["model"] = self.model.to_json()
        return out

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "BenchmarkGrid":
        cells = {(c["w"], c["d"]): CellResult.from_json(c) for c in obj["cells"]}
        model = NoiseParams.from_json(obj["model"]) if obj.get("model") else None
        return cls(GridSpec.from_json(obj["spec"]), obj["model_id"], cells,
                   [tuple(k) for k in obj.get("missing", [])], model)


class PartialGridError(RuntimeError):
    """Some cells had no device data; ``grid`` holds the completed ones."""

    def __init__(self, grid: BenchmarkGrid):
        cells = ", ".join(f"({w},{d})" for w, d in grid.missing)
        super().__init__(f"no device batch for cell(s) {cells}")
        self.grid = grid


def cell_seed(spec: GridSpec, w: int, d: int) -> int:
    return derive_seed(spec.seed, w, d)


def run_grid(
    spec: GridSpec,
    model: NoiseParams,
    times: GateTimes | None,
    device: DeviceSource,
    model_id: str = "model",
    threads: int = 1,
    strict: bool = True,
    batches: dict[tuple[int, int], ExperimentBatch] | None = None,
) -> BenchmarkGrid:
    """Benchmark ``model`` on every cell of ``spec``.

    Device batches are fetched per cell (or taken from ``batches`` when
    given, so several models can share identical device data).  Cells are
    independent and seeded from ``(spec.seed, w, d)``.
    """
    cells: dict[tuple[int, int], CellResult] = {}
    missing = []
    for w, d in spec.cells:
        batch = batches.get((w, d)) if batches is not None else device.get_batch(w, d)
        if batch is None:
            missing.append((w, d))
            continue
        cells[w, d] = run_cell(
            w, d, model, times, batch, model_id, spec.replicates, spec.level, derive_seed(cell_seed(spec, w, d), 2), threads
        )
    grid = BenchmarkGrid(spec, model_id, cells, missing, model)
    if missing and strict:
        raise PartialGridError(grid)
    return grid


# --- reports -----------------------------------------------------------------

_LIGHT = (255, 255, 255)
_DARK = (8, 29, 88)


def color_for(value: float, palette_max: float) -> str:
    """Hex fill on a white-to-navy scale, clipped at ``palette_max``."""
    t = min(max(value / palette_max, 0.0), 1.0)
    rgb = [round(a + (b - a) * t) for a, b in zip(_LIGHT, _DARK)]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def shared_palette_max(grids: Iterable[BenchmarkGrid]) -> float:
    m = max((g.max_L for g in grids), default=0.0)
    return m if m > 0 else 1.0


def render_svg(grid: BenchmarkGrid, palette_max: float, title: str | None = None) -> str:
    if palette_max <= 0:
        raise ValueError("palette_max must be > 0")
    cell, pad_l, pad_t = 60, 60, 40
    widths, depths = grid.spec.widths, grid.spec.depths
    legend_x = pad_l + cell * len(depths) + 30
    total_w = legend_x + 90
    total_h = pad_t + cell * len(widths) + 50
    title = grid.model_id if title is None else title
    out = io.StringIO()
    out.write(f'<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{total_h}" '
              f'viewBox="0 0 {total_w} {total_h}" font-family="sans-serif" font-size="12">\n')
    out.write(f'<text x="{pad_l}" y="20" font-size="14">{_esc(title)}</text>\n')
    for row, w in enumerate(sorted(widths, reverse=True)):
        y = pad_t + row * cell
        out.write(f'<text x="{pad_l - 10}" y="{y + cell / 2 + 4}" text-anchor="end">w={w}</text>\n')
        for col, d in enumerate(depths):
            x = pad_l + col * cell
            res = grid.cells.get((w, d))
            if res is None:
                out.write(f'<rect class="cell" data-w="{w}" data-d="{d}" x="{x}" y="{y}" width="{cell}" '
                          f'height="{cell}" fill="#cccccc" stroke="#ffffff"/>\n')
                out.write(f'<text x="{x + cell / 2}" y="{y + cell / 2 + 4}" text-anchor="middle">n/a</text>\n')
                continue
            fill = color_for(res.L, palette_max)
            ink = "#ffffff" if res.L / palette_max > 0.55 else "#000000"
            out.write(f'<rect class="cell" data-w="{w}" data-d="{d}" data-L="{res.L:.6g}" x="{x}" y="{y}" '
                      f'width="{cell}" height="{cell}" fill="{fill}" stroke="#888888"/>\n')
            out.write(f'<text x="{x + cell / 2}" y="{y + cell / 2 + 4}" text-anchor="middle" fill="{ink}">'
                      f'{res.L:.3f}</text>\n')
    base = pad_t + cell * len(widths)
    for col, d in enumerate(depths):
        out.write(f'<text x="{pad_l + col * cell + cell / 2}" y="{base + 18}" text-anchor="middle">d={d}</text>\n')
    # legend: vertical gradient bar with ticks
    bar_h = cell * len(widths)
    out.write('<defs><linearGradient id="scale" x1="0" y1="1" x2="0" y2="0">'
              f'<stop offset="0" stop-color="{color_for(0, 1)}"/><stop offset="1" stop-color="{color_for(1, 1)}"/>'
              '</linearGradient></defs>\n')
    out.write(f'<rect x="{legend_x}" y="{pad_t}" width="20" height="{bar_h}" fill="url(#scale)" stroke="#888888"/>\n')
    for k in range(5):
        v = palette_max * k / 4
        y = pad_t + bar_h * (1 - k / 4)
        out.write(f'<text x="{legend_x + 26}" y="{y + 4}">{v:.3f}</text>\n')
    out.write(f'<text x="{legend_x}" y="{base + 18}">mean |dZ|</text>\n')
    out.write("</svg>\n")
    return out.getvalue()


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def grid_csv(grid: BenchmarkGrid) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["w", "d", "n_circuits", "shots", "L", "ci_low", "ci_high"])
    for key in sorted(grid.cells):
        c = grid.cells[key]
        wr.writerow([c.w, c.d, c.n_circuits, c.shots, repr(c.L), repr(c.ci_low), repr(c.ci_high)])
    return buf.getvalue()


def render_report(grid: BenchmarkGrid, palette_max: float, out_path: str | os.PathLike) -> dict[str, Path]:
    """Write ``<out_path>.svg``, ``.csv`` and ``.json``; returns the paths."""
    base = Path(out_path)
    base.parent.mkdir(parents=True, exist_ok=True)
    paths = {ext: base.with_name(base.name + "." + ext) for ext in ("svg", "csv", "json")}
    paths["svg"].write_text(render_svg(grid, palette_max))
    paths["csv"].write_text(grid_csv(grid))
    paths["json"].write_text(json.dumps(grid.to_json(), indent=1) + "\n")
    return paths
