"""Command-line interface.

Every subcommand prints ``seed=<n>`` on its first output line and writes a
manifest (argv, resolved config, input/output hashes, versions) next to its
outputs.  Failures print a single line to stderr::

    noisebench: error code=<exit code> kind=<kind> msg="<json-escaped text>"

Exit codes:
  0  success
  1  unexpected internal error
  2  usage error (unknown subcommand or flag, bad flag value)
  3  missing input file
  4  schema or validation error in a config or data file
  5  partial grid: some cells had no device data (finished cells are written)
  6  numerical failure (non-finite loss, invalid simulated distribution)
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import os
import platform
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .benchmark import BenchmarkGrid, GridSpec, PartialGridError, render_report, run_grid, shared_palette_max
from .circuits import Circuit, dump_circuits, load_circuits, random_circuit_batch
from .densmat import SimulationError, backend_name
from .device import (
    BatchFormatError,
    DirectoryDevice,
    ExperimentBatch,
    SyntheticDevice,
    batch_filename,
    export_batch,
    import_batch,
    run_synthetic,
)
from .noisemodel import (
    GateTimes,
    NoiseParams,
    default_theta0,
    gate_times_from_json,
    ideal_params,
    plausible_device,
    predict_distribution,
    readout_only_params,
)
from .parallel import default_threads, parallel_map
from .seeding import derive_seed
from .trainer import METRICS, NonFiniteLossError, SpsaConfig, train
from .transpiler import TranspileOptions, transpile

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_MISSING = 3
EXIT_SCHEMA = 4
EXIT_PARTIAL = 5
EXIT_NUMERIC = 6

# labels mixed into the global seed for each pipeline stage
_TRAIN_DATA, _TRAIN_SPSA = 2, 3


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


def _schema(msg: str) -> CliError:
    return CliError(EXIT_SCHEMA, "schema", msg)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # type: ignore[override]
        raise CliError(EXIT_USAGE, "usage", f"{self.prog}: {message}")


# --- config ------------------------------------------------------------------


@dataclass
class TrainerSettings:
    epochs: int = 500
    a: float = 0.02
    c: float = 0.005
    alpha: float = 0.602
    gamma: float = 0.101
    A: float | None = None
    metric: str = "hellinger"
    cells: list[tuple[int, int]] = field(default_factory=lambda: [(2, 2)])
    circuits: int = 20
    batches: list[str] = field(default_factory=list)

    def spsa(self, seed: int) -> SpsaConfig:
        return SpsaConfig(self.epochs, self.a, self.c, self.alpha, self.gamma, self.A, seed)


@dataclass
class RunConfig:
    seed: int = 0
    output_dir: str = "noisebench-out"
    n_qubits: int | None = None
    grid: GridSpec = field(default_factory=GridSpec)
    gate_times: GateTimes = field(default_factory=GateTimes)
    device: dict[str, str] = field(default_factory=lambda: {"synthetic": "preset"})
    models: dict[str, str | None] = field(default_factory=lambda: {"initial": None, "trained": None})
    compare: list[str] = field(default_factory=lambda: ["trained", "initial"])
    trainer: TrainerSettings = field(default_factory=TrainerSettings)
    threads: int | None = None
    base_dir: Path = field(default=Path("."), repr=False)

    @property
    def n(self) -> int:
        return self.n_qubits if self.n_qubits is not None else max(self.grid.widths)

    def resolve(self, p: str | os.PathLike) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    def to_json(self) -> dict[str, Any]:
        t = self.trainer
        return {
            "seed": self.seed,
            "output_dir": self.output_dir,
            "n_qubits": self.n_qubits,
            "grid": {k: v for k, v in self.grid.to_json().items() if k != "seed"},
            "gate_times_ns": self.gate_times.to_json(),
            "device": dict(self.device),
            "models": dict(self.models),
            "compare": list(self.compare),
            "trainer": {
                "epochs": t.epochs, "a": t.a, "c": t.c, "alpha": t.alpha, "gamma": t.gamma, "A": t.A,
                "metric": t.metric, "cells": [list(c) for c in t.cells], "circuits": t.circuits,
                "batches": list(t.batches),
            },
            "threads": self.threads,
        }


_TOP_KEYS = {"seed", "output_dir", "n_qubits", "grid", "gate_times_ns", "device", "models", "compare", "trainer", "threads"}
_GRID_KEYS = {"widths", "depths", "circuits_per_cell", "shots", "replicates", "level"}
_TRAINER_KEYS = {"epochs", "a", "c", "alpha", "gamma", "A", "metric", "cells", "circuits", "batches"}


def _check_keys(obj: Any, allowed: set[str], where: str) -> dict:
    if not isinstance(obj, dict):
        raise _schema(f"{where}: expected an object")
    extra = sorted(set(obj) - allowed)
    if extra:
        raise _schema(f"{where}: unknown key(s) {', '.join(extra)}")
    return obj


def config_from_json(obj: Any, base_dir: Path = Path(".")) -> RunConfig:
    obj = _check_keys(obj, _TOP_KEYS, "config")
    try:
        grid_obj = _check_keys(obj.get("grid", {}), _GRID_KEYS, "config.grid")
        seed = int(obj.get("seed", 0))
        grid = GridSpec(**grid_obj, seed=seed)
        times = GateTimes.from_json(obj["gate_times_ns"]) if "gate_times_ns" in obj else GateTimes()
        t_obj = dict(_check_keys(obj.get("trainer", {}), _TRAINER_KEYS, "config.trainer"))
        if "cells" in t_obj:
            t_obj["cells"] = [tuple(int(v) for v in c) for c in t_obj["cells"]]
        trainer = TrainerSettings(**t_obj)
        if trainer.metric not in METRICS:
            raise ValueError(f"trainer.metric must be one of {sorted(METRICS)}")
        trainer.spsa(0)  # validates ranges
        device = dict(obj.get("device", {"synthetic": "preset"}))
        if len(device) != 1 or next(iter(device)) not in ("synthetic", "import"):
            raise ValueError("device must have exactly one of 'synthetic' or 'import'")
        models = {"initial": None, "trained": None, **obj.get("models", {})}
        if set(models) - {"initial", "trained"}:
            raise ValueError("models accepts only 'initial' and 'trained'")
        cfg = RunConfig(
            seed=seed,
            output_dir=str(obj.get("output_dir", "noisebench-out")),
            n_qubits=obj.get("n_qubits"),
            grid=grid,
            gate_times=times,
            device=device,
            models=models,
            compare=list(obj.get("compare", ["trained", "initial"])),
            trainer=trainer,
            threads=obj.get("threads"),
            base_dir=base_dir,
        )
    except (TypeError, ValueError, KeyError) as exc:
        raise _schema(f"config: {exc}") from None
    if cfg.n < max(cfg.grid.widths):
        raise _schema(f"config: n_qubits={cfg.n} is smaller than the widest grid cell")
    return cfg


def _read_json(path: Path) -> Any:
    if not path.exists():
        raise CliError(EXIT_MISSING, "missing", f"no such file: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise _schema(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def load_config(path: str | os.PathLike | None) -> RunConfig:
    if path is None:
        return RunConfig()
    p = Path(path)
    return config_from_json(_read_json(p), p.parent)


def _load_params(path: Path) -> tuple[NoiseParams, GateTimes | None]:
    obj = _read_json(path)
    try:
        return NoiseParams.from_json(obj), gate_times_from_json(obj)
    except (TypeError, ValueError) as exc:
        raise _schema(f"{path}: {exc}") from None


def _load_circuit_file(path: Path) -> tuple[dict, list[Circuit]]:
    obj = _read_json(path)
    try:
        return obj, load_circuits(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise _schema(f"{path}: {exc}") from None


def _import(path: Path) -> ExperimentBatch:
    if not path.exists():
        raise CliError(EXIT_MISSING, "missing", f"no such file: {path}")
    try:
        return import_batch(path)
    except BatchFormatError as exc:
        raise _schema(str(exc)) from None


# --- manifests ---------------------------------------------------------------


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _dump(path: Path, obj: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=1) + "\n")
    return path


class Run:
    """Collects everything a manifest needs while a subcommand executes."""

    def __init__(self, command: str, argv: Sequence[str], seed: int, threads: int):
        self.command = command
        self.argv = list(argv)
        self.seed = seed
        self.threads = threads
        self.inputs: list[Path] = []
        self.outputs: list[Path] = []
        self.config: dict[str, Any] | None = None
        print(f"seed={seed}")

    def read(self, path: Path) -> Path:
        self.inputs.append(path)
        return path

    def wrote(self, path: Path) -> Path:
        self.outputs.append(path)
        return path

    def manifest(self, path: Path) -> Path:
        obj = {
            "command": self.command,
            "argv": self.argv,
            "seed": self.seed,
            "threads": self.threads,
            "config": self.config,
            "inputs": {str(p): _sha256(p) for p in self.inputs},
            "outputs": {str(p): _sha256(p) for p in self.outputs},
            "versions": {
                "noisebench": __version__,
                "numpy": np.__version__,
                "python": platform.python_version(),
                "backend": backend_name(),
            },
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        }
        return _dump(path, obj)


def _beside(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def _threads(args: argparse.Namespace, cfg: RunConfig | None = None) -> int:
    if getattr(args, "threads", None):
        return args.threads
    if cfg is not None and cfg.threads:
        return int(cfg.threads)
    return default_threads()


# --- subcommands -------------------------------------------------------------


def cmd_gen(args: argparse.Namespace, argv: Sequence[str]) -> int:
    run = Run("gen", argv, args.seed, 1)
    circuits = random_circuit_batch(args.width, args.depth, args.n, args.seed)
    if args.native:
        circuits = [transpile(c) for c in circuits]
    out = Path(args.out)
    obj = {"w": args.width, "d": args.depth, "seed": args.seed, "native": args.native, **dump_circuits(circuits)}
    run.wrote(_dump(out, obj))
    run.manifest(_beside(out))
    print(f"wrote {len(circuits)} circuits to {out}")
    return EXIT_OK


def cmd_transpile(args: argparse.Namespace, argv: Sequence[str]) -> int:
    src = Path(args.input)
    obj, circuits = _load_circuit_file(src)
    run = Run("transpile", argv, int(obj.get("seed", 0)) if isinstance(obj, dict) else 0, 1)
    run.read(src)
    opts = TranspileOptions(optimize=args.optimize)
    native = [transpile(c, opts) for c in circuits]
    meta = {k: v for k, v in obj.items() if k not in ("circuits", "native")} if isinstance(obj, dict) else {}
    out = Path(args.out)
    run.wrote(_dump(out, {**meta, "native": True, **dump_circuits(native)}))
    run.manifest(_beside(out))
    print(f"transpiled {len(native)} circuits to {out}")
    return EXIT_OK


def cmd_predict(args: argparse.Namespace, argv: Sequence[str]) -> int:
    circ_path, params_path = Path(args.circuits), Path(args.params)
    _, circuits = _load_circuit_file(circ_path)
    params, times = _load_params(params_path)
    times = times or GateTimes()
    run = Run("predict", argv, 0, _threads(args))
    run.read(circ_path)
    run.read(params_path)
    native = [c if c.is_native else transpile(c) for c in circuits]
    if any(c.width > params.n for c in native):
        raise _schema(f"{params_path}: params cover {params.n} qubits, circuits need more")
    dists = parallel_map(lambda c: predict_distribution(c, params, times), native, run.threads)
    preds = [
        {"circuit_id": c.circuit_id, "expval": float(d.probs @ _parity(c.width)), "probs": [float(p) for p in d.probs]}
        for c, d in zip(native, dists)
    ]
    out = Path(args.out)
    run.wrote(_dump(out, {"params": params.to_json(times), "predictions": preds}))
    run.manifest(_beside(out))
    print(f"wrote {len(preds)} predictions to {out}")
    return EXIT_OK


def _parity(w: int) -> np.ndarray:
    from .densmat import parity_signs

    return parity_signs(w)


def _hidden(spec: str, n: int, base: Path, run: Run) -> tuple[NoiseParams, GateTimes | None]:
    if spec == "preset":
        return plausible_device(n), None
    p = base / spec if not Path(spec).is_absolute() else Path(spec)
    run.read(p)
    return _load_params(p)


def cmd_sample(args: argparse.Namespace, argv: Sequence[str]) -> int:
    circ_path = Path(args.circuits)
    obj, circuits = _load_circuit_file(circ_path)
    if not circuits:
        raise _schema(f"{circ_path}: no circuits")
    run = Run("sample", argv, args.seed, 1)
    run.read(circ_path)
    if not all(c.is_native for c in circuits):
        raise _schema(f"{circ_path}: circuits are not native; run 'transpile' first")
    w = circuits[0].width
    hidden, times = _hidden(args.hidden, args.n_qubits or w, Path("."), run)
    if hidden.n < w:
        raise _schema(f"hidden params cover {hidden.n} qubits, circuits need {w}")
    d = int(obj.get("d", 0)) if isinstance(obj, dict) else 0
    batch = run_synthetic(circuits, hidden, times, args.shots, args.seed, w=w, d=d)
    out = Path(args.out)
    export_batch(batch, out)
    run.wrote(out)
    run.manifest(_beside(out))
    print(f"sampled {len(circuits)} circuits x {args.shots} shots to {out}")
    return EXIT_OK


def cmd_import(args: argparse.Namespace, argv: Sequence[str]) -> int:
    run = Run("import", argv, 0, 1)
    out_dir = Path(args.out_dir)
    seen: dict[tuple[int, int], Path] = {}
    batches = []
    for name in args.files:
        p = Path(name)
        b = _import(p)
        if (b.w, b.d) in seen:
            raise _schema(f"{p}: cell (w={b.w}, d={b.d}) already provided by {seen[b.w, b.d]}")
        seen[b.w, b.d] = p
        run.read(p)
        batches.append(b)
        print(f"ok {p} w={b.w} d={b.d} circuits={len(b)} shots={b.shots}")
    for b in batches:
        dest = out_dir / batch_filename(b.w, b.d)
        dest.parent.mkdir(parents=True, exist_ok=True)
        export_batch(b, dest)
        run.wrote(dest)
    run.manifest(out_dir / "import.manifest.json")
    return EXIT_OK


def _config_run(name: str, args: argparse.Namespace, argv: Sequence[str]) -> tuple[RunConfig, Run, Path]:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.grid = replace(cfg.grid, seed=args.seed)
    if getattr(args, "epochs", None) is not None:
        cfg.trainer.epochs = args.epochs
    if getattr(args, "a", None) is not None:
        cfg.trainer.a = args.a
    if getattr(args, "circuits_per_cell", None) is not None:
        cfg.grid = replace(cfg.grid, circuits_per_cell=args.circuits_per_cell)
    try:
        cfg.trainer.spsa(0)
    except ValueError as exc:
        raise _schema(f"config: {exc}") from None
    run = Run(name, argv, cfg.seed, _threads(args, cfg))
    run.config = cfg.to_json()
    if args.config is not None:
        run.read(Path(args.config))
    # a flag path is relative to the working directory, a config path to the config file
    out_dir = Path(args.output_dir) if args.output_dir else cfg.resolve(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return cfg, run, out_dir


def _synthetic_device(cfg: RunConfig, run: Run) -> SyntheticDevice:
    hidden, times = _hidden(cfg.device["synthetic"], cfg.n, cfg.base_dir, run)
    if hidden.n < cfg.n:
        raise _schema(f"hidden params cover {hidden.n} qubits, config needs {cfg.n}")
    return SyntheticDevice(hidden, times or cfg.gate_times, cfg.grid.shots, cfg.seed, cfg.grid.circuits_per_cell)


def _training_batches(cfg: RunConfig, run: Run) -> list[ExperimentBatch]:
    if cfg.trainer.batches:
        return [_import(run.read(cfg.resolve(p))) for p in cfg.trainer.batches]
    if "import" in cfg.device:
        root = cfg.resolve(cfg.device["import"])
        out = []
        for w, d in cfg.trainer.cells:
            p = root / batch_filename(w, d)
            out.append(_import(run.read(p)))
        return out
    dev = _synthetic_device(cfg, run)
    return [
        dev.get_batch(w, d, cfg.trainer.circuits, derive_seed(cfg.seed, _TRAIN_DATA, w, d))
        for w, d in cfg.trainer.cells
    ]


def _initial_model(cfg: RunConfig, run: Run) -> NoiseParams:
    if cfg.models.get("initial"):
        params, _ = _load_params(run.read(cfg.resolve(cfg.models["initial"])))
        return params
    return default_theta0(cfg.n)


def cmd_train(args: argparse.Namespace, argv: Sequence[str]) -> int:
    cfg, run, out_dir = _config_run("train", args, argv)
    batches = _training_batches(cfg, run)
    theta0 = _initial_model(cfg, run)
    if any(b.w > theta0.n for b in batches):
        raise _schema(f"initial model covers {theta0.n} qubits; training data is wider")
    spsa = cfg.trainer.spsa(derive_seed(cfg.seed, _TRAIN_SPSA))
    report = train(batches, theta0, cfg.gate_times, spsa, cfg.trainer.metric, run.threads)
    run.wrote(_dump(out_dir / "train_report.json", report.to_json()))
    run.wrote(_dump(out_dir / "trained_params.json", report.final_params.to_json(cfg.gate_times)))
    run.manifest(out_dir / "train.manifest.json")
    h = report.loss_history
    print(f"epochs={spsa.epochs} loss_initial={h[0]:.6g} loss_final={h[-1]:.6g} "
          f"evaluations={report.n_evaluations} wall_s={report.wall_time:.1f}")
    return EXIT_OK


def _compare_models(cfg: RunConfig, run: Run, out_dir: Path, device) -> dict[str, NoiseParams]:
    hidden = device.hidden if isinstance(device, SyntheticDevice) else None
    models: dict[str, NoiseParams] = {}
    for name in cfg.compare:
        if name == "trained":
            p = cfg.resolve(cfg.models["trained"]) if cfg.models.get("trained") else out_dir / "trained_params.json"
            models[name] = _load_params(run.read(p))[0]
        elif name == "initial":
            models[name] = _initial_model(cfg, run)
        elif name == "ideal":
            models[name] = ideal_params(cfg.n)
        elif name in ("hidden", "readout"):
            if hidden is None:
                raise _schema(f"compare model {name!r} needs a synthetic device")
            models[name] = hidden if name == "hidden" else readout_only_params(hidden.p01, hidden.p10, hidden.n)
        else:
            models[Path(name).stem] = _load_params(run.read(cfg.resolve(name)))[0]
    return models


def _write_reports(grids: list[BenchmarkGrid], palette_max: float, out_dir: Path, run: Run) -> None:
    for g in grids:
        for p in render_report(g, palette_max, out_dir / f"report_{g.model_id}").values():
            run.wrote(p)


def cmd_bench(args: argparse.Namespace, argv: Sequence[str]) -> int:
    cfg, run, out_dir = _config_run("bench", args, argv)
    if "import" in cfg.device:
        device: Any = DirectoryDevice(cfg.resolve(cfg.device["import"]))
    else:
        device = _synthetic_device(cfg, run)
    models = _compare_models(cfg, run, out_dir, device)
    start = time.perf_counter()
    batches = {}
    for w, d in cfg.grid.cells:
        try:
            b = device.get_batch(w, d)
        except BatchFormatError as exc:
            raise _schema(str(exc)) from None
        if b is not None:
            batches[w, d] = b
    grids = [run_grid(cfg.grid, m, cfg.gate_times, device, name, run.threads, strict=False, batches=batches)
             for name, m in models.items()]
    palette_max = shared_palette_max(grids)
    results = {"seed": cfg.seed, "palette_max": palette_max, "grids": [g.to_json() for g in grids]}
    run.wrote(_dump(out_dir / "bench_results.json", results))
    _write_reports(grids, palette_max, out_dir, run)
    run.manifest(out_dir / "bench.manifest.json")
    for g in grids:
        worst = max(g.cells.values(), key=lambda c: c.L, default=None)
        if worst is not None:
            print(f"model={g.model_id} cells={len(g.cells)} worst_L={worst.L:.4f} at w={worst.w} d={worst.d}")
    print(f"bench wall_s={time.perf_counter() - start:.1f}")
    missing = grids[0].missing if grids else []
    if missing:
        raise CliError(EXIT_PARTIAL, "partial", str(PartialGridError(grids[0])))
    return EXIT_OK


def cmd_report(args: argparse.Namespace, argv: Sequence[str]) -> int:
    src = Path(args.results)
    obj = _read_json(src)
    try:
        grids = [BenchmarkGrid.from_json(g) for g in obj["grids"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise _schema(f"{src}: {exc}") from None
    run = Run("report", argv, int(obj.get("seed", 0)), 1)
    run.read(src)
    palette_max = args.palette_max if args.palette_max is not None else obj.get("palette_max") or shared_palette_max(grids)
    if palette_max <= 0:
        raise CliError(EXIT_USAGE, "usage", "--palette-max must be > 0")
    out_dir = Path(args.out_dir) if args.out_dir else src.parent
    _write_reports(grids, float(palette_max), out_dir, run)
    run.manifest(out_dir / "report.manifest.json")
    print(f"rendered {len(grids)} report(s) into {out_dir} with palette_max={palette_max:.4g}")
    return EXIT_OK


DEMO_TRAIN_CELLS = ((5, 1), (5, 2), (3, 3))


def demo_config(seed: int, epochs: int, circuits_per_cell: int, shots: int, train_circuits: int) -> dict[str, Any]:
    batches = [f"train_batch_w{w}_d{d}.json" for w, d in DEMO_TRAIN_CELLS]
    return {
        "seed": seed,
        "output_dir": ".",
        "n_qubits": 5,
        "grid": {"widths": [1, 2, 3, 4, 5], "depths": [1, 2, 3, 4, 5],
                 "circuits_per_cell": circuits_per_cell, "shots": shots},
        "gate_times_ns": GateTimes().to_json(),
        "device": {"synthetic": "hidden_params.json"},
        "compare": ["trained", "initial", "readout", "hidden"],
        "trainer": {"epochs": epochs, "cells": [list(c) for c in DEMO_TRAIN_CELLS],
                    "circuits": train_circuits, "batches": batches},
    }


def cmd_demo(args: argparse.Namespace, argv: Sequence[str]) -> int:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    seed = args.seed
    run = Run("demo", argv, seed, args.threads or default_threads())
    cfg = demo_config(seed, args.epochs, args.circuits_per_cell, args.shots, args.train_circuits)
    _dump(out / "config.json", cfg)
    _dump(out / "hidden_params.json", plausible_device(5).to_json(GateTimes()))
    threads = ["--threads", str(args.threads)] if args.threads else []

    def step(sub: list[str]) -> None:
        code = main(sub)
        if code != EXIT_OK:
            raise CliError(code, "demo", f"demo step {sub[0]!r} failed with exit code {code}")

    for w, d in DEMO_TRAIN_CELLS:
        s = derive_seed(seed, _TRAIN_DATA, w, d)
        circ = str(out / f"train_circuits_w{w}_d{d}.json")
        step(["gen", "--width", str(w), "--depth", str(d), "--n", str(args.train_circuits),
              "--seed", str(s), "--native", "--out", circ])
        step(["sample", "--circuits", circ, "--hidden", str(out / "hidden_params.json"), "--shots", str(args.shots),
              "--seed", str(derive_seed(s, 1)), "--out", str(out / f"train_batch_w{w}_d{d}.json")])
    step(["train", "--config", str(out / "config.json"), *threads])
    step(["bench", "--config", str(out / "config.json"), *threads])
    step(["report", "--results", str(out / "bench_results.json")])
    for p in sorted(out.iterdir()):
        if p.is_file() and not p.name.endswith("manifest.json"):
            run.wrote(p)
    run.config = cfg
    run.manifest(out / "demo.manifest.json")
    print(f"demo finished in {time.perf_counter() - start:.1f}s; outputs in {out}")
    return EXIT_OK


# --- parser ------------------------------------------------------------------


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="noisebench",
        description="Trainable noise models and a volumetric width/depth benchmark.",
        epilog="exit codes:" + __doc__.split("Exit codes:", 1)[1],
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"noisebench {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def threads_flag(p: argparse.ArgumentParser) -> None:
        p.add_argument("--threads", type=_positive_int, default=None,
                       help="worker threads (default: $NOISEBENCH_THREADS or all cores)")

    p = sub.add_parser("gen", help="emit a batch of random EfficientSU2 circuits")
    p.add_argument("--width", "-w", type=_positive_int, required=True)
    p.add_argument("--depth", "-d", type=_positive_int, required=True)
    p.add_argument("--n", type=_positive_int, default=200, help="number of circuits")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--native", action="store_true", help="transpile before writing")
    p.add_argument("--out", "-o", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("transpile", help="lower a circuit file to {X, SX, Rz, CNOT}")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", "-o", required=True)
    p.add_argument("--optimize", choices=("peephole", "none"), default="peephole")
    p.set_defaults(func=cmd_transpile)

    p = sub.add_parser("predict", help="model distributions and <Z..Z> for a circuit file")
    p.add_argument("--circuits", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--out", "-o", required=True)
    threads_flag(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("sample", help="run native circuits on a synthetic device")
    p.add_argument("--circuits", required=True)
    p.add_argument("--hidden", default="preset", help="hidden params file, or 'preset'")
    p.add_argument("--n-qubits", type=_positive_int, default=None, help="qubits for the preset device")
    p.add_argument("--shots", type=_positive_int, default=8192)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", "-o", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("import", help="validate external batch files and store them by cell")
    p.add_argument("files", nargs="+")
    p.add_argument("--out-dir", default="imported")
    p.set_defaults(func=cmd_import)

    for name, func, text in (("train", cmd_train, "fit noise parameters with SPSA"),
                             ("bench", cmd_bench, "benchmark models on the width/depth grid")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", "-c", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--output-dir", default=None)
        p.add_argument("--epochs", type=_positive_int, default=None)
        p.add_argument("--a", type=float, default=None, help="SPSA step size")
        p.add_argument("--circuits-per-cell", type=_positive_int, default=None)
        threads_flag(p)
        p.set_defaults(func=func)

    p = sub.add_parser("report", help="render SVG/CSV/JSON from bench results")
    p.add_argument("--results", required=True)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--palette-max", type=float, default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("demo", help="full synthetic pipeline on a 5x5 grid")
    p.add_argument("--output-dir", default="noisebench-demo")
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--epochs", type=_positive_int, default=150)
    p.add_argument("--circuits-per-cell", type=_positive_int, default=200)
    p.add_argument("--train-circuits", type=_positive_int, default=30)
    p.add_argument("--shots", type=_positive_int, default=8192)
    threads_flag(p)
    p.set_defaults(func=cmd_demo)
    return parser


def _report_error(code: int, kind: str, message: str) -> int:
    one_line = " ".join(str(message).split())
    print(f"noisebench: error code={code} kind={kind} msg={json.dumps(one_line)}", file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, argv)
    except CliError as exc:
        return _report_error(exc.code, exc.kind, str(exc))
    except (NonFiniteLossError, SimulationError) as exc:
        return _report_error(EXIT_NUMERIC, "numeric", str(exc))
    except BatchFormatError as exc:
        return _report_error(EXIT_SCHEMA, "schema", str(exc))
    except FileNotFoundError as exc:
        return _report_error(EXIT_MISSING, "missing", str(exc))
    except Exception as exc:  # noqa: BLE001  last-resort single-line report
        return _report_error(EXIT_INTERNAL, "internal", f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    sys.exit(main())
