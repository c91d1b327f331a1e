"""Compare the compiled kernels with the pure-Python/numpy fallback.

Times raw kernel calls and end-to-end ``predict_expval`` per (w, d), checks
that both backends agree, and prints a table (optionally also JSON).

    python benchmarks/bench_backends.py --repeat 5 --json bench_backends.json
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from noisebench import densmat
from noisebench.channels import depolarizing_superop, thermal_superop
from noisebench.device import SyntheticDevice
from noisebench.noisemodel import _tables, plausible_device, predict_expval


def _best(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def kernel_rows(repeat: int, widths=(3, 5, 8)) -> list[dict]:
    rows = []
    s1 = thermal_superop(120.0, 90.0, 0.035) @ depolarizing_superop(0.001, 1)
    s2 = depolarizing_superop(0.01, 2)
    for w in widths:
        rho0 = densmat.init_state(w)
        for name, S, targets in (("1q", s1, (w // 2,)), ("2q", s2, (0, 1))):
            entry = {"kind": f"kernel_{name}", "w": w}
            outs = {}
            for backend in ("compiled", "python"):
                if backend not in densmat.BACKENDS:
                    continue
                densmat.use_backend(backend)
                rho = rho0.copy()
                n = 50
                entry[backend] = _best(lambda: [densmat.apply_superop(rho, S, targets) for _ in range(n)], repeat) / n
                r = rho0.copy()
                densmat.apply_superop(r, S, targets)
                outs[backend] = r.data
            if len(outs) == 2:
                entry["max_abs_diff"] = float(np.abs(outs["compiled"] - outs["python"]).max())
            rows.append(entry)
    return rows


def predict_rows(repeat: int, cells, n_circuits: int) -> list[dict]:
    hidden = plausible_device(max(w for w, _ in cells))
    dev = SyntheticDevice(hidden, seed=0)
    rows = []
    for w, d in cells:
        circuits = dev.circuits(w, d, n_circuits)
        entry = {"kind": "predict_expval", "w": w, "d": d}
        vals = {}
        for backend in ("compiled", "python"):
            if backend not in densmat.BACKENDS:
                continue
            densmat.use_backend(backend)
            _tables.cache_clear()
            vals[backend] = [predict_expval(c, hidden) for c in circuits]
            entry[backend] = _best(lambda: [predict_expval(c, hidden) for c in circuits], repeat) / n_circuits
        if len(vals) == 2:
            entry["max_abs_diff"] = float(np.max(np.abs(np.subtract(vals["compiled"], vals["python"]))))
        rows.append(entry)
    return rows


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--circuits", type=int, default=20)
    ap.add_argument("--json", default=None, help="also write rows to this file")
    args = ap.parse_args(argv)

    if "compiled" not in densmat.BACKENDS:
        print("compiled extension not built; only the fallback is timed")
    start = densmat.backend_name()
    cells = [(w, d) for w in (1, 3, 5) for d in (1, 3, 5)]
    rows = kernel_rows(args.repeat) + predict_rows(args.repeat, cells, args.circuits)
    densmat.use_backend(start)

    print(f"{'case':<22}{'compiled us':>14}{'python us':>14}{'speedup':>10}{'max diff':>12}")
    for r in rows:
        label = f"{r['kind']} w={r['w']}" + (f" d={r['d']}" if "d" in r else "")
        c, p = r.get("compiled"), r.get("python")
        speed = f"{p / c:.2f}x" if c and p else "-"
        fmt = lambda v: f"{v * 1e6:.1f}" if v is not None else "-"
        print(f"{label:<22}{fmt(c):>14}{fmt(p):>14}{speed:>10}{r.get('max_abs_diff', float('nan')):>12.1e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=1)


if __name__ == "__main__":
    main()
