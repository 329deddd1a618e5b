"""Time the compiled and pure-Python kernel backends on identical inputs.

    python3 benchmarks/bench_kernels.py [--radius 40] [--repeat 3] [--json]

Every kernel is run on both backends and the outputs are compared before the
timings are reported, so a speedup never hides a divergence.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from contextlib import contextmanager

import numpy as np

from percolab import kernels
from percolab.lattice import build_box, sample_config
from percolab.wulff import flow
from percolab.wulff.flow import strip_lattice


def same(a, b) -> bool:
    if isinstance(a, tuple):
        return len(a) == len(b) and all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.array_equal(np.asarray(a), np.asarray(b))
    return a == b


@contextmanager
def flow_backend(backend):
    saved = flow.kernels
    flow.kernels = backend
    try:
        yield
    finally:
        flow.kernels = saved


def cases(radius: int, strip: int, anneal_steps: int):
    cfg = sample_config(build_box(2, radius), 0.55, 7)
    lat = cfg.lattice
    nbr, nbe = lat.neighbors
    ob = cfg.open_bits
    seeds = np.array([lat.origin], dtype=np.int64)
    allowed = np.ones(lat.vertex_count, dtype=np.uint8)
    init = np.array([lat.origin], dtype=np.int64)
    slat, src, snk = strip_lattice(2, strip, strip)
    scfg = sample_config(slat, 0.6, 3)

    def max_flow(b):
        with flow_backend(b):
            res = flow.max_flow(scfg, src, snk)
        return res.value, res.cut_edges

    return {
        "explore_layers": lambda b: b.explore_layers(nbr, nbe, ob, seeds, allowed, -1),
        "label_components": lambda b: b.label_components(nbr, nbe, ob),
        "greedy_grow": lambda b: b.greedy_grow(nbr, nbe, ob, lat.origin, 400),
        "anneal": lambda b: b.anneal(nbr, nbe, ob, lat.origin, 64, init, anneal_steps, 2.0, 0.02, 11),
        "max_flow": max_flow,
    }


def best_of(fn, repeat: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--radius", type=int, default=40, help="box radius for the cluster kernels")
    ap.add_argument("--strip", type=int, default=32, help="side of the square flow strip")
    ap.add_argument("--anneal-steps", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true", help="print rows as JSON instead of a table")
    args = ap.parse_args(argv)

    if kernels.compiled_backend is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation`", file=sys.stderr)
        return 1
    rows = []
    for name, fn in cases(args.radius, args.strip, args.anneal_steps).items():
        t_py, out_py = best_of(lambda: fn(kernels.python_backend), args.repeat)
        t_cy, out_cy = best_of(lambda: fn(kernels.compiled_backend), args.repeat)
        rows.append(
            {
                "kernel": name,
                "python_s": t_py,
                "compiled_s": t_cy,
                "speedup": t_py / t_cy if t_cy > 0 else float("inf"),
                "identical": same(out_py, out_cy),
            }
        )
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        print(f"{'kernel':<18}{'python [s]':>12}{'compiled [s]':>14}{'speedup':>10}  identical")
        for r in rows:
            print(
                f"{r['kernel']:<18}{r['python_s']:>12.4f}{r['compiled_s']:>14.5f}"
                f"{r['speedup']:>9.1f}x  {r['identical']}"
            )
    return 0 if all(r["identical"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
