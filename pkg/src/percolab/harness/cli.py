"""Command-line entry point ``percolab``.

Exit status: 0 on success, 1 on a domain error, 2 on a configuration or usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

from .. import kernels
from ..cluster import open_cluster
from ..exploration import explore_until_halt
from ..isoprofile import (
    AnnealSchedule,
    BudgetExceeded,
    profile,
    profile_anneal,
    profile_bruteforce,
    supercritical_profile,
)
from ..lattice import (
    ConfigFormatError,
    ConfigStateError,
    LatticeSizeError,
    build_box,
    load_config,
    sample_config,
    save_config,
)
from ..wulff import (
    CertificateError,
    GeometryError,
    NormTable,
    candidate_battery,
    estimate_flow_constant,
    isoperimetric_check,
    load_norm_table,
    phi_of_p,
    scan_to_csv,
    surface_tension,
    vanishing_scan,
    wulff_set,
)
from .campaigns import run_campaign
from .config import ConfigError, ExperimentConfig, load_experiment_config
from .records import format_fraction, rows_to_csv

DOMAIN_ERRORS = (
    ValueError,
    GeometryError,
    LatticeSizeError,
    ConfigFormatError,
    ConfigStateError,
    BudgetExceeded,
    CertificateError,
    OSError,
)


def preset_names() -> list[str]:
    root = resources.files("percolab.harness") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def preset_text(name: str) -> str:
    path = resources.files("percolab.harness") / "presets" / f"{name}.cfg"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return path.read_text()


# output ---------------------------------------------------------------------


def _clean(x):
    """Floats shown to 12 significant digits; NaN becomes null."""
    if isinstance(x, float):
        return None if math.isnan(x) else float(f"{x:.12g}")
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def _emit(args, payload: dict, csv_text: str | None = None) -> None:
    payload = _clean(payload)
    if args.format == "csv":
        text = csv_text if csv_text is not None else rows_to_csv([payload])
    else:
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _config(args):
    """Load ``--config-file`` or sample a fresh box configuration."""
    if getattr(args, "config_file", None):
        return load_config(args.config_file)
    if args.p is None:
        raise ConfigError("either --p or --config-file is required")
    return sample_config(build_box(args.d, args.radius), args.p, args.seed)


# subcommands -------------------------------------------------------------------


def cmd_sample(args) -> int:
    config = _config(args)
    if args.save:
        save_config(config, args.save)
    lat = config.lattice
    cl = open_cluster(config, lat.origin)
    _emit(
        args,
        {
            "d": lat.d,
            "radius": lat.radius,
            "p": config.p,
            "seed": config.master_seed,
            "edges": lat.edge_count,
            "open_edges": config.open_count,
            "origin_cluster_size": cl.size,
            "origin_cluster_touches_boundary": cl.touches_box_boundary,
        },
    )
    return 0


def cmd_profile(args) -> int:
    if args.radius is None and not args.config_file:
        args.radius = 4 * args.n
    config = _config(args)
    sched = AnnealSchedule(steps=args.anneal_steps)
    n = args.n
    cap = args.cap if args.cap is not None else n**config.lattice.d
    if args.conditioning != "none":
        res = supercritical_profile(
            config, n, args.conditioning, cap=cap, schedule=sched, restarts=args.restarts, seed=args.seed
        )
    elif args.solver == "exact":
        res = profile_bruteforce(config, cap=cap, n=n)
    elif args.solver == "anneal":
        res = profile_anneal(config, cap=cap, schedule=sched, restarts=args.restarts, seed=args.seed, n=n)
    else:
        res = profile(config, n=n, cap=cap, schedule=sched, restarts=args.restarts, seed=args.seed)
    payload = res.to_dict()
    payload["scaled"] = format_fraction(res.scaled)
    if args.witness:
        payload["witness"] = config.lattice.vertex_coords[res.witness].tolist()
    _emit(args, payload)
    return 0


def cmd_explore(args) -> int:
    config = _config(args)
    hist = explore_until_halt(config, box_radius=args.box_radius, max_steps=args.max_steps)
    payload = {
        "halted": hist.halted,
        "length": hist.length,
        "box_radius": args.box_radius,
        "steps": [{"l": l, "C_size": c, "A_size": a, "open_boundary": b} for l, (c, a, b) in enumerate(hist.steps)],
    }
    _emit(args, payload, csv_text=hist.to_csv())
    return 0


def _norm(args) -> NormTable:
    if args.norm == "l1":
        return NormTable.l1(args.d)
    if args.norm == "linf":
        return NormTable.linf(args.d)
    if args.norm == "constant":
        return NormTable.constant(args.d, args.samples)
    if not args.table:
        raise ConfigError("--norm table needs --table PATH")
    return load_norm_table(args.table)


def cmd_wulff(args) -> int:
    norm = _norm(args)
    poly = wulff_set(norm, args.directions)
    payload = {
        "norm": args.norm,
        "d": norm.d,
        "volume": poly.volume(),
        "surface_tension": surface_tension(poly, norm),
        "vertices": len(poly.vertices),
        "facets": len(poly.normals),
    }
    if args.theta is not None:
        payload["phi"] = phi_of_p(norm, args.theta, args.directions).value
    if args.check:
        rep = isoperimetric_check(norm, candidate_battery(norm.d, seed=args.seed), args.directions)
        payload["wulff_is_minimal"] = rep.wulff_is_minimal
        payload["best_candidate"] = list(rep.best_candidate)
    _emit(args, payload)
    return 0


def cmd_flow(args) -> int:
    if args.scan:
        rows = vanishing_scan(
            args.scan, args.K, args.L, args.trials, seed=args.seed, d=args.d,
            theta_n=args.theta_n, theta_trials=args.theta_trials,
        )
        payload = {"rows": [r.__dict__ for r in rows]}
        _emit(args, payload, csv_text=scan_to_csv(rows))
        return 0
    if args.p is None:
        raise ConfigError("flow needs --p or --scan")
    est = estimate_flow_constant(args.p, args.direction, args.K, args.L, args.trials, args.seed, args.d)
    payload = {
        "p": est.p,
        "direction": est.direction,
        "box_dims": list(est.box_dims),
        "trials": est.trials,
        "mean_flow_per_area": est.mean_flow_per_area,
        "stderr": est.stderr,
    }
    _emit(args, payload)
    return 0


def cmd_experiment(args) -> int:
    if args.list_presets:
        sys.stdout.write("\n".join(preset_names()) + "\n")
        return 0
    if args.preset:
        cfg = ExperimentConfig.from_text(preset_text(args.preset))
    elif args.config:
        cfg = load_experiment_config(args.config)
    else:
        raise ConfigError("experiment needs --config PATH or --preset NAME")
    if args.seed_given:
        cfg = replace(cfg, master_seed=args.seed)
    cfg = cfg.validate()
    result = run_campaign(cfg, workers=args.workers)
    result.write(records_path=args.records)
    _emit(args, result.summary.to_dict(), csv_text=result.summary.to_csv())
    return 0


# parser ---------------------------------------------------------------------------


def _common(defaults: bool) -> argparse.ArgumentParser:
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=d(None), help="master seed (default 0; overrides master_seed of an experiment config)")
    p.add_argument("--out", default=d(None), help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default=d("json"))
    return p


def _box_args(p: argparse.ArgumentParser, radius_default: int | None = 8) -> None:
    p.add_argument("--d", type=int, default=2, help="dimension")
    p.add_argument("--p", type=float, help="bond density")
    p.add_argument("--radius", type=int, default=radius_default, help="box radius R of [-R, R]^d")
    p.add_argument("--config-file", help="load a binary configuration instead of sampling")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="percolab", parents=[_common(True)], description="Percolation cluster geometry experiments."
    )
    parser.add_argument("--backend", action="store_true", help="print the kernel backend and exit")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    common = [_common(False)]

    p = sub.add_parser("sample", parents=common, help="sample a configuration")
    _box_args(p)
    p.add_argument("--save", help="write the configuration in binary form")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("profile", parents=common, help="anchored isoperimetric profile")
    _box_args(p, radius_default=None)
    p.add_argument("--n", type=int, required=True, help="scale; the size cap is n^d")
    p.add_argument("--cap", type=int, help="override the size cap")
    p.add_argument("--solver", choices=("auto", "exact", "anneal"), default="auto")
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--anneal-steps", type=int)
    p.add_argument("--conditioning", choices=("none", "boundary", "largest"), default="none")
    p.add_argument("--witness", action="store_true", help="include witness coordinates")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("explore", parents=common, help="layered exploration of the origin cluster")
    _box_args(p)
    p.add_argument("--box-radius", type=int, help="constrain the exploration to [-n, n]^d")
    p.add_argument("--max-steps", type=int)
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("wulff", parents=common, help="Wulff set of a norm")
    p.add_argument("--norm", choices=("l1", "linf", "constant", "table"), default="l1")
    p.add_argument("--table", help="norm table file (one 'v1 ... vd value' line per direction)")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--samples", type=int, default=360, help="directions sampled for the constant norm")
    p.add_argument("--directions", type=int, default=64, help="extra half-space directions")
    p.add_argument("--theta", type=float, help="also report the crystal tension at volume 1/theta")
    p.add_argument("--check", action="store_true", help="compare against the candidate battery")
    p.set_defaults(func=cmd_wulff)

    p = sub.add_parser("flow", parents=common, help="flow-constant estimate or vanishing scan")
    p.add_argument("--p", type=float)
    p.add_argument("--scan", type=float, nargs="+", metavar="P", help="run the scan over these densities")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--K", type=int, default=16, help="cross-section width")
    p.add_argument("--L", type=int, default=16, help="length along the flow axis")
    p.add_argument("--direction", type=int, default=0)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--theta-n", type=int, default=32)
    p.add_argument("--theta-trials", type=int, default=200)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("experiment", parents=common, help="run a Monte Carlo campaign")
    p.add_argument("--config", help="experiment config file (key = value lines)")
    p.add_argument("--preset", help="bundled config name")
    p.add_argument("--list-presets", action="store_true")
    p.add_argument("--workers", type=int, help="worker processes (PERCOLAB_WORKERS overrides)")
    p.add_argument("--records", help="JSON-lines record file")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors exit 2, --help exits 0
        return int(exc.code or 0)
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = 0
    if args.backend:
        print(kernels.BACKEND)
        return 0
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"percolab: config error: {exc}", file=sys.stderr)
        return 2
    except DOMAIN_ERRORS as exc:
        print(f"percolab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
