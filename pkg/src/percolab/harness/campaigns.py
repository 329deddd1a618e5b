"""Monte Carlo campaigns: trial fan-out, record streams and summaries.

Trial ``t`` uses the seed ``derive_seed(master_seed, t)`` for every ``n`` of
the campaign.  Since bond uniforms are keyed by edge coordinates, the samples
at different ``n`` (and different box radii) agree on their shared edges.
Summaries are computed from the record stream alone.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Any, Callable

import numpy as np

from ..cluster import largest_cluster, open_cluster
from ..exploration import explore_until_halt
from ..isoprofile import AnnealSchedule, face_counts, profile, supercritical_profile
from ..lattice import build_box, derive_seed, sample_config
from ..wulff.flow import FLOW_STREAM, THETA_STREAM, max_flow, scan_row, strip_lattice
from .config import ConfigError, ExperimentConfig
from .records import TrialRecord, dump_records, format_fraction, parse_fraction, rows_to_csv

__all__ = [
    "WORKERS_ENV",
    "CampaignResult",
    "Summary",
    "resolve_workers",
    "run_campaign",
    "run_critical_profile_campaign",
    "run_supercritical_limit_scan",
    "run_face_bound_check",
    "run_halfspace_probe",
    "run_vanishing_scan",
    "summarize",
]

WORKERS_ENV = "PERCOLAB_WORKERS"
# rounds of extra trials a conditioned scan may draw before giving up
MAX_ROUNDS = 20


@dataclass
class Summary:
    kind: str
    rows: list[dict[str, Any]]
    checks: dict[str, bool]
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "rows": self.rows, "checks": self.checks, "extra": self.extra}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_csv(self) -> str:
        return rows_to_csv(self.rows)


@dataclass
class CampaignResult:
    config: ExperimentConfig
    records: list[TrialRecord]
    summary: Summary

    def write(self, records_path=None, summary_path=None) -> None:
        records_path = records_path or self.config.records
        summary_path = summary_path or self.config.summary
        if records_path:
            dump_records(self.records, records_path)
        if summary_path:
            p = Path(summary_path)
            p.write_text(self.summary.to_json() if p.suffix == ".json" else self.summary.to_csv())


# worker pool ---------------------------------------------------------------


def resolve_workers(requested: int | None = None, cfg: ExperimentConfig | None = None) -> int:
    """Worker count: the environment override wins, then the argument, then the config."""
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            w = int(env)
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer") from None
    elif requested is not None:
        w = int(requested)
    else:
        w = cfg.workers if cfg is not None else 1
    if w < 1:
        raise ConfigError("worker count must be positive")
    return w


def _fan_out(fn: Callable, cfg: ExperimentConfig, indices: range, workers: int) -> list[TrialRecord]:
    """Run ``fn(cfg, t)`` for each index; the record stream is ordered by index."""
    if workers == 1 or len(indices) <= 1:
        chunks = [fn(cfg, t) for t in indices]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(fn, [cfg] * len(indices), indices, chunksize=max(1, len(indices) // (4 * workers))))
    return [r for chunk in chunks for r in chunk]


@lru_cache(maxsize=32)
def _box(d: int, R: int):
    return build_box(d, R)


@lru_cache(maxsize=8)
def _strip(d: int, K: int, L: int):
    return strip_lattice(d, K, L, 0)


def _schedule(cfg: ExperimentConfig) -> AnnealSchedule:
    return AnnealSchedule(steps=cfg.anneal_steps, t0=cfg.t0, t1=cfg.t1, steps_per_vertex=cfg.steps_per_vertex)


def _record(cfg, t, seed, inputs, outputs, started) -> TrialRecord:
    wall = time.perf_counter() - started if cfg.timing else None
    return TrialRecord(cfg.experiment_id, cfg.kind, int(t), int(seed), inputs, outputs, wall)


def _profile_outputs(res) -> dict[str, Any]:
    return {
        "value": format_fraction(res.value),
        "scaled": format_fraction(res.scaled),
        "mode": res.mode,
        "zero_reason": res.zero_reason,
        "cluster_size": res.cluster_size,
        "witness_size": int(res.witness.size),
        "truncated": res.truncated,
        "discarded": res.discarded,
    }


# trial units -----------------------------------------------------------------


def _critical_trial(cfg: ExperimentConfig, t: int) -> list[TrialRecord]:
    seed = derive_seed(cfg.master_seed, t)
    out = []
    for n in cfg.n_list:
        t0 = time.perf_counter()
        R = cfg.radius_for(n)
        config = sample_config(_box(cfg.d, R), cfg.p, seed)
        res = profile(config, n=n, schedule=_schedule(cfg), restarts=cfg.restarts, seed=derive_seed(seed, n))
        inputs = {"d": cfg.d, "p": cfg.p, "n": n, "radius": R}
        out.append(_record(cfg, t, seed, inputs, _profile_outputs(res), t0))
    return out


def _supercritical_trial(cfg: ExperimentConfig, t: int) -> list[TrialRecord]:
    seed = derive_seed(cfg.master_seed, t)
    out = []
    for n in cfg.n_list:
        t0 = time.perf_counter()
        R = cfg.radius_for(n)
        config = sample_config(_box(cfg.d, R), cfg.p, seed)
        solver = dict(schedule=_schedule(cfg), restarts=cfg.restarts, seed=derive_seed(seed, n))
        if cfg.conditioning == "none":
            res = profile(config, n=n, **solver)
        else:
            res = supercritical_profile(config, n, cfg.conditioning, **solver)
        # both finite-box proxies are reported whichever one conditions the sample
        cl = open_cluster(config, config.lattice.origin)
        big = largest_cluster(config)
        outputs = _profile_outputs(res)
        outputs["proxy_boundary"] = bool(cl.touches_box_boundary)
        outputs["proxy_largest"] = bool(cl.size == big.size and cl.origin in big)
        inputs = {"d": cfg.d, "p": cfg.p, "n": n, "radius": R, "conditioning": cfg.conditioning}
        out.append(_record(cfg, t, seed, inputs, outputs, t0))
    return out


def _theta_trial(cfg: ExperimentConfig, t: int) -> list[TrialRecord]:
    seed = derive_seed(cfg.master_seed, THETA_STREAM, t)
    out = []
    for n in cfg.n_list:
        t0 = time.perf_counter()
        m = cfg.theta_n or n
        config = sample_config(_box(cfg.d, m), cfg.p, seed)
        hit = open_cluster(config, config.lattice.origin).touches_box_boundary
        inputs = {"d": cfg.d, "p": cfg.p, "n": n, "theta_radius": m, "stream": "theta"}
        out.append(_record(cfg, t, seed, inputs, {"hit": bool(hit)}, t0))
    return out


def _face_trial(cfg: ExperimentConfig, t: int) -> list[TrialRecord]:
    seed = derive_seed(cfg.master_seed, t)
    out = []
    for n in cfg.n_list:
        t0 = time.perf_counter()
        config = sample_config(_box(cfg.d, n), cfg.p, seed)
        counts, union = face_counts(config, n)
        by_face = {fc.face: fc.count for fc in counts}
        outputs = {
            "x": by_face[(0, -1)],
            "faces": [fc.count for fc in counts],
            "union": union,
        }
        out.append(_record(cfg, t, seed, {"d": cfg.d, "p": cfg.p, "n": n}, outputs, t0))
    return out


def _halfspace_trial(cfg: ExperimentConfig, t: int) -> list[TrialRecord]:
    seed = derive_seed(cfg.master_seed, t)
    out = []
    for n in cfg.n_list:
        t0 = time.perf_counter()
        lat = _box(cfg.d, n)
        config = sample_config(lat, cfg.p, seed)
        hist = explore_until_halt(config, allowed=lat.vertex_coords[:, 0] >= 0)
        outputs = {"depth": hist.length, "size": int(hist.c_sizes[-1])}
        out.append(_record(cfg, t, seed, {"d": cfg.d, "p": cfg.p, "n": n}, outputs, t0))
    return out


def _scan_trial(cfg: ExperimentConfig, t: int) -> list[TrialRecord]:
    out = []
    lat, src, snk = _strip(cfg.d, cfg.K, cfg.L)
    theta_n = cfg.theta_n or 32
    for p in cfg.p_list:
        t0 = time.perf_counter()
        flow = hit = None
        if t < cfg.trials:
            config = sample_config(lat, p, derive_seed(cfg.master_seed, FLOW_STREAM, t))
            flow = max_flow(config, src, snk).value
        if t < cfg.theta_trials:
            config = sample_config(_box(cfg.d, theta_n), p, derive_seed(cfg.master_seed, THETA_STREAM, t))
            hit = bool(open_cluster(config, config.lattice.origin).touches_box_boundary)
        inputs = {"d": cfg.d, "p": p, "K": cfg.K, "L": cfg.L, "theta_radius": theta_n}
        out.append(_record(cfg, t, derive_seed(cfg.master_seed, t), inputs, {"flow": flow, "theta_hit": hit}, t0))
    return out


# statistics --------------------------------------------------------------------


def _median(xs: list[Fraction]) -> Fraction | None:
    if not xs:
        return None
    s = sorted(xs)
    m = len(s) // 2
    return s[m] if len(s) % 2 else (s[m - 1] + s[m]) / 2


def _quantile(xs: list[Fraction], q: float) -> Fraction | None:
    """Nearest-rank quantile."""
    if not xs:
        return None
    s = sorted(xs)
    return s[max(0, math.ceil(q * len(s)) - 1)]


def _mean_se(xs) -> tuple[float, float]:
    x = np.asarray(xs, dtype=float)
    if x.size == 0:
        return float("nan"), float("nan")
    if x.size == 1:
        return float(x[0]), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def _binom_se(k: int, m: int) -> float:
    q = k / m
    return math.sqrt(q * (1 - q) / m)


def _by_n(records: list[TrialRecord], stream: str | None = None) -> dict[int, list[TrialRecord]]:
    out: dict[int, list[TrialRecord]] = {}
    for r in records:
        if r.inputs.get("stream") == stream:
            out.setdefault(r.inputs["n"], []).append(r)
    return out


def _float(x: Fraction | None) -> float | None:
    return None if x is None else float(x)


def _strictly(xs: list, cmp) -> bool:
    return all(x is not None for x in xs) and all(cmp(a, b) for a, b in zip(xs, xs[1:]))


def _summarize_critical(cfg: ExperimentConfig, records: list[TrialRecord]) -> Summary:
    rows, zeros, medians = [], [], []
    for n, rs in sorted(_by_n(records).items()):
        vals = [parse_fraction(r.outputs["scaled"]) for r in rs]
        zf = Fraction(sum(v == 0 for v in vals), len(vals))
        med = _median(vals)
        zeros.append(zf)
        medians.append(med)
        rows.append(
            {
                "n": n,
                "trials": len(vals),
                "zero_fraction": float(zf),
                "median_scaled": _float(med),
                "q90_scaled": _float(_quantile(vals, 0.9)),
                "truncated": sum(r.outputs["truncated"] for r in rs),
                "upper_bound_trials": sum(r.outputs["mode"] == "upper_bound" for r in rs),
            }
        )
    checks = {
        "zero_fraction_increasing": _strictly(zeros, lambda a, b: a < b),
        "median_nonincreasing": _strictly(medians, lambda a, b: a >= b),
    }
    return Summary(cfg.kind, rows, checks, {"liminf_supported": all(checks.values())})


def _summarize_supercritical(cfg: ExperimentConfig, records: list[TrialRecord]) -> Summary:
    theta = _by_n(records, "theta")
    rows, medians, zero_ok = [], [], []
    for n, rs in sorted(_by_n(records).items()):
        cap = n**cfg.d
        zeros = sum(r.outputs["cluster_size"] <= cap for r in rs)
        accepted = [r for r in rs if not r.outputs["discarded"]][: cfg.trials]
        vals = [parse_fraction(r.outputs["scaled"]) for r in accepted]
        pos = [v for v in vals if v > 0]
        med = _median(pos)
        medians.append(med)
        zm = zeros / len(rs)
        hits = [r.outputs["hit"] for r in theta.get(n, [])]
        row = {
            "n": n,
            "trials": len(rs),
            "accepted": len(accepted),
            "zero_mass": zm,
            "positive_count": len(pos),
            "median_positive": _float(med),
            "q90_positive": _float(_quantile(pos, 0.9)),
            "truncated": sum(r.outputs["truncated"] for r in accepted),
            "boundary_proxy_rate": sum(r.outputs["proxy_boundary"] for r in rs) / len(rs),
            "largest_proxy_rate": sum(r.outputs["proxy_largest"] for r in rs) / len(rs),
        }
        if hits:
            th = sum(hits) / len(hits)
            se = math.sqrt(_binom_se(zeros, len(rs)) ** 2 + _binom_se(sum(hits), len(hits)) ** 2)
            ok = abs(zm - (1 - th)) <= cfg.sigma_band * se
            row.update({"theta_hat": th, "zero_vs_theta_se": se, "zero_matches_theta": ok})
            zero_ok.append(ok)
        rows.append(row)
    checks = {"enough_accepted": all(r["accepted"] >= cfg.trials for r in rows)}
    if len(medians) >= 2 and None not in medians[-2:]:
        a, b = medians[-2], medians[-1]
        change = float(abs(b - a) / a) if a else float("inf")
        checks["stabilized"] = change < cfg.stability_tol
        extra = {"last_relative_change": change}
    else:
        checks["stabilized"] = False
        extra = {"last_relative_change": None}
    if zero_ok:
        checks["zero_mass_matches_theta"] = all(zero_ok)
    return Summary(cfg.kind, rows, checks, extra)


def _summarize_face(cfg: ExperimentConfig, records: list[TrialRecord]) -> Summary:
    rows, within, markov, union_ok = [], [], [], []
    for n, rs in sorted(_by_n(records).items()):
        x = np.array([r.outputs["x"] for r in rs])
        union = np.array([r.outputs["union"] for r in rs])
        face_sum = np.array([sum(r.outputs["faces"]) for r in rs])
        bound = (2 * n + 1) ** (cfg.d - 1)
        within.append(bool(x.max() <= bound))
        mean, se = _mean_se(x)
        p_any = float(np.mean(union > 0))
        p_face = float(np.mean(x > 0))
        uok = bool((union <= face_sum).all()) and p_any <= 2 * cfg.d * p_face
        union_ok.append(uok)
        for frac in cfg.thresholds:
            thr = frac * n
            tail = (x > thr).astype(float)
            # per-sample slack of the Markov inequality; its mean is <= 0 in expectation
            slack_mean, slack_se = _mean_se(tail - x / thr)
            ok = slack_mean <= cfg.sigma_band * slack_se
            markov.append(ok)
            rows.append(
                {
                    "n": n,
                    "trials": len(rs),
                    "threshold": thr,
                    "mean_x": mean,
                    "stderr_x": se,
                    "max_x": int(x.max()),
                    "face_size": bound,
                    "tail_probability": float(tail.mean()),
                    "markov_bound": mean / thr,
                    "markov_stderr": slack_se,
                    "markov_holds": ok,
                    "p_any_face": p_any,
                    "union_bound": 2 * cfg.d * p_face,
                    "mean_union": float(union.mean()),
                    "mean_face_sum": float(face_sum.mean()),
                }
            )
    checks = {
        "face_count_within_face_size": all(within),
        "markov": all(markov),
        "union_bound": all(union_ok),
    }
    return Summary(cfg.kind, rows, checks)


def _summarize_halfspace(cfg: ExperimentConfig, records: list[TrialRecord]) -> Summary:
    rows, probs = [], []
    for n, rs in sorted(_by_n(records).items()):
        m = len(rs)
        k_depth = sum(r.outputs["depth"] >= n - 1 for r in rs)
        k_size = sum(r.outputs["size"] >= n for r in rs)
        probs.append(k_depth / m)
        rows.append(
            {
                "n": n,
                "trials": m,
                "probability": k_depth / m,
                "stderr": _binom_se(k_depth, m),
                "size_bound": k_size / m,
                "size_bound_stderr": _binom_se(k_size, m),
            }
        )
    return Summary(cfg.kind, rows, {"decreasing": _strictly(probs, lambda a, b: a > b)})


def _summarize_scan(cfg: ExperimentConfig, records: list[TrialRecord]) -> Summary:
    by_p: dict[float, list[TrialRecord]] = {}
    for r in records:
        by_p.setdefault(r.inputs["p"], []).append(r)
    rows, scan = [], []
    area = cfg.K ** (cfg.d - 1)
    for p in cfg.p_list:
        rs = by_p.get(p, [])
        flows = [r.outputs["flow"] / area for r in rs if r.outputs["flow"] is not None]
        hits = [r.outputs["theta_hit"] for r in rs if r.outputs["theta_hit"] is not None]
        beta, se = _mean_se(flows)
        theta = sum(hits) / len(hits) if hits else float("nan")
        row = scan_row(p, beta, se, theta, cfg.d)
        scan.append(row)
        rows.append(
            {
                "p": row.p,
                "beta_hat": row.beta_hat,
                "beta_stderr": row.beta_stderr,
                "theta_hat": row.theta_hat,
                "phi_hat": row.phi_hat,
                "flag": row.flag,
            }
        )
    desc = sorted(scan, key=lambda r: -r.p)
    checks = {
        "beta_increasing_in_p": _strictly([r.beta_hat for r in desc], lambda a, b: a > b),
        "phi_decreasing_towards_critical": _strictly([r.phi_hat for r in desc], lambda a, b: a > b),
    }
    return Summary(cfg.kind, rows, checks)


_SUMMARIES = {
    "critical_profile": _summarize_critical,
    "supercritical_scan": _summarize_supercritical,
    "face_bound": _summarize_face,
    "halfspace_probe": _summarize_halfspace,
    "vanishing_scan": _summarize_scan,
}


def summarize(cfg: ExperimentConfig, records: list[TrialRecord]) -> Summary:
    """Summary table and checks; a pure function of the config and the record stream."""
    cfg = cfg.validate()
    if not records:
        raise ValueError("no records to summarize")
    return _SUMMARIES[cfg.kind](cfg, records)


# campaigns -----------------------------------------------------------------------


def _finish(cfg: ExperimentConfig, records: list[TrialRecord]) -> CampaignResult:
    return CampaignResult(cfg, records, summarize(cfg, records))


def run_critical_profile_campaign(cfg: ExperimentConfig, workers: int | None = None) -> CampaignResult:
    """Distribution of ``n * profile`` at the critical value, per ``n``."""
    cfg = _check(cfg, "critical_profile")
    w = resolve_workers(workers, cfg)
    return _finish(cfg, _fan_out(_critical_trial, cfg, range(cfg.trials), w))


def run_supercritical_limit_scan(cfg: ExperimentConfig, workers: int | None = None) -> CampaignResult:
    """Two-component structure of ``n * profile`` above the critical value.

    With a conditioning proxy, batches of ``trials`` further seeds are drawn until
    every ``n`` has ``trials`` accepted samples (at most ``MAX_ROUNDS`` batches).
    Percolation-probability trials at radius ``theta_n`` (default: ``n``) follow
    on an independent seed stream.
    """
    cfg = _check(cfg, "supercritical_scan")
    w = resolve_workers(workers, cfg)
    records: list[TrialRecord] = []
    for round_ in range(MAX_ROUNDS if cfg.conditioning != "none" else 1):
        start = round_ * cfg.trials
        records += _fan_out(_supercritical_trial, cfg, range(start, start + cfg.trials), w)
        accepted = {n: 0 for n in cfg.n_list}
        for r in records:
            accepted[r.inputs["n"]] += not r.outputs["discarded"]
        if min(accepted.values()) >= cfg.trials:
            break
    records += _fan_out(_theta_trial, cfg, range(cfg.theta_trials), w)
    return _finish(cfg, records)


def run_face_bound_check(cfg: ExperimentConfig, workers: int | None = None) -> CampaignResult:
    """Face counts inside ``[-n, n]^d``: Markov tail check, face-size bound and union bound."""
    cfg = _check(cfg, "face_bound")
    w = resolve_workers(workers, cfg)
    return _finish(cfg, _fan_out(_face_trial, cfg, range(cfg.trials), w))


def run_halfspace_probe(cfg: ExperimentConfig, workers: int | None = None) -> CampaignResult:
    """Long open paths from the origin inside ``{x_0 >= 0}`` within ``[-n, n]^d``.

    ``probability`` counts trials whose explored set reaches graph distance
    ``n - 1`` (a geodesic with ``n`` vertices exists); ``size_bound`` counts
    trials whose half-space cluster has at least ``n`` vertices, which every
    such path requires.  The two bracket the path event.
    """
    cfg = _check(cfg, "halfspace_probe")
    w = resolve_workers(workers, cfg)
    return _finish(cfg, _fan_out(_halfspace_trial, cfg, range(cfg.trials), w))


def run_vanishing_scan(cfg: ExperimentConfig, workers: int | None = None) -> CampaignResult:
    """Flow constant, percolation probability and crystal surface tension across ``p_list``."""
    cfg = _check(cfg, "vanishing_scan")
    w = resolve_workers(workers, cfg)
    return _finish(cfg, _fan_out(_scan_trial, cfg, range(max(cfg.trials, cfg.theta_trials)), w))


def _check(cfg: ExperimentConfig, kind: str) -> ExperimentConfig:
    if cfg.kind != kind:
        raise ConfigError(f"config kind {cfg.kind!r} does not match campaign {kind!r}")
    return cfg.validate()


_RUNNERS = {
    "critical_profile": run_critical_profile_campaign,
    "supercritical_scan": run_supercritical_limit_scan,
    "face_bound": run_face_bound_check,
    "halfspace_probe": run_halfspace_probe,
    "vanishing_scan": run_vanishing_scan,
}


def run_campaign(cfg: ExperimentConfig, workers: int | None = None) -> CampaignResult:
    cfg = cfg.validate()
    return _RUNNERS[cfg.kind](cfg, workers)
