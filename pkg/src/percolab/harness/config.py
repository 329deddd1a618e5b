"""Experiment configuration: a flat ``key = value`` text format with strict validation."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

__all__ = ["ConfigError", "ExperimentConfig", "KINDS", "load_experiment_config"]

KINDS = (
    "critical_profile",
    "supercritical_scan",
    "face_bound",
    "halfspace_probe",
    "vanishing_scan",
)


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit status 2)."""


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    if v is None:
        return ""
    return str(v)


def _parse_bool(s: str) -> bool:
    s = s.strip().lower()
    if s in ("true", "1", "yes"):
        return True
    if s in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(x) for x in s.split(",") if x.strip())


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(x) for x in s.split(",") if x.strip())


def _opt(conv):
    def parse(s: str):
        return None if s.strip() == "" else conv(s)

    return parse


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    d: int = 2
    p: float | None = None
    p_c: float | None = None
    p_list: tuple[float, ...] = ()
    n_list: tuple[int, ...] = ()
    radius_factor: int = 4
    radius: int | None = None
    trials: int = 100
    master_seed: int = 0
    restarts: int = 4
    anneal_steps: int | None = None
    steps_per_vertex: int = 400
    t0: float = 2.0
    t1: float = 0.02
    conditioning: str = "none"
    # face-count thresholds as multiples of n
    thresholds: tuple[float, ...] = (0.5,)
    theta_n: int | None = None
    theta_trials: int = 200
    stability_tol: float = 0.3
    sigma_band: float = 3.0
    K: int = 48
    L: int = 48
    workers: int = 1
    timing: bool = False
    experiment_id: str = "experiment"
    records: str | None = None
    summary: str | None = None

    # validation ---------------------------------------------------------

    def validate(self) -> "ExperimentConfig":
        """Check every parameter; returns the config with derived defaults filled in."""
        err = []
        if self.kind not in KINDS:
            err.append(f"kind must be one of {', '.join(KINDS)}")
        if self.d < 2:
            err.append("d must be at least 2")
        cfg = self
        if self.kind in ("critical_profile", "face_bound", "halfspace_probe"):
            if self.p is None:
                if self.p_c is None:
                    err.append(f"{self.kind} needs p or p_c")
                else:
                    cfg = replace(cfg, p=self.p_c)
            elif self.p_c is not None and self.p != self.p_c:
                # degenerate sanity runs at p=0 or p=1 are allowed
                if self.p not in (0.0, 1.0):
                    err.append(f"{self.kind} runs at the critical value: p={self.p} != p_c={self.p_c}")
        if self.kind == "supercritical_scan":
            if self.p is None:
                err.append("supercritical_scan needs p")
            elif self.p_c is not None and not self.p > self.p_c:
                err.append("supercritical_scan needs p > p_c")
        if cfg.p is not None and not 0.0 <= cfg.p <= 1.0:
            err.append("p must lie in [0, 1]")
        if self.kind == "vanishing_scan":
            if not self.p_list:
                err.append("vanishing_scan needs p_list")
            if any(not 0.0 <= q <= 1.0 for q in self.p_list):
                err.append("p_list entries must lie in [0, 1]")
            if self.p_c is not None and any(q <= self.p_c for q in self.p_list):
                err.append("p_list entries must exceed p_c")
            if self.K < 2 or self.L < 2:
                err.append("K and L must be at least 2")
        elif not self.n_list or any(n < 1 for n in self.n_list):
            err.append("n_list must hold positive integers")
        if self.radius_factor < 1:
            err.append("radius_factor must be positive")
        if self.radius is not None and any(n > self.radius for n in self.n_list):
            err.append("radius must be at least every n")
        if self.trials < 1:
            err.append("trials must be positive")
        if not 0 <= self.master_seed < 2**64:
            err.append("master_seed must be a 64-bit unsigned integer")
        if self.restarts < 1:
            err.append("restarts must be positive")
        if self.anneal_steps is not None and self.anneal_steps < 0:
            err.append("anneal_steps must be nonnegative")
        if not (self.t0 > 0 and self.t1 > 0):
            err.append("temperatures must be positive")
        if self.conditioning not in ("none", "boundary", "largest"):
            err.append("conditioning must be none, boundary or largest")
        if any(t <= 0 for t in self.thresholds):
            err.append("thresholds must be positive")
        if self.workers < 1:
            err.append("workers must be positive")
        if self.theta_trials < 1:
            err.append("theta_trials must be positive")
        if self.theta_n is not None and self.theta_n < 1:
            err.append("theta_n must be positive")
        if not self.stability_tol > 0 or not self.sigma_band > 0:
            err.append("stability_tol and sigma_band must be positive")
        for name in ("experiment_id", "records", "summary"):
            v = getattr(self, name)
            if v is not None and (v != v.strip() or any(ch in v for ch in "#\n\r")):
                err.append(f"{name} may not contain '#', line breaks or edge whitespace")
        if err:
            raise ConfigError("; ".join(err))
        return cfg

    def radius_for(self, n: int) -> int:
        return self.radius if self.radius is not None else self.radius_factor * n

    # text format --------------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            lines.append(f"{f.name} = {_fmt(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        kw = {}
        for ln, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {ln}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in _PARSERS:
                raise ConfigError(f"line {ln}: unknown key {key!r}")
            if key in kw:
                raise ConfigError(f"line {ln}: duplicate key {key!r}")
            try:
                kw[key] = _PARSERS[key](val)
            except ValueError as exc:
                raise ConfigError(f"line {ln}: bad value for {key}: {exc}") from None
        if "kind" not in kw:
            raise ConfigError("missing required key 'kind'")
        return cls(**kw)


_PARSERS = {
    "kind": str,
    "d": int,
    "p": _opt(float),
    "p_c": _opt(float),
    "p_list": _floats,
    "n_list": _ints,
    "radius_factor": int,
    "radius": _opt(int),
    "trials": int,
    "master_seed": int,
    "restarts": int,
    "anneal_steps": _opt(int),
    "steps_per_vertex": int,
    "t0": float,
    "t1": float,
    "conditioning": str,
    "thresholds": _floats,
    "theta_n": _opt(int),
    "theta_trials": int,
    "stability_tol": float,
    "sigma_band": float,
    "K": int,
    "L": int,
    "workers": int,
    "timing": _parse_bool,
    "experiment_id": str,
    "records": _opt(str),
    "summary": _opt(str),
}
assert set(_PARSERS) == {f.name for f in fields(ExperimentConfig)}


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return ExperimentConfig.from_text(text)
