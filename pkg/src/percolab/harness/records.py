"""Trial records as JSON lines and CSV summaries."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable

__all__ = [
    "TrialRecord",
    "dump_records",
    "load_records",
    "parse_records",
    "parse_fraction",
    "format_fraction",
    "rows_to_csv",
]


def format_fraction(x: Fraction | None) -> str | None:
    if x is None:
        return None
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_fraction(s: str | None) -> Fraction | None:
    return None if s is None else Fraction(s)


@dataclass(frozen=True)
class TrialRecord:
    """One trial of one campaign at one parameter point.

    ``inputs`` echoes the parameters that determine the outputs together with
    ``seed``; ``wall_time`` stays ``None`` unless timing is switched on, so
    that reruns are byte-identical by default.
    """

    experiment_id: str
    kind: str
    trial: int
    seed: int
    inputs: dict[str, Any]
    outputs: dict[str, Any]
    wall_time: float | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"), allow_nan=False)

    @classmethod
    def from_json(cls, line: str) -> "TrialRecord":
        return cls(**json.loads(line))


def dump_records(records: Iterable[TrialRecord], path: str | Path | None = None) -> str:
    text = "".join(r.to_json() + "\n" for r in records)
    if path is not None:
        Path(path).write_text(text)
    return text


def parse_records(text: str) -> list[TrialRecord]:
    return [TrialRecord.from_json(ln) for ln in text.splitlines() if ln.strip()]


def load_records(path: str | Path) -> list[TrialRecord]:
    return parse_records(Path(path).read_text())


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, Fraction):
        return format_fraction(v)
    return str(v)


def rows_to_csv(rows: list[dict[str, Any]]) -> str:
    """CSV with the union of row keys as header, in first-seen order."""
    cols: list[str] = []
    for r in rows:
        cols.extend(k for k in r if k not in cols)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in cols])
    return buf.getvalue()
