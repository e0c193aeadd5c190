"""Benchmark report rows and their CSV/JSON serialization.

The CSV schema is the stable contract:

``experiment,estimator,param_name,param_value,metric,value,p5,p50,p95,reps,seed``

Reals are written as their shortest round-trip decimal (``repr``), lines end
with LF, and parsing a report back reproduces it byte for byte.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

from ..errors import IoFailure

CSV_HEADER = "experiment,estimator,param_name,param_value,metric,value,p5,p50,p95,reps,seed"

_FLOAT_FIELDS = ("param_value", "value", "p5", "p50", "p95")


@dataclass(frozen=True)
class BenchRow:
    """One (experiment, estimator, parameter point, metric) result.

    ``value`` is the point estimate of the metric; ``p5``/``p50``/``p95``
    are bootstrap percentiles of the same metric over replications (all
    three equal the value for analytically known rows).
    """

    experiment: str
    estimator: str
    param_name: str
    param_value: float
    metric: str
    value: float
    p5: float
    p50: float
    p95: float
    reps: int
    seed: int

    def __post_init__(self):
        for name in _FLOAT_FIELDS:
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "reps", int(self.reps))
        object.__setattr__(self, "seed", int(self.seed))
        if not all(math.isfinite(getattr(self, name)) for name in _FLOAT_FIELDS):
            raise ValueError("report rows must be finite")
        if not self.p5 <= self.p50 <= self.p95:
            raise ValueError(f"percentiles out of order: {self.p5}, {self.p50}, {self.p95}")


def _fmt(x: float) -> str:
    return repr(float(x))


def rows_to_csv(rows: list[BenchRow]) -> str:
    """Serialize rows to the canonical CSV text (UTF-8, LF endings)."""
    out = io.StringIO()
    out.write(CSV_HEADER + "\n")
    for r in rows:
        out.write(
            ",".join(
                (
                    r.experiment,
                    r.estimator,
                    r.param_name,
                    _fmt(r.param_value),
                    r.metric,
                    _fmt(r.value),
                    _fmt(r.p5),
                    _fmt(r.p50),
                    _fmt(r.p95),
                    str(r.reps),
                    str(r.seed),
                )
            )
            + "\n"
        )
    return out.getvalue()


def parse_csv(text: str) -> list[BenchRow]:
    """Parse canonical CSV back into rows (inverse of :func:`rows_to_csv`)."""
    lines = text.splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("missing or unexpected CSV header")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 11:
            raise ValueError(f"expected 11 fields, got {len(parts)}: {line!r}")
        rows.append(
            BenchRow(
                experiment=parts[0],
                estimator=parts[1],
                param_name=parts[2],
                param_value=float(parts[3]),
                metric=parts[4],
                value=float(parts[5]),
                p5=float(parts[6]),
                p50=float(parts[7]),
                p95=float(parts[8]),
                reps=int(parts[9]),
                seed=int(parts[10]),
            )
        )
    return rows


def rows_to_json(rows: list[BenchRow]) -> str:
    """Serialize rows as a JSON array mirroring the CSV fields."""
    return json.dumps([asdict(r) for r in rows], indent=2) + "\n"


def emit_report(rows: list[BenchRow], fmt: str = "csv", path: str | Path | None = None) -> None:
    """Write rows as CSV or JSON to ``path``, or to stdout when ``path`` is None."""
    if fmt == "csv":
        text = rows_to_csv(rows)
    elif fmt == "json":
        text = rows_to_json(rows)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is None:
        print(text, end="")
        return
    try:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise IoFailure(f"cannot write report to {path}: {exc}") from exc
