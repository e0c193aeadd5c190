"""Experiment configuration: defaults per experiment kind, file parsing.

A config file is flat ``key = value`` text (``#`` starts a comment).  Lists
are comma separated.  Keys mirror the :class:`ExperimentConfig` fields; CLI
flags override file values, which override the per-kind defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from ..errors import ConfigInvalid
from ..estimators_multi import MULTI_ESTIMATORS
from ..estimators_single import SINGLE_ESTIMATORS

KINDS = ("figure1", "multi_policy", "ea_bias", "dominance_scan")

#: Estimator names each experiment kind can resolve.
REGISTRY = {
    "figure1": SINGLE_ESTIMATORS,
    "multi_policy": MULTI_ESTIMATORS,
    "ea_bias": ("EA", "IS", "TRUE"),
    "dominance_scan": ("BIS_minus_FIS",),
}

# The signal-fraction grid 0.05, 0.10, ..., 1.00.
_DEFAULT_P_GRID = tuple(i / 20 for i in range(1, 21))


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a benchmark run needs, seed included.

    One dataclass covers all four kinds; fields irrelevant to a kind are
    ignored by its runner.  Build with :meth:`defaults` and adjust with
    :func:`dataclasses.replace`, then :meth:`validate`.
    """

    kind: str
    seed: int = 0
    reps: int = 2000
    bootstrap_resamples: int = 2000
    estimators: tuple[str, ...] = ()
    out: str | None = None
    format: str = "csv"
    plot: str | None = None
    # single-policy sweep
    n_actions: int = 20
    n_records: int = 100
    p_grid: tuple[float, ...] = _DEFAULT_P_GRID
    # multi-policy benchmark
    n_policies: int = 10
    records_per_policy: int = 30
    spread: float = 1.0
    cap: float = 10.0
    # adaptive-logging bias
    episodes: int = 1_000_000
    stop_cap: int = 10_000
    # dominance scan
    instances: int = 50
    mc_reps: int = 20_000

    @classmethod
    def defaults(cls, kind: str) -> "ExperimentConfig":
        if kind == "figure1":
            return cls(kind=kind, reps=20_000, estimators=SINGLE_ESTIMATORS)
        if kind == "multi_policy":
            return cls(kind=kind, reps=400, estimators=MULTI_ESTIMATORS, n_actions=5)
        if kind == "ea_bias":
            return cls(kind=kind, reps=1, estimators=("EA", "IS", "TRUE"))
        if kind == "dominance_scan":
            return cls(kind=kind, reps=2, estimators=("BIS_minus_FIS",), n_actions=5)
        raise ConfigInvalid(f"unknown experiment kind {kind!r}, expected one of {KINDS}")

    def validate(self) -> "ExperimentConfig":
        """Check invariants and resolve every estimator name, or raise."""
        if self.kind not in KINDS:
            raise ConfigInvalid(f"unknown experiment kind {self.kind!r}")
        if self.kind != "ea_bias" and self.reps < 2:
            raise ConfigInvalid("reps must be >= 2")
        if self.seed < 0:
            raise ConfigInvalid("seed must be non-negative")
        if self.bootstrap_resamples < 100:
            raise ConfigInvalid("bootstrap_resamples must be >= 100")
        if self.format not in ("csv", "json"):
            raise ConfigInvalid(f"format must be csv or json, got {self.format!r}")
        if not self.estimators:
            raise ConfigInvalid("estimator list is empty")
        known = REGISTRY[self.kind]
        unknown = [name for name in self.estimators if name not in known]
        if unknown:
            raise ConfigInvalid(f"unknown estimators for {self.kind}: {unknown} (known: {known})")
        if any(not 0.0 < p <= 1.0 for p in self.p_grid):
            raise ConfigInvalid("p_grid entries must lie in (0, 1]")
        if self.kind == "figure1" and (self.n_actions < 2 or self.n_records < 1 or not self.p_grid):
            raise ConfigInvalid("figure1 needs n_actions >= 2, n_records >= 1, non-empty p_grid")
        if self.kind == "multi_policy":
            if self.n_policies < 1 or self.records_per_policy < 1:
                raise ConfigInvalid("multi_policy needs n_policies >= 1, records_per_policy >= 1")
            if not 0.0 <= self.spread <= 1.0:
                raise ConfigInvalid("spread must lie in [0, 1]")
            if self.cap <= 0:
                raise ConfigInvalid("cap must be positive")
        if self.kind == "ea_bias" and (self.episodes < 2 or self.stop_cap < 1):
            raise ConfigInvalid("ea_bias needs episodes >= 2 and stop_cap >= 1")
        if self.kind == "dominance_scan" and (self.instances < 1 or self.mc_reps < 2):
            raise ConfigInvalid("dominance_scan needs instances >= 1 and mc_reps >= 2")
        return self


_LIST_FIELDS = {"estimators": str, "p_grid": float}


def _parse_value(name: str, raw: str):
    for f in fields(ExperimentConfig):
        if f.name != name:
            continue
        if name in _LIST_FIELDS:
            cast = _LIST_FIELDS[name]
            return tuple(cast(part.strip()) for part in raw.split(",") if part.strip())
        if f.type in ("int", int):
            return int(raw)
        if f.type in ("float", float):
            return float(raw)
        if name in ("out", "plot"):
            return raw
        return raw
    raise ConfigInvalid(f"unknown config key {name!r}")


def load_config_file(path: str | Path, base: ExperimentConfig) -> ExperimentConfig:
    """Overlay ``key = value`` lines from ``path`` on a base config."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config file {path}: {exc}") from exc
    overrides = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key == "kind":
            raise ConfigInvalid(f"{path}:{lineno}: the kind comes from the command line")
        try:
            overrides[key] = _parse_value(key, raw)
        except (ValueError, TypeError) as exc:
            raise ConfigInvalid(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return replace(base, **overrides)
