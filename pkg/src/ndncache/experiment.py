"""Parameter sweeps over repeated seeded runs, with Student-t confidence intervals.

A plan is a base config, an ordered set of sweep axes and a repetition
count. Each point of the axes' cross product becomes one result row that
aggregates ``repetitions`` runs seeded ``seed_base + r``.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from scipy.stats import t as student_t

from .engine import ConfigError, RunConfig, run
from .policy import StrategySpec

__all__ = [
    "SWEEP_AXES",
    "CSV_FIELDS",
    "WORKERS_ENV",
    "ExperimentPlan",
    "ResultRow",
    "mean",
    "ci_half_width",
    "run_plan",
    "emit_results",
    "format_results",
    "RECIPES",
    "figure_plan",
    "reproduce_figure",
]

log = logging.getLogger(__name__)

WORKERS_ENV = "NDNCACHE_WORKERS"

SWEEP_AXES = (
    "cache_fraction",
    "cache_slots",
    "alpha",
    "strategy",
    "replacement",
    "tau",
    "community_target",
    "catalog_size",
    "rho1",
    "rho2",
)

CSV_FIELDS = (
    "strategy",
    "replacement",
    "cache_frac",
    "alpha",
    "catalog",
    "communities",
    "hit_ratio",
    "hit_ratio_ci",
    "latency_ms",
    "latency_ci",
    "hit_distance",
    "hit_distance_ci",
    "messages",
    "seed_base",
    "reps",
)

# report field -> (mean column, CI column)
_METRICS = {
    "cache_hit_ratio": ("hit_ratio", "hit_ratio_ci"),
    "avg_latency_ms": ("latency_ms", "latency_ci"),
    "avg_hit_distance": ("hit_distance", "hit_distance_ci"),
    "message_count": ("messages", None),
    "achieved_community_count": ("communities", None),
    "runtime_ms": ("runtime_ms", None),
}


def mean(xs: Sequence[float]) -> float:
    """Arithmetic mean, exact when every value is identical."""
    n = len(xs)
    if not n:
        raise ValueError("mean of no values")
    x0 = xs[0]
    return x0 + math.fsum(x - x0 for x in xs) / n


def ci_half_width(xs: Sequence[float], confidence: float = 0.95) -> float:
    """Student-t half width ``t_{(1+c)/2, n-1} * s / sqrt(n)``; 0 for one value."""
    n = len(xs)
    if n < 2:
        return 0.0
    m = mean(xs)
    s = math.sqrt(math.fsum((x - m) ** 2 for x in xs) / (n - 1))
    return float(student_t.ppf(0.5 + confidence / 2, n - 1)) * s / math.sqrt(n)


@dataclass(frozen=True)
class ExperimentPlan:
    base: RunConfig = field(default_factory=RunConfig)
    axes: tuple[tuple[str, tuple], ...] = ()
    repetitions: int = 10
    seed_base: int = 0

    def __post_init__(self):
        axes = self.axes.items() if isinstance(self.axes, dict) else self.axes
        normalised = []
        for name, values in axes:
            if name not in SWEEP_AXES:
                raise ConfigError(f"cannot sweep {name!r}; sweepable: {', '.join(SWEEP_AXES)}")
            values = tuple(values)
            if not values:
                raise ConfigError(f"axis {name!r} has no values")
            normalised.append((name, values))
        object.__setattr__(self, "axes", tuple(normalised))
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")

    def points(self) -> list[dict]:
        """Cross product of the axes, first axis varying slowest."""
        names = [name for name, _ in self.axes]
        return [dict(zip(names, combo)) for combo in itertools.product(*(v for _, v in self.axes))]

    def configs(self) -> list[RunConfig]:
        """One config per point, seeded with ``seed_base``."""
        out = []
        for point in self.points():
            try:
                out.append(self.base.replace(seed=self.seed_base, **point))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"invalid sweep point {point}: {exc}") from exc
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentPlan":
        unknown = set(doc) - {"base", "axes", "repetitions", "seed_base"}
        if unknown:
            raise ConfigError(f"unknown plan keys: {', '.join(sorted(unknown))}")
        base = RunConfig.from_dict(doc.get("base", {}))
        axes = doc.get("axes", {})
        if not isinstance(axes, dict):
            raise ConfigError("axes must be an object mapping axis name to a list of values")
        return cls(base, tuple(axes.items()), int(doc.get("repetitions", 10)), int(doc.get("seed_base", 0)))

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentPlan":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        base = doc.get("base", {})
        topo = base.get("topology")
        if isinstance(topo, str) and topo.endswith(".json") and not Path(topo).is_absolute():
            if (path.parent / topo).exists():
                doc = {**doc, "base": {**base, "topology": str(path.parent / topo)}}
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        axes = {}
        for name, values in self.axes:
            if name == "strategy":
                values = [StrategySpec.parse(v).to_dict() for v in values]
            axes[name] = list(values)
        return {
            "base": self.base.to_dict(),
            "axes": axes,
            "repetitions": self.repetitions,
            "seed_base": self.seed_base,
        }


@dataclass(frozen=True)
class ResultRow:
    """Aggregate over the repetitions of one sweep point.

    Means and CI half-widths are NaN for a failed point. ``reps`` doubles as
    the CI flag: with one repetition the half-widths are reported as 0.
    """

    params: dict
    config: RunConfig
    reps: int
    means: dict
    cis: dict
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    @property
    def cache_frac(self) -> float:
        cfg = self.config
        if cfg.cache_slots is not None:
            return cfg.cache_slots / cfg.catalog_size
        return cfg.cache_fraction

    def record(self) -> dict:
        """Row keyed by ``CSV_FIELDS``."""
        cfg = self.config
        out = {
            "strategy": cfg.strategy.label,
            "replacement": cfg.replacement,
            "cache_frac": self.cache_frac,
            "alpha": cfg.alpha,
            "catalog": cfg.catalog_size,
        }
        for key, (col, ci_col) in _METRICS.items():
            if col in CSV_FIELDS:
                out[col] = self.means[key]
            if ci_col:
                out[ci_col] = self.cis[key]
        out["seed_base"] = cfg.seed
        out["reps"] = self.reps
        return {k: out[k] for k in CSV_FIELDS}


def _run_one(config: RunConfig) -> dict | str:
    try:
        return run(config).to_dict()
    except Exception as exc:  # a broken point must not sink the sweep
        log.warning("run failed (%s, seed %s): %s", config.strategy.label, config.seed, exc)
        return f"{type(exc).__name__}: {exc}"


def _workers(workers: int | None) -> int:
    if workers is None:
        raw = os.environ.get(WORKERS_ENV, "1")
        try:
            workers = int(raw)
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, workers)


def run_plan(
    plan: ExperimentPlan,
    workers: int | None = None,
    runner: Callable[[RunConfig], dict | str] | None = None,
) -> list[ResultRow]:
    """Run every repetition of every point; rows follow the axis order.

    ``workers`` defaults to the ``NDNCACHE_WORKERS`` environment variable
    (1 if unset). A point with any failed repetition becomes a failed row.
    """
    if runner is None:
        runner = _run_one
    points = plan.points()
    configs = plan.configs()
    jobs = [cfg.replace(seed=plan.seed_base + r) for cfg in configs for r in range(plan.repetitions)]
    n_workers = min(_workers(workers), len(jobs))
    if n_workers > 1:
        with ProcessPoolExecutor(n_workers) as pool:
            outcomes = list(pool.map(runner, jobs))
    else:
        outcomes = [runner(job) for job in jobs]
    rows = []
    reps = plan.repetitions
    for i, (point, cfg) in enumerate(zip(points, configs)):
        chunk = outcomes[i * reps : (i + 1) * reps]
        errors = [o for o in chunk if isinstance(o, str)]
        if errors:
            nan = {k: math.nan for k in _METRICS}
            rows.append(ResultRow(point, cfg, reps, nan, dict(nan), error=errors[0]))
            continue
        means = {k: mean([o[k] for o in chunk]) for k in _METRICS}
        cis = {k: ci_half_width([o[k] for o in chunk]) for k in _METRICS}
        rows.append(ResultRow(point, cfg, reps, means, cis))
    return rows


def _fmt(value) -> str:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return str(value)
    return format(value, ".6g")


def _json_value(value):
    if isinstance(value, float):
        if math.isnan(value):
            return None
        return float(format(value, ".6g"))
    return value


def format_results(rows: Sequence[ResultRow], fmt: str = "csv") -> str:
    """Render rows as CSV (fixed header) or as a JSON array of the same fields."""
    if not rows:
        raise ValueError("no result rows to emit")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for row in rows:
            rec = row.record()
            writer.writerow([_fmt(rec[k]) for k in CSV_FIELDS])
        return buf.getvalue()
    if fmt == "json":
        doc = [{k: _json_value(v) for k, v in row.record().items()} for row in rows]
        return json.dumps(doc, indent=1) + "\n"
    raise ValueError(f"unknown format {fmt!r}; choose csv or json")


def emit_results(rows: Sequence[ResultRow], fmt: str = "csv", path: str | Path | None = None) -> str:
    """Format ``rows`` and write them to ``path`` when given. Returns the text."""
    text = format_results(rows, fmt)
    if path is not None:
        Path(path).write_text(text)
    return text


# -- figure recipes -----------------------------------------------------------

_STRATEGIES = ("cpepc", "pepc", "lce", {"name": "prob", "p": 0.5})
_CACHE_FRACTIONS = (0.0005, 0.001, 0.0015, 0.002, 0.0025)
_CATALOGS = {"desk": (250, 500, 1000, 2000), "paper": (2500, 5000, 10_000, 20_000)}


def _cache_sweep(base: RunConfig, scale: str) -> dict:
    return {"cache_fraction": _CACHE_FRACTIONS, "strategy": _STRATEGIES}


def _alpha_sweep(base, scale):
    return {"alpha": (0.6, 0.8, 1.0, 1.2), "strategy": _STRATEGIES}


def _catalog_sweep(base, scale):
    return {"catalog_size": _CATALOGS[scale], "cache_slots": (10,), "strategy": _STRATEGIES}


def _community_sweep(base, scale):
    return {"community_target": (10, 20, 30, 40, 50), "strategy": ("cpepc",)}


def _replacement_sweep(base, scale):
    return {"replacement": ("lru", "random", "plfu"), "strategy": _STRATEGIES}


# figure -> (what it plots, axes builder)
RECIPES: dict[str, tuple[str, Callable[[RunConfig, str], dict]]] = {
    "fig5": ("cache hit ratio vs cache size", _cache_sweep),
    "fig6": ("latency vs cache size", _cache_sweep),
    "fig7": ("hit distance vs cache size", _cache_sweep),
    "fig8": ("cache hit ratio vs Zipf alpha", _alpha_sweep),
    "fig9": ("cache hit ratio vs catalog size", _catalog_sweep),
    "fig10": ("cache hit ratio vs community count", _community_sweep),
    "fig11": ("latency vs community count", _community_sweep),
    "fig12": ("cache hit ratio vs replacement policy", _replacement_sweep),
    "fig13": ("message overhead vs cache size", _cache_sweep),
}


def figure_plan(
    name: str,
    topology: str = "exodus",
    scale: str = "desk",
    repetitions: int = 10,
    seed_base: int = 0,
) -> ExperimentPlan:
    try:
        _, axes = RECIPES[name]
    except KeyError:
        raise ConfigError(
            f"unknown figure {name!r}; valid recipes: {', '.join(RECIPES)}"
        ) from None
    base = RunConfig(topology=topology).scaled(scale)
    return ExperimentPlan(base, tuple(axes(base, scale).items()), repetitions, seed_base)


def reproduce_figure(
    name: str,
    topology: str = "exodus",
    scale: str = "desk",
    repetitions: int = 10,
    workers: int | None = None,
    seed_base: int = 0,
) -> list[ResultRow]:
    """Run the sweep behind one figure."""
    return run_plan(figure_plan(name, topology, scale, repetitions, seed_base), workers)

