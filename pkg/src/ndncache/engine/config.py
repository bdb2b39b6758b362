"""Run configuration and its JSON form."""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..cache import REPLACEMENT_POLICIES
from ..policy import StrategySpec

__all__ = ["ConfigError", "RunConfig", "DESK_SCALE", "PAPER_SCALE"]


class ConfigError(ValueError):
    pass


# catalog, measured requests, warm-up requests
PAPER_SCALE = (10_000, 100_000, 50_000)
DESK_SCALE = (1_000, 10_000, 5_000)

# JSON keys that differ from attribute names.
_ALIASES = {"lambda": "lam"}
_REVERSE = {v: k for k, v in _ALIASES.items()}


@dataclass(frozen=True)
class RunConfig:
    """Everything one simulation run needs. Defaults are the full-size (``"paper"`` scale) setup."""

    topology: str = "exodus"
    strategy: StrategySpec = field(default_factory=lambda: StrategySpec("cpepc"))
    replacement: str = "lru"
    cache_fraction: float = 0.001
    cache_slots: int | None = None
    catalog_size: int = PAPER_SCALE[0]
    alpha: float = 0.8
    rate: float = 10.0
    request_count: int = PAPER_SCALE[1]
    warmup_count: int = PAPER_SCALE[2]
    period_s: float = 10.0
    tau: float | None = 0.15
    community_target: int | None = None
    rho1: float = 0.2
    rho2: float = 0.6
    p_max: float = 1.0
    lam: float = 0.125
    omega: float = 0.125
    source_fraction: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.strategy, StrategySpec):
            object.__setattr__(self, "strategy", StrategySpec.parse(self.strategy))
        problems = []
        if self.replacement not in REPLACEMENT_POLICIES:
            problems.append(f"replacement must be one of {REPLACEMENT_POLICIES}")
        if self.cache_slots is None and not self.cache_fraction > 0:
            problems.append("cache_fraction must be positive")
        if self.cache_slots is not None and self.cache_slots < 1:
            problems.append("cache_slots must be >= 1")
        if self.catalog_size < 1:
            problems.append("catalog_size must be >= 1")
        if self.alpha < 0:
            problems.append("alpha must be >= 0")
        if not self.rate > 0:
            problems.append("rate must be positive")
        if self.request_count < 1 or self.warmup_count < 0:
            problems.append("need request_count >= 1 and warmup_count >= 0")
        if not self.period_s > 0:
            problems.append("period_s must be positive")
        if self.tau is not None and not 0 < self.tau <= 1:
            problems.append("tau must lie in (0, 1]")
        if self.community_target is not None and self.community_target < 1:
            problems.append("community_target must be >= 1")
        if not 0 <= self.rho1 < self.rho2 <= 1:
            problems.append("need 0 <= rho1 < rho2 <= 1")
        for key in ("p_max", "lam", "omega"):
            if not 0 <= getattr(self, key) <= 1:
                problems.append(f"{_REVERSE.get(key, key)} must lie in [0, 1]")
        if not 0 < self.source_fraction <= 1:
            problems.append("source_fraction must lie in (0, 1]")
        if problems:
            raise ConfigError("; ".join(problems))

    @property
    def capacity(self) -> int:
        """Slots per router: explicit, or the catalog fraction rounded half up (min 1)."""
        if self.cache_slots is not None:
            return int(self.cache_slots)
        return max(1, math.floor(self.cache_fraction * self.catalog_size + 0.5 + 1e-9))

    def replace(self, **changes) -> "RunConfig":
        if "strategy" in changes:
            changes["strategy"] = StrategySpec.parse(
                changes["strategy"], dict(self.strategy.params)
            )
        return dataclasses.replace(self, **changes)

    def scaled(self, scale: str) -> "RunConfig":
        sizes = {"desk": DESK_SCALE, "paper": PAPER_SCALE}.get(scale)
        if sizes is None:
            raise ConfigError(f"unknown scale {scale!r}; choose 'desk' or 'paper'")
        catalog, requests, warmup = sizes
        return self.replace(catalog_size=catalog, request_count=requests, warmup_count=warmup)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        doc = dict(doc)
        names = {f.name for f in dataclasses.fields(cls)}
        params = doc.pop("strategy_params", None) or {}
        kwargs = {}
        for key, value in doc.items():
            attr = _ALIASES.get(key, key)
            if attr not in names:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[attr] = value
        try:
            kwargs["strategy"] = StrategySpec.parse(kwargs.get("strategy", "cpepc"), params)
            if "topology" in kwargs:
                kwargs["topology"] = str(kwargs["topology"])
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        topo = doc.get("topology")
        if isinstance(topo, str) and topo.endswith(".json") and not Path(topo).is_absolute():
            candidate = path.parent / topo
            if candidate.exists():
                doc["topology"] = str(candidate)
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name == "strategy":
                out["strategy"] = value.name
                out["strategy_params"] = dict(value.params)
            else:
                out[_REVERSE.get(f.name, f.name)] = value
        return out
