"""Caching decisions: the RED-style cooperative policy and its baselines.

The decision functions are pure apart from the ``beta`` counter on the
:class:`RedState` passed in. The engine owns all store mutations.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Hashable

from .cache import Thresholds
from .popularity import PTable

__all__ = [
    "BELOW_MIN",
    "MID_BAND",
    "ABOVE_MAX",
    "DUPLICATE",
    "REJECTED",
    "UNCONDITIONAL",
    "COIN_FLIP",
    "STRATEGY_NAMES",
    "RedState",
    "CacheDecision",
    "CommunityView",
    "red_probability",
    "banded_decision",
    "cpepc_decide",
    "pepc_decide",
    "lce_decide",
    "prob_decide",
    "StrategySpec",
]

Name = Hashable

BELOW_MIN = "below-min"
MID_BAND = "mid-band"
ABOVE_MAX = "above-max"
DUPLICATE = "duplicate"
REJECTED = "rejected"
UNCONDITIONAL = "unconditional"
COIN_FLIP = "coin-flip"

STRATEGY_NAMES = ("cpepc", "pepc", "lce", "prob")


@dataclass
class RedState:
    """Per-router admission state. ``beta`` counts mid-band refusals since
    the last time this router cached something."""

    thresholds: Thresholds
    p_max: float = 1.0
    beta: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_max <= 1.0:
            raise ValueError("p_max must lie in [0, 1]")


@dataclass(frozen=True)
class CacheDecision:
    cache: bool
    target: str | None
    reason: str
    p2: float | None = None

    def __post_init__(self):
        if self.cache and self.target is None:
            raise ValueError("a positive decision needs a target router")


@dataclass
class CommunityView:
    """What the deciding node knows about the candidate store."""

    in_community: bool
    average: float
    ptable: PTable = field(repr=False)


def red_probability(average: float, s: RedState) -> float:
    """Admission bar for the mid band.

    ``P1 = p_max * (A - min_th) / (max_th - min_th)`` and
    ``P2 = P1 / (1 - beta * P1)``, saturating at 1 once ``beta * P1 >= 1``.
    """
    th = s.thresholds
    span = th.max_th - th.min_th
    if span <= 0:
        raise ValueError("degenerate thresholds: min_th must be below max_th")
    p1 = s.p_max * (average - th.min_th) / span
    denom = 1.0 - s.beta * p1
    if denom <= 0.0:
        return 1.0
    return min(1.0, p1 / denom)


def banded_decision(
    name: Name, target: str, average: float, ptable: PTable, s: RedState
) -> CacheDecision:
    """Three occupancy bands: cache freely, cache if popular enough relative
    to the table's hottest name, or cache only above-average names."""
    th = s.thresholds
    if average < th.min_th:
        decision = CacheDecision(True, target, BELOW_MIN)
    elif average < th.max_th:
        p2 = red_probability(average, s)
        ok = ptable.relative_popularity(name) >= p2
        decision = CacheDecision(ok, target if ok else None, MID_BAND, p2)
        if not ok:
            s.beta += 1
    else:
        ok = ptable.popularity(name) >= ptable.threshold()
        decision = CacheDecision(ok, target if ok else None, ABOVE_MAX)
    if decision.cache:
        s.beta = 0
    return decision


def cpepc_decide(name: Name, candidate: str, view: CommunityView, s: RedState) -> CacheDecision:
    """Leader-side decision for one community on the Data path."""
    if view.in_community:
        return CacheDecision(False, None, DUPLICATE)
    return banded_decision(name, candidate, view.average, view.ptable, s)


def pepc_decide(
    name: Name, router: str, average: float, local: PTable, s: RedState, holds: bool = False
) -> CacheDecision:
    """Same bands, evaluated by one router on its own occupancy and counts."""
    if holds:
        return CacheDecision(False, None, DUPLICATE)
    return banded_decision(name, router, average, local, s)


def lce_decide(name: Name, router: str, holds: bool = False) -> CacheDecision:
    if holds:
        return CacheDecision(False, None, DUPLICATE)
    return CacheDecision(True, router, UNCONDITIONAL)


def prob_decide(
    name: Name, router: str, p: float, rng: random.Random, holds: bool = False
) -> CacheDecision:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if holds:
        return CacheDecision(False, None, DUPLICATE)
    ok = rng.random() < p
    return CacheDecision(ok, router if ok else None, COIN_FLIP)


@dataclass(frozen=True)
class StrategySpec:
    """A strategy key plus its parameter block, e.g. ``prob`` with ``{"p": 0.5}``."""

    name: str
    params: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        if not self.name or not isinstance(self.name, str):
            raise ValueError(f"strategy name must be a non-empty string, got {self.name!r}")
        if self.name == "prob" and not 0.0 <= self.p <= 1.0:
            raise ValueError(f"prob strategy needs p in [0, 1], got {self.p}")

    @classmethod
    def parse(cls, value: "str | dict | StrategySpec", params: dict | None = None) -> "StrategySpec":
        if isinstance(value, StrategySpec):
            return value
        if isinstance(value, dict):
            value = dict(value)
            name = value.pop("name")
            merged = {**(params or {}), **value}
        else:
            name, merged = value, dict(params or {})
        if name == "prob":
            merged.setdefault("p", 0.5)
        elif name in STRATEGY_NAMES:
            merged = {}
        return cls(name, tuple(sorted((k, float(v)) for k, v in merged.items())))

    @property
    def p(self) -> float:
        return dict(self.params).get("p", 0.5)

    @property
    def label(self) -> str:
        if self.name == "prob":
            return f"prob({self.p:g})"
        return self.name

    def to_dict(self) -> dict:
        return {"name": self.name, **dict(self.params)}
