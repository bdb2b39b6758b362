"""Per-run counters and the report derived from them."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

__all__ = ["MetricsAccumulator", "MetricsReport"]


class MetricsAccumulator:
    """Counters for measured (post warm-up) traffic only."""

    __slots__ = (
        "requests",
        "cache_hits",
        "source_hits",
        "latency_sum",
        "hops_sum",
        "interest_messages",
        "data_messages",
        "control_messages",
        "exchange_messages",
    )

    def __init__(self):
        for name in self.__slots__:
            setattr(self, name, 0)
        self.latency_sum = 0.0

    def record_delivery(self, from_cache: bool, latency: float, hops: int) -> None:
        self.requests += 1
        if from_cache:
            self.cache_hits += 1
        else:
            self.source_hits += 1
        self.latency_sum += latency
        self.hops_sum += hops

    @property
    def message_count(self) -> int:
        return (
            self.interest_messages
            + self.data_messages
            + self.control_messages
            + self.exchange_messages
        )


@dataclass(frozen=True)
class MetricsReport:
    """Outcome of one run.

    ``runtime_ms`` is simulated time from the first injection to the last
    event, which keeps reports bit-identical across repeated runs.
    """

    requests: int
    cache_hits: int
    source_hits: int
    cache_hit_ratio: float
    avg_latency_ms: float
    avg_hit_distance: float
    message_count: int
    interest_messages: int
    data_messages: int
    control_messages: int
    exchange_messages: int
    achieved_community_count: int
    community_target: int | None
    runtime_ms: float
    events: int

    @classmethod
    def from_accumulator(
        cls,
        acc: MetricsAccumulator,
        communities: int,
        target: int | None,
        runtime_ms: float,
        events: int,
    ) -> "MetricsReport":
        n = acc.requests
        return cls(
            requests=n,
            cache_hits=acc.cache_hits,
            source_hits=acc.source_hits,
            cache_hit_ratio=acc.cache_hits / n if n else 0.0,
            avg_latency_ms=acc.latency_sum / n if n else 0.0,
            avg_hit_distance=acc.hops_sum / n if n else 0.0,
            message_count=acc.message_count,
            interest_messages=acc.interest_messages,
            data_messages=acc.data_messages,
            control_messages=acc.control_messages,
            exchange_messages=acc.exchange_messages,
            achieved_community_count=communities,
            community_target=target,
            runtime_ms=runtime_ms,
            events=events,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)
