"""Request workload: Zipf content popularity and Poisson arrivals."""
from __future__ import annotations

import bisect
import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

__all__ = [
    "Workload",
    "ScheduledRequest",
    "zipf_pmf",
    "zipf_cdf",
    "zipf_sample",
    "request_schedule",
    "inject_requests",
]


@lru_cache(maxsize=32)
def zipf_pmf(catalog_size: int, alpha: float) -> tuple[float, ...]:
    """P(rank i) proportional to ``1 / i**alpha`` for ranks ``1..catalog_size``."""
    if catalog_size < 1:
        raise ValueError("catalog must hold at least one content")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    weights = [1.0 / i**alpha for i in range(1, catalog_size + 1)]
    total = sum(weights)
    return tuple(w / total for w in weights)


@lru_cache(maxsize=32)
def zipf_cdf(catalog_size: int, alpha: float) -> tuple[float, ...]:
    cdf = []
    acc = 0.0
    for p in zipf_pmf(catalog_size, alpha):
        acc += p
        cdf.append(acc)
    cdf[-1] = 1.0
    return tuple(cdf)


def zipf_sample(rng: random.Random, catalog_size: int, alpha: float) -> int:
    """Draw a content rank (1-based) by inverting the cumulative table."""
    cdf = zipf_cdf(catalog_size, alpha)
    return bisect.bisect_right(cdf, rng.random()) + 1


@dataclass(frozen=True)
class Workload:
    catalog_size: int
    alpha: float
    rate: float  # requests per second
    request_count: int
    warmup_count: int
    seed: int | str = 0

    @property
    def total(self) -> int:
        return self.request_count + self.warmup_count


@dataclass(frozen=True)
class ScheduledRequest:
    index: int
    time: float  # ms
    consumer: str
    name: int
    measured: bool


def request_schedule(w: Workload, consumers: Sequence[str]) -> Iterator[ScheduledRequest]:
    """Warm-up requests first, then measured ones; exponential gaps in ms."""
    if not consumers:
        raise ValueError("workload needs at least one consumer")
    rng = random.Random(f"workload:{w.seed}")
    cdf = zipf_cdf(w.catalog_size, w.alpha)
    per_ms = w.rate / 1000.0
    n_consumers = len(consumers)
    t = 0.0
    for i in range(w.total):
        t += rng.expovariate(per_ms)
        consumer = consumers[rng.randrange(n_consumers)]
        name = bisect.bisect_right(cdf, rng.random()) + 1
        yield ScheduledRequest(i, t, consumer, name, i >= w.warmup_count)


def inject_requests(w: Workload, queue, consumers: Sequence[str], handler) -> int:
    """Push one injection event per request onto ``queue``; returns the count."""
    n = 0
    for req in request_schedule(w, consumers):
        queue.push(req.time, handler, req)
        n += 1
    return n
