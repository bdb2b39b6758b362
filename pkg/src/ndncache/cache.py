"""Bounded content stores with LRU, Random and Perfect-LFU replacement.

Contents are unit sized, so capacity and occupancy are object counts.
"""
from __future__ import annotations

import random
from collections import OrderedDict
from dataclasses import dataclass
from typing import Hashable, Iterator

__all__ = [
    "REPLACEMENT_POLICIES",
    "ContentStore",
    "LRUStore",
    "RandomStore",
    "PLFUStore",
    "make_store",
    "OccupancyTracker",
    "update_avg_occupancy",
    "Thresholds",
    "compute_thresholds",
]

Name = Hashable


class ContentStore:
    """Common interface. ``lookup`` is a request (it touches replacement
    state); ``in`` is a passive membership test."""

    policy = ""

    def __init__(self, capacity: int):
        if capacity < 0:
            raise ValueError("capacity must be non-negative")
        self.capacity = int(capacity)

    def __len__(self) -> int:
        raise NotImplementedError

    def __contains__(self, name: object) -> bool:
        raise NotImplementedError

    def __iter__(self) -> Iterator[Name]:
        raise NotImplementedError

    def lookup(self, name: Name) -> bool:
        raise NotImplementedError

    def insert(self, name: Name) -> Name | None:
        """Store ``name``; return the evicted name, if any.

        Inserting a name already present is a no-op. A store that declines
        the content (capacity 0, PLFU admission) is left unchanged; use
        ``name in store`` afterwards to tell a rejection from a plain insert.
        """
        raise NotImplementedError

    def remove(self, name: Name) -> bool:
        raise NotImplementedError

    @property
    def full(self) -> bool:
        return len(self) >= self.capacity

    def dump(self) -> list:
        return sorted(self, key=str)


class LRUStore(ContentStore):
    policy = "lru"

    def __init__(self, capacity: int):
        super().__init__(capacity)
        self._items: OrderedDict = OrderedDict()

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, name: object) -> bool:
        return name in self._items

    def __iter__(self) -> Iterator[Name]:
        return iter(self._items)

    def lookup(self, name: Name) -> bool:
        if name in self._items:
            self._items.move_to_end(name)
            return True
        return False

    def insert(self, name: Name) -> Name | None:
        items = self._items
        if name in items or self.capacity == 0:
            return None
        evicted = None
        if len(items) >= self.capacity:
            evicted, _ = items.popitem(last=False)
        items[name] = None
        return evicted

    def remove(self, name: Name) -> bool:
        if name in self._items:
            del self._items[name]
            return True
        return False

    def recency(self) -> list[Name]:
        """Least recently used first."""
        return list(self._items)


class RandomStore(ContentStore):
    policy = "random"

    def __init__(self, capacity: int, rng: random.Random | None = None):
        super().__init__(capacity)
        self.rng = rng if rng is not None else random.Random(0)
        self._slots: list[Name] = []
        self._where: dict[Name, int] = {}

    def __len__(self) -> int:
        return len(self._slots)

    def __contains__(self, name: object) -> bool:
        return name in self._where

    def __iter__(self) -> Iterator[Name]:
        return iter(self._slots)

    def lookup(self, name: Name) -> bool:
        return name in self._where

    def _drop_at(self, i: int) -> Name:
        slots, where = self._slots, self._where
        victim = slots[i]
        last = slots.pop()
        if i < len(slots):
            slots[i] = last
            where[last] = i
        del where[victim]
        return victim

    def insert(self, name: Name) -> Name | None:
        if name in self._where or self.capacity == 0:
            return None
        evicted = None
        if len(self._slots) >= self.capacity:
            evicted = self._drop_at(self.rng.randrange(len(self._slots)))
        self._where[name] = len(self._slots)
        self._slots.append(name)
        return evicted

    def remove(self, name: Name) -> bool:
        i = self._where.get(name)
        if i is None:
            return False
        self._drop_at(i)
        return True


class PLFUStore(ContentStore):
    """Perfect LFU: counts every request seen, cached or not.

    A full store admits a newcomer only if its count strictly exceeds the
    smallest count among cached entries; that entry is evicted (ties go to
    the smallest name).
    """

    policy = "plfu"

    def __init__(self, capacity: int):
        super().__init__(capacity)
        self.counters: dict[Name, int] = {}
        self._items: set[Name] = set()

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, name: object) -> bool:
        return name in self._items

    def __iter__(self) -> Iterator[Name]:
        return iter(sorted(self._items, key=str))

    def lookup(self, name: Name) -> bool:
        self.counters[name] = self.counters.get(name, 0) + 1
        return name in self._items

    def insert(self, name: Name) -> Name | None:
        items = self._items
        if name in items or self.capacity == 0:
            return None
        if len(items) < self.capacity:
            items.add(name)
            return None
        counters = self.counters
        victim = min(items, key=lambda n: (counters.get(n, 0), n))
        if counters.get(name, 0) <= counters.get(victim, 0):
            return None
        items.remove(victim)
        items.add(name)
        return victim

    def remove(self, name: Name) -> bool:
        if name in self._items:
            self._items.remove(name)
            return True
        return False


REPLACEMENT_POLICIES = ("lru", "random", "plfu")


def make_store(policy: str, capacity: int, rng: random.Random | None = None) -> ContentStore:
    if policy == "lru":
        return LRUStore(capacity)
    if policy == "random":
        return RandomStore(capacity, rng)
    if policy == "plfu":
        return PLFUStore(capacity)
    raise ValueError(f"unknown replacement policy {policy!r}; choose from {REPLACEMENT_POLICIES}")


class OccupancyTracker:
    """EWMA of a store's occupancy: ``A <- (1 - w) * A + w * occupancy``."""

    __slots__ = ("store", "weight", "average")

    def __init__(self, store: ContentStore, weight: float = 0.125, average: float = 0.0):
        if not 0.0 <= weight <= 1.0:
            raise ValueError("weight must lie in [0, 1]")
        self.store = store
        self.weight = weight
        self.average = average

    @property
    def current(self) -> int:
        return len(self.store)

    def update(self) -> float:
        w = self.weight
        self.average = (1.0 - w) * self.average + w * len(self.store)
        return self.average


def update_avg_occupancy(average: float, current: float, weight: float) -> float:
    """One EWMA step on raw numbers."""
    if not 0.0 <= weight <= 1.0:
        raise ValueError("weight must lie in [0, 1]")
    return (1.0 - weight) * average + weight * current


@dataclass(frozen=True)
class Thresholds:
    min_th: float
    max_th: float
    capacity: int
    rho1: float
    rho2: float


def compute_thresholds(capacity: int, rho1: float, rho2: float) -> Thresholds:
    """``min_th = rho1 * S`` and ``max_th = rho2 * S``."""
    if not 0.0 <= rho1 < rho2 <= 1.0:
        raise ValueError(f"need 0 <= rho1 < rho2 <= 1, got rho1={rho1}, rho2={rho2}")
    return Thresholds(rho1 * capacity, rho2 * capacity, capacity, rho1, rho2)
