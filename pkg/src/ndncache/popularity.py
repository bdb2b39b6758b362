"""Leader popularity tables: per-period request counters and EWMA popularity.

Each leader counts requests it sees locally (``local``), learns the other
leaders' local counts at every period boundary (``global_``), and folds the
period's global count into an exponentially weighted popularity score.
"""
from __future__ import annotations

import json
from typing import Hashable, Iterable

__all__ = [
    "PRUNE_BELOW",
    "PTableEntry",
    "PTable",
    "update_popularity",
    "popularity_threshold",
    "relative_popularity",
]

Name = Hashable

# Idle entries whose popularity decays below this are dropped.
PRUNE_BELOW = 1e-6


class PTableEntry:
    __slots__ = ("local", "global_", "popularity")

    def __init__(self, local: int = 0, global_: int = 0, popularity: float = 0.0):
        self.local = local
        self.global_ = global_
        self.popularity = popularity

    def __repr__(self) -> str:
        return f"PTableEntry(L_f={self.local}, G_f={self.global_}, P={self.popularity!r})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PTableEntry):
            return NotImplemented
        return (self.local, self.global_, self.popularity) == (
            other.local,
            other.global_,
            other.popularity,
        )


def update_popularity(entry: PTableEntry, lam: float) -> None:
    """EWMA step ``P <- lam * P + (1 - lam) * G_f``, then reset both counters."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    entry.popularity = lam * entry.popularity + (1.0 - lam) * entry.global_
    entry.local = 0
    entry.global_ = 0


class PTable:
    """Popularity table owned by one leader (or, for PePC, one router).

    The sum and maximum of popularity are cached; popularity only changes in
    :meth:`end_period`, so both stay exact between period boundaries.
    """

    def __init__(self, owner: str | None = None):
        self.owner = owner
        self.entries: dict[Name, PTableEntry] = {}
        self.period_index = 0
        self._sum_p = 0.0
        self._max_p = 0.0

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, name: object) -> bool:
        return name in self.entries

    def __getitem__(self, name: Name) -> PTableEntry:
        return self.entries[name]

    def record_request(self, name: Name) -> None:
        entry = self.entries.get(name)
        if entry is None:
            self.entries[name] = PTableEntry(local=1)
        else:
            entry.local += 1

    def local_counts(self) -> dict[Name, int]:
        """Snapshot of ``L_f`` as sent to the other leaders."""
        return {name: e.local for name, e in self.entries.items() if e.local}

    def merge_remote(self, remotes: Iterable["PTable | dict[Name, int]"]) -> None:
        """``G_f = L_f + sum of remote L_f`` for every name seen anywhere."""
        entries = self.entries
        for entry in entries.values():
            entry.global_ = entry.local
        for remote in remotes:
            counts = remote.local_counts() if isinstance(remote, PTable) else remote
            for name, count in counts.items():
                entry = entries.get(name)
                if entry is None:
                    entries[name] = PTableEntry(local=0, global_=count)
                else:
                    entry.global_ += count

    def end_period(self, lam: float) -> None:
        """Fold ``G_f`` into popularity for every entry, reset, prune idle ones."""
        if not 0.0 <= lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {lam}")
        keep = 1.0 - lam
        stale = []
        total = 0.0
        peak = 0.0
        # Same step as update_popularity, inlined: this loop dominates run time.
        for name, entry in self.entries.items():
            g = entry.global_
            idle = g == 0 and entry.local == 0
            p = entry.popularity = lam * entry.popularity + keep * g
            entry.local = entry.global_ = 0
            if idle and p < PRUNE_BELOW:
                stale.append(name)
                continue
            total += p
            if p > peak:
                peak = p
        for name in stale:
            del self.entries[name]
        self._sum_p = total
        self._max_p = peak
        self.period_index += 1

    def popularity(self, name: Name) -> float:
        entry = self.entries.get(name)
        return 0.0 if entry is None else entry.popularity

    def threshold(self) -> float:
        """Dynamic popularity threshold: mean popularity over all entries."""
        if not self.entries:
            return 0.0
        return self._sum_p / len(self.entries)

    def max_popularity(self) -> float:
        return self._max_p

    def relative_popularity(self, name: Name) -> float:
        """``P(name) / max P`` in [0, 1]; 0 for unknown names or an all-zero table."""
        entry = self.entries.get(name)
        if entry is None or self._max_p <= 0.0:
            return 0.0
        return entry.popularity / self._max_p

    def set_popularity(self, name: Name, value: float) -> None:
        """Overwrite one popularity score (tests, warm starts)."""
        if value < 0:
            raise ValueError("popularity must be non-negative")
        entry = self.entries.setdefault(name, PTableEntry())
        entry.popularity = float(value)
        self._sum_p = sum(e.popularity for e in self.entries.values())
        self._max_p = max(e.popularity for e in self.entries.values())

    def snapshot(self) -> list[dict]:
        return [
            {"name": name, "L_f": e.local, "G_f": e.global_, "P": e.popularity}
            for name, e in sorted(self.entries.items(), key=lambda kv: str(kv[0]))
        ]

    def to_json(self) -> str:
        return json.dumps(self.snapshot())


def popularity_threshold(table: PTable) -> float:
    return table.threshold()


def relative_popularity(table: PTable, name: Name) -> float:
    return table.relative_popularity(name)

