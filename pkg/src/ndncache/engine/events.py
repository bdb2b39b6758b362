"""Event queue and packet records."""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable

from ..topology import RoutePath

__all__ = ["INTEREST", "DATA", "CONTROL", "Packet", "CausalityError", "EventQueue"]

INTEREST = "interest"
DATA = "data"
CONTROL = "control"


@dataclass(slots=True)
class Packet:
    """Interest/Data/Control packet.

    ``leader_nodes`` lists the leaders already consulted on the way up, so
    only the first router of each community asks its leader. Control packets
    use the flag fields and ``forwarding_hint``/``cache_location``.
    """

    kind: str
    content_name: Hashable
    nonce: int
    leader_nodes: list[str] = field(default_factory=list)
    forwarding_hint: RoutePath | None = None
    content_search: bool = False
    availability: bool = False
    caching: bool = False
    cache_location: str | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "content_name": self.content_name,
            "nonce": self.nonce,
            "leader_nodes": list(self.leader_nodes),
            "forwarding_hint": None if self.forwarding_hint is None else list(self.forwarding_hint.nodes),
            "content_search": self.content_search,
            "availability": self.availability,
            "caching": self.caching,
            "cache_location": self.cache_location,
        }


class CausalityError(RuntimeError):
    """An event was scheduled before the current simulation time."""


class EventQueue:
    """Min-heap of ``(time, sequence, handler, args)``.

    The sequence number makes the pop order total, so equal-time events run
    in scheduling order.
    """

    __slots__ = ("_heap", "_seq", "now")

    def __init__(self):
        self._heap: list = []
        self._seq = 0
        self.now = 0.0

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, time: float, handler: Callable, *args: Any) -> None:
        if time < self.now:
            raise CausalityError(f"event at {time} scheduled at {self.now}")
        self._seq += 1
        heapq.heappush(self._heap, (time, self._seq, handler, args))

    def pop(self) -> tuple[float, int, Callable, tuple]:
        item = heapq.heappop(self._heap)
        self.now = item[0]
        return item
