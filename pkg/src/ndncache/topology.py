"""Network topologies: loading, validation, endpoint attachment and routing.

A topology document is plain JSON::

    {"nodes": [{"id": "r1", "role": "router"}, ...],
     "edges": [{"a": "r1", "b": "r2", "delay_ms": 4.0}, ...]}

Routers form a connected core. Consumers and sources are artificial
degree-one nodes hanging off a router through a zero-delay link.
"""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Mapping

__all__ = [
    "ROUTER",
    "CONSUMER",
    "SOURCE",
    "ROLES",
    "TopologyError",
    "TopologyParseError",
    "TopologyValidationError",
    "UnreachableError",
    "NetworkGraph",
    "RoutePath",
    "RouteTable",
    "load_topology",
    "loads_topology",
    "dump_topology",
    "bundled_topologies",
    "load_bundled",
    "resolve_topology",
    "attach_endpoints",
    "shortest_path",
    "all_pairs_routes",
]

ROUTER = "router"
CONSUMER = "consumer"
SOURCE = "source"
ROLES = (ROUTER, CONSUMER, SOURCE)

_BUNDLED = {
    "desk12": "desk12.json",
    "exodus": "exodus.json",
    "abovenet": "abovenet.json",
}


class TopologyError(ValueError):
    """Base class for topology problems."""


class TopologyParseError(TopologyError):
    """The document is not well-formed JSON of the expected shape."""


class TopologyValidationError(TopologyError):
    """The document parsed but describes an invalid network."""


class UnreachableError(TopologyError):
    """No path exists between two nodes."""


class NetworkGraph:
    """Undirected, delay-weighted graph of routers, consumers and sources.

    Instances are treated as immutable once built; all mutation happens in
    the constructor. Node ids are strings.
    """

    __slots__ = ("_roles", "_adj", "_routes")

    def __init__(
        self,
        roles: Mapping[str, str],
        edges: Iterable[tuple[str, str, float]],
        validate: bool = True,
    ):
        self._roles: dict[str, str] = dict(roles)
        self._adj: dict[str, dict[str, float]] = {n: {} for n in self._roles}
        self._routes: RouteTable | None = None
        for a, b, delay in edges:
            if a not in self._adj or b not in self._adj:
                missing = a if a not in self._adj else b
                raise TopologyValidationError(f"edge references unknown node {missing!r}")
            if a == b:
                raise TopologyValidationError(f"self-loop on {a!r}")
            if b in self._adj[a]:
                raise TopologyValidationError(f"parallel edge {a!r}-{b!r}")
            delay = float(delay)
            if not math.isfinite(delay) or delay < 0:
                raise TopologyValidationError(f"edge {a!r}-{b!r} has invalid delay {delay!r}")
            self._adj[a][b] = delay
            self._adj[b][a] = delay
        if validate:
            self._validate()

    def _validate(self) -> None:
        for node, role in self._roles.items():
            if role not in ROLES:
                raise TopologyValidationError(f"node {node!r} has unknown role {role!r}")
            if role == ROUTER:
                continue
            nbrs = self._adj[node]
            if len(nbrs) != 1:
                raise TopologyValidationError(
                    f"{role} {node!r} must have degree 1, has {len(nbrs)}"
                )
            (router, delay), = nbrs.items()
            if self._roles[router] != ROUTER:
                raise TopologyValidationError(f"{role} {node!r} is not attached to a router")
            if delay != 0:
                raise TopologyValidationError(f"artificial link {node!r}-{router!r} must have delay 0")
        routers = self.routers
        if not routers:
            raise TopologyValidationError("topology has no routers")
        seen = {routers[0]}
        stack = [routers[0]]
        while stack:
            u = stack.pop()
            for v in self._adj[u]:
                if v not in seen and self._roles[v] == ROUTER:
                    seen.add(v)
                    stack.append(v)
        if len(seen) != len(routers):
            raise TopologyValidationError(
                f"router subgraph is disconnected ({len(seen)} of {len(routers)} reachable)"
            )

    # -- basic accessors -------------------------------------------------

    def __contains__(self, node: object) -> bool:
        return node in self._roles

    def __len__(self) -> int:
        return len(self._roles)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NetworkGraph):
            return NotImplemented
        return self._roles == other._roles and self._adj == other._adj

    def __hash__(self) -> int:
        return hash((len(self._roles), self.edge_count))

    def __repr__(self) -> str:
        return (
            f"NetworkGraph(routers={len(self.routers)}, consumers={len(self.consumers)}, "
            f"sources={len(self.sources)}, edges={self.edge_count})"
        )

    @property
    def nodes(self) -> list[str]:
        return sorted(self._roles)

    def role(self, node: str) -> str:
        return self._roles[node]

    @property
    def roles(self) -> dict[str, str]:
        return dict(self._roles)

    def _with_role(self, role: str) -> list[str]:
        return sorted(n for n, r in self._roles.items() if r == role)

    @property
    def routers(self) -> list[str]:
        return self._with_role(ROUTER)

    @property
    def consumers(self) -> list[str]:
        return self._with_role(CONSUMER)

    @property
    def sources(self) -> list[str]:
        return self._with_role(SOURCE)

    def neighbors(self, node: str) -> dict[str, float]:
        """Neighbour -> link delay (ms). Returns a copy."""
        return dict(self._adj[node])

    def degree(self, node: str) -> int:
        return len(self._adj[node])

    def delay(self, u: str, v: str) -> float:
        return self._adj[u][v]

    def has_edge(self, u: str, v: str) -> bool:
        return v in self._adj.get(u, ())

    def edges(self) -> Iterator[tuple[str, str, float]]:
        """Each undirected edge once, as ``(a, b, delay)`` with ``a < b``."""
        for a in sorted(self._adj):
            for b in sorted(self._adj[a]):
                if a < b:
                    yield a, b, self._adj[a][b]

    @property
    def edge_count(self) -> int:
        return sum(len(n) for n in self._adj.values()) // 2

    def attached_router(self, endpoint: str) -> str:
        """The router a consumer or source hangs off."""
        if self._roles[endpoint] == ROUTER:
            raise ValueError(f"{endpoint!r} is a router")
        return next(iter(self._adj[endpoint]))

    def router_subgraph(self) -> "NetworkGraph":
        routers = set(self.routers)
        return NetworkGraph(
            {r: ROUTER for r in routers},
            ((a, b, d) for a, b, d in self.edges() if a in routers and b in routers),
        )

    def routes(self) -> "RouteTable":
        """All-pairs route table, computed once and memoised."""
        if self._routes is None:
            self._routes = all_pairs_routes(self)
        return self._routes

    # -- serialisation ---------------------------------------------------

    def to_document(self) -> dict:
        return {
            "nodes": [{"id": n, "role": self._roles[n]} for n in self.nodes],
            "edges": [{"a": a, "b": b, "delay_ms": d} for a, b, d in self.edges()],
        }


def _from_document(doc: object) -> NetworkGraph:
    if not isinstance(doc, dict) or "nodes" not in doc or "edges" not in doc:
        raise TopologyParseError("topology document needs 'nodes' and 'edges'")
    roles: dict[str, str] = {}
    try:
        for entry in doc["nodes"]:
            node_id, role = entry["id"], entry["role"]
            if not isinstance(node_id, str):
                raise TopologyParseError(f"node id {node_id!r} is not a string")
            if node_id in roles:
                raise TopologyValidationError(f"duplicate node id {node_id!r}")
            roles[node_id] = role
        edges = [(e["a"], e["b"], e["delay_ms"]) for e in doc["edges"]]
    except (KeyError, TypeError) as exc:
        raise TopologyParseError(f"malformed topology entry: {exc}") from exc
    for _, _, delay in edges:
        if isinstance(delay, bool) or not isinstance(delay, (int, float)):
            raise TopologyParseError(f"delay_ms must be a number, got {delay!r}")
    return NetworkGraph(roles, edges)


def loads_topology(text: str) -> NetworkGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TopologyParseError(f"invalid JSON: {exc}") from exc
    return _from_document(doc)


def load_topology(path: str | Path) -> NetworkGraph:
    """Read and validate a topology document from disk."""
    return loads_topology(Path(path).read_text())


def dump_topology(g: NetworkGraph, path: str | Path | None = None) -> str:
    text = json.dumps(g.to_document(), indent=1)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def bundled_topologies() -> list[str]:
    return sorted(_BUNDLED)


def load_bundled(name: str) -> NetworkGraph:
    try:
        filename = _BUNDLED[name]
    except KeyError:
        raise TopologyError(
            f"unknown bundled topology {name!r}; choose from {', '.join(bundled_topologies())}"
        ) from None
    text = resources.files("ndncache").joinpath("data", filename).read_text()
    return loads_topology(text)


def resolve_topology(spec: str | Path) -> NetworkGraph:
    """Load a bundled topology by name, otherwise treat ``spec`` as a path."""
    if isinstance(spec, str) and spec in _BUNDLED:
        return load_bundled(spec)
    return load_topology(spec)


def attach_endpoints(g: NetworkGraph, source_fraction: float = 0.05) -> NetworkGraph:
    """Attach one consumer per router and sources at the best-connected routers.

    The source count is ``floor(source_fraction * routers)``, at least one.
    Sources go to the routers with the highest degree, ties broken by id.
    """
    if len(g) == 0:
        raise TopologyValidationError("cannot attach endpoints to an empty graph")
    if not 0 < source_fraction <= 1:
        raise ValueError("source_fraction must lie in (0, 1]")
    routers = g.routers
    if len(routers) != len(g):
        raise TopologyValidationError("attach_endpoints expects a router-only graph")
    n_sources = max(1, math.floor(source_fraction * len(routers) + 1e-9))
    by_degree = sorted(routers, key=lambda r: (-g.degree(r), r))
    roles = g.roles
    edges = list(g.edges())
    for r in routers:
        roles[f"consumer-{r}"] = CONSUMER
        edges.append((f"consumer-{r}", r, 0.0))
    for r in by_degree[:n_sources]:
        roles[f"source-{r}"] = SOURCE
        edges.append((f"source-{r}", r, 0.0))
    return NetworkGraph(roles, edges)


@dataclass(frozen=True)
class RoutePath:
    nodes: tuple[str, ...]
    delay: float

    @property
    def hops(self) -> int:
        return len(self.nodes) - 1

    @property
    def src(self) -> str:
        return self.nodes[0]

    @property
    def dst(self) -> str:
        return self.nodes[-1]


def _dijkstra(g: NetworkGraph, src: str) -> dict[str, tuple[float, int, tuple[str, ...]]]:
    # Labels are (delay, hops, path); tuple order gives the tie-break for free.
    adj = g._adj
    best: dict[str, tuple[float, int, tuple[str, ...]]] = {}
    heap = [(0.0, 0, (src,))]
    while heap:
        delay, hops, path = heapq.heappop(heap)
        u = path[-1]
        if u in best:
            continue
        best[u] = (delay, hops, path)
        for v, d in adj[u].items():
            if v not in best:
                heapq.heappush(heap, (delay + d, hops + 1, path + (v,)))
    return best


def shortest_path(g: NetworkGraph, src: str, dst: str) -> RoutePath:
    """Minimum-delay path; ties go to fewer hops, then the smaller id sequence."""
    for node in (src, dst):
        if node not in g:
            raise KeyError(node)
    if g._routes is not None:
        return g._routes.path(src, dst)
    labels = _dijkstra(g, src)
    if dst not in labels:
        raise UnreachableError(f"{dst!r} is unreachable from {src!r}")
    delay, _, path = labels[dst]
    return RoutePath(path, delay)


class RouteTable:
    """Precomputed shortest paths between every ordered pair of nodes."""

    def __init__(self, paths: dict[str, dict[str, RoutePath]]):
        self._paths = paths
        self._next = {
            u: {v: p.nodes[1] for v, p in row.items() if v != u} for u, row in paths.items()
        }
        self._delay = {u: {v: p.delay for v, p in row.items()} for u, row in paths.items()}
        self._hops = {u: {v: p.hops for v, p in row.items()} for u, row in paths.items()}

    def path(self, u: str, v: str) -> RoutePath:
        try:
            return self._paths[u][v]
        except KeyError:
            raise UnreachableError(f"{v!r} is unreachable from {u!r}") from None

    def next_hop(self, u: str, v: str) -> str:
        return self._next[u][v]

    def delay(self, u: str, v: str) -> float:
        return self._delay[u][v]

    def hops(self, u: str, v: str) -> int:
        return self._hops[u][v]

    def __len__(self) -> int:
        return sum(len(row) for row in self._next.values())

    def entries(self) -> Iterator[tuple[str, str, str]]:
        """``(source, destination, next hop)`` for every ordered pair."""
        for u in sorted(self._next):
            for v in sorted(self._next[u]):
                yield u, v, self._next[u][v]


def all_pairs_routes(g: NetworkGraph) -> RouteTable:
    paths: dict[str, dict[str, RoutePath]] = {}
    for src in g.nodes:
        labels = _dijkstra(g, src)
        paths[src] = {dst: RoutePath(path, delay) for dst, (delay, _, path) in labels.items()}
    return RouteTable(paths)
