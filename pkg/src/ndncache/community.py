"""Router communities via Louvain modularity optimisation, plus leader election.

Community detection runs on the router subgraph with unit edge weights.
Consumers and sources join the community of the router they hang off.
"""
from __future__ import annotations

import json
import math
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping

from .topology import NetworkGraph

__all__ = [
    "CommunityParams",
    "CommunityAssignment",
    "community_count",
    "modularity",
    "louvain",
    "detect_communities",
    "betweenness_centrality",
    "select_leader",
]

# Gains below this are treated as zero so float noise cannot make nodes flap.
_MIN_GAIN = 1e-12
_TIE = 1e-9


@dataclass(frozen=True)
class CommunityParams:
    """How many communities to aim for.

    ``target`` wins over ``tau``; with neither set, Louvain runs once at the
    given ``resolution``.
    """

    tau: float | None = 0.15
    resolution: float = 1.0
    target: int | None = None
    resolution_bounds: tuple[float, float] = (0.1, 100.0)
    max_iterations: int = 30

    def __post_init__(self):
        if self.tau is not None and not 0 < self.tau <= 1:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        if self.target is not None and self.target < 1:
            raise ValueError("target community count must be >= 1")


@dataclass(frozen=True)
class CommunityAssignment:
    membership: dict[str, int]
    communities: list[tuple[str, ...]]
    leaders: dict[int, str]
    modularity_score: float
    resolution: float = 1.0
    target: int | None = None

    @property
    def count(self) -> int:
        return len(self.communities)

    def leader_of(self, node: str) -> str:
        return self.leaders[self.membership[node]]

    def to_document(self) -> dict:
        return {
            "communities": [list(c) for c in self.communities],
            "leaders": [self.leaders[i] for i in range(self.count)],
            "modularity": self.modularity_score,
            "resolution": self.resolution,
            "target": self.target,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_document(), indent=1)


def community_count(tau: float, node_count: int) -> int:
    """Number of communities to aim for: ``ceil(tau * node_count)``."""
    if tau <= 0 or node_count <= 0:
        raise ValueError("tau and node_count must be positive")
    # Guard against products like 0.15 * 100 = 15.000000000000002.
    return math.ceil(tau * node_count - 1e-9)


def _unit_adjacency(g: NetworkGraph) -> dict[str, dict[str, float]]:
    return {u: {v: 1.0 for v in g.neighbors(u)} for u in g.nodes}


def modularity(
    g: NetworkGraph | Mapping[str, Mapping[str, float]],
    membership: Mapping[str, int],
    resolution: float = 1.0,
) -> float:
    """Newman modularity of a partition, unit edge weights for NetworkGraph.

    ``g`` may also be a symmetric weighted adjacency mapping.
    """
    adj = _unit_adjacency(g) if isinstance(g, NetworkGraph) else g
    missing = [n for n in adj if n not in membership]
    if missing:
        raise ValueError(f"membership does not cover {missing[:3]}")
    two_m = sum(sum(nbrs.values()) for nbrs in adj.values())
    if two_m == 0:
        raise ValueError("modularity is undefined on an edgeless graph")
    m = two_m / 2
    inside: dict[int, float] = {}
    degree: dict[int, float] = {}
    for u, nbrs in adj.items():
        cu = membership[u]
        degree[cu] = degree.get(cu, 0.0) + sum(nbrs.values())
        for v, w in nbrs.items():
            if membership[v] == cu:
                inside[cu] = inside.get(cu, 0.0) + w
    q = 0.0
    for c, deg in degree.items():
        q += inside.get(c, 0.0) / two_m - resolution * (deg / two_m) ** 2
    return q


def _one_level(
    nbrs: list[list[tuple[int, float]]],
    degrees: list[float],
    order: list[int],
    m: float,
    resolution: float,
) -> tuple[list[int], bool]:
    n = len(degrees)
    node2com = list(range(n))
    stot = list(degrees)
    scale = 2.0 * m * m
    improved = False
    moved = True
    while moved:
        moved = False
        for u in order:
            ku = degrees[u]
            own = node2com[u]
            to_com: dict[int, float] = {}
            for v, w in nbrs[u]:
                if v != u:
                    c = node2com[v]
                    to_com[c] = to_com.get(c, 0.0) + w
            stot[own] -= ku
            remove_cost = -to_com.get(own, 0.0) / m + resolution * stot[own] * ku / scale
            best, best_gain = own, _MIN_GAIN
            for c, w in to_com.items():
                gain = remove_cost + w / m - resolution * stot[c] * ku / scale
                if gain > best_gain:
                    best, best_gain = c, gain
            stot[best] += ku
            if best != own:
                node2com[u] = best
                moved = improved = True
    return node2com, improved


def louvain(
    adj: Mapping[str, Mapping[str, float]],
    resolution: float = 1.0,
    seed: int | str | None = 0,
) -> dict[str, int]:
    """Two-phase Louvain: local moving, then aggregation, until nothing moves.

    Returns node -> community label; labels are contiguous and numbered by
    the smallest member id.
    """
    names = sorted(adj)
    if not names:
        raise ValueError("cannot partition an empty graph")
    index = {name: i for i, name in enumerate(names)}
    rng = random.Random(seed)
    # Current level: weighted adjacency over super-nodes, self-loops allowed.
    level: list[dict[int, float]] = [
        {index[v]: float(w) for v, w in adj[u].items()} for u in names
    ]
    m = sum(sum(row.values()) for row in level) / 2
    partition = list(range(len(names)))  # original node -> super-node
    if m == 0:
        return {name: i for i, name in enumerate(names)}
    while True:
        nbrs = [sorted(row.items()) for row in level]
        degrees = [sum(row.values()) + row.get(i, 0.0) for i, row in enumerate(level)]
        order = list(range(len(level)))
        rng.shuffle(order)
        node2com, improved = _one_level(nbrs, degrees, order, m, resolution)
        if not improved:
            break
        relabel: dict[int, int] = {}
        for c in node2com:
            relabel.setdefault(c, len(relabel))
        node2com = [relabel[c] for c in node2com]
        merged: list[dict[int, float]] = [{} for _ in relabel]
        for u, row in enumerate(level):
            cu = node2com[u]
            for v, w in row.items():
                if v < u:
                    continue
                cv = node2com[v]
                # Each undirected edge once; self-loop weight is the inner weight.
                if cu == cv:
                    merged[cu][cu] = merged[cu].get(cu, 0.0) + w
                else:
                    merged[cu][cv] = merged[cu].get(cv, 0.0) + w
                    merged[cv][cu] = merged[cv].get(cu, 0.0) + w
        level = merged
        partition = [node2com[p] for p in partition]
    groups: dict[int, list[str]] = {}
    for name, p in zip(names, partition):
        groups.setdefault(p, []).append(name)
    ordered = sorted(groups.values(), key=lambda members: members[0])
    return {name: cid for cid, members in enumerate(ordered) for name in members}


def betweenness_centrality(
    g: NetworkGraph | Mapping[str, Mapping[str, float]],
    nodes: set[str] | None = None,
) -> dict[str, float]:
    """Unnormalised shortest-path betweenness with unit edge weights.

    Counts each unordered pair once (Brandes accumulation, halved). When
    ``nodes`` is given the computation runs on the induced subgraph.
    """
    adj = _unit_adjacency(g) if isinstance(g, NetworkGraph) else g
    keep = set(adj) if nodes is None else set(nodes)
    if not keep:
        raise ValueError("betweenness of an empty subgraph")
    order = sorted(keep)
    nbrs = {u: sorted(v for v in adj[u] if v in keep and v != u) for u in order}
    bc = dict.fromkeys(order, 0.0)
    for s in order:
        stack = []
        preds: dict[str, list[str]] = {v: [] for v in order}
        sigma = dict.fromkeys(order, 0.0)
        sigma[s] = 1.0
        dist = {s: 0}
        queue = deque([s])
        while queue:
            v = queue.popleft()
            stack.append(v)
            for w in nbrs[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = dict.fromkeys(order, 0.0)
        while stack:
            w = stack.pop()
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
    return {v: b / 2 for v, b in bc.items()}


def _hop_distances(nbrs: Mapping[str, list[str]], src: str) -> dict[str, int]:
    dist = {src: 0}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v in nbrs[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def select_leader(g: NetworkGraph, community: set[str] | list[str] | tuple[str, ...]) -> str:
    """Highest betweenness inside the community.

    Ties go to the smallest mean hop distance to the other members, then to
    the smallest id.
    """
    members = set(community)
    if not members:
        raise ValueError("cannot elect a leader for an empty community")
    bc = betweenness_centrality(g, members)
    top = max(bc.values())
    tied = sorted(v for v, b in bc.items() if b >= top - _TIE)
    if len(tied) == 1:
        return tied[0]
    nbrs = {u: [v for v in g.neighbors(u) if v in members] for u in members}

    def mean_distance(v: str) -> float:
        dist = _hop_distances(nbrs, v)
        # Unreachable members count as |C| hops: worse than any real path.
        total = sum(dist.get(u, len(members)) for u in members if u != v)
        return total / max(1, len(members) - 1)

    means = {v: mean_distance(v) for v in tied}
    best = min(means.values())
    return min(v for v in tied if means[v] <= best + _TIE)


@dataclass
class _Trial:
    resolution: float
    labels: dict[str, int] = field(repr=False)
    count: int


def detect_communities(
    g: NetworkGraph,
    params: CommunityParams = CommunityParams(),
    seed: int | str | None = 0,
) -> CommunityAssignment:
    """Partition the routers of ``g`` and elect a leader per community.

    When a target count is implied (``params.target`` or ``params.tau``) the
    Louvain resolution is bisected (geometrically) inside
    ``params.resolution_bounds`` and the trial whose community count is
    closest to the target is kept. The target is ``ceil(tau * |V|)`` over
    all nodes of ``g``.
    """
    routers = g.routers
    if not routers:
        raise ValueError("cannot detect communities in an empty graph")
    rg = g.router_subgraph()
    adj = _unit_adjacency(rg)

    target = params.target
    if target is None and params.tau is not None:
        target = community_count(params.tau, len(g))

    def trial(resolution: float) -> _Trial:
        labels = louvain(adj, resolution, seed)
        return _Trial(resolution, labels, max(labels.values()) + 1)

    if target is None:
        chosen = trial(params.resolution)
    else:
        lo, hi = params.resolution_bounds
        chosen = trial(1.0)
        if chosen.count != target:
            for _ in range(params.max_iterations):
                mid = math.sqrt(lo * hi)
                t = trial(mid)
                if abs(t.count - target) < abs(chosen.count - target):
                    chosen = t
                if t.count == target:
                    break
                if t.count < target:
                    lo = mid
                else:
                    hi = mid

    groups: dict[int, list[str]] = {}
    for r in routers:
        groups.setdefault(chosen.labels[r], []).append(r)
    communities = [tuple(sorted(groups[c])) for c in range(chosen.count)]
    membership = dict(chosen.labels)
    for node in g.nodes:
        if node not in membership:
            membership[node] = chosen.labels[g.attached_router(node)]
    leaders = {cid: select_leader(rg, set(members)) for cid, members in enumerate(communities)}
    if rg.edge_count:
        score = modularity(adj, chosen.labels, chosen.resolution)
    else:
        score = 0.0
    return CommunityAssignment(
        membership=membership,
        communities=communities,
        leaders=leaders,
        modularity_score=score,
        resolution=chosen.resolution,
        target=target,
    )
