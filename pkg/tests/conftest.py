"""Shared fixtures and brute-force oracles."""
from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import HealthCheck, settings

from ndncache.topology import CONSUMER, ROUTER, SOURCE, NetworkGraph

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def router_graph(edges, extra_nodes=()):
    nodes = {n for a, b, _ in edges for n in (a, b)} | set(extra_nodes)
    return NetworkGraph({n: ROUTER for n in nodes}, edges)


def random_connected_graph(rng: random.Random, n: int, p: float = 0.4, max_delay: int = 9):
    """Random spanning tree plus extra edges; integer delays so ties happen."""
    names = [f"n{i}" for i in range(n)]
    edges = {}
    for i in range(1, n):
        j = rng.randrange(i)
        edges[(names[j], names[i])] = rng.randint(0, max_delay)
    for i, j in itertools.combinations(range(n), 2):
        key = (names[i], names[j])
        if key not in edges and rng.random() < p:
            edges[key] = rng.randint(0, max_delay)
    return router_graph([(a, b, float(d)) for (a, b), d in edges.items()], names)


def simple_paths(g: NetworkGraph, src: str, dst: str):
    """Every simple path from ``src`` to ``dst`` (small graphs only)."""
    stack = [(src, (src,))]
    while stack:
        u, path = stack.pop()
        if u == dst:
            yield path
            continue
        for v in g.neighbors(u):
            if v not in path:
                stack.append((v, path + (v,)))


def path_delay(g: NetworkGraph, path) -> float:
    return sum(g.delay(a, b) for a, b in zip(path, path[1:]))


def brute_betweenness(adj: dict[str, set[str]]) -> dict[str, float]:
    """Pair counting over all shortest (hop) paths, each unordered pair once."""
    nodes = sorted(adj)
    bc = dict.fromkeys(nodes, 0.0)
    for s, t in itertools.combinations(nodes, 2):
        paths = []
        best = None
        stack = [(s, (s,))]
        while stack:
            u, path = stack.pop()
            if best is not None and len(path) > best:
                continue
            if u == t:
                if best is None or len(path) < best:
                    best, paths = len(path), [path]
                elif len(path) == best:
                    paths.append(path)
                continue
            for v in adj[u]:
                if v not in path:
                    stack.append((v, path + (v,)))
        for path in paths:
            for v in path[1:-1]:
                bc[v] += 1.0 / len(paths)
    return bc


def set_partitions(items):
    """All set partitions of ``items`` (Bell(8) = 4140 for 8 nodes)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield [[first]] + part


def brute_modularity_optimum(adj: dict[str, dict[str, float]]) -> float:
    import numpy as np

    nodes = sorted(adj)
    idx = {n: i for i, n in enumerate(nodes)}
    a = np.zeros((len(nodes), len(nodes)))
    for u, row in adj.items():
        for v, w in row.items():
            a[idx[u], idx[v]] = w
    k = a.sum(axis=1)
    two_m = k.sum()
    b = a - np.outer(k, k) / two_m
    best = -np.inf
    for part in set_partitions(list(range(len(nodes)))):
        labels = np.empty(len(nodes), dtype=int)
        for c, members in enumerate(part):
            labels[members] = c
        same = labels[:, None] == labels[None, :]
        best = max(best, float(b[same].sum() / two_m))
    return best


def two_cliques():
    """Two 4-cliques joined by one bridge."""
    left = [f"a{i}" for i in range(4)]
    right = [f"b{i}" for i in range(4)]
    edges = [(u, v, 1.0) for grp in (left, right) for u, v in itertools.combinations(grp, 2)]
    edges.append(("a0", "b0", 1.0))
    return router_graph(edges)


def line_network(delays=(2.0, 3.0), with_consumer_at=("r0",), source_at="r2"):
    """Routers r0..rk on a line, consumers and one source hanging off them."""
    n = len(delays) + 1
    roles = {f"r{i}": ROUTER for i in range(n)}
    edges = [(f"r{i}", f"r{i + 1}", d) for i, d in enumerate(delays)]
    for r in with_consumer_at:
        roles[f"c-{r}"] = CONSUMER
        edges.append((f"c-{r}", r, 0.0))
    roles[f"s-{source_at}"] = SOURCE
    edges.append((f"s-{source_at}", source_at, 0.0))
    return NetworkGraph(roles, edges)


@pytest.fixture
def rng():
    return random.Random(1234)


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
