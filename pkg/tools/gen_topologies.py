"""Regenerate the bundled ISP-like topologies in ``src/ndncache/data``.

Routers are scattered in city clusters on a 4000 x 2500 km plane. Each
cluster is wired as a ring, clusters are joined by a geometric spanning
tree, and extra links go to nearby router pairs until the link budget is
met. Link delay is fibre propagation (200 km per ms), rounded to whole
milliseconds, at least 1 ms.

Usage: python3 tools/gen_topologies.py
"""
from __future__ import annotations

import math
import random
from pathlib import Path

from ndncache.topology import ROUTER, NetworkGraph, attach_endpoints, dump_topology

OUT = Path(__file__).resolve().parent.parent / "src" / "ndncache" / "data"

# name: (routers, router links, cities, seed)
SPECS = {
    "desk12": (12, 18, 3, 12),
    "exodus": (79, 147, 22, 3967),
    "abovenet": (138, 372, 28, 6461),
}


def _delay(p, q) -> float:
    return float(max(1, round(math.dist(p, q) / 200.0)))


def generate(n: int, m: int, cities: int, seed: int) -> NetworkGraph:
    rng = random.Random(seed)
    centres = [(rng.uniform(0, 4000), rng.uniform(0, 2500)) for _ in range(cities)]
    pos = {}
    city_of = {}
    for i in range(n):
        c = i % cities
        cx, cy = centres[c]
        name = f"r{i:03d}"
        pos[name] = (cx + rng.gauss(0, 60), cy + rng.gauss(0, 60))
        city_of[name] = c
    edges: set[tuple[str, str]] = set()

    def link(a, b):
        edges.add((min(a, b), max(a, b)))

    members = [[r for r in pos if city_of[r] == c] for c in range(cities)]
    for group in members:
        if len(group) == 2:
            link(*group)
        elif len(group) > 2:
            for a, b in zip(group, group[1:] + group[:1]):
                link(a, b)
    # Prim over city centres, linking the closest router pair of each joined city.
    joined = {0}
    while len(joined) < cities:
        best = None
        for a in joined:
            for b in range(cities):
                if b in joined:
                    continue
                d = math.dist(centres[a], centres[b])
                if best is None or d < best[0]:
                    best = (d, a, b)
        _, a, b = best
        ra, rb = min(
            ((x, y) for x in members[a] for y in members[b]),
            key=lambda e: math.dist(pos[e[0]], pos[e[1]]),
        )
        link(ra, rb)
        joined.add(b)
    names = sorted(pos)
    candidates = sorted(
        (math.dist(pos[a], pos[b]), a, b)
        for i, a in enumerate(names)
        for b in names[i + 1 :]
        if (a, b) not in edges
    )
    # Prefer short links, with some long-haul randomness.
    pool = [c for c in candidates[: 6 * m]]
    rng.shuffle(pool)
    pool.sort(key=lambda c: c[0] * rng.uniform(0.5, 1.5))
    for _, a, b in pool:
        if len(edges) >= m:
            break
        link(a, b)
    if len(edges) != m:
        raise RuntimeError(f"could only place {len(edges)} of {m} links")
    roles = {r: ROUTER for r in names}
    return NetworkGraph(roles, [(a, b, _delay(pos[a], pos[b])) for a, b in sorted(edges)])


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for name, (n, m, cities, seed) in SPECS.items():
        g = attach_endpoints(generate(n, m, cities, seed))
        dump_topology(g, OUT / f"{name}.json")
        print(f"{name}: {len(g)} nodes, {g.edge_count} links, {len(g.sources)} sources")


if __name__ == "__main__":
    main()
