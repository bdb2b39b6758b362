"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py`` (the lines are repeated in
the terminal summary) or as ``python3 tests/test_acceptance.py``. Sweeps use
``NDNCACHE_WORKERS`` parallel processes when set.
"""
from __future__ import annotations

import itertools
import math
import random
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import (
    brute_betweenness,
    path_delay,
    random_connected_graph,
    set_partitions,
    simple_paths,
    two_cliques,
)
from ndncache.cache import PLFUStore, compute_thresholds, update_avg_occupancy
from ndncache.community import (
    CommunityParams,
    betweenness_centrality,
    community_count,
    detect_communities,
    louvain,
    modularity,
)
from ndncache.engine import MetricsAccumulator, MetricsReport, RunConfig, Simulator, prepare_topology, run
from ndncache.experiment import ExperimentPlan, format_results, run_plan
from ndncache.policy import RedState, red_probability
from ndncache.popularity import PTable, PTableEntry, update_popularity

REL = 1e-9  # arithmetic tolerance
SEEDS = 10
STRATEGIES = ("cpepc", "pepc", "lce", {"name": "prob", "p": 0.5})
CACHE_FRACTIONS = (0.0005, 0.001, 0.0015, 0.002, 0.0025)
ALPHAS = (0.6, 0.8, 1.0, 1.2)

RESULTS: list[str] = []


@contextmanager
def criterion(number: int, title: str, budget_s: float):
    """Time the block, check its budget and record one PASS/FAIL line."""
    start = time.perf_counter()
    detail = ""
    try:
        yield
        elapsed = time.perf_counter() - start
        if elapsed >= budget_s:
            detail = f"over budget: {elapsed:.1f}s >= {budget_s:g}s"
            raise AssertionError(detail)
    except BaseException as exc:
        elapsed = time.perf_counter() - start
        detail = detail or f"{type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        line = f"AC{number:<2} FAIL  {title} ({elapsed:.1f}s) {detail}"
        RESULTS.append(line)
        print(line)
        raise
    line = f"AC{number:<2} PASS  {title} ({elapsed:.1f}s, budget {budget_s:g}s)"
    RESULTS.append(line)
    print(line)


def desk(**changes) -> RunConfig:
    return RunConfig(topology="exodus", **changes).scaled("desk")


def sweep(axes: dict, base: RunConfig | None = None, reps: int = SEEDS):
    plan = ExperimentPlan(base or desk(), tuple(axes.items()), reps, 0)
    rows = run_plan(plan)
    failed = [r for r in rows if r.failed]
    assert not failed, f"failed sweep points: {[r.error for r in failed]}"
    return rows


def non_decreasing_within_ci(means, cis):
    return all(b >= a - (ca + cb) for a, b, ca, cb in zip(means, means[1:], cis, cis[1:]))


def non_increasing_within_ci(means, cis):
    return all(b <= a + (ca + cb) for a, b, ca, cb in zip(means, means[1:], cis, cis[1:]))


# -- 1 ------------------------------------------------------------------------


def test_ac01_formula_arithmetic():
    with criterion(1, "formula arithmetic matches hand values", 1.0):
        # EWMA popularity: 0.125 * 4 + 0.875 * 8
        e = PTableEntry(global_=8, popularity=4.0)
        update_popularity(e, 0.125)
        assert e.popularity == pytest.approx(7.5, rel=REL)
        # mean popularity threshold and relative popularity
        t = PTable()
        t.set_popularity("a", 2.0)
        t.set_popularity("b", 4.0)
        assert t.threshold() == pytest.approx(3.0, rel=REL)
        t.set_popularity("c", 8.0)
        assert t.relative_popularity("a") == pytest.approx(0.25, rel=REL)
        # occupancy EWMA: 0.875 * 40 + 0.125 * 80
        assert update_avg_occupancy(40.0, 80.0, 0.125) == pytest.approx(45.0, rel=REL)
        # occupancy thresholds
        th = compute_thresholds(100, 0.2, 0.6)
        assert (th.min_th, th.max_th) == (pytest.approx(20.0, rel=REL), pytest.approx(60.0, rel=REL))
        # admission probabilities
        assert red_probability(20.0, RedState(th)) == 0.0
        assert red_probability(40.0, RedState(th)) == pytest.approx(0.5, rel=REL)
        assert red_probability(30.0, RedState(th, beta=2)) == pytest.approx(0.5, rel=REL)
        assert red_probability(36.0, RedState(th, beta=3)) == 1.0
        # community count
        assert community_count(0.15, 161) == 25
        assert community_count(0.15, 282) == 43
        assert community_count(1.0, 7) == 7
        # hit ratio, latency and hop averages
        acc = MetricsAccumulator()
        for i, (lat, hops) in enumerate([(10.0, 2), (4.0, 1), (0.0, 0), (6.0, 3)] + [(5.0, 2)] * 6):
            acc.record_delivery(i in (1, 2, 3), lat, hops)
        r = MetricsReport.from_accumulator(acc, 0, None, 0.0, 0)
        assert r.cache_hit_ratio == pytest.approx(0.3, rel=REL)
        assert r.avg_latency_ms == pytest.approx(50.0 / 10, rel=REL)
        assert r.avg_hit_distance == pytest.approx(18 / 10, rel=REL)


# -- 2 ------------------------------------------------------------------------

_PARTITIONS: dict[int, np.ndarray] = {}


def _label_matrix(n: int) -> np.ndarray:
    if n not in _PARTITIONS:
        rows = []
        for part in set_partitions(list(range(n))):
            labels = [0] * n
            for c, members in enumerate(part):
                for v in members:
                    labels[v] = c
            rows.append(labels)
        _PARTITIONS[n] = np.array(rows)
    return _PARTITIONS[n]


def _optimum(adj) -> float:
    nodes = sorted(adj)
    idx = {v: i for i, v in enumerate(nodes)}
    a = np.zeros((len(nodes), len(nodes)))
    for u, row in adj.items():
        for v, w in row.items():
            a[idx[u], idx[v]] = w
    k = a.sum(axis=1)
    two_m = k.sum()
    b = a - np.outer(k, k) / two_m
    labels = _label_matrix(len(nodes))
    same = labels[:, :, None] == labels[:, None, :]
    return float((same * b).sum(axis=(1, 2)).max() / two_m)


def test_ac02_graph_oracles():
    with criterion(2, "shortest paths, betweenness and Louvain against brute force", 30.0):
        rng = random.Random(2024)
        worst_ratio = math.inf
        shortfalls = []
        for i in range(200):
            n = rng.randint(2, 8)
            g = random_connected_graph(rng, n, p=rng.uniform(0.1, 0.7))
            routes = g.routes()
            for u, v in itertools.permutations(g.nodes, 2):
                best = min(path_delay(g, p) for p in simple_paths(g, u, v))
                assert routes.delay(u, v) == pytest.approx(best, abs=1e-9), (i, u, v)
            adj_sets = {u: set(g.neighbors(u)) for u in g.nodes}
            expected = brute_betweenness(adj_sets)
            got = betweenness_centrality(g)
            for v in g.nodes:
                assert got[v] == pytest.approx(expected[v], abs=1e-9), (i, v)
            adj = {u: {v: 1.0 for v in g.neighbors(u)} for u in g.nodes}
            q = modularity(adj, louvain(adj, 1.0, seed=i))
            opt = _optimum(adj)
            if q < 0.9 * opt - 1e-9:
                shortfalls.append((i, round(q, 4), round(opt, 4)))
            if opt > 0:
                worst_ratio = min(worst_ratio, q / opt)
        g = two_cliques()
        adj = {u: {v: 1.0 for v in g.neighbors(u)} for u in g.nodes}
        labels = louvain(adj, 1.0, seed=0)
        assert len(set(labels.values())) == 2
        assert modularity(adj, labels) == pytest.approx(_optimum(adj), abs=1e-9)
        print(f"    worst Louvain / optimum ratio over 200 graphs: {worst_ratio:.4f}")
        assert not shortfalls, f"Louvain below 0.9 x optimum on {len(shortfalls)} graphs (index, Q, optimum): {shortfalls}"


# -- 3 ------------------------------------------------------------------------


def test_ac03_zero_intra_community_redundancy():
    with criterion(3, "no name cached twice inside a community (checked every event)", 60.0):
        for fraction in (0.001, 0.01):
            cfg = RunConfig(topology="desk12", strategy="cpepc", cache_fraction=fraction).scaled("desk")
            assert (cfg.catalog_size, cfg.request_count) == (1000, 10_000)
            sim = Simulator(cfg, redundancy_check_every=1)
            report = sim.run()
            assert sim.redundancy_checks == sim.events + 1
            assert report.requests == 10_000


# -- 4 ------------------------------------------------------------------------


def test_ac04_determinism():
    with criterion(4, "same config and seed give identical reports and CSV", 120.0):
        for strategy in STRATEGIES:
            cfg = desk(strategy=strategy, seed=11)
            assert run(cfg) == run(cfg)
        plan = ExperimentPlan(desk(seed=11), (("strategy", STRATEGIES),), 1, 11)
        assert format_results(run_plan(plan)) == format_results(run_plan(plan))


# -- 5 ------------------------------------------------------------------------


def test_ac05_hit_ratio_grows_with_cache_size():
    with criterion(5, "hit ratio non-decreasing in cache size, every strategy", 15 * 60.0):
        rows = sweep({"strategy": STRATEGIES, "cache_fraction": CACHE_FRACTIONS})
        for k, strategy in enumerate(STRATEGIES):
            chunk = rows[k * len(CACHE_FRACTIONS) : (k + 1) * len(CACHE_FRACTIONS)]
            means = [r.means["cache_hit_ratio"] for r in chunk]
            cis = [r.cis["cache_hit_ratio"] for r in chunk]
            print(f"    {chunk[0].config.strategy.label:10s} " + " ".join(f"{m:.4f}" for m in means))
            assert non_decreasing_within_ci(means, cis), (strategy, means, cis)


# -- 6 ------------------------------------------------------------------------


def test_ac06_cooperative_beats_cache_everywhere():
    with criterion(6, "cooperative caching beats LCE on hits and hop distance", 5 * 60.0):
        rows = sweep({"strategy": ("cpepc", "lce")}, desk(alpha=0.8, cache_fraction=0.001))
        coop, lce = rows
        h_c, h_l = coop.means["cache_hit_ratio"], lce.means["cache_hit_ratio"]
        ci_c, ci_l = coop.cis["cache_hit_ratio"], lce.cis["cache_hit_ratio"]
        print(f"    hit ratio cpepc {h_c:.4f} +/- {ci_c:.4f}, lce {h_l:.4f} +/- {ci_l:.4f}")
        print(f"    hit distance cpepc {coop.means['avg_hit_distance']:.4f}, lce {lce.means['avg_hit_distance']:.4f}")
        assert h_c - ci_c > h_l + ci_l
        assert coop.means["avg_hit_distance"] <= lce.means["avg_hit_distance"]


# -- 7 ------------------------------------------------------------------------


def test_ac07_hit_ratio_grows_with_skew():
    with criterion(7, "hit ratio non-decreasing in Zipf skew, every strategy", 10 * 60.0):
        rows = sweep({"strategy": STRATEGIES, "alpha": ALPHAS}, desk(cache_fraction=0.001))
        for k, strategy in enumerate(STRATEGIES):
            chunk = rows[k * len(ALPHAS) : (k + 1) * len(ALPHAS)]
            means = [r.means["cache_hit_ratio"] for r in chunk]
            print(f"    {chunk[0].config.strategy.label:10s} " + " ".join(f"{m:.4f}" for m in means))
            assert all(b >= a for a, b in zip(means, means[1:])), (strategy, means)


# -- 8 ------------------------------------------------------------------------


def test_ac08_more_communities_lower_latency_and_hits():
    with criterion(8, "more communities: latency and hit ratio non-increasing", 10 * 60.0):
        n_nodes = len(prepare_topology("exodus"))
        targets = [community_count(tau, n_nodes) for tau in (0.05, 0.15, 0.3)]  # small, medium, large
        rows = sweep({"community_target": tuple(targets)}, desk(strategy="cpepc"))
        lat = [r.means["avg_latency_ms"] for r in rows]
        hit = [r.means["cache_hit_ratio"] for r in rows]
        print(f"    targets {targets}, achieved {[r.means['achieved_community_count'] for r in rows]}")
        print(f"    latency {[round(x, 3) for x in lat]}, hit ratio {[round(x, 4) for x in hit]}")
        assert non_increasing_within_ci(lat, [r.cis["avg_latency_ms"] for r in rows])
        assert non_increasing_within_ci(hit, [r.cis["cache_hit_ratio"] for r in rows])


# -- 9 ------------------------------------------------------------------------


def test_ac09_message_overhead():
    with criterion(9, "cooperative message overhead exceeds LCE; LCE counts only hops", 120.0):
        sim = Simulator(desk(strategy="lce", seed=4), trace=True)
        lce = sim.run()
        coop = run(desk(strategy="cpepc", seed=4))
        hops = 0
        for rec in sim.trace:
            source_leg = 0 if rec["from_cache"] else 1
            interest = len(rec["interest_path"]) + source_leg  # consumer link + router hops + source link
            data = len(rec["data_path"]) + source_leg
            hops += interest + data
        print(f"    messages cpepc {coop.message_count}, lce {lce.message_count}")
        assert lce.message_count == hops
        assert lce.message_count == lce.interest_messages + lce.data_messages
        assert coop.message_count > lce.message_count


# -- 10 -----------------------------------------------------------------------


def _plfu_oracle_exact(trials: int = 400) -> None:
    rng = random.Random(10)
    for _ in range(trials):
        cap = rng.randint(1, 4)
        names = list(range(rng.randint(1, 6)))
        store = PLFUStore(cap)
        counts: dict[int, int] = {}
        attempted = set()
        for _ in range(rng.randint(0, 40)):
            name = rng.choice(names)
            counts[name] = counts.get(name, 0) + 1
            if not store.lookup(name):
                attempted.add(name)
                store.insert(name)
        assert store.counters == counts
        cached = set(store)
        assert len(cached) == min(cap, len(attempted))
        best = max(sum(counts[n] for n in c) for c in itertools.combinations(sorted(attempted), len(cached)))
        assert sum(counts[n] for n in cached) == best
        outside = attempted - cached
        if cached and outside:
            assert min(counts[n] for n in cached) >= max(counts[n] for n in outside)


def test_ac10_replacement_policies():
    with criterion(10, "all strategies run under LRU, Random and PLFU with invariants intact", 10 * 60.0):
        _plfu_oracle_exact()
        for replacement in ("lru", "random", "plfu"):
            for strategy in STRATEGIES:
                cfg = desk(strategy=strategy, replacement=replacement, cache_fraction=0.0025, seed=1)
                sim = Simulator(cfg, redundancy_check_every=1000)
                r = sim.run()
                assert r.requests == cfg.request_count
                assert r.cache_hits + r.source_hits == r.requests
                assert r.message_count >= r.interest_messages + r.data_messages
                for router in sim.routers:
                    assert len(sim.stores[router]) <= cfg.capacity
                if sim.communities is not None:
                    assert sim.redundancy_checks > 0
            print(f"    {replacement}: ok")


# -- 11 -----------------------------------------------------------------------


def test_ac11_community_count_targeting():
    with criterion(11, "Exodus-shaped topology yields 25 +/- 2 communities", 10.0):
        g = prepare_topology("exodus")
        assert len(g) == 161
        assignment = detect_communities(g, CommunityParams(tau=0.15), seed="community:0")
        assert abs(assignment.count - 25) <= 2
        report = run(RunConfig(topology="exodus", tau=0.15, catalog_size=100, request_count=50, warmup_count=0))
        assert report.community_target == 25
        assert abs(report.achieved_community_count - 25) <= 2
        print(f"    achieved {report.achieved_community_count} for target {report.community_target}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
