"""Discrete-event NDN caching simulator.

One run is single-threaded and fully determined by its config and seed.
Randomness comes from independent named streams (workload, placement,
policy, replacement, community), so two strategies run with the same seed
see the same request trace.

Message accounting: one message is one packet crossing one link. Interest
and Data traversals, leader Control round trips, eviction notices and
popularity-table transfers all count, but only for measured requests (and
for table exchanges after the warm-up ends).
"""
from __future__ import annotations

import heapq
import logging
import random
import time as _time
from functools import lru_cache
from typing import Callable, Hashable

from ..cache import OccupancyTracker, compute_thresholds, make_store
from ..community import CommunityAssignment, CommunityParams, detect_communities
from ..policy import (
    REJECTED,
    CacheDecision,
    CommunityView,
    RedState,
    cpepc_decide,
    pepc_decide,
    prob_decide,
)
from ..popularity import PTable
from ..topology import NetworkGraph, TopologyError, attach_endpoints, resolve_topology
from .config import ConfigError, RunConfig
from .events import CONTROL, INTEREST, CausalityError, EventQueue, Packet
from .metrics import MetricsAccumulator, MetricsReport
from .workload import ScheduledRequest, Workload, inject_requests

__all__ = [
    "RedundancyError",
    "Request",
    "Strategy",
    "STRATEGIES",
    "register_strategy",
    "prepare_topology",
    "communities_for",
    "Simulator",
    "run",
]

log = logging.getLogger(__name__)

Name = Hashable


class RedundancyError(AssertionError):
    """Two stores of one community hold the same name under a cooperative strategy."""


class Request:
    """Book-keeping for one consumer request while it is in flight."""

    __slots__ = (
        "nonce",
        "consumer",
        "ingress",
        "name",
        "source",
        "t0",
        "measured",
        "path",
        "packet",
        "provider",
        "decisions",
    )

    def __init__(self, nonce, consumer, ingress, name, source, t0, measured):
        self.nonce = nonce
        self.consumer = consumer
        self.ingress = ingress
        self.name = name
        self.source = source
        self.t0 = t0
        self.measured = measured
        self.path: list[str] = []  # routers the Interest reached, in order
        self.packet = Packet(INTEREST, name, nonce)
        self.provider: str | None = None
        self.decisions: list[CacheDecision] | None = None


# -- strategies -------------------------------------------------------------


class Strategy:
    """Hooks the simulator calls. Subclass and register to add a policy.

    ``cooperative`` strategies get a community assignment and the leader
    search on the Interest path.
    """

    name = ""
    cooperative = False

    def __init__(self, sim: "Simulator"):
        self.sim = sim

    def on_interest(self, router: str, name: Name) -> None:
        pass

    def on_data(self, req: Request, dpath: list[str], i: int) -> None:
        pass

    def on_tick(self) -> None:
        pass

    @property
    def periodic(self) -> bool:
        return type(self).on_tick is not Strategy.on_tick


STRATEGIES: dict[str, type[Strategy]] = {}


def register_strategy(cls: type[Strategy]) -> type[Strategy]:
    STRATEGIES[cls.name] = cls
    return cls


def _note(req: Request, decision: CacheDecision) -> None:
    if req.decisions is not None:
        req.decisions.append(decision)


@register_strategy
class LeaveCopyEverywhere(Strategy):
    name = "lce"

    def on_data(self, req, dpath, i):
        store = self.sim.stores[dpath[i]]
        if req.name not in store:
            store.insert(req.name)


@register_strategy
class ProbCache(Strategy):
    name = "prob"

    def __init__(self, sim):
        super().__init__(sim)
        self.p = sim.config.strategy.p
        self.rng = random.Random(f"policy:{sim.config.seed}")

    def on_data(self, req, dpath, i):
        x = dpath[i]
        store = self.sim.stores[x]
        if req.name in store:
            return
        decision = prob_decide(req.name, x, self.p, self.rng)
        _note(req, decision)
        if decision.cache:
            store.insert(req.name)


@register_strategy
class LocalPredictive(Strategy):
    """Each on-path router decides alone from its own counts and occupancy."""

    name = "pepc"

    def __init__(self, sim):
        super().__init__(sim)
        self.tables = {r: PTable(r) for r in sim.routers}

    def on_interest(self, router, name):
        self.tables[router].record_request(name)

    def on_data(self, req, dpath, i):
        sim = self.sim
        x = dpath[i]
        store = sim.stores[x]
        if req.name in store:
            return
        average = sim.trackers[x].update()
        decision = pepc_decide(req.name, x, average, self.tables[x], sim.red[x])
        if decision.cache:
            store.insert(req.name)
            if req.name not in store:
                decision = CacheDecision(False, None, REJECTED)
        _note(req, decision)

    def on_tick(self):
        lam = self.sim.config.lam
        for table in self.tables.values():
            table.merge_remote(())
            table.end_period(lam)


@register_strategy
class CooperativePredictive(Strategy):
    """Leader-coordinated search and placement, one copy per community."""

    name = "cpepc"
    cooperative = True

    def __init__(self, sim):
        super().__init__(sim)
        comm = sim.communities
        self.tables = {leader: PTable(leader) for leader in comm.leaders.values()}

    def on_data(self, req, dpath, i):
        sim = self.sim
        x = dpath[i]
        comm_of = sim.comm_of
        c = comm_of[x]
        # Only the router where the Data enters a community talks to the leader.
        if i and comm_of[dpath[i - 1]] == c:
            return
        name = req.name
        if name in sim.stores[x]:
            return
        leader = sim.leaders[c]
        routes = sim.routes
        sim.count_control(req, routes.hops(x, leader))
        j = i
        last = len(dpath) - 1
        while j < last and comm_of[dpath[j + 1]] == c:
            j += 1
        candidate = dpath[j]
        holders = sim.holders[c]
        in_comm = name in holders
        tracker = sim.trackers[candidate]
        average = tracker.average if in_comm else tracker.update()
        view = CommunityView(in_comm, average, self.tables[leader])
        decision = cpepc_decide(name, candidate, view, sim.red[candidate])
        if decision.cache:
            sim.count_control(req, routes.hops(leader, candidate))
            if not sim.place(c, candidate, name, req):
                decision = CacheDecision(False, None, REJECTED)
        _note(req, decision)

    def on_tick(self):
        sim = self.sim
        lam = sim.config.lam
        tables = self.tables
        leaders = list(tables)
        snapshots = {leader: tables[leader].local_counts() for leader in leaders}
        if len(leaders) > 1 and sim.queue.now >= sim.measure_from:
            routes = sim.routes
            hops = sum(routes.hops(a, b) for a in leaders for b in leaders if a != b)
            sim.metrics.exchange_messages += hops
        for leader in leaders:
            tables[leader].merge_remote(snapshots[o] for o in leaders if o != leader)
        for leader in leaders:
            tables[leader].end_period(lam)


# -- topology / community preparation -----------------------------------------


@lru_cache(maxsize=16)
def prepare_topology(spec: str, source_fraction: float = 0.05) -> NetworkGraph:
    """Load a topology (bundled name or path); attach endpoints if it has none."""
    g = resolve_topology(spec)
    if not g.consumers or not g.sources:
        if g.consumers or g.sources:
            raise TopologyError("topology has consumers or sources but not both")
        g = attach_endpoints(g, source_fraction)
    g.routes()
    return g


@lru_cache(maxsize=256)
def _communities_cached(spec, source_fraction, tau, target, seed) -> CommunityAssignment:
    g = prepare_topology(spec, source_fraction)
    params = CommunityParams(tau=tau, target=target)
    return detect_communities(g, params, seed=f"community:{seed}")


def communities_for(config: RunConfig) -> CommunityAssignment:
    return _communities_cached(
        config.topology, config.source_fraction, config.tau, config.community_target, config.seed
    )


# -- the simulator ------------------------------------------------------------


class Simulator:
    """Event-driven NDN network with pluggable caching strategy.

    Parameters
    ----------
    config : RunConfig
        Run parameters.
    graph : NetworkGraph, optional
        Overrides ``config.topology``; must already carry consumers/sources.
    communities : CommunityAssignment, optional
        Overrides community detection for cooperative strategies.
    redundancy_check_every : int
        Check the one-copy-per-community invariant every this many events
        (0 disables). Only meaningful for cooperative strategies.
    trace : bool
        Keep a per-request record of paths, provider and decisions.
    """

    def __init__(
        self,
        config: RunConfig,
        graph: NetworkGraph | None = None,
        communities: CommunityAssignment | None = None,
        redundancy_check_every: int = 0,
        trace: bool = False,
    ):
        try:
            cls = STRATEGIES[config.strategy.name]
        except KeyError:
            raise ConfigError(
                f"unknown strategy {config.strategy.name!r}; choose from {sorted(STRATEGIES)}"
            ) from None
        self.config = config
        self.graph = graph if graph is not None else prepare_topology(
            config.topology, config.source_fraction
        )
        g = self.graph
        if not g.consumers or not g.sources:
            raise ConfigError("topology needs at least one consumer and one source")
        self.routes = g.routes()
        self.routers = g.routers
        self.consumers = g.consumers
        self.sources = g.sources
        self.ingress = {c: g.attached_router(c) for c in self.consumers}

        capacity = config.capacity
        thresholds = compute_thresholds(capacity, config.rho1, config.rho2)
        repl_rng = random.Random(f"replacement:{config.seed}")
        self.stores = {r: make_store(config.replacement, capacity, repl_rng) for r in self.routers}
        self.trackers = {r: OccupancyTracker(self.stores[r], config.omega) for r in self.routers}
        self.red = {r: RedState(thresholds, config.p_max) for r in self.routers}

        placement = random.Random(f"placement:{config.seed}")
        n_src = len(self.sources)
        # index 0 unused: content names are ranks 1..catalog_size
        self.content_source = [""] + [
            self.sources[placement.randrange(n_src)] for _ in range(config.catalog_size)
        ]

        self.communities: CommunityAssignment | None = None
        self.comm_of: dict[str, int] = {}
        self.leaders: dict[int, str] = {}
        self.leader_of: dict[str, str] = {}
        self.holders: list[dict[Name, str]] = []
        if cls.cooperative:
            comm = communities if communities is not None else communities_for(config)
            self.communities = comm
            self.comm_of = {r: comm.membership[r] for r in self.routers}
            self.leaders = dict(comm.leaders)
            self.leader_of = {r: comm.leaders[self.comm_of[r]] for r in self.routers}
            self.holders = [{} for _ in range(comm.count)]

        self.queue = EventQueue()
        self.metrics = MetricsAccumulator()
        self.measure_from = float("inf")
        self.redundancy_check_every = redundancy_check_every if cls.cooperative else 0
        self.redundancy_checks = 0
        self.trace: list[dict] | None = [] if trace else None
        self.events = 0
        self._first_time: float | None = None
        self.strategy = cls(self)
        self._finished = False

    # -- accounting helpers ---------------------------------------------------

    def count_control(self, req: Request, hops: int) -> None:
        if req.measured:
            self.metrics.control_messages += hops

    def place(self, c: int, router: str, name: Name, req: Request) -> bool:
        """Insert ``name`` at ``router`` on behalf of community ``c``'s leader."""
        store = self.stores[router]
        evicted = store.insert(name)
        if name not in store:
            return False
        holders = self.holders[c]
        holders[name] = router
        if evicted is not None:
            del holders[evicted]
            self.count_control(req, self.routes.hops(router, self.leaders[c]))
        return True

    def check_redundancy(self) -> None:
        self.redundancy_checks += 1
        if self.communities is None:
            return
        for cid, members in enumerate(self.communities.communities):
            seen: dict[Name, str] = {}
            for r in members:
                for name in self.stores[r]:
                    if name in seen:
                        raise RedundancyError(
                            f"community {cid}: {name!r} cached at both {seen[name]} and {r}"
                        )
                    seen[name] = r

    # -- event handlers ---------------------------------------------------------

    def _inject(self, sr: ScheduledRequest) -> None:
        t = self.queue.now
        if self._first_time is None:
            self._first_time = t
        if sr.measured and self.measure_from == float("inf"):
            self.measure_from = t
        req = Request(
            sr.index,
            sr.consumer,
            self.ingress[sr.consumer],
            sr.name,
            self.content_source[sr.name],
            t,
            sr.measured,
        )
        if self.trace is not None:
            req.decisions = []
        if req.measured:
            self.metrics.interest_messages += 1  # consumer -> ingress router
        self._interest_at(req, req.ingress)

    def _interest_at(self, req: Request, r: str) -> None:
        req.path.append(r)
        name = req.name
        self.strategy.on_interest(r, name)
        if self.stores[r].lookup(name):
            self._serve(req, r)
            return
        if self.leader_of:
            leader = self.leader_of[r]
            if leader not in req.packet.leader_nodes:
                ctrl = Packet(CONTROL, name, req.nonce, content_search=True)
                if leader == r:
                    self._search(req, r, leader, ctrl)
                else:
                    self.count_control(req, self.routes.hops(r, leader))
                    self.queue.push(
                        self.queue.now + self.routes.delay(r, leader), self._search, req, r, leader, ctrl
                    )
                return
        self._forward(req, r)

    def _forward(self, req: Request, r: str) -> None:
        src = req.source
        nh = self.routes.next_hop(r, src)
        if req.measured:
            self.metrics.interest_messages += 1
        t = self.queue.now + self.graph.delay(r, nh)
        if nh == src:
            self.queue.push(t, self._serve_from_source, req)
        else:
            self.queue.push(t, self._interest_at, req, nh)

    def _search(self, req: Request, r: str, leader: str, ctrl: Packet) -> None:
        """The leader handles a content-search Control sent by router ``r``."""
        name = req.name
        self.strategy.tables[leader].record_request(name)
        routes = self.routes
        if leader != r and self.stores[leader].lookup(name):
            # The search itself reached the leader's store; serve from there.
            req.path.extend(routes.path(r, leader).nodes[1:])
            self._serve(req, leader)
            return
        holder = self.holders[self.comm_of[r]].get(name)
        back = routes.delay(leader, r)
        self.count_control(req, routes.hops(leader, r))
        t = self.queue.now + back
        if holder is not None and holder != r:
            hint = routes.path(r, holder)
            reply = Packet(CONTROL, name, req.nonce, availability=True, forwarding_hint=hint)
            if req.measured:
                self.metrics.interest_messages += hint.hops
            self.queue.push(t + hint.delay, self._hinted, req, reply)
            return
        req.packet.leader_nodes.append(leader)
        if leader == r:
            self._forward(req, r)
        else:
            self.queue.push(t, self._forward, req, r)

    def _hinted(self, req: Request, reply: Packet) -> None:
        hint = reply.forwarding_hint
        req.path.extend(hint.nodes[1:])
        target = hint.dst
        if self.stores[target].lookup(req.name):
            self._serve(req, target)
            return
        # Evicted while the Interest was on its way: fall back to the source.
        req.packet.leader_nodes.append(self.leader_of[target])
        self._forward(req, target)

    def _serve_from_source(self, req: Request) -> None:
        req.provider = req.source
        if req.measured:
            self.metrics.data_messages += 1  # source -> attached router
        self._data_at(req, req.path[::-1], 0)

    def _serve(self, req: Request, router: str) -> None:
        req.provider = router
        self._data_at(req, req.path[::-1], 0)

    def _data_at(self, req: Request, dpath: list[str], i: int) -> None:
        self.strategy.on_data(req, dpath, i)
        if req.measured:
            self.metrics.data_messages += 1
        if i == len(dpath) - 1:
            self._deliver(req, dpath)
            return
        x, y = dpath[i], dpath[i + 1]
        self.queue.push(self.queue.now + self.graph.delay(x, y), self._data_at, req, dpath, i + 1)

    def _deliver(self, req: Request, dpath: list[str]) -> None:
        t = self.queue.now + self.graph.delay(req.ingress, req.consumer)
        if not req.measured:
            return
        hops = len(dpath) - 1
        from_cache = req.provider != req.source
        self.metrics.record_delivery(from_cache, t - req.t0, hops)
        if self.trace is not None:
            self.trace.append(
                {
                    "nonce": req.nonce,
                    "consumer": req.consumer,
                    "name": req.name,
                    "provider": req.provider,
                    "from_cache": from_cache,
                    "interest_path": list(req.path),
                    "data_path": dpath,
                    "leaders": list(req.packet.leader_nodes),
                    "latency_ms": t - req.t0,
                    "hops": hops,
                    "decisions": [(d.target, d.reason, d.cache) for d in req.decisions],
                }
            )

    def _tick(self) -> None:
        # Nothing left in flight: the run is over, so no exchange happens.
        if not len(self.queue):
            return
        self.strategy.on_tick()
        self.queue.push(self.queue.now + self.config.period_s * 1000.0, self._tick_handler)

    # -- driver -----------------------------------------------------------------

    def run(self) -> MetricsReport:
        if self._finished:
            raise RuntimeError("a Simulator instance runs once")
        self._finished = True
        cfg = self.config
        started = _time.perf_counter()
        workload = Workload(
            cfg.catalog_size, cfg.alpha, cfg.rate, cfg.request_count, cfg.warmup_count, cfg.seed
        )
        queue = self.queue
        inject_requests(workload, queue, self.consumers, self._inject)
        tick = self._tick_handler = self._tick
        if self.strategy.periodic:
            queue.push(cfg.period_s * 1000.0, tick)
        heap = queue._heap
        pop = heapq.heappop
        check = self.redundancy_check_every
        events = 0
        last = 0.0
        active = 0.0  # time of the last event that was not a period tick
        while heap:
            t, _, handler, args = pop(heap)
            if t < last:
                raise CausalityError(f"event at {t} popped after {last}")
            queue.now = last = t
            handler(*args)
            events += 1
            if handler is not tick:
                active = t
            if check and events % check == 0:
                self.check_redundancy()
        if check:
            self.check_redundancy()
        self.events = events
        comm = self.communities
        report = MetricsReport.from_accumulator(
            self.metrics,
            communities=comm.count if comm else 0,
            target=comm.target if comm else None,
            runtime_ms=active - (self._first_time or 0.0),
            events=events,
        )
        log.debug(
            "%s seed=%s: %d events in %.2fs", cfg.strategy.label, cfg.seed, events,
            _time.perf_counter() - started,
        )
        return report


def run(config: RunConfig | dict, **kwargs) -> MetricsReport:
    """Run one simulation and return its metrics."""
    if isinstance(config, dict):
        config = RunConfig.from_dict(config)
    return Simulator(config, **kwargs).run()
