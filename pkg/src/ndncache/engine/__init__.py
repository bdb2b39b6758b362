"""Discrete-event simulation of NDN caching strategies."""
from .config import DESK_SCALE, PAPER_SCALE, ConfigError, RunConfig
from .events import CONTROL, DATA, INTEREST, CausalityError, EventQueue, Packet
from .metrics import MetricsAccumulator, MetricsReport
from .simulator import (
    STRATEGIES,
    RedundancyError,
    Simulator,
    Strategy,
    communities_for,
    prepare_topology,
    register_strategy,
    run,
)
from .workload import (
    ScheduledRequest,
    Workload,
    inject_requests,
    request_schedule,
    zipf_cdf,
    zipf_pmf,
    zipf_sample,
)

__all__ = [
    "CONTROL",
    "DATA",
    "DESK_SCALE",
    "INTEREST",
    "PAPER_SCALE",
    "STRATEGIES",
    "CausalityError",
    "ConfigError",
    "EventQueue",
    "MetricsAccumulator",
    "MetricsReport",
    "Packet",
    "RedundancyError",
    "RunConfig",
    "ScheduledRequest",
    "Simulator",
    "Strategy",
    "Workload",
    "communities_for",
    "inject_requests",
    "prepare_topology",
    "register_strategy",
    "request_schedule",
    "run",
    "zipf_cdf",
    "zipf_pmf",
    "zipf_sample",
]
