"""Cooperative in-network caching for Named Data Networking.

Topology handling, Louvain communities with elected leaders, EWMA content
popularity, router content stores, the admission policies and a
discrete-event simulator to compare them.
"""
from .cache import make_store
from .community import CommunityParams, detect_communities
from .engine import MetricsReport, RunConfig, Simulator, run
from .topology import NetworkGraph, load_bundled, load_topology

__version__ = "0.1.0"

__all__ = [
    "CommunityParams",
    "MetricsReport",
    "NetworkGraph",
    "RunConfig",
    "Simulator",
    "detect_communities",
    "load_bundled",
    "load_topology",
    "make_store",
    "run",
]
