"""Deterministic trace-driven simulator for speculation-transparent caches.

The hierarchy partitions every cache set into persistent and temporary
ways, resolves speculation through commit/squash notifications, guards
shared levels with per-thread owner masks, and delays coherence
transitions a squash could not undo.  An attack harness replays
classic cache covert channels to show they classify identically on the
protected hierarchy while leaking on a conventional baseline.
"""

from .attacks import Verdict, analyze, run_scenario, scenario_names
from .cache import CacheGeometry, CohState, Domain, LevelId
from .config import LatencyParams, LevelParams, SimConfig, ThresholdParams, load_config
from .domains import CacheLevel
from .engine import Engine, LatencyClass, SimReport, TimingObservation, run_trace
from .trace import TraceEvent, parse_trace

__version__ = "0.1.0"

__all__ = [
    "CacheGeometry",
    "CacheLevel",
    "CohState",
    "Domain",
    "Engine",
    "LatencyClass",
    "LatencyParams",
    "LevelId",
    "LevelParams",
    "SimConfig",
    "SimReport",
    "ThresholdParams",
    "TimingObservation",
    "TraceEvent",
    "Verdict",
    "analyze",
    "load_config",
    "parse_trace",
    "run_scenario",
    "run_trace",
    "scenario_names",
    "__version__",
]
