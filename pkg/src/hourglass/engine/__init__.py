"""Event-driven simulation engine (state, event API, kernel backends)."""

from .backends import available, default_name, get
from .core import FiringEvent, SimState, fire, init_state, next_event, run
from .records import FiringStats, combine_counts

__all__ = [
    "FiringEvent",
    "FiringStats",
    "SimState",
    "available",
    "combine_counts",
    "default_name",
    "fire",
    "get",
    "init_state",
    "next_event",
    "run",
]
