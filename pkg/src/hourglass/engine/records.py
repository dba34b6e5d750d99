"""Counters accumulated while the event loop runs.

Everything is raw sums and counts over a recording window; rate estimates
are formed later by the analysis layer.  A single :class:`FiringStats` can
span several consecutive ``run`` segments — the kernels keep adding to the
same arrays and the window end is pushed forward — so burn-in is handled by
simply not passing a stats object during the initial segment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

RESERVOIR_CAP = 10_000


@dataclass
class FiringStats:
    """Counts over the window ``(t_start, t_end]``.

    ``spontaneous[i]``: firings where ``i`` was the site whose countdown hit
    zero.  ``total[i]`` additionally counts firings triggered through an
    excitatory link.  Per excitatory link slot ``s`` for the ordered pair
    ``(src, dst)``:

    * ``deliveries[s]``: impulses sent (src fired spontaneously, dst alive),
    * ``triggered[s]``: deliveries that made dst fire,
    * ``overshoot_sum[s]``: sum of ``(magnitude - x_dst)+`` over deliveries,
    * ``reservoir[s]``: uniform sample (capacity ``reservoir_cap``) of the
      destination's remaining time ``x_dst`` seen at deliveries.

    By construction ``total == spontaneous + (triggered summed onto the
    destination)`` exactly.
    """

    n_sites: int
    excitatory_pairs: tuple[tuple[int, int], ...]
    t_start: float
    t_end: float
    spontaneous: np.ndarray = field(repr=False, default=None)
    total: np.ndarray = field(repr=False, default=None)
    deliveries: np.ndarray = field(repr=False, default=None)
    triggered: np.ndarray = field(repr=False, default=None)
    overshoot_sum: np.ndarray = field(repr=False, default=None)
    reservoir: np.ndarray = field(repr=False, default=None)
    reservoir_cap: int = RESERVOIR_CAP
    n_events: int = 0

    def __post_init__(self):
        n_slots = len(self.excitatory_pairs)
        if self.spontaneous is None:
            self.spontaneous = np.zeros(self.n_sites, dtype=np.int64)
        if self.total is None:
            self.total = np.zeros(self.n_sites, dtype=np.int64)
        if self.deliveries is None:
            self.deliveries = np.zeros(n_slots, dtype=np.int64)
        if self.triggered is None:
            self.triggered = np.zeros(n_slots, dtype=np.int64)
        if self.overshoot_sum is None:
            self.overshoot_sum = np.zeros(n_slots, dtype=np.float64)
        if self.reservoir is None:
            self.reservoir = np.zeros((n_slots, self.reservoir_cap), dtype=np.float64)

    @classmethod
    def allocate(cls, connections, t_start: float, reservoir_cap: int = RESERVOIR_CAP):
        return cls(
            n_sites=connections.n_sites,
            excitatory_pairs=connections.excitatory_pairs,
            t_start=t_start,
            t_end=t_start,
            reservoir_cap=reservoir_cap,
        )

    @property
    def window(self) -> float:
        return self.t_end - self.t_start

    def reservoir_samples(self, slot: int) -> np.ndarray:
        filled = min(int(self.deliveries[slot]), self.reservoir_cap)
        return self.reservoir[slot, :filled]

    def triggered_onto(self) -> np.ndarray:
        """Per-site count of firings triggered through incoming excitation."""
        out = np.zeros(self.n_sites, dtype=np.int64)
        for slot, (_src, dst) in enumerate(self.excitatory_pairs):
            out[dst] += self.triggered[slot]
        return out


def combine_counts(*parts: FiringStats) -> FiringStats:
    """Merge stats from consecutive segments of one run (counts only).

    The reservoirs are not merged — the result keeps the first segment's —
    so combine only when downstream use is count-based (rates, activity).
    """
    if not parts:
        raise ValueError("need at least one stats segment")
    first = parts[0]
    merged = FiringStats(
        n_sites=first.n_sites,
        excitatory_pairs=first.excitatory_pairs,
        t_start=first.t_start,
        t_end=max(p.t_end for p in parts),
        spontaneous=first.spontaneous.copy(),
        total=first.total.copy(),
        deliveries=first.deliveries.copy(),
        triggered=first.triggered.copy(),
        overshoot_sum=first.overshoot_sum.copy(),
        reservoir=first.reservoir.copy(),
        reservoir_cap=first.reservoir_cap,
        n_events=first.n_events,
    )
    for part in parts[1:]:
        if part.excitatory_pairs != first.excitatory_pairs or part.n_sites != first.n_sites:
            raise ValueError("cannot combine stats from different networks")
        merged.spontaneous += part.spontaneous
        merged.total += part.total
        merged.deliveries += part.deliveries
        merged.triggered += part.triggered
        merged.overshoot_sum += part.overshoot_sum
        merged.n_events += part.n_events
    return merged
