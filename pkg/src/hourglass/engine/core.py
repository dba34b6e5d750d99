"""Simulation state and the event-level API.

The state keeps *absolute* firing deadlines: site ``i`` would fire at
``deadline[i]``, so its countdown value is ``x_i = deadline[i] - clock``.
Between events every countdown decreases at unit rate by construction —
advancing time is free — and an impulse is a single add to one deadline.
At its own firing time a site's countdown is exactly zero, with no float
drift from repeated subtraction.

Deleted (frozen) sites are marked by a flag: they are skipped by the event
search and receive nothing.  Their deadline entries are meaningless and
surface as ``inf`` in :attr:`SimState.x`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..connections import ConnectionSpec, Restriction
from ..distributions import DistributionSpec, RngHandle, exponential
from ..errors import AllSitesFrozenError, ConfigError
from .records import FiringStats
from . import backends


@dataclass
class FiringEvent:
    """Full account of one event: who fired, who was triggered, what moved.

    ``resets`` maps every firing site (the spontaneous one and any triggered
    through excitation) to its fresh countdown value.  ``impulses`` maps
    each other affected site to the *net change* of its countdown (positive
    for inhibition); triggered sites never appear here — their excitatory
    hit is absorbed into the reset.
    """

    time: float
    primary: int
    cascade: tuple[int, ...]
    resets: dict[int, float]
    impulses: dict[int, float]


@dataclass
class SimState:
    connections: ConnectionSpec
    clock: float
    deadline: np.ndarray
    frozen: np.ndarray
    rng: RngHandle
    aux: RngHandle

    @property
    def n_sites(self) -> int:
        return self.connections.n_sites

    @property
    def active(self) -> frozenset[int]:
        return frozenset(int(i) for i in np.flatnonzero(~self.frozen))

    @property
    def x(self) -> np.ndarray:
        """Current countdown values; ``inf`` marks deleted sites."""
        out = self.deadline - self.clock
        out[self.frozen] = np.inf
        return out

    def set_x(self, site: int, value: float) -> None:
        """Force a countdown value (initial-condition surgery for tests)."""
        if self.frozen[site]:
            raise ConfigError(f"site {site} is deleted")
        self.deadline[site] = self.clock + value


def init_state(
    connections: ConnectionSpec | Restriction,
    init_dist: DistributionSpec | None = None,
    seed: int | RngHandle = 0,
) -> SimState:
    """Draw initial countdowns for every site, then delete the frozen ones.

    Initial values are drawn in ascending site order for *all* sites before
    any deletion, so the surviving sites of a restriction start exactly as
    they would in the full system under the same seed.
    """
    if isinstance(connections, Restriction):
        restriction = connections
        conn = restriction.connections
        frozen_sites = restriction.frozen
    else:
        conn = connections
        frozen_sites = frozenset()

    init_dist = init_dist or exponential(1.0)
    root = seed if isinstance(seed, RngHandle) else RngHandle(seed)
    dyn = root.derive(0)
    aux = root.derive(1)

    n = conn.n_sites
    deadline = np.empty(n, dtype=np.float64)
    for i in range(n):
        deadline[i] = init_dist.sample(dyn)
    frozen = np.zeros(n, dtype=bool)
    for i in frozen_sites:
        frozen[i] = True
    if frozen.all():
        raise AllSitesFrozenError("restriction left no active site")
    return SimState(conn, 0.0, deadline, frozen, dyn, aux)


def next_event(state: SimState) -> tuple[float, int]:
    """Time-to-next-firing and the site that fires (lowest id on ties)."""
    best = np.inf
    site = -1
    for i in range(state.n_sites):
        if not state.frozen[i] and state.deadline[i] < best:
            best = float(state.deadline[i])
            site = i
    if site < 0:
        raise AllSitesFrozenError("no active site remains")
    return best - state.clock, site


def fire(state: SimState, site: int) -> FiringEvent:
    """Execute the firing of ``site``, which must be due next.

    The clock jumps to the site's exact deadline, making its countdown
    exactly zero at the moment of firing — no float drift is possible with
    the absolute-deadline representation.  Firing a site that is not a
    current minimum is a contract violation.  On ties any tied site may be
    named; the batch loop always picks the lowest id.
    """
    from . import _pykernel  # single-event path always runs in Python

    if state.frozen[site]:
        raise ConfigError(f"site {site} is deleted")
    _delta, due = next_event(state)
    if state.deadline[site] != state.deadline[due]:
        raise ConfigError(
            f"site {site} is not due: countdown would be "
            f"{float(state.deadline[site] - state.deadline[due])!r} at the next event"
        )
    t = float(state.deadline[site])
    before = state.deadline.copy()
    cascade = _pykernel.fire_site(
        state.connections, state.deadline, state.frozen, t, site, state.rng, state.aux
    )
    state.clock = t

    resets = {}
    impulses = {}
    fired = {site, *cascade}
    for i in range(state.n_sites):
        if state.frozen[i]:
            continue
        if i in fired:
            resets[i] = float(state.deadline[i] - t)
        else:
            delta = float(state.deadline[i] - before[i])
            if delta != 0.0:
                impulses[i] = delta
    return FiringEvent(t, site, cascade, resets, impulses)


def run(
    state: SimState,
    until: float,
    *,
    stats: FiringStats | None = None,
    record: bool = False,
    trace: list | None = None,
    backend: str | None = None,
) -> FiringStats | None:
    """Advance the state to absolute time ``until``.

    Events due exactly at ``until`` are executed.  With ``record=True`` (or
    an explicit ``stats`` object to keep accumulating into) firing counts,
    excitatory delivery counts, overshoots and the remaining-time reservoir
    are collected over the advanced window and returned.
    """
    if until < state.clock:
        raise ConfigError(f"cannot run backwards: clock={state.clock}, until={until}")
    if stats is None and record:
        stats = FiringStats.allocate(state.connections, t_start=state.clock)
    kernel = backends.get(backend)
    clock, _events = kernel.run_kernel(
        state.connections,
        state.deadline,
        state.frozen,
        state.clock,
        until,
        state.rng,
        state.aux,
        stats,
        trace,
    )
    state.clock = clock
    return stats
