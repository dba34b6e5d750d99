"""Connection magnitudes on a topology, compiled for the kernels.

A :class:`ConnectionSpec` fixes, for every directed link, the sign class and
the magnitude distribution, plus every site's refill distribution Y.  Links
are stored in CSR form sorted by ``(source, destination)``; the kernels walk
them in exactly that order, which also pins the random draw order.

Zero-strength couplings (``w_I == 0`` or ``w_E == 0`` on the torus) are
dropped at construction: a link whose magnitude is identically zero is the
same object as no link, and dropping it keeps all-inhibitory analyses
applicable when only the excitatory weight vanishes.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .distributions import EXPONENTIAL, KIND_CODES, DistributionSpec, exponential
from .errors import ConfigError
from .topology import BlockStructure, Topology, TorusGeometry

SIGN_INHIBITORY = 0
SIGN_EXCITATORY = 1


class ConnectionSpec:
    """Signed magnitude distributions on the links of a topology.

    ``edge_table`` maps ordered pairs ``(i, j)`` to ``(sign, spec)`` where
    ``spec`` is the distribution of the impulse magnitude ``|theta_ij|``.
    Mean-zero entries must simply be absent.  ``y_dists`` gives each site's
    refill distribution.
    """

    def __init__(
        self,
        topology: Topology,
        edge_table: dict[tuple[int, int], tuple[int, DistributionSpec]],
        y_dists: Iterable[DistributionSpec],
        *,
        mode: str = "custom",
        params: dict | None = None,
    ):
        self.topology = topology
        self.mode = mode
        self.params = dict(params or {})
        self.y_dists = tuple(y_dists)
        n = topology.n_sites
        if len(self.y_dists) != n:
            raise ConfigError(f"need {n} refill distributions, got {len(self.y_dists)}")

        allowed = set()
        for i in range(n):
            for j in topology.inhibitory[i]:
                allowed.add((i, j, SIGN_INHIBITORY))
            for j in topology.excitatory[i]:
                allowed.add((i, j, SIGN_EXCITATORY))
        for (i, j), (sign, spec) in edge_table.items():
            if (i, j, sign) not in allowed:
                raise ConfigError(
                    f"link ({i}->{j}, sign {sign}) is not present in the topology"
                )
            if not isinstance(spec, DistributionSpec):
                raise ConfigError(f"link ({i}->{j}) magnitude must be a DistributionSpec")

        # CSR arrays ordered by (source, destination ascending)
        order = sorted(edge_table)
        self.edge_start = np.zeros(n + 1, dtype=np.int64)
        self.edge_dst = np.empty(len(order), dtype=np.int64)
        self.edge_sign = np.empty(len(order), dtype=np.int8)
        self.edge_kind = np.empty(len(order), dtype=np.int8)
        self.edge_mean = np.empty(len(order), dtype=np.float64)
        self.edge_shape = np.ones(len(order), dtype=np.float64)
        self.edge_slot = np.full(len(order), -1, dtype=np.int64)

        slot_pairs: list[tuple[int, int]] = []
        for e, (i, j) in enumerate(order):
            sign, spec = edge_table[(i, j)]
            self.edge_start[i + 1] += 1
            self.edge_dst[e] = j
            self.edge_sign[e] = sign
            self.edge_kind[e] = KIND_CODES[spec.kind]
            self.edge_mean[e] = spec.mean
            if spec.shape is not None:
                self.edge_shape[e] = spec.shape
            if sign == SIGN_EXCITATORY:
                self.edge_slot[e] = len(slot_pairs)
                slot_pairs.append((i, j))
        np.cumsum(self.edge_start, out=self.edge_start)
        self.excitatory_pairs = tuple(slot_pairs)

        self.y_kind = np.array([KIND_CODES[d.kind] for d in self.y_dists], dtype=np.int8)
        self.y_mean = np.array([d.mean for d in self.y_dists], dtype=np.float64)
        self.y_shape = np.array(
            [1.0 if d.shape is None else d.shape for d in self.y_dists], dtype=np.float64
        )

        self._edge_specs = {pair: edge_table[pair] for pair in order}
        in_edges: list[list[tuple[int, int, float]]] = [[] for _ in range(n)]
        for (i, j), (sign, spec) in self._edge_specs.items():
            in_edges[j].append((i, sign, spec.mean))
        self.in_edges = tuple(tuple(sorted(lst)) for lst in in_edges)

    # -- queries ----------------------------------------------------------

    @property
    def n_sites(self) -> int:
        return self.topology.n_sites

    @property
    def n_edges(self) -> int:
        return len(self.edge_dst)

    def mean_y(self, i: int) -> float:
        return self.y_dists[i].mean

    def link(self, i: int, j: int) -> tuple[int, DistributionSpec] | None:
        """Sign and magnitude spec of the link ``i -> j`` (None if absent)."""
        return self._edge_specs.get((i, j))

    def mean_theta(self, i: int, j: int) -> float:
        """Signed mean impulse: negative for inhibitory links, zero if absent."""
        entry = self._edge_specs.get((i, j))
        if entry is None:
            return 0.0
        sign, spec = entry
        return spec.mean if sign == SIGN_EXCITATORY else -spec.mean

    def has_excitatory_within(self, sites: Iterable[int]) -> bool:
        inside = set(sites)
        return any(i in inside and j in inside for i, j in self.excitatory_pairs)

    def out_edges(self, i: int) -> list[tuple[int, int, DistributionSpec]]:
        lo, hi = int(self.edge_start[i]), int(self.edge_start[i + 1])
        out = []
        for e in range(lo, hi):
            j = int(self.edge_dst[e])
            out.append((j,) + self._edge_specs[(i, j)])
        return out


def uniform_y(topology: Topology, dist: DistributionSpec) -> tuple[DistributionSpec, ...]:
    return (dist,) * topology.n_sites


def torus_connections(
    topology: Topology,
    w_I: float,
    w_E: float,
    *,
    eta1: DistributionSpec | None = None,
    eta2: DistributionSpec | None = None,
    y: DistributionSpec | None = None,
) -> ConnectionSpec:
    """Torus couplings ``|theta| = w_I * eta1`` / ``theta = w_E * eta2``.

    The base variables ``eta1``, ``eta2`` and the refill ``Y`` must all have
    mean one — the weights carry the whole scale.
    """
    if not isinstance(topology.geometry, TorusGeometry):
        raise ConfigError("torus_connections requires a torus topology")
    if w_I < 0 or w_E < 0:
        raise ConfigError(f"weights must be >= 0, got w_I={w_I}, w_E={w_E}")
    eta1 = eta1 or exponential(1.0)
    eta2 = eta2 or exponential(1.0)
    y = y or exponential(1.0)
    for name, dist in (("eta1", eta1), ("eta2", eta2), ("Y", y)):
        if dist.mean != 1.0:
            raise ConfigError(
                f"{name} must have mean 1 in the torus model (weights set the scale), "
                f"got mean {dist.mean}"
            )

    table: dict[tuple[int, int], tuple[int, DistributionSpec]] = {}
    if w_I > 0:
        spec_i = eta1.scaled(w_I)
        for i in topology.sites:
            for j in topology.inhibitory[i]:
                table[(i, j)] = (SIGN_INHIBITORY, spec_i)
    if w_E > 0:
        spec_e = eta2.scaled(w_E)
        for i in topology.sites:
            for j in topology.excitatory[i]:
                table[(i, j)] = (SIGN_EXCITATORY, spec_e)

    return ConnectionSpec(
        topology,
        table,
        uniform_y(topology, y),
        mode="torus",
        params={"w_I": w_I, "w_E": w_E, "eta1": eta1, "eta2": eta2, "y": y},
    )


def block_connections(
    topology: Topology,
    a: float,
    b: float,
    c: float,
    *,
    magnitude_kind: str = EXPONENTIAL,
    y_kind: str = EXPONENTIAL,
) -> ConnectionSpec:
    """All-inhibitory paired-block couplings.

    Mean impulse magnitude is ``c`` between paired blocks and ``b``
    otherwise (including within a block); every refill has mean ``a``.
    The storage phase ``0 < b < a < c`` is *not* required here — uniform
    networks (``b == c``) are legitimate — only positivity is.
    """
    geom = topology.geometry
    if not isinstance(geom, BlockStructure):
        raise ConfigError("block_connections requires a block topology")
    if a <= 0 or b <= 0 or c <= 0:
        raise ConfigError(f"a, b, c must all be > 0, got a={a}, b={b}, c={c}")

    spec_b = DistributionSpec(magnitude_kind, b)
    spec_c = DistributionSpec(magnitude_kind, c)
    table: dict[tuple[int, int], tuple[int, DistributionSpec]] = {}
    for i in topology.sites:
        bi = geom.block_of(i)
        partner = geom.partner(bi)
        for j in topology.inhibitory[i]:
            spec = spec_c if geom.block_of(j) == partner else spec_b
            table[(i, j)] = (SIGN_INHIBITORY, spec)

    y = DistributionSpec(y_kind, a)
    return ConnectionSpec(
        topology,
        table,
        uniform_y(topology, y),
        mode="block",
        params={"a": a, "b": b, "c": c},
    )


class Restriction:
    """A connection spec together with the active subset kept alive.

    Sites outside ``active`` are deleted: they never fire and absorb no
    impulses.  The spec itself is untouched — the engine freezes them.
    """

    def __init__(self, connections: ConnectionSpec, active: Iterable[int]):
        active_set = frozenset(int(i) for i in active)
        if not active_set:
            raise ConfigError("restriction must keep at least one site")
        sites = set(connections.topology.sites)
        if not active_set <= sites:
            raise ConfigError(f"restriction sites {sorted(active_set - sites)} do not exist")
        self.connections = connections
        self.active = active_set

    @property
    def frozen(self) -> frozenset[int]:
        return frozenset(self.connections.topology.sites) - self.active


def restrict(connections: ConnectionSpec, active: Iterable[int]) -> Restriction:
    """Delete every site outside ``active`` (see :class:`Restriction`)."""
    return Restriction(connections, active)
