"""Network geometries.

Two families are supported:

* a ``nu``-dimensional torus with side ``2N`` where each site inhibits its
  ``2 * nu`` lattice neighbours and excites a fixed even-parity offset class
  of ``K_E`` sites on its own checkerboard sublattice, and
* a fully connected network of ``2p`` blocks of ``k`` sites with a pairing
  of the blocks, used for pattern storage.

Sites are numbered ``0 .. n_sites - 1``.  Torus coordinates are canonical
per-dimension representatives ``0 .. 2N-1`` with flat index
``sum(c[d] * (2N)**d)``; the origin is site 0.  Wrapped coordinate
differences make the metric; parity of the coordinate sum makes the two
checkerboard classes, and ``sublattice_lambda0`` is the class containing
the origin.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError

TORUS_DIMENSIONS = (1, 2, 3)


@dataclass(frozen=True)
class TorusGeometry:
    nu: int
    N: int
    K_E: int
    offsets: tuple[tuple[int, ...], ...]

    @property
    def side(self) -> int:
        return 2 * self.N


@dataclass(frozen=True)
class BlockStructure:
    """``2p`` blocks of ``k`` sites each; ``pairing`` matches them in couples.

    Blocks are numbered 1-based: block ``b`` holds sites
    ``(b-1)*k .. b*k - 1``.  ``pairing`` is a tuple of ``p`` sorted couples
    covering ``1 .. 2p`` exactly once.
    """

    p: int
    k: int
    pairing: tuple[tuple[int, int], ...]

    @property
    def n_blocks(self) -> int:
        return 2 * self.p

    @property
    def n_sites(self) -> int:
        return 2 * self.p * self.k

    def block_of(self, site: int) -> int:
        return site // self.k + 1

    def sites_of(self, block: int) -> range:
        return range((block - 1) * self.k, block * self.k)

    def partner(self, block: int) -> int:
        for a, b in self.pairing:
            if block == a:
                return b
            if block == b:
                return a
        raise ValueError(f"block {block} not covered by pairing {self.pairing}")


@dataclass(frozen=True)
class Topology:
    """Directed interaction sets per site, split by sign class.

    ``inhibitory[i]`` and ``excitatory[i]`` are ascending site tuples.  Both
    relations are symmetric and irreflexive; the two classes are disjoint.
    """

    n_sites: int
    inhibitory: tuple[tuple[int, ...], ...]
    excitatory: tuple[tuple[int, ...], ...]
    geometry: TorusGeometry | BlockStructure

    def __post_init__(self):
        inh = [set(s) for s in self.inhibitory]
        exc = [set(s) for s in self.excitatory]
        for i in range(self.n_sites):
            if i in inh[i] or i in exc[i]:
                raise ConfigError(f"site {i} neighbours itself")
            if inh[i] & exc[i]:
                raise ConfigError(f"site {i} has links in both sign classes")
            for j in inh[i]:
                if i not in inh[j]:
                    raise ConfigError(f"inhibitory link {i}->{j} is not symmetric")
            for j in exc[i]:
                if i not in exc[j]:
                    raise ConfigError(f"excitatory link {i}->{j} is not symmetric")

    def neighbors(self, i: int) -> tuple[int, ...]:
        return tuple(sorted(self.inhibitory[i] + self.excitatory[i]))

    @property
    def sites(self) -> range:
        return range(self.n_sites)


# -- torus ---------------------------------------------------------------


def site_coords(geom: TorusGeometry, site: int) -> tuple[int, ...]:
    side = geom.side
    coords = []
    for _ in range(geom.nu):
        coords.append(site % side)
        site //= side
    return tuple(coords)


def coords_to_site(geom: TorusGeometry, coords) -> int:
    side = geom.side
    site = 0
    for d in reversed(range(geom.nu)):
        site = site * side + (coords[d] % side)
    return site


def torus_distance(top: Topology, i: int, j: int) -> int:
    """Graph distance on the torus: sum of wrapped coordinate differences."""
    geom = top.geometry
    if not isinstance(geom, TorusGeometry):
        raise ConfigError("torus_distance requires a torus topology")
    side = geom.side
    ci, cj = site_coords(geom, i), site_coords(geom, j)
    total = 0
    for a, b in zip(ci, cj):
        diff = abs(a - b)
        total += min(diff, side - diff)
    return total


def sublattice_lambda0(top: Topology) -> frozenset[int]:
    """The checkerboard class of the origin: even coordinate-sum sites."""
    geom = top.geometry
    if not isinstance(geom, TorusGeometry):
        raise ConfigError("sublattice_lambda0 requires a torus topology")
    return frozenset(
        i for i in top.sites if sum(site_coords(geom, i)) % 2 == 0
    )


def _default_offsets(nu: int, side: int, K_E: int) -> list[tuple[int, ...]]:
    """Even-parity generators, nearest first: 2e_d, then 4e_d, and so on."""
    offsets: list[tuple[int, ...]] = []
    count = 0
    step = 2
    while count < K_E and step < side:
        for d in range(nu):
            vec = [0] * nu
            vec[d] = step
            plus = tuple(v % side for v in vec)
            minus = tuple((-v) % side for v in vec)
            added = 1 if plus == minus else 2
            if count + added > K_E:
                continue
            offsets.append(tuple(vec))
            count += added
            if count == K_E:
                break
        step += 2
    if count != K_E:
        raise ConfigError(
            f"could not build a default excitatory class of size K_E={K_E} "
            f"for nu={nu}, side {side}; pass explicit offsets"
        )
    return offsets


def build_torus(nu: int, N: int, K_E: int, offsets=None) -> Topology:
    """Torus with distance-1 inhibition and a K_E-site excitatory class.

    ``offsets`` (optional) lists generator vectors; each contributes the
    sites at ``+offset`` and ``-offset``.  Every offset must be nonzero
    modulo the side and have even coordinate sum, which keeps the
    excitatory class on the site's own checkerboard sublattice.
    """
    if nu not in TORUS_DIMENSIONS:
        raise ConfigError(f"nu must be one of {TORUS_DIMENSIONS}, got {nu}")
    if not isinstance(N, int) or N <= 1:
        raise ConfigError(f"N must be an integer > 1, got {N!r}")
    if not isinstance(K_E, int) or not 0 < K_E < N:
        raise ConfigError(f"K_E must satisfy 0 < K_E < N, got {K_E!r}")
    side = 2 * N
    n_sites = side**nu

    if offsets is None:
        offset_list = _default_offsets(nu, side, K_E)
    else:
        offset_list = []
        for o in offsets:
            vec = tuple(int(v) % side for v in o)
            if len(vec) != nu:
                raise ConfigError(f"offset {o!r} has wrong dimension (expected {nu})")
            if all(v == 0 for v in vec):
                raise ConfigError(f"offset {o!r} is zero modulo the side {side}")
            if sum(vec) % 2 != 0:
                raise ConfigError(
                    f"offset {o!r} has odd coordinate sum; excitatory links must "
                    "stay on one checkerboard sublattice"
                )
            offset_list.append(vec)

    geom = TorusGeometry(nu, N, K_E, tuple(offset_list))

    inhibitory = []
    excitatory = []
    for site in range(n_sites):
        coords = site_coords(geom, site)
        inh = set()
        for d in range(nu):
            for delta in (1, -1):
                c = list(coords)
                c[d] = (c[d] + delta) % side
                inh.add(coords_to_site(geom, c))
        exc = set()
        for vec in offset_list:
            for sign in (1, -1):
                c = [(coords[d] + sign * vec[d]) % side for d in range(nu)]
                exc.add(coords_to_site(geom, c))
        exc.discard(site)
        if len(exc) != K_E:
            raise ConfigError(
                f"offsets generate {len(exc)} excitatory neighbours, expected K_E={K_E}"
            )
        if exc & inh:
            raise ConfigError("excitatory offsets collide with lattice neighbours")
        inhibitory.append(tuple(sorted(inh)))
        excitatory.append(tuple(sorted(exc)))

    top = Topology(n_sites, tuple(inhibitory), tuple(excitatory), geom)

    # excitation must preserve checkerboard parity
    lam0 = sublattice_lambda0(top)
    for i in top.sites:
        for j in top.excitatory[i]:
            if (i in lam0) != (j in lam0):
                raise ConfigError("excitatory link crosses the checkerboard classes")
    return top


# -- blocks --------------------------------------------------------------


def default_pairing(p: int) -> tuple[tuple[int, int], ...]:
    """Adjacent couples: (1,2), (3,4), ..."""
    return tuple((2 * n - 1, 2 * n) for n in range(1, p + 1))


def build_block_network(p: int, k: int, pairing=None, *, allow_unit_blocks: bool = False) -> Topology:
    """Fully connected network of ``2p`` paired blocks of ``k`` sites.

    ``k == 1`` collapses the within-block structure the storage theory
    rests on, so it is rejected unless ``allow_unit_blocks`` is set.
    """
    if not isinstance(p, int) or p < 1:
        raise ConfigError(f"p must be an integer >= 1, got {p!r}")
    if not isinstance(k, int) or k < 1:
        raise ConfigError(f"k must be an integer >= 1, got {k!r}")
    if k == 1 and not allow_unit_blocks:
        raise ConfigError("k=1 degenerates block structure; pass allow_unit_blocks=True to force")

    if pairing is None:
        pairs = default_pairing(p)
    else:
        pairs = tuple(tuple(sorted(int(b) for b in couple)) for couple in pairing)
        flat = [b for couple in pairs for b in couple]
        if len(pairs) != p or any(len(c) != 2 or c[0] == c[1] for c in pairs):
            raise ConfigError(f"pairing must be {p} couples of distinct blocks, got {pairing!r}")
        if sorted(flat) != list(range(1, 2 * p + 1)):
            raise ConfigError(f"pairing must cover blocks 1..{2 * p} exactly once, got {pairing!r}")

    n_sites = 2 * p * k
    everyone = range(n_sites)
    inhibitory = tuple(tuple(j for j in everyone if j != i) for i in everyone)
    excitatory = tuple(() for _ in everyone)
    geom = BlockStructure(p, k, pairs)
    return Topology(n_sites, inhibitory, excitatory, geom)


def all_pairings(p: int):
    """Every way to couple blocks 1..2p (helper for tests and enumeration)."""
    blocks = list(range(1, 2 * p + 1))

    def rec(remaining):
        if not remaining:
            yield ()
            return
        first = remaining[0]
        for idx in range(1, len(remaining)):
            other = remaining[idx]
            rest = remaining[1:idx] + remaining[idx + 1 :]
            for tail in rec(rest):
                yield ((first, other),) + tail

    return list(rec(blocks))
