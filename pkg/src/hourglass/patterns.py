"""Limiting-pattern machinery for the paired-block architecture.

A trap of the block network silences exactly one block of every pair; the
``+1/-1`` encoding of its site set is a pattern.  This module enumerates
the trap family from the structure, cross-checks it against the exhaustive
drift-criterion oracle, and implements the correlation (Hebbian) rule that
turns a family of patterns into connection strengths whose traps are
exactly those patterns.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .analysis import ClassifierSession, Verdict
from .connections import ConnectionSpec, block_connections
from .distributions import EXPONENTIAL
from .errors import BudgetError, ConfigError
from .topology import (
    BlockStructure,
    Topology,
    TorusGeometry,
    build_block_network,
    site_coords,
)

TRAP_CHAR = "#"
FREE_CHAR = "."


@dataclass(frozen=True)
class Pattern:
    """A ``+1/-1`` site configuration; ``+1`` marks the silent (trap) set."""

    xi: tuple[int, ...]

    def __post_init__(self):
        if not self.xi:
            raise ConfigError("pattern must cover at least one site")
        if any(v not in (-1, 1) for v in self.xi):
            raise ConfigError("pattern values must be -1 or +1")

    @property
    def n_sites(self) -> int:
        return len(self.xi)

    def to_json(self) -> list[int]:
        return list(self.xi)

    @classmethod
    def from_json(cls, values, where: str = "pattern") -> "Pattern":
        try:
            return cls(tuple(int(v) for v in values))
        except (TypeError, ValueError):
            raise ConfigError(f"{where}: expected a list of -1/+1 integers") from None
        except ConfigError as exc:
            raise ConfigError(f"{where}: {exc}") from None

    def render(self, topology: Topology | None = None) -> str:
        """ASCII art: ``#`` for +1 sites, ``.`` for -1.

        With a topology the layout follows the geometry (grid rows for the
        torus, block groups for the block network); otherwise one line.
        """
        chars = [TRAP_CHAR if v == 1 else FREE_CHAR for v in self.xi]
        if topology is None:
            return "".join(chars)
        geom = topology.geometry
        if isinstance(geom, BlockStructure):
            groups = [
                "".join(chars[i] for i in geom.sites_of(b))
                for b in range(1, geom.n_blocks + 1)
            ]
            return " ".join(groups)
        if isinstance(geom, TorusGeometry) and geom.nu > 1:
            side = geom.side
            rows = {}
            for i, ch in enumerate(chars):
                coords = site_coords(geom, i)
                rows.setdefault(coords[1:], [""] * side)[coords[0]] = ch
            lines = []
            previous_plane = None
            # row key (y,) or (y, z): planes stacked, rows within a plane
            for key in sorted(rows, key=lambda k: tuple(reversed(k))):
                plane = key[1:]
                if previous_plane is not None and plane != previous_plane:
                    lines.append("")
                previous_plane = plane
                lines.append("".join(rows[key]))
            return "\n".join(lines)
        return "".join(chars)


def pattern_from_trap(trap_sites, topology: Topology) -> Pattern:
    sites = frozenset(int(i) for i in trap_sites)
    unknown = sites - set(topology.sites)
    if unknown:
        raise ConfigError(f"trap contains unknown sites {sorted(unknown)}")
    return Pattern(tuple(1 if i in sites else -1 for i in topology.sites))


def trap_from_pattern(pattern: Pattern) -> frozenset[int]:
    return frozenset(i for i, v in enumerate(pattern.xi) if v == 1)


# -- families -------------------------------------------------------------


@dataclass(frozen=True)
class PatternFamily:
    """The stored patterns together with the block structure they live on."""

    patterns: tuple[Pattern, ...]
    blocks: BlockStructure

    def __post_init__(self):
        n = self.blocks.n_sites
        for idx, pattern in enumerate(self.patterns):
            if pattern.n_sites != n:
                raise ConfigError(
                    f"pattern {idx} covers {pattern.n_sites} sites, structure has {n}"
                )

    @property
    def size(self) -> int:
        return len(self.patterns)


@dataclass(frozen=True)
class FamilyReport:
    valid: bool
    violations: tuple[str, ...]
    derived_pairing: tuple[tuple[int, int], ...] | None

    def __bool__(self):
        return self.valid


def validate_pattern_family(family: PatternFamily) -> FamilyReport:
    """Check the three storage conditions (block-constance, balance, unique
    anti-correlated partner blocks) plus family size and distinctness.

    Violations are reported, not raised; the Hebbian rule refuses invalid
    families because the clamp in its definition is only unambiguous when
    the conditions hold.
    """
    blocks = family.blocks
    violations: list[str] = []

    expected = 2**blocks.p
    if family.size != expected:
        violations.append(
            f"family size: expected the full set of {expected} patterns, got {family.size}"
        )
    if len({p.xi for p in family.patterns}) != family.size:
        violations.append("family size: patterns are not pairwise distinct")

    # condition 1: block-constant patterns
    constant = True
    for mu, pattern in enumerate(family.patterns):
        for b in range(1, blocks.n_blocks + 1):
            values = {pattern.xi[i] for i in blocks.sites_of(b)}
            if len(values) > 1:
                violations.append(f"condition 1: pattern {mu} is not constant on block {b}")
                constant = False

    # condition 2: balance
    for mu, pattern in enumerate(family.patterns):
        total = sum(pattern.xi)
        if total != 0:
            violations.append(f"condition 2: pattern {mu} has site sum {total}, expected 0")

    # condition 3: unique anti-correlated partner per block
    derived: list[tuple[int, int]] | None = None
    if constant:
        signature = {
            b: tuple(p.xi[blocks.sites_of(b)[0]] for p in family.patterns)
            for b in range(1, blocks.n_blocks + 1)
        }
        partner = {}
        for b, sig in signature.items():
            anti = tuple(-v for v in sig)
            partners = [o for o, osig in signature.items() if o != b and osig == anti]
            if len(partners) != 1:
                violations.append(
                    f"condition 3: block {b} has {len(partners)} anti-correlated partners, "
                    "expected exactly one"
                )
            else:
                partner[b] = partners[0]
        if len(partner) == blocks.n_blocks and all(
            partner.get(partner.get(b)) == b for b in partner
        ):
            derived = sorted({tuple(sorted((b, q))) for b, q in partner.items()})
    if violations:
        return FamilyReport(False, tuple(violations), None)
    return FamilyReport(True, (), tuple(derived) if derived else None)


def full_family(blocks: BlockStructure) -> PatternFamily:
    """All ``2^p`` one-block-per-pair patterns of a structure, in canonical
    (pair-choice lexicographic) order."""
    topology_sites = range(blocks.n_sites)
    patterns = []
    for choice in itertools.product((0, 1), repeat=blocks.p):
        chosen = {pair[c] for pair, c in zip(blocks.pairing, choice)}
        sites = {i for i in topology_sites if blocks.block_of(i) in chosen}
        patterns.append(Pattern(tuple(1 if i in sites else -1 for i in topology_sites)))
    return PatternFamily(tuple(patterns), blocks)


# -- trap enumeration -----------------------------------------------------


def enumerate_traps(blocks: BlockStructure, a: float, b: float, c: float) -> list[frozenset[int]]:
    """The structural trap family: one block of every pair, all choices.

    Valid under the storage phase ``0 < b < a < c`` (weak background
    inhibition, strong inhibition between partners); outside it the family
    is not guaranteed and the constants are rejected.
    """
    if not 0 < b < a < c:
        raise ConfigError(
            f"constants must satisfy 0 < b < a < c, got a={a}, b={b}, c={c}"
        )
    if blocks.k <= 1:
        raise ConfigError("trap enumeration requires blocks of size k > 1")
    traps = []
    for choice in itertools.product((0, 1), repeat=blocks.p):
        chosen = {pair[idx] for pair, idx in zip(blocks.pairing, choice)}
        traps.append(
            frozenset(
                i for i in range(blocks.n_sites) if blocks.block_of(i) in chosen
            )
        )
    return traps


def brute_force_traps(connections: ConnectionSpec, budget: int = 16) -> list[frozenset[int]]:
    """Every non-empty proper subset tested against the drift criterion.

    Independent of the structural formula — this is the oracle the
    enumeration is checked against.  Exponential in the site count, hence
    the hard budget.
    """
    n = connections.n_sites
    if n > budget:
        raise BudgetError(f"brute force over 2^{n} subsets exceeds budget {budget}")
    session = ClassifierSession(connections)
    traps = []
    for mask in range(1, (1 << n) - 1):
        candidate = frozenset(i for i in range(n) if mask >> i & 1)
        if session.is_trap(candidate):
            traps.append(candidate)
    traps.sort(key=lambda s: tuple(sorted(s)))
    return traps


def classify_all_subsets(connections: ConnectionSpec, budget: int = 16) -> dict[frozenset[int], Verdict]:
    """Verdict of every non-empty subset (shared memo); used to audit that
    a configuration leaves nothing Unknown."""
    n = connections.n_sites
    if n > budget:
        raise BudgetError(f"classification over 2^{n} subsets exceeds budget {budget}")
    session = ClassifierSession(connections)
    out = {}
    for mask in range(1, 1 << n):
        sites = frozenset(i for i in range(n) if mask >> i & 1)
        out[sites] = session.classify_mask(mask).verdict
    return out


# -- Hebbian rule ---------------------------------------------------------


@dataclass(frozen=True)
class LearnedConnections:
    """Expected inhibition magnitudes produced by the correlation rule.

    Exactly two magnitudes occur: ``strong == (A+B)*a`` between partner
    blocks and ``weak == (B-A)*a`` everywhere else, with
    ``weak < a < strong`` guaranteed by the constraint on (A, B).
    """

    a: float
    A: float
    B: float
    magnitudes: dict[tuple[int, int], float]
    blocks: BlockStructure
    pairing: tuple[tuple[int, int], ...]
    weak: float
    strong: float

    def to_connection_spec(self, magnitude_kind: str = EXPONENTIAL) -> ConnectionSpec:
        """Realize the expectations as a simulatable block network."""
        topology = build_block_network(self.blocks.p, self.blocks.k, self.pairing)
        return block_connections(
            topology, self.a, self.weak, self.strong, magnitude_kind=magnitude_kind
        )


def hebb_connections(family: PatternFamily, a: float, A: float, B: float) -> LearnedConnections:
    """Correlation rule: ``b(x,y) = A*a*corr(x,y) - B*a``, clamped so the
    minimum value survives and everything else is pulled to the maximum.

    Requires ``0 < B - A < 1 < B + A`` and a family satisfying the storage
    conditions; for such families the clamp leaves exactly the two
    magnitudes ``(A+B)*a`` (partner blocks) and ``(B-A)*a`` (the rest).
    """
    if a <= 0:
        raise ConfigError(f"a must be > 0, got {a}")
    if not 0 < B - A < 1 < B + A:
        raise ConfigError(
            "storage constants must satisfy 0 < B - A < 1 < B + A, "
            f"got A={A}, B={B} (B-A={B - A}, B+A={B + A})"
        )
    report = validate_pattern_family(family)
    if not report.valid:
        raise ConfigError(
            "family does not satisfy the storage conditions: "
            + "; ".join(report.violations)
        )

    xi = np.array([p.xi for p in family.patterns], dtype=np.float64)
    corr = (xi.T @ xi) / family.size
    b_matrix = A * a * corr - B * a

    n = family.blocks.n_sites
    off_diagonal = [
        (x, y) for x in range(n) for y in range(n) if x != y
    ]
    values = [b_matrix[x, y] for x, y in off_diagonal]
    b_min = min(values)
    b_max = max(values)
    magnitudes = {
        (x, y): float(-(b_matrix[x, y] if b_matrix[x, y] == b_min else b_max))
        for x, y in off_diagonal
    }
    return LearnedConnections(
        a=a,
        A=A,
        B=B,
        magnitudes=magnitudes,
        blocks=family.blocks,
        pairing=report.derived_pairing,
        weak=float(-b_max),
        strong=float(-b_min),
    )


def verify_storage(learned: LearnedConnections, family: PatternFamily) -> bool:
    """Do the learned constants store exactly the family's patterns?

    Compares the structural trap family of the learned block constants
    against the patterns' trap sets, and (within budget) the exhaustive
    drift-criterion oracle on the realized network as well.
    """
    blocks = BlockStructure(family.blocks.p, family.blocks.k, learned.pairing)
    expected = {trap_from_pattern(p) for p in family.patterns}
    try:
        enumerated = set(enumerate_traps(blocks, learned.a, learned.weak, learned.strong))
    except ConfigError:
        return False
    if enumerated != expected:
        return False
    if blocks.n_sites <= 16:
        forced = set(brute_force_traps(learned.to_connection_spec()))
        if forced != expected:
            return False
    return True
