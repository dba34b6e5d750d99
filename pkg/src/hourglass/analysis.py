"""Firing-rate estimation, drift fields, and the ergodic/transient classifier.

The analytic side works on all-inhibitory interactions, where the limiting
rate of a site in an ergodic restriction W solves a simple balance: every
incoming impulse lengthens the cycle by its magnitude, so

    pi_i = 1 / (E Y_i + sum over senders j in W of E|theta_ji|).

The drift of a deleted site j against an ergodic face W is then

    v_j = -1 - sum_{i in W} E theta_ij * rate_i,

counting inhibitory senders at their total rate and excitatory senders at
their spontaneous rate.  Positive drift everywhere outside an ergodic
complement is exactly the trap condition, and the inductive classifier
applies it over all memoized faces of a site set.

The Monte-Carlo side replaces both ingredients with simulation: rates from
recorded counts, face ergodicity from an activity heuristic (every site
fires late in the run and nobody's countdown grows linearly), and drift
tolerances from replication confidence intervals.  Its verdicts are
labeled heuristic everywhere they surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

import numpy as np
from scipy.stats import t as _student_t

from .connections import ConnectionSpec, Restriction, restrict, torus_connections
from .distributions import DistributionSpec, RngHandle, exponential
from .engine import FiringStats, combine_counts, init_state, run
from .errors import (
    BudgetError,
    ConfigError,
    InsufficientDataError,
    MixedSignError,
)
from .topology import Topology, TorusGeometry, sublattice_lambda0

ANALYTIC_DRIFT_TOL = 1e-9
SUBSET_BUDGET = 16
METHOD_ANALYTIC = "analytic"
METHOD_MC = "monte-carlo"

# labels attached to verdicts in reports: drift-criterion results vs. the
# simulation heuristic
LABEL_ANALYTIC = "theorem-A"
LABEL_HEURISTIC = "heuristic"


class Verdict(str, Enum):
    ERGODIC = "Ergodic"
    TRANSIENT = "Transient"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class Classification:
    verdict: Verdict
    witness: frozenset[int] | None = None
    method: str = LABEL_ANALYTIC

    def __post_init__(self):
        if self.verdict is Verdict.TRANSIENT and self.witness is None:
            raise ValueError("transient classification requires a witness trap")


# -- frequency estimation -------------------------------------------------


@dataclass(frozen=True)
class FrequencyEstimate:
    """Rates over a recorded window.

    ``pie`` maps ordered pairs ``(receiver, sender)`` to the rate of firings
    of the receiver triggered through that excitatory link.  The identity
    ``pi_total == pi0 + pie_total`` holds exactly: the total is constructed
    as that sum, mirroring the count-level decomposition.
    """

    window: float
    n_events: int
    pi0: np.ndarray
    pie: dict[tuple[int, int], float]
    pie_total: np.ndarray
    pi_total: np.ndarray

    def rows(self):
        for i in range(len(self.pi0)):
            yield (i, float(self.pi0[i]), float(self.pie_total[i]), float(self.pi_total[i]))


def estimate_frequencies(stats: FiringStats, burn_in_fraction: float = 0.0) -> FrequencyEstimate:
    """Counts divided by the recorded window.

    The recording window must already exclude the requested burn-in share
    of the run (the runner records only after burn-in); a stats object
    whose window starts too early is rejected rather than silently
    reinterpreted.
    """
    if not 0.0 <= burn_in_fraction < 1.0:
        raise ConfigError(f"burn_in_fraction must be in [0, 1), got {burn_in_fraction}")
    window = stats.window
    if window <= 0.0:
        raise ConfigError("empty recording window")
    if stats.t_start < burn_in_fraction * stats.t_end - 1e-12:
        raise ConfigError(
            f"stats window starts at {stats.t_start} but a burn-in of "
            f"{burn_in_fraction} of the run ends at {burn_in_fraction * stats.t_end}; "
            "record after burn-in instead"
        )
    pi0 = stats.spontaneous / window
    pie: dict[tuple[int, int], float] = {}
    pie_total = np.zeros(stats.n_sites, dtype=np.float64)
    for slot, (src, dst) in enumerate(stats.excitatory_pairs):
        rate = stats.triggered[slot] / window
        pie[(dst, src)] = float(rate)
        pie_total[dst] += rate
    return FrequencyEstimate(
        window=float(window),
        n_events=stats.n_events,
        pi0=pi0,
        pie=pie,
        pie_total=pie_total,
        pi_total=pi0 + pie_total,
    )


# -- analytic rates and drift ---------------------------------------------


def analytic_pi_inhibitory(connections: ConnectionSpec, W: Iterable[int]) -> dict[int, float]:
    """Limiting rates of the restriction to ``W`` under pure inhibition.

    Exact for restrictions whose sites all see the same mean inflow (the
    fully connected uniform and block cases it is used for); the classifier
    only ever consumes it on such faces.
    """
    sites = frozenset(int(i) for i in W)
    if not sites:
        raise ConfigError("W must be non-empty")
    if not sites <= set(connections.topology.sites):
        raise ConfigError("W contains unknown sites")
    if connections.has_excitatory_within(sites):
        raise MixedSignError(
            "analytic rates require all-inhibitory interactions within W"
        )
    out = {}
    for i in sites:
        load = connections.y_dists[i].mean
        for j, _sign, mean in connections.in_edges[i]:
            if j in sites:
                load += mean
        out[i] = 1.0 / load
    return out


@dataclass(frozen=True)
class PiValues:
    """Rates of an ergodic face, split into total and spontaneous parts.

    For all-inhibitory faces the two coincide (nothing is triggered), which
    is why a plain mapping is accepted wherever a PiValues is expected.
    """

    total: Mapping[int, float]
    spontaneous: Mapping[int, float] | None = None

    def spont(self, i: int) -> float:
        source = self.total if self.spontaneous is None else self.spontaneous
        return source[i]


@dataclass(frozen=True)
class VectorField:
    """Per-site drift of deleted sites against an ergodic face.

    ``half_width`` carries replication confidence half-widths for
    Monte-Carlo fields and zeros for analytic ones.
    """

    values: dict[int, float]
    half_width: dict[int, float]

    def __getitem__(self, site: int) -> float:
        return self.values[site]

    def items(self):
        return self.values.items()


def _coerce_pi(pi) -> PiValues:
    if isinstance(pi, PiValues):
        return pi
    if isinstance(pi, FrequencyEstimate):
        total = {i: float(pi.pi_total[i]) for i in range(len(pi.pi_total))}
        spont = {i: float(pi.pi0[i]) for i in range(len(pi.pi0))}
        return PiValues(total, spont)
    if isinstance(pi, Mapping):
        return PiValues(dict(pi))
    raise ConfigError(f"cannot interpret {type(pi).__name__} as face rates")


def second_vector_field(
    connections: ConnectionSpec, W: Iterable[int], pi
) -> VectorField:
    """Drift of every site outside ``W`` given the face rates ``pi``.

    Unit downhill drift, pushed back by inhibitory senders at their total
    rate and pulled forward by excitatory senders at their spontaneous
    rate.
    """
    sites = frozenset(int(i) for i in W)
    rates = _coerce_pi(pi)
    for i in sites:
        if i not in rates.total:
            raise ConfigError(f"face rates missing site {i}")
    values = {}
    for j in connections.topology.sites:
        if j in sites:
            continue
        v = -1.0
        for i, sign, mean in connections.in_edges[j]:
            if i not in sites:
                continue
            if sign:  # excitatory sender counted at spontaneous rate
                v -= mean * rates.spont(i)
            else:
                v += mean * rates.total[i]
        values[j] = v
    return VectorField(values, {j: 0.0 for j in values})


# -- Monte-Carlo probes ---------------------------------------------------


@dataclass(frozen=True)
class MCSettings:
    """Budget and thresholds for simulation-based classification."""

    horizon: float = 2000.0
    replications: int = 5
    burn_in_fraction: float = 0.2
    base_seed: int = 0
    growth_ergodic: float = 0.25
    growth_transient: float = 0.5
    confidence: float = 0.95
    backend: str | None = None

    def __post_init__(self):
        if self.horizon <= 0:
            raise ConfigError(f"horizon must be > 0, got {self.horizon}")
        if self.replications < 1:
            raise ConfigError("need at least one replication")
        if not 0.0 <= self.burn_in_fraction < 0.5:
            raise ConfigError(
                "burn_in_fraction must lie in [0, 0.5) so a trailing half-window exists"
            )


def activity_verdict(
    active: Iterable[int],
    growth: Mapping[int, float],
    trailing_fired: Mapping[int, int],
    half_window: float,
    *,
    growth_ergodic: float = 0.25,
    growth_transient: float = 0.5,
) -> tuple[Verdict, frozenset[int]]:
    """The activity heuristic shared by probes and reports.

    Empirically ergodic: every active site fired in the trailing half and
    no countdown grew by more than ``growth_ergodic`` times the half-window
    over the whole run.  Empirically transient: some site was silent in the
    trailing half after growing by at least ``growth_transient`` times the
    half-window.  Anything else is Unknown.  Returns the verdict and the
    trailing-silent set.
    """
    active = sorted(active)
    silent = frozenset(i for i in active if trailing_fired[i] == 0)
    cap = growth_ergodic * half_window
    floor = growth_transient * half_window
    if not silent and all(growth[i] <= cap for i in active):
        return Verdict.ERGODIC, silent
    if any(growth[i] >= floor for i in silent):
        return Verdict.TRANSIENT, silent
    return Verdict.UNKNOWN, silent


@dataclass(frozen=True)
class RestrictionProbe:
    """One simulated replication of a restriction."""

    active: frozenset[int]
    verdict: Verdict
    silent: frozenset[int]
    growth: dict[int, float]
    pi_total: dict[int, float]
    pi_spont: dict[int, float]
    n_events: int


def simulate_restriction(
    connections: ConnectionSpec,
    W: Iterable[int],
    settings: MCSettings,
    replication: int = 0,
) -> RestrictionProbe:
    """Run the restriction to ``W`` once and summarize it for classification."""
    sites = frozenset(int(i) for i in W)
    mask = 0
    for i in sites:
        mask |= 1 << i
    seed = RngHandle(settings.base_seed).derive(mask, replication)
    state = init_state(restrict(connections, sites), exponential(1.0), seed)
    x0 = state.x.copy()

    horizon = settings.horizon
    burn = settings.burn_in_fraction * horizon
    half = horizon / 2.0
    run(state, burn, backend=settings.backend)
    head = run(state, half, record=True, backend=settings.backend)
    tail = run(state, horizon, record=True, backend=settings.backend)

    growth = {i: float(state.x[i] - x0[i]) for i in sites}
    trailing = {i: int(tail.total[i]) for i in sites}
    verdict, silent = activity_verdict(
        sites,
        growth,
        trailing,
        half,
        growth_ergodic=settings.growth_ergodic,
        growth_transient=settings.growth_transient,
    )
    whole = combine_counts(head, tail)
    window = whole.window
    return RestrictionProbe(
        active=sites,
        verdict=verdict,
        silent=silent,
        growth=growth,
        pi_total={i: float(whole.total[i] / window) for i in sites},
        pi_spont={i: float(whole.spontaneous[i] / window) for i in sites},
        n_events=whole.n_events,
    )


def _confidence_half_width(values: np.ndarray, confidence: float) -> float:
    r = len(values)
    if r < 2:
        return 0.0
    sd = float(np.std(values, ddof=1))
    quantile = float(_student_t.ppf(0.5 + confidence / 2.0, r - 1))
    return quantile * sd / math.sqrt(r)


# -- the inductive classifier ---------------------------------------------


class ClassifierSession:
    """Memoized subset classification over one connection spec.

    Faces are bitmasks; verdicts and face rates are cached, so exhaustive
    scans (the brute-force trap oracle) share all intermediate work.  The
    analytic method follows the drift criterion exactly; the Monte-Carlo
    method substitutes simulated rates, the activity heuristic for face
    ergodicity, and confidence half-widths for the drift tolerance.
    """

    def __init__(
        self,
        connections: ConnectionSpec,
        *,
        method: str = METHOD_ANALYTIC,
        tol: float = ANALYTIC_DRIFT_TOL,
        budget: int = SUBSET_BUDGET,
        mc: MCSettings | None = None,
    ):
        if method not in (METHOD_ANALYTIC, METHOD_MC):
            raise ConfigError(f"unknown classification method {method!r}")
        self.connections = connections
        self.method = method
        self.tol = tol
        self.budget = budget
        self.mc = mc or MCSettings()
        self.label = LABEL_ANALYTIC if method == METHOD_ANALYTIC else LABEL_HEURISTIC
        n = connections.n_sites
        self._n = n
        self._memo: dict[int, Classification] = {}
        self._pi_cache: dict[int, dict[int, float] | None] = {}
        self._probe_cache: dict[int, tuple[RestrictionProbe, ...]] = {}
        self._excit_masks = [
            (1 << i) | (1 << j) for i, j in connections.excitatory_pairs
        ]
        # per-site incoming links as (sender, excitatory?, mean)
        self._in_edges = connections.in_edges

    # mask helpers

    def _mask(self, sites: Iterable[int]) -> int:
        mask = 0
        for i in sites:
            i = int(i)
            if not 0 <= i < self._n:
                raise ConfigError(f"site {i} out of range")
            mask |= 1 << i
        return mask

    def _sites(self, mask: int) -> frozenset[int]:
        return frozenset(i for i in range(self._n) if mask >> i & 1)

    def _mixed(self, mask: int) -> bool:
        return any(mask & pm == pm for pm in self._excit_masks)

    # face rates

    def _analytic_pi(self, mask: int) -> dict[int, float] | None:
        """Face rates, or None when internal excitation defeats the formula."""
        if mask in self._pi_cache:
            return self._pi_cache[mask]
        if self._mixed(mask):
            self._pi_cache[mask] = None
            return None
        conn = self.connections
        out = {}
        for i in range(self._n):
            if not mask >> i & 1:
                continue
            load = conn.y_dists[i].mean
            for j, _sign, mean in self._in_edges[i]:
                if mask >> j & 1:
                    load += mean
            out[i] = 1.0 / load
        self._pi_cache[mask] = out
        return out

    def _probes(self, mask: int) -> tuple[RestrictionProbe, ...]:
        if mask not in self._probe_cache:
            sites = self._sites(mask)
            self._probe_cache[mask] = tuple(
                simulate_restriction(self.connections, sites, self.mc, r)
                for r in range(self.mc.replications)
            )
        return self._probe_cache[mask]

    def _drift(self, face_mask: int, target: int) -> tuple[float, float]:
        """Mean drift of ``target`` against the face, with its tolerance."""
        if self.method == METHOD_ANALYTIC:
            pi = self._analytic_pi(face_mask)
            assert pi is not None  # callers gate on availability
            v = -1.0
            for i, sign, mean in self._in_edges[target]:
                if face_mask >> i & 1:
                    v += -mean * pi[i] if sign else mean * pi[i]
            return v, self.tol
        probes = self._probes(face_mask)
        values = []
        for probe in probes:
            v = -1.0
            for i, sign, mean in self._in_edges[target]:
                if face_mask >> i & 1:
                    rate = probe.pi_spont[i] if sign else probe.pi_total[i]
                    v += -mean * rate if sign else mean * rate
            values.append(v)
        arr = np.asarray(values)
        return float(arr.mean()), _confidence_half_width(arr, self.mc.confidence)

    def drift_field(self, face: Iterable[int]) -> VectorField:
        """Public drift evaluation against an arbitrary face."""
        face_mask = self._mask(face)
        values = {}
        widths = {}
        if self.method == METHOD_ANALYTIC and self._analytic_pi(face_mask) is None:
            raise MixedSignError(
                "analytic drift against a face with internal excitation"
            )
        for j in range(self._n):
            if face_mask >> j & 1:
                continue
            v, w = self._drift(face_mask, j)
            values[j] = v
            widths[j] = w if self.method == METHOD_MC else 0.0
        return VectorField(values, widths)

    # classification

    def _face_ergodicity(self, mask: int) -> Verdict:
        """Ergodicity of a face: recursion analytically, probes for MC."""
        if self.method == METHOD_ANALYTIC:
            return self.classify_mask(mask).verdict
        probes = self._probes(mask)
        verdicts = {p.verdict for p in probes}
        if verdicts == {Verdict.ERGODIC}:
            return Verdict.ERGODIC
        if verdicts == {Verdict.TRANSIENT}:
            return Verdict.TRANSIENT
        return Verdict.UNKNOWN

    def classify(self, sites: Iterable[int]) -> Classification:
        mask = self._mask(sites)
        if mask == 0:
            raise ConfigError("cannot classify the empty set")
        if bin(mask).count("1") > self.budget:
            raise BudgetError(
                f"classification of {bin(mask).count('1')} sites exceeds the "
                f"exhaustive budget of {self.budget} (2^n faces)"
            )
        return self.classify_mask(mask)

    def classify_mask(self, mask: int) -> Classification:
        cached = self._memo.get(mask)
        if cached is not None:
            return cached
        size = bin(mask).count("1")
        if size <= 1:
            result = Classification(Verdict.ERGODIC, method=self.label)
            self._memo[mask] = result
            return result

        witness: frozenset[int] | None = None
        certified = True  # every evaluated ergodic face pushed strictly down
        sub = (mask - 1) & mask
        while sub:  # every proper non-empty submask, descending
            face = self._face_ergodicity(sub)
            if face is Verdict.UNKNOWN:
                certified = False
            elif face is Verdict.ERGODIC:
                if self.method == METHOD_ANALYTIC and self._analytic_pi(sub) is None:
                    certified = False  # ergodic face whose rates we cannot get
                else:
                    rest = mask & ~sub
                    all_up = True
                    j = 0
                    r = rest
                    while r:
                        if r & 1:
                            v, tol = self._drift(sub, j)
                            if v <= tol:
                                all_up = False
                            if v >= -tol:
                                certified = False
                        r >>= 1
                        j += 1
                    if all_up:
                        witness = self._sites(rest)
                        break
            sub = (sub - 1) & mask

        if witness is not None:
            result = Classification(Verdict.TRANSIENT, witness, self.label)
        elif certified:
            result = Classification(Verdict.ERGODIC, method=self.label)
        else:
            result = Classification(Verdict.UNKNOWN, method=self.label)
        self._memo[mask] = result
        return result

    def is_trap(self, trap_sites: Iterable[int]) -> bool:
        """Trap test of a candidate against the full site set."""
        trap = self._mask(trap_sites)
        if trap == 0:
            raise ConfigError("trap candidate must be non-empty")
        full = (1 << self._n) - 1
        if trap == full:
            raise ConfigError("trap candidate must leave a non-empty complement")
        complement = full & ~trap
        if self._face_ergodicity(complement) is not Verdict.ERGODIC:
            return False
        if self.method == METHOD_ANALYTIC and self._analytic_pi(complement) is None:
            return False
        j = 0
        t = trap
        while t:
            if t & 1:
                v, tol = self._drift(complement, j)
                if v <= tol:
                    return False
            t >>= 1
            j += 1
        return True


def classify_inductive(
    connections: ConnectionSpec,
    S: Iterable[int] | None = None,
    method: str = METHOD_ANALYTIC,
    *,
    tol: float = ANALYTIC_DRIFT_TOL,
    budget: int = SUBSET_BUDGET,
    mc: MCSettings | None = None,
) -> Classification:
    """Classify the restriction to ``S`` (default: every site) by induction
    over its faces: singletons are ergodic; a set is transient as soon as
    some face is ergodic with strictly positive drift on the whole
    complement (that complement is the witness trap); it is ergodic when
    every ergodic face pushes every outside site strictly down; anything
    within tolerance of the boundary, or resting on an undecidable face,
    is Unknown.
    """
    session = ClassifierSession(
        connections, method=method, tol=tol, budget=budget, mc=mc
    )
    sites = connections.topology.sites if S is None else S
    return session.classify(sites)


def is_trap(
    connections: ConnectionSpec,
    M: Iterable[int],
    method: str = METHOD_ANALYTIC,
    *,
    tol: float = ANALYTIC_DRIFT_TOL,
    budget: int = SUBSET_BUDGET,
    mc: MCSettings | None = None,
) -> bool:
    """Whether deleting everything except ``M``'s complement leaves an
    ergodic system that starves every site of ``M`` (positive drift)."""
    session = ClassifierSession(
        connections, method=method, tol=tol, budget=budget, mc=mc
    )
    return session.is_trap(M)


# -- critical curve -------------------------------------------------------


@dataclass(frozen=True)
class SimBudget:
    """Simulation effort for the critical-point estimator."""

    horizon: float = 20_000.0
    replications: int = 5
    burn_in_fraction: float = 0.2
    base_seed: int = 0
    backend: str | None = None

    def __post_init__(self):
        if self.horizon <= 0:
            raise ConfigError(f"horizon must be > 0, got {self.horizon}")
        if self.replications < 2:
            raise ConfigError(
                "critical-point estimation needs >= 2 replications for a "
                "confidence interval"
            )
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise ConfigError("burn_in_fraction must lie in [0, 1)")


@dataclass(frozen=True)
class CriticalEstimate:
    value: float
    half_width: float
    pi_plus: float
    pi_plus_half_width: float
    per_replication: tuple[float, ...]

    def __float__(self):
        return self.value


def critical_wI(
    topology: Topology,
    w_E: float,
    budget: SimBudget | None = None,
    *,
    eta2: DistributionSpec | None = None,
    y: DistributionSpec | None = None,
) -> CriticalEstimate:
    """Critical inhibition strength ``1 / (2 nu pi^+(w_E))``.

    ``pi^+`` is the per-site total firing rate of the checkerboard
    subsystem that carries the excitatory links; it does not depend on the
    inhibition weight, so the estimator simulates that subsystem alone.
    """
    geom = topology.geometry
    if not isinstance(geom, TorusGeometry):
        raise ConfigError("critical_wI requires a torus topology")
    if w_E < 0:
        raise ConfigError(f"w_E must be >= 0, got {w_E}")
    budget = budget or SimBudget()
    conn = torus_connections(topology, 0.0, w_E, eta2=eta2, y=y)
    lam0 = sublattice_lambda0(topology)
    horizon = budget.horizon
    burn = budget.burn_in_fraction * horizon

    rates = []
    for rep in range(budget.replications):
        seed = RngHandle(budget.base_seed).derive(rep)
        state = init_state(restrict(conn, lam0), exponential(1.0), seed)
        run(state, burn, backend=budget.backend)
        stats = run(state, horizon, record=True, backend=budget.backend)
        total = sum(int(stats.total[i]) for i in lam0)
        rates.append(total / (len(lam0) * stats.window))

    arr = np.asarray(rates)
    pi_plus = float(arr.mean())
    pi_hw = _confidence_half_width(arr, 0.95)
    per_rep = tuple(1.0 / (2 * geom.nu * r) for r in rates)
    crit = np.asarray(per_rep)
    return CriticalEstimate(
        value=float(crit.mean()),
        half_width=_confidence_half_width(crit, 0.95),
        pi_plus=pi_plus,
        pi_plus_half_width=pi_hw,
        per_replication=per_rep,
    )


def linear_approx_wI(w_E: float, nu: int, K_E: int) -> float:
    """First-order critical line: ``1/(2 nu) - (K_E / (2 nu)) * w_E``."""
    if nu < 1:
        raise ConfigError(f"nu must be >= 1, got {nu}")
    return 1.0 / (2 * nu) - (K_E / (2 * nu)) * w_E


# -- balance relation -----------------------------------------------------

BALANCE_MIN_SAMPLES = 1000


@dataclass(frozen=True)
class BalanceReport:
    """Empirical evaluation of the spontaneous-rate balance relation.

    ``lhs`` is the mean over active sites of

        pi0_i * (1 - K_E w_E + sum_j P[triggered by j] + sum_j E(overshoot)),

    which equals one exactly in the stationary regime; ``residual`` is
    ``lhs - 1``.  ``amplification`` compares the total rate against the
    spontaneous one (their ratio is one plus the sum of trigger
    probabilities).
    """

    residual: float
    lhs: float
    lhs_per_site: dict[int, float]
    pi_plus: float
    pi_plus0: float
    amplification: float
    trigger_prob: dict[tuple[int, int], float]
    overshoot_mean: dict[tuple[int, int], float]
    n_events: int


def balance_report(
    stats: FiringStats,
    w_E: float,
    K_E: int,
    eta2: DistributionSpec | None = None,
) -> BalanceReport:
    """Evaluate the balance relation from recorded excitatory statistics.

    Requires stats from an (ergodic) run of the excitatory subsystem; with
    ``w_E > 0`` every live link needs at least ``10^3`` recorded deliveries.
    """
    if stats.window <= 0:
        raise ConfigError("empty recording window")
    if eta2 is not None and eta2.mean != 1.0:
        raise ConfigError(f"eta2 must have mean 1, got {eta2.mean}")
    window = stats.window
    active = [i for i in range(stats.n_sites) if stats.total[i] > 0]
    if not active:
        raise InsufficientDataError("no site fired in the recorded window")

    trigger_prob: dict[tuple[int, int], float] = {}
    overshoot_mean: dict[tuple[int, int], float] = {}
    per_site_trigger = {i: 0.0 for i in active}
    per_site_overshoot = {i: 0.0 for i in active}
    for slot, (src, dst) in enumerate(stats.excitatory_pairs):
        seen = int(stats.deliveries[slot])
        if seen == 0:
            continue
        if seen < BALANCE_MIN_SAMPLES:
            raise InsufficientDataError(
                f"link {src}->{dst} has only {seen} recorded deliveries "
                f"(need {BALANCE_MIN_SAMPLES})"
            )
        p = stats.triggered[slot] / seen
        e = stats.overshoot_sum[slot] / seen
        trigger_prob[(dst, src)] = float(p)
        overshoot_mean[(dst, src)] = float(e)
        if dst in per_site_trigger:
            per_site_trigger[dst] += p
            per_site_overshoot[dst] += e

    lhs_per_site = {}
    for i in active:
        pi0 = stats.spontaneous[i] / window
        lhs_per_site[i] = float(
            pi0 * (1.0 - K_E * w_E + per_site_trigger[i] + per_site_overshoot[i])
        )
    lhs = float(np.mean(list(lhs_per_site.values())))
    pi_plus0 = float(np.mean([stats.spontaneous[i] / window for i in active]))
    pi_plus = float(np.mean([stats.total[i] / window for i in active]))
    return BalanceReport(
        residual=lhs - 1.0,
        lhs=lhs,
        lhs_per_site=lhs_per_site,
        pi_plus=pi_plus,
        pi_plus0=pi_plus0,
        amplification=pi_plus / pi_plus0 if pi_plus0 else math.inf,
        trigger_prob=trigger_prob,
        overshoot_mean=overshoot_mean,
        n_events=stats.n_events,
    )


def check_balance(
    stats: FiringStats,
    w_E: float,
    K_E: int,
    eta2: DistributionSpec | None = None,
) -> float:
    """Residual (LHS - 1) of the balance relation; see balance_report."""
    return balance_report(stats, w_E, K_E, eta2).residual
