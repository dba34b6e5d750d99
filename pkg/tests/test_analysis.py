import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hourglass.analysis import (
    LABEL_ANALYTIC,
    LABEL_HEURISTIC,
    METHOD_MC,
    Classification,
    ClassifierSession,
    MCSettings,
    PiValues,
    SimBudget,
    Verdict,
    activity_verdict,
    analytic_pi_inhibitory,
    balance_report,
    check_balance,
    classify_inductive,
    critical_wI,
    estimate_frequencies,
    is_trap,
    linear_approx_wI,
    second_vector_field,
    simulate_restriction,
)
from hourglass.connections import (
    SIGN_INHIBITORY,
    ConnectionSpec,
    block_connections,
    restrict,
    torus_connections,
)
from hourglass.distributions import DistributionSpec, EXPONENTIAL, exponential
from hourglass.engine import FiringStats, init_state, run
from hourglass.errors import (
    BudgetError,
    ConfigError,
    InsufficientDataError,
    MixedSignError,
)
from hourglass.topology import (
    Topology,
    build_block_network,
    build_torus,
    sublattice_lambda0,
)


def storage_net(a=1.0, b=0.5, c=2.0, p=2, k=2):
    return block_connections(build_block_network(p, k), a, b, c)


def uniform_net(a=1.0, b=0.5, p=2, k=2):
    # b == c: no pair is distinguished, plain fully connected inhibition
    return block_connections(build_block_network(p, k), a, b, b)


def mutual_pair(a=1.0, c=0.5):
    # two sites inhibiting each other with mean c
    top = build_block_network(1, 1, allow_unit_blocks=True)
    return block_connections(top, a, c, c)


# -- analytic rates -------------------------------------------------------


def test_analytic_pi_singleton_is_pure_renewal():
    conn = uniform_net(a=1.0)
    assert analytic_pi_inhibitory(conn, [0]) == {0: 1.0}
    conn2 = uniform_net(a=2.0, b=0.5)
    assert analytic_pi_inhibitory(conn2, [3]) == {3: 0.5}


def test_analytic_pi_mutual_pair():
    conn = mutual_pair(a=1.0, c=0.5)
    pi = analytic_pi_inhibitory(conn, [0, 1])
    assert pi == {0: pytest.approx(2.0 / 3.0), 1: pytest.approx(2.0 / 3.0)}


def test_analytic_pi_block_complement_face():
    # storage constants (1, 0.5, 2); the face is one block of each pair, so
    # every member sees three senders at the weak mean 0.5
    conn = storage_net()
    face = [2, 3, 6, 7]
    pi = analytic_pi_inhibitory(conn, face)
    assert set(pi) == set(face)
    for i in face:
        assert pi[i] == pytest.approx(1.0 / 2.5)


def test_analytic_pi_rejects_internal_excitation():
    conn = torus_connections(build_torus(1, 2, 1), 0.2, 0.3)
    with pytest.raises(MixedSignError):
        analytic_pi_inhibitory(conn, [0, 2])  # antipodes excite each other


def test_analytic_pi_validates_sites():
    conn = uniform_net()
    with pytest.raises(ConfigError, match="non-empty"):
        analytic_pi_inhibitory(conn, [])
    with pytest.raises(ConfigError, match="unknown"):
        analytic_pi_inhibitory(conn, [0, 99])


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(2, 5),
    seed=st.integers(0, 2**31),
    bump=st.floats(0.01, 3.0),
)
def test_analytic_pi_monotone_in_incoming_means(n, seed, bump):
    # raising one incoming magnitude strictly lowers the receiver's rate
    # and leaves everyone else's untouched
    rng = np.random.default_rng(seed)
    means = rng.uniform(0.1, 2.0, size=(n, n))
    inhib = tuple(tuple(j for j in range(n) if j != i) for i in range(n))
    top = Topology(n, inhib, ((),) * n, None)

    def build(extra):
        table = {}
        for i in range(n):
            for j in range(n):
                if i != j:
                    m = means[i, j] + (extra if (i, j) == (0, 1) else 0.0)
                    table[(i, j)] = (SIGN_INHIBITORY, DistributionSpec(EXPONENTIAL, m))
        return ConnectionSpec(top, table, [exponential(1.0)] * n)

    before = analytic_pi_inhibitory(build(0.0), range(n))
    after = analytic_pi_inhibitory(build(bump), range(n))
    assert after[1] < before[1]
    for i in range(2, n):
        assert after[i] == before[i]
    assert after[0] == before[0]


# -- drift fields ---------------------------------------------------------


def test_field_with_no_senders_is_unit_drift():
    # zero weights mean no links at all, so a deleted site just counts down
    conn = torus_connections(build_torus(1, 2, 1), 0.0, 0.0)
    field = second_vector_field(conn, [0], {0: 1.0})
    assert field.values == {1: -1.0, 2: -1.0, 3: -1.0}
    assert field.half_width == {1: 0.0, 2: 0.0, 3: 0.0}


def test_field_on_storage_trap():
    # deleted union of one block per pair: each member is inhibited by its
    # partner block at mean c and by the other surviving block at mean b
    conn = storage_net(a=1.0, b=0.5, c=2.0, p=2, k=2)
    face = [2, 3, 6, 7]
    pi = analytic_pi_inhibitory(conn, face)
    field = second_vector_field(conn, face, pi)
    assert set(field.values) == {0, 1, 4, 5}
    for j in field.values:
        # -1 + (c*k + (p-1)*b*k) / (a + (p*k-1)*b) = -1 + 5/2.5
        assert field[j] == pytest.approx(1.0)


def test_field_splits_total_and_spontaneous_rates():
    # ring of 4 with the antipodal excitatory class: neighbours inhibit
    # across the checkerboard, antipodes excite within it
    conn = torus_connections(build_torus(1, 2, 1), 0.4, 0.3)
    rates = PiValues(total={0: 0.6}, spontaneous={0: 0.5})
    field = second_vector_field(conn, [0], rates)
    # sites 1 and 3 receive inhibition at the total rate
    assert field[1] == pytest.approx(-1.0 + 0.4 * 0.6)
    assert field[3] == pytest.approx(-1.0 + 0.4 * 0.6)
    # site 2 receives excitation counted at the spontaneous rate
    assert field[2] == pytest.approx(-1.0 - 0.3 * 0.5)


def test_field_accepts_plain_mapping_and_checks_coverage():
    conn = uniform_net()
    field = second_vector_field(conn, [0, 1], {0: 0.4, 1: 0.4})
    # every deleted site hears both survivors at mean b = 0.5
    for j in (2, 3, 4, 5, 6, 7):
        assert field[j] == pytest.approx(-1.0 + 2 * 0.5 * 0.4)
    with pytest.raises(ConfigError, match="missing site"):
        second_vector_field(conn, [0, 1], {0: 0.4})


def test_drift_field_rejects_mixed_faces_analytically():
    conn = torus_connections(build_torus(1, 2, 1), 0.2, 0.3)
    session = ClassifierSession(conn)
    with pytest.raises(MixedSignError):
        session.drift_field([0, 2])


# -- trap recognition -----------------------------------------------------


def test_is_trap_storage_family():
    conn = storage_net()
    assert is_trap(conn, [0, 1, 4, 5])  # one block from each pair
    assert is_trap(conn, [2, 3, 6, 7])
    assert not is_trap(conn, [0, 1, 2, 3])  # both blocks of one pair
    assert not is_trap(conn, [0, 1])  # single block leaves its partner alive


def test_uniform_weak_network_has_no_traps():
    conn = uniform_net(a=1.0, b=0.5)
    for candidate in ([0], [0, 1], [0, 1, 4, 5], list(range(7))):
        assert not is_trap(conn, candidate)


def test_is_trap_validates_candidate():
    conn = uniform_net()
    with pytest.raises(ConfigError, match="non-empty"):
        is_trap(conn, [])
    with pytest.raises(ConfigError, match="complement"):
        is_trap(conn, range(8))


# -- classification -------------------------------------------------------


def test_classify_singleton_and_uniform_net_ergodic():
    conn = uniform_net(a=1.0, b=0.5)
    assert classify_inductive(conn, [4]).verdict is Verdict.ERGODIC
    result = classify_inductive(conn)
    assert result.verdict is Verdict.ERGODIC
    assert result.witness is None
    assert result.method == LABEL_ANALYTIC


def test_classify_storage_net_transient_with_trap_witness():
    conn = storage_net(a=1.0, b=0.5, c=2.0)
    result = classify_inductive(conn)
    assert result.verdict is Verdict.TRANSIENT
    traps = {
        frozenset({0, 1, 4, 5}),
        frozenset({0, 1, 6, 7}),
        frozenset({2, 3, 4, 5}),
        frozenset({2, 3, 6, 7}),
    }
    assert result.witness in traps
    assert is_trap(conn, result.witness)


def test_classify_torus_across_the_critical_weight():
    ring = build_torus(1, 2, 1)
    # w_E = 0 drops the excitatory links: pure inhibition across parity
    weak = torus_connections(ring, 0.3, 0.0)
    assert classify_inductive(weak).verdict is Verdict.ERGODIC
    strong = torus_connections(ring, 0.7, 0.0)
    result = classify_inductive(strong)
    assert result.verdict is Verdict.TRANSIENT
    # one parity class starves the other: the witness is a checkerboard
    assert result.witness in ({frozenset({0, 2}), frozenset({1, 3})})
    assert is_trap(strong, result.witness)


def test_classify_balanced_pair_is_unknown():
    # mutual inhibition at mean exactly EY puts the drift on the boundary
    conn = mutual_pair(a=1.0, c=1.0)
    result = classify_inductive(conn)
    assert result.verdict is Verdict.UNKNOWN
    assert result.method == LABEL_ANALYTIC


def test_classify_budget_guard():
    conn = uniform_net(p=2, k=5)  # 20 sites: 2^20 faces is over budget
    with pytest.raises(BudgetError, match="budget"):
        classify_inductive(conn)
    with pytest.raises(ConfigError, match="empty"):
        classify_inductive(conn, [])


def test_classification_requires_witness_for_transient():
    with pytest.raises(ValueError, match="witness"):
        Classification(Verdict.TRANSIENT)


def test_storage_net_leaves_nothing_unknown():
    from hourglass.patterns import classify_all_subsets

    verdicts = classify_all_subsets(storage_net())
    assert len(verdicts) == 2**8 - 1
    assert Verdict.UNKNOWN not in verdicts.values()


# -- frequency estimation -------------------------------------------------


def run_recorded(conn, horizon, seed=0, burn=None):
    state = init_state(conn, exponential(1.0), seed=seed)
    if burn:
        run(state, burn)
    return state, run(state, horizon, record=True)


def test_estimate_frequencies_identity_and_rows():
    conn = torus_connections(build_torus(1, 4, 2), 0.1, 0.1)
    _, stats = run_recorded(conn, 300.0, seed=5)
    est = estimate_frequencies(stats)
    assert est.window == pytest.approx(stats.window)
    assert np.array_equal(est.pi_total, est.pi0 + est.pie_total)
    # pie keys are (receiver, sender) over the excitatory slots
    for (dst, src), rate in est.pie.items():
        assert (src, dst) in stats.excitatory_pairs
        assert rate >= 0.0
    rows = list(est.rows())
    assert len(rows) == conn.n_sites
    assert rows[0][0] == 0 and len(rows[0]) == 4


def test_estimate_frequencies_burn_in_guard():
    conn = uniform_net()
    state, stats = run_recorded(conn, 100.0, seed=1)
    with pytest.raises(ConfigError, match="burn-in"):
        estimate_frequencies(stats, burn_in_fraction=0.2)
    # recording after the burn satisfies the same guard
    state2 = init_state(conn, exponential(1.0), seed=1)
    run(state2, 20.0)
    late = run(state2, 100.0, record=True)
    est = estimate_frequencies(late, burn_in_fraction=0.2)
    assert est.n_events == late.n_events
    with pytest.raises(ConfigError, match="burn_in_fraction"):
        estimate_frequencies(late, burn_in_fraction=1.0)


def test_estimate_frequencies_empty_window():
    stats = FiringStats(2, (), t_start=5.0, t_end=5.0)
    with pytest.raises(ConfigError, match="window"):
        estimate_frequencies(stats)


# -- the activity heuristic -----------------------------------------------


def test_activity_verdict_cases():
    half = 100.0
    lively = dict.fromkeys(range(3), 7)
    flat = dict.fromkeys(range(3), 1.0)
    assert activity_verdict([0, 1, 2], flat, lively, half) == (
        Verdict.ERGODIC,
        frozenset(),
    )
    # a silent site whose countdown grew a full half-window
    grown = {0: 1.0, 1: 120.0, 2: 1.0}
    quiet = {0: 5, 1: 0, 2: 5}
    verdict, silent = activity_verdict([0, 1, 2], grown, quiet, half)
    assert verdict is Verdict.TRANSIENT and silent == frozenset({1})
    # silent but without the growth to prove divergence
    verdict, silent = activity_verdict([0, 1, 2], flat, quiet, half)
    assert verdict is Verdict.UNKNOWN and silent == frozenset({1})
    # everyone fires but one countdown grew past the ergodic cap
    bulged = {0: 1.0, 1: 30.0, 2: 1.0}
    assert activity_verdict([0, 1, 2], bulged, lively, half)[0] is Verdict.UNKNOWN


def test_simulate_restriction_uniform_block_all_active():
    conn = uniform_net(p=1, k=2, a=1.0, b=0.4)
    probe = simulate_restriction(conn, range(4), MCSettings(horizon=4000.0))
    assert probe.verdict is Verdict.ERGODIC
    assert probe.silent == frozenset()
    expected = 1.0 / (1.0 + 3 * 0.4)
    for i in range(4):
        assert probe.pi_total[i] == pytest.approx(expected, rel=0.1)
        assert probe.pi_spont[i] == probe.pi_total[i]  # nothing triggered


def test_mc_settings_validation():
    with pytest.raises(ConfigError):
        MCSettings(horizon=0.0)
    with pytest.raises(ConfigError):
        MCSettings(replications=0)
    with pytest.raises(ConfigError, match="half-window"):
        MCSettings(burn_in_fraction=0.5)


def test_monte_carlo_classification_matches_analytic():
    conn = uniform_net(p=1, k=2, a=1.0, b=0.4)
    result = classify_inductive(
        conn, method=METHOD_MC, mc=MCSettings(horizon=1500.0, replications=3)
    )
    assert result.verdict is Verdict.ERGODIC
    assert result.method == LABEL_HEURISTIC


def test_monte_carlo_trap_check_on_storage_net():
    conn = storage_net()
    mc = MCSettings(horizon=1500.0, replications=3)
    assert is_trap(conn, [0, 1, 4, 5], method=METHOD_MC, mc=mc)
    assert not is_trap(conn, [0, 1, 2, 3], method=METHOD_MC, mc=mc)


# -- critical curve -------------------------------------------------------


def test_linear_approx_values():
    assert linear_approx_wI(0.0, 1, 1) == 0.5
    assert linear_approx_wI(0.0, 1, 3) == 0.5
    assert linear_approx_wI(0.1, 1, 2) == pytest.approx(0.4)
    assert linear_approx_wI(0.0, 2, 3) == 0.25
    with pytest.raises(ConfigError):
        linear_approx_wI(0.0, 0, 1)


def test_critical_wI_without_excitation():
    # pi^+ is a bare renewal rate of 1, so the critical weight is 1/(2 nu)
    est = critical_wI(build_torus(1, 5, 2), 0.0, SimBudget(horizon=4000.0, replications=3))
    assert abs(est.value - 0.5) < 0.05
    assert est.pi_plus == pytest.approx(1.0, abs=0.05)
    assert float(est) == est.value
    assert len(est.per_replication) == 3
    assert est.half_width >= 0.0


def test_critical_wI_with_excitation_tracks_linear_line():
    est = critical_wI(build_torus(1, 5, 2), 0.05, SimBudget(horizon=4000.0, replications=3))
    assert abs(est.value - linear_approx_wI(0.05, 1, 2)) < 0.02
    assert est.pi_plus > 1.0  # excitation can only raise the rate


def test_critical_wI_validation():
    with pytest.raises(ConfigError, match="torus"):
        critical_wI(build_block_network(1, 2), 0.0)
    with pytest.raises(ConfigError, match="w_E"):
        critical_wI(build_torus(1, 5, 2), -0.1)
    with pytest.raises(ConfigError, match="replications"):
        SimBudget(replications=1)
    with pytest.raises(ConfigError):
        SimBudget(horizon=-1.0)


# -- balance relation -----------------------------------------------------


def lambda0_run(w_E, horizon, seed=0, N=5, K_E=2):
    top = build_torus(1, N, K_E)
    conn = torus_connections(top, 0.0, w_E)
    lam0 = sublattice_lambda0(top)
    state = init_state(restrict(conn, lam0), exponential(1.0), seed=seed)
    run(state, horizon / 5.0)
    return run(state, horizon, record=True)


def test_balance_without_excitation_reduces_to_renewal():
    stats = lambda0_run(0.0, 6000.0)
    report = balance_report(stats, 0.0, 2)
    assert abs(report.residual) < 0.03
    assert report.lhs == pytest.approx(report.pi_plus0)
    assert report.amplification == 1.0  # total == spontaneous exactly
    assert report.trigger_prob == {} and report.overshoot_mean == {}
    assert check_balance(stats, 0.0, 2) == report.residual


def test_balance_with_excitation_amplifies():
    stats = lambda0_run(0.1, 15000.0, seed=3)
    report = balance_report(stats, 0.1, 2)
    assert report.amplification > 1.0
    assert report.pi_plus > report.pi_plus0
    assert abs(report.residual) < 0.05
    assert set(report.lhs_per_site) <= set(range(10))
    for probability in report.trigger_prob.values():
        assert 0.0 <= probability <= 1.0
    for overshoot in report.overshoot_mean.values():
        assert overshoot >= 0.0


def test_balance_requires_enough_deliveries():
    stats = lambda0_run(0.1, 150.0)
    with pytest.raises(InsufficientDataError, match="deliveries"):
        balance_report(stats, 0.1, 2)


def test_balance_validation():
    stats = lambda0_run(0.0, 500.0)
    with pytest.raises(ConfigError, match="mean 1"):
        balance_report(stats, 0.0, 2, eta2=exponential(2.0))
    empty = FiringStats(4, (), t_start=0.0, t_end=0.0)
    with pytest.raises(ConfigError, match="window"):
        balance_report(empty, 0.0, 2)
    idle = FiringStats(4, (), t_start=0.0, t_end=10.0)
    with pytest.raises(InsufficientDataError, match="no site fired"):
        balance_report(idle, 0.0, 2)
