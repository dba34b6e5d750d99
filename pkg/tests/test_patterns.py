import dataclasses

import pytest

from hourglass.analysis import Verdict, is_trap
from hourglass.connections import block_connections
from hourglass.errors import BudgetError, ConfigError
from hourglass.patterns import (
    FREE_CHAR,
    TRAP_CHAR,
    Pattern,
    PatternFamily,
    brute_force_traps,
    classify_all_subsets,
    enumerate_traps,
    full_family,
    hebb_connections,
    pattern_from_trap,
    trap_from_pattern,
    validate_pattern_family,
    verify_storage,
)
from hourglass.topology import BlockStructure, build_block_network, build_torus


def blocks(p=2, k=2):
    return build_block_network(p, k).geometry


# -- codecs ---------------------------------------------------------------


def test_pattern_trap_round_trip():
    pattern = Pattern((1, 1, -1, -1, 1, 1, -1, -1))
    assert trap_from_pattern(pattern) == frozenset({0, 1, 4, 5})
    top = build_block_network(2, 2)
    assert pattern_from_trap({0, 1, 4, 5}, top) == pattern
    assert Pattern.from_json(pattern.to_json()) == pattern


def test_pattern_validation():
    with pytest.raises(ConfigError, match="at least one"):
        Pattern(())
    with pytest.raises(ConfigError, match="-1 or \\+1"):
        Pattern((1, 0, -1))
    with pytest.raises(ConfigError, match="patterns\\[3\\]"):
        Pattern.from_json("not-a-list", where="patterns[3]")
    with pytest.raises(ConfigError, match="unknown sites"):
        pattern_from_trap({0, 42}, build_block_network(1, 2))


def test_render_plain_and_grouped():
    pattern = Pattern((1, 1, -1, -1, 1, 1, -1, -1))
    assert pattern.render() == "##..##.."
    assert pattern.render(build_block_network(2, 2)) == "## .. ## .."
    assert TRAP_CHAR == "#" and FREE_CHAR == "."


def test_render_torus_grid():
    top = build_torus(2, 2, 1)  # 4x4 grid
    lam0 = {i for i in range(16) if sum(divmod(i, 4)) % 2 == 0}
    art = pattern_from_trap(lam0, top).render(top)
    assert art.splitlines() == ["#.#.", ".#.#", "#.#.", ".#.#"]
    ring = build_torus(1, 2, 1)
    assert pattern_from_trap({0, 2}, ring).render(ring) == "#.#."


# -- families -------------------------------------------------------------


def test_full_family_is_canonical_and_valid():
    family = full_family(blocks(2, 2))
    assert family.size == 4
    assert family.patterns[0].xi == (1, 1, -1, -1, 1, 1, -1, -1)
    assert len({p.xi for p in family.patterns}) == 4
    report = validate_pattern_family(family)
    assert report
    assert report.violations == ()
    assert report.derived_pairing == ((1, 2), (3, 4))


def test_family_size_guard():
    with pytest.raises(ConfigError, match="covers 4 sites"):
        PatternFamily((Pattern((1, 1, -1, -1)),), blocks(2, 2))


def test_validate_rejects_non_constant_block():
    base = full_family(blocks(2, 2))
    broken = Pattern((1, -1, -1, 1) + base.patterns[0].xi[4:])
    report = validate_pattern_family(
        PatternFamily((broken,) + base.patterns[1:], base.blocks)
    )
    assert not report.valid
    assert any("condition 1" in v for v in report.violations)


def test_validate_rejects_unbalanced_pattern():
    patterns = (Pattern((1, 1, 1, 1)), Pattern((-1, -1, -1, -1)))
    report = validate_pattern_family(PatternFamily(patterns, blocks(1, 2)))
    assert any("condition 2" in v for v in report.violations)


def test_validate_rejects_missing_partner():
    # blocks 1 and 2 always agree, so each has TWO anti-correlated blocks
    patterns = (Pattern((1, 1, 1, 1, -1, -1, -1, -1)), Pattern((-1, -1, -1, -1, 1, 1, 1, 1)))
    report = validate_pattern_family(PatternFamily(patterns, blocks(2, 2)))
    assert not report.valid
    assert any("condition 3" in v for v in report.violations)
    assert any("family size" in v for v in report.violations)  # 2 of 4


def test_validate_rejects_duplicates():
    base = full_family(blocks(1, 2))
    twice = PatternFamily((base.patterns[0], base.patterns[0]), base.blocks)
    report = validate_pattern_family(twice)
    assert any("distinct" in v for v in report.violations)


# -- trap enumeration and its oracle --------------------------------------


def test_enumerate_counts_and_order():
    for p, expected in ((1, 2), (2, 4), (3, 8)):
        traps = enumerate_traps(blocks(p, 2), 1.0, 0.5, 2.0)
        assert len(traps) == expected
        assert len(set(traps)) == expected
    # first choice keeps the first block of every pair
    traps = enumerate_traps(blocks(2, 2), 1.0, 0.5, 2.0)
    assert traps[0] == frozenset({0, 1, 4, 5})
    assert traps[-1] == frozenset({2, 3, 6, 7})


def test_enumerate_requires_storage_phase():
    with pytest.raises(ConfigError, match="0 < b < a < c"):
        enumerate_traps(blocks(2, 2), 1.0, 0.5, 0.7)  # c < a
    with pytest.raises(ConfigError, match="0 < b < a < c"):
        enumerate_traps(blocks(2, 2), 1.0, 1.0, 2.0)  # b == a
    with pytest.raises(ConfigError, match="k > 1"):
        enumerate_traps(BlockStructure(2, 1, ((1, 2), (3, 4))), 1.0, 0.5, 2.0)


@pytest.mark.parametrize("p,k", [(1, 2), (2, 2), (3, 2), (2, 3)])
def test_enumeration_agrees_with_exhaustive_oracle(p, k):
    # the structural family against the drift criterion over every subset
    top = build_block_network(p, k)
    conn = block_connections(top, 1.0, 0.5, 2.0)
    structural = set(enumerate_traps(top.geometry, 1.0, 0.5, 2.0))
    forced = set(brute_force_traps(conn))
    assert structural == forced


def test_every_enumerated_trap_passes_is_trap():
    top = build_block_network(2, 2)
    conn = block_connections(top, 1.0, 0.5, 2.0)
    for trap in enumerate_traps(top.geometry, 1.0, 0.5, 2.0):
        assert is_trap(conn, trap)


def test_classify_all_subsets_audit():
    conn = block_connections(build_block_network(1, 2), 1.0, 0.5, 2.0)
    verdicts = classify_all_subsets(conn)
    assert len(verdicts) == 2**4 - 1
    assert verdicts[frozenset({0, 1, 2, 3})] is Verdict.TRANSIENT
    assert verdicts[frozenset({0, 1})] is Verdict.ERGODIC
    assert Verdict.UNKNOWN not in verdicts.values()


def test_oracle_budgets():
    big = block_connections(build_block_network(2, 5), 1.0, 0.5, 2.0)
    with pytest.raises(BudgetError):
        brute_force_traps(big)
    with pytest.raises(BudgetError):
        classify_all_subsets(big)


# -- the Hebbian rule -----------------------------------------------------


def test_hebb_magnitudes_are_exact():
    a, A, B = 1.0, 0.8, 1.1
    family = full_family(blocks(2, 2))
    learned = hebb_connections(family, a, A, B)
    assert learned.weak == (B - A) * a
    assert learned.strong == (A + B) * a
    assert learned.weak < a < learned.strong
    assert learned.pairing == ((1, 2), (3, 4))
    strong_pairs = [
        pair for pair, m in learned.magnitudes.items() if m == learned.strong
    ]
    # ordered cross-partner pairs: 2 per pair of blocks per direction * k^2
    assert len(strong_pairs) == 2 * 2 * 2 * 2
    assert all(
        m in (learned.weak, learned.strong) for m in learned.magnitudes.values()
    )
    assert len(learned.magnitudes) == 8 * 7


def test_hebb_scales_with_a():
    a, A, B = 2.5, 0.6, 0.9
    learned = hebb_connections(full_family(blocks(1, 2)), a, A, B)
    # the rule's arithmetic distributes a over the correlation terms, so the
    # exact floats are B*a - A*a and A*a + B*a (equal to (B-A)*a and (A+B)*a
    # up to association)
    assert learned.weak == B * a - A * a
    assert learned.strong == A * a + B * a
    assert learned.weak == pytest.approx((B - A) * a)
    assert learned.strong == pytest.approx((A + B) * a)


def test_hebb_constraint_window():
    family = full_family(blocks(2, 2))
    with pytest.raises(ConfigError, match="0 < B - A < 1 < B \\+ A"):
        hebb_connections(family, 1.0, 0.2, 0.3)  # B + A < 1
    with pytest.raises(ConfigError, match="0 < B - A < 1 < B \\+ A"):
        hebb_connections(family, 1.0, 0.5, 0.4)  # B < A
    with pytest.raises(ConfigError, match="0 < B - A < 1 < B \\+ A"):
        hebb_connections(family, 1.0, 0.5, 1.6)  # B - A > 1
    with pytest.raises(ConfigError, match="a must be"):
        hebb_connections(family, 0.0, 0.8, 1.1)


def test_hebb_rejects_invalid_family():
    patterns = (Pattern((1, 1, 1, 1)), Pattern((-1, -1, -1, -1)))
    family = PatternFamily(patterns, blocks(1, 2))
    with pytest.raises(ConfigError, match="storage conditions"):
        hebb_connections(family, 1.0, 0.8, 1.1)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_learned_constants_store_the_family(p):
    family = full_family(blocks(p, 2))
    learned = hebb_connections(family, 1.0, 0.8, 1.1)
    assert verify_storage(learned, family)


def test_verify_storage_detects_broken_constants():
    family = full_family(blocks(2, 2))
    learned = hebb_connections(family, 1.0, 0.8, 1.1)
    # background inhibition stronger than the refill destroys the phase
    broken = dataclasses.replace(learned, weak=1.5)
    assert not verify_storage(broken, family)


def test_learned_spec_realizes_the_two_magnitudes():
    family = full_family(blocks(2, 2))
    learned = hebb_connections(family, 1.0, 0.8, 1.1)
    conn = learned.to_connection_spec()
    for (x, y), m in learned.magnitudes.items():
        sign, spec = conn.link(x, y)
        assert sign == 0 and spec.mean == m
