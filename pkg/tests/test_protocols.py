"""Allocation-protocol tests.

The picking and line protocols are pinned to hand-worked runs on two fixed
instances (see conftest fixtures); random instances then exercise the
built-in balance invariants and the guarantee bounds.
"""

import random
from fractions import Fraction

import pytest

from groupfair.budgets import C, Dyadic, KGroupWeights
from groupfair.fairness import (
    EFc,
    FractionMMS,
    OneOfBestC,
    OneOutOfCMMS,
    democratic_report,
)
from groupfair.model import Allocation, Instance, bundles_of
from groupfair.protocols import (
    BestKTrace,
    EnhancedSplit,
    LineTrace,
    MoveRecord,
    ProtocolTrace,
    RunResult,
    SearchTrace,
    UnanimousStep,
    best_k_protocol,
    cwav2,
    identical_local_search,
    line2,
    linek,
    rwav2,
    rwav2_enhanced,
    rwavk,
)

from conftest import GOODS5, addval, binval, random_binary_instance

MIXED_CRITERIA = (OneOutOfCMMS(2), OneOfBestC(2))


def _labels(inst, result):
    return tuple(
        set(inst.labels(b)) for b in bundles_of(result.allocation)
    )


# ---------------------------------------------------------------------------
# rwav2 golden runs


def test_rwav2_first_group_one_of_two(mixed_two_group):
    inst = mixed_two_group
    result = rwav2(inst, MIXED_CRITERIA, first_group=0)

    picks = [t.pick for t in result.trace.turns]
    assert [inst.goods[p] for p in picks] == ["w", "z", "x", "v", "y"]
    assert _labels(inst, result) == ({"w", "x", "y"}, {"v", "z"})
    assert result.report.happy == (11, 5)
    assert result.report.sizes == (11, 5)
    assert result.guarantees == (Fraction(5, 8), Fraction(1, 2))
    assert result.guarantee == Fraction(1, 2)

    first = result.trace.turns[0]
    assert first.group == 0
    states = first.member_states
    assert states[0] == states[1] == (2, 1, Dyadic(1, 2))
    assert states[2] == (3, 1, Dyadic(1, 3))
    assert states[3:8] == ((4, 2, Dyadic(1, 2)),) * 5
    assert states[8:] == ((2, 1, Dyadic(1, 2)),) * 3
    totals = {inst.goods[g]: w for g, w in first.good_weights}
    assert totals == {
        "v": Fraction(5, 8),
        "w": 2,
        "x": Fraction(15, 8),
        "y": Fraction(11, 8),
        "z": 2,
    }
    # w and z tie at 2; the lower index wins
    assert inst.goods[first.pick] == "w"
    assert result.trace.turns[-1].group_balances == (11, 5)


def test_rwav2_other_group_first(mixed_two_group):
    inst = mixed_two_group
    result = rwav2(inst, MIXED_CRITERIA, first_group=1)

    picks = [t.pick for t in result.trace.turns]
    assert [inst.goods[p] for p in picks] == ["z", "w", "v", "x", "y"]
    assert _labels(inst, result) == ({"w", "x"}, {"v", "y", "z"})
    assert result.report.happy == (11, 5)
    assert result.guarantees == (Fraction(3, 8), Fraction(3, 4))

    first = result.trace.turns[0]
    assert first.group == 1
    assert first.member_states == (
        (4, 1, Dyadic(1, 4)),
        (4, 1, Dyadic(1, 4)),
        (2, 1, Dyadic(1, 2)),
        (2, 1, Dyadic(1, 2)),
        (2, 1, Dyadic(1, 2)),
    )
    totals = {inst.goods[g]: w for g, w in first.good_weights}
    assert totals == {
        "v": Fraction(3, 4),
        "w": Fraction(1, 8),
        "x": Fraction(1, 8),
        "y": Fraction(1, 8),
        "z": Fraction(7, 8),
    }


def test_rwav2_validation(mixed_two_group):
    inst = mixed_two_group
    with pytest.raises(ValueError):
        rwav2(inst, MIXED_CRITERIA, first_group=2)
    with pytest.raises(ValueError):
        rwav2(inst, FractionMMS(Fraction(1, 2)))  # no binary threshold
    three = Instance.from_valuations(
        ("a",), ((binval("a", "a"),),) * 3
    )
    with pytest.raises(ValueError):
        rwav2(three, MIXED_CRITERIA)
    additive = Instance.from_valuations(
        ("a", "b"),
        ((binval("a", "ab"),), (addval((1, 2)),)),
    )
    with pytest.raises(ValueError):
        rwav2(additive, OneOfBestC(2))


# ---------------------------------------------------------------------------
# enhanced rwav2


def test_enhanced_shortcut():
    # every counted member of group 1 wants "a": it is taken outright
    inst = Instance.from_valuations(
        ("a", "b", "c"),
        (
            [binval("ab", "abc")] * 3,
            [binval("ac", "abc")] * 3,
        ),
    )
    result = rwav2_enhanced(inst)
    assert isinstance(result.trace, EnhancedSplit)
    assert result.trace == EnhancedSplit(group=0, good=0, desiring=3, counted=3)
    assert _labels(inst, result) == ({"a"}, {"b", "c"})
    assert result.report.happy == (3, 3)
    assert result.guarantees == (Fraction(3, 5), Fraction(3, 5))


def test_enhanced_shortcut_fires_on_mixed_instance(mixed_two_group):
    # 8 of group 1's 11 counted members want w, clearing the 3/5 threshold
    inst = mixed_two_group
    result = rwav2_enhanced(inst)
    assert result.trace == EnhancedSplit(group=0, good=1, desiring=8, counted=11)
    assert _labels(inst, result) == ({"w"}, {"v", "x", "y", "z"})


def test_enhanced_falls_back_to_rwav2():
    # no good is shared by 3/5 of either group's counted members
    inst = Instance.from_valuations(
        ("a", "b", "c", "d"),
        (
            (binval("ab", "abcd"), binval("cd", "abcd")),
            (binval("ac", "abcd"), binval("bd", "abcd")),
        ),
    )
    result = rwav2_enhanced(inst)
    assert result.protocol == "rwav2-enhanced"
    assert isinstance(result.trace, ProtocolTrace)
    plain = rwav2(inst, OneOfBestC(2), first_group=0)
    assert result.allocation == plain.allocation
    assert result.guarantees == (Fraction(3, 5), Fraction(3, 5))
    with pytest.raises(ValueError):
        rwav2_enhanced(inst, c=1)


def test_enhanced_ignores_small_members():
    # the singleton member does not count toward the shortcut threshold
    inst = Instance.from_valuations(
        ("a", "b", "c"),
        (
            [binval("a", "abc")] + [binval("bc", "abc")] * 2,
            [binval("abc", "abc")] * 2,
        ),
    )
    result = rwav2_enhanced(inst)
    assert isinstance(result.trace, EnhancedSplit)
    assert result.trace.group == 0
    assert inst.goods[result.trace.good] == "b"
    assert result.trace.counted == 2


# ---------------------------------------------------------------------------
# identical-groups local search


def test_local_search_moves_contested_good():
    # both groups: 3x{v,w}, 3x{v,x}, 2x{v,y}, 2x{v,z}
    grp = (
        [binval("vw", GOODS5)] * 3
        + [binval("vx", GOODS5)] * 3
        + [binval("vy", GOODS5)] * 2
        + [binval("vz", GOODS5)] * 2
    )
    inst = Instance.from_valuations(GOODS5, (grp, list(grp)))
    result = identical_local_search(inst)
    assert result.trace.moves == (MoveRecord(good=0, from_group=1, to_group=0),)
    assert _labels(inst, result) == ({"v"}, {"w", "x", "y", "z"})
    assert result.report.happy == (10, 10)
    assert result.guarantees == (Fraction(2, 3), Fraction(2, 3))


def test_local_search_requires_identical_groups():
    inst = Instance.from_valuations(
        ("a", "b"),
        ((binval("a", "ab"),), (binval("b", "ab"),)),
    )
    with pytest.raises(ValueError, match="identical"):
        identical_local_search(inst)


def test_local_search_exempts_singleton_members():
    grp = [binval("a", "ab"), binval("ab", "ab")]
    inst = Instance.from_valuations(("a", "b"), (grp, list(grp)))
    result = identical_local_search(inst)
    # only the two-good members count; nobody strictly improves by moving
    assert result.report.sizes == (2, 2)
    assert len(result.trace.moves) <= 1


def test_local_search_guarantee_random():
    rng = random.Random(20251)
    for _ in range(80):
        m = rng.randint(2, 7)
        goods = tuple(f"g{i}" for i in range(m))
        grp = [
            binval(rng.sample(goods, rng.randint(1, m)), goods)
            for _ in range(rng.randint(1, 6))
        ]
        inst = Instance.from_valuations(goods, (grp, list(grp)))
        result = identical_local_search(inst)
        n = sum(result.report.sizes)
        assert len(result.trace.moves) <= n // 2
        assert result.report.h >= Fraction(2, 3)


# ---------------------------------------------------------------------------
# line protocols


def _pair(inst, a, b, order=None):
    groups = [[ag.valuation for ag in inst.groups[g]] for g in (a, b)]
    return Instance.from_valuations(inst.goods, groups, order)


def _counts(result):
    return [rec.counts for rec in result.trace.records]


def test_line2_first_pair(additive_three_groups):
    inst = _pair(additive_three_groups, 0, 1)
    result = line2(inst)
    assert _counts(result) == [
        ((0, 0, 9), (1, 0, 6)),
        ((0, 2, 9), (1, 0, 6)),
        ((0, 2, 9), (1, 1, 6)),
        ((0, 2, 9), (1, 1, 6)),
        ((0, 9, 9),),
    ]
    assert result.trace.records[-1].claimed_by == 0
    assert result.trace.records[-1].left == (0, 1, 2, 3)
    assert _labels(inst, result) == ({"u", "v", "w", "x"}, {"y", "z"})
    assert result.report.happy == (9, 5)
    assert result.guarantees == (Fraction(1, 2), Fraction(1, 2))
    assert result.trace.criterion_label == "EF1"
    assert result.trace.remainder_group == 1


def test_line2_second_pair(additive_three_groups):
    inst = _pair(additive_three_groups, 0, 2)
    result = line2(inst)
    assert _counts(result) == [
        ((0, 0, 9), (1, 0, 12)),
        ((0, 2, 9), (1, 0, 12)),
        ((0, 2, 9), (1, 3, 12)),
        ((0, 2, 9), (1, 3, 12)),
        ((0, 9, 9),),
    ]
    assert _labels(inst, result) == ({"u", "v", "w", "x"}, {"y", "z"})
    assert result.report.happy == (9, 9)


def test_line2_reversed_order(additive_three_groups):
    inst = _pair(
        additive_three_groups, 1, 2, order=tuple(reversed(range(6)))
    )
    result = line2(inst)
    assert _counts(result) == [
        ((0, 0, 6), (1, 0, 12)),
        ((0, 0, 6), (1, 0, 12)),
        ((0, 5, 6),),
    ]
    assert result.trace.records[-1].claimed_by == 0
    assert _labels(inst, result) == ({"y", "z"}, {"u", "v", "w", "x"})
    assert result.report.happy == (5, 12)


def test_line2_validation(additive_three_groups):
    with pytest.raises(ValueError):
        line2(additive_three_groups)


def test_linek_three_groups(additive_three_groups):
    inst = additive_three_groups
    result = linek(inst)
    assert _counts(result) == [
        ((0, 0, 9), (1, 0, 6), (2, 0, 12)),
        ((0, 2, 9), (1, 1, 6), (2, 3, 12)),
        ((0, 2, 9), (1, 6, 6)),
        ((0, 0, 9), (2, 0, 12)),
        ((0, 2, 9), (2, 3, 12)),
        ((0, 9, 9),),
    ]
    assert [rec.claimed_by for rec in result.trace.records] == [
        None, None, 1, None, None, 0,
    ]
    assert _labels(inst, result) == ({"w", "x"}, {"u", "v"}, {"y", "z"})
    assert result.report.happy == (9, 6, 9)
    assert result.report.sizes == (9, 6, 12)
    assert result.guarantees == (Fraction(1, 3),) * 3
    assert result.trace.criterion_label == "PROP-2"
    assert result.trace.remainder_group == 2


def test_linek_on_two_groups_matches_prop1(additive_three_groups):
    inst = _pair(additive_three_groups, 0, 1)
    result = linek(inst)
    assert result.trace.criterion_label == "PROP-1"
    assert result.report.h >= Fraction(1, 2)


# ---------------------------------------------------------------------------
# k-group RWAV


def test_rwavk_three_identical_groups():
    inst = Instance.from_valuations(
        ("a", "b", "c"),
        ([binval("abc", "abc")], [binval("abc", "abc")], [binval("abc", "abc")]),
    )
    result = rwavk(inst, c=3)
    assert _labels(inst, result) == ({"a"}, {"b"}, {"c"})
    assert result.report.happy == (1, 1, 1)
    kw = KGroupWeights(3)
    assert result.guarantees == pytest.approx(
        (kw.B(3, 1), kw.B(2, 1), kw.B(1, 1))
    )
    assert result.criteria == (OneOfBestC(3),) * 3


def test_rwavk_truncates_to_lowest_indices():
    inst = Instance.from_valuations(
        ("a", "b", "c", "d"),
        ((binval("abcd", "abcd"),), (binval("d", "abcd"),)),
    )
    result = rwavk(inst, c=2)
    # the four-good member plays as if it wanted only {a, b}
    assert result.trace.turns[0].member_states[0][:2] == (2, 1)
    assert result.report.happy == (1, 1)


def test_rwavk_warns_when_c_below_k():
    inst = Instance.from_valuations(
        ("a", "b"),
        ([binval("ab", "ab")], [binval("ab", "ab")], [binval("ab", "ab")]),
    )
    with pytest.warns(UserWarning, match="c=2 < k=3"):
        result = rwavk(inst, c=2)
    assert result.guarantees[2] == 0


def test_rwavk_respects_guarantees_random():
    rng = random.Random(987)
    for _ in range(60):
        k = rng.randint(2, 4)
        inst = random_binary_instance(rng, k, m_max=6, n_max=4)
        c = rng.randint(k, k + 2)
        result = rwavk(inst, c)
        for g in range(k):
            assert (
                float(result.report.fractions[g])
                >= result.guarantees[g] - 1e-9
            )


# ---------------------------------------------------------------------------
# best-of-k protocol


def test_best_k_unanimous_then_pair():
    inst = Instance.from_valuations(
        ("a", "b", "c", "d"),
        (
            [binval("a", "abcd")] * 2,
            [binval("bc", "abcd")] * 2,
            [binval("cd", "abcd")] * 2,
        ),
    )
    result = best_k_protocol(inst)
    assert result.protocol == "best-k"
    assert isinstance(result.trace, BestKTrace)
    assert result.trace.steps == (
        UnanimousStep(group=0, good=0, desiring=2, size=2),
    )
    assert result.trace.base_groups == (1, 2)
    assert _labels(inst, result) == ({"a"}, {"b"}, {"c", "d"})
    assert result.report.happy == (2, 2, 2)
    assert result.guarantees == (Fraction(1, 3),) * 3
    assert result.criteria == (OneOfBestC(3),) * 3


def test_best_k_two_groups_is_enhanced():
    inst = Instance.from_valuations(
        ("a", "b", "c"),
        ([binval("ab", "abc")] * 3, [binval("ac", "abc")] * 3),
    )
    result = best_k_protocol(inst)
    assert result.trace.steps == ()
    assert result.trace.base.protocol == "rwav2-enhanced"
    assert _labels(inst, result) == ({"a"}, {"b", "c"})


def test_best_k_rwavk_stage():
    # 3 groups of 4; no good reaches a third of any group
    goods = tuple(f"g{i}" for i in range(12))
    groups = [
        [binval((f"g{4 * g + j}",), goods) for j in range(4)]
        for g in range(3)
    ]
    inst = Instance.from_valuations(goods, groups)
    result = best_k_protocol(inst)
    assert result.trace.steps == ()
    assert result.trace.base.protocol == "rwavk"
    assert result.report.h >= Fraction(1, 3)


def test_best_k_guarantee_random():
    rng = random.Random(5151)
    for _ in range(60):
        k = rng.randint(2, 4)
        inst = random_binary_instance(rng, k, m_max=6, n_max=4)
        result = best_k_protocol(inst)
        assert result.report.h >= Fraction(1, 3)
        # the reported verdicts really are 1-of-best-k on the original
        again = democratic_report(inst, result.allocation, OneOfBestC(k))
        assert again.verdicts == result.report.verdicts


# ---------------------------------------------------------------------------
# coin-flip rwav


def _all_three_instance():
    return Instance.from_valuations(
        ("a", "b", "c"),
        ([binval("abc", "abc")] * 2, [binval("abc", "abc")] * 2),
    )


def test_cwav2_replay_is_deterministic():
    inst = _all_three_instance()
    first = cwav2(inst, EFc(0), seed=99)
    second = cwav2(inst, EFc(0), seed=99)
    assert first.allocation == second.allocation
    assert [t.pick for t in first.trace.turns] == [
        t.pick for t in second.trace.turns
    ]
    assert first.report.happy == second.report.happy


def test_cwav2_expected_guarantees():
    inst = _all_three_instance()
    result = cwav2(inst, EFc(0), seed=3)
    # every member wants 3 and needs 2, so the stake is C(3, 2) each
    assert result.expected_guarantees == (Fraction(1, 2), Fraction(1, 2))
    assert result.guarantees == (0, 0)
    assert result.protocol == "cwav2"


def test_cwav2_seeds_cover_both_orders():
    inst = _all_three_instance()
    firsts = {cwav2(inst, EFc(0), seed=s).trace.turns[0].group for s in range(12)}
    assert firsts == {0, 1}


def test_cwav2_mean_happiness_near_stake():
    # whoever wins two of the three coin flips is fully happy, the other
    # group not at all; per-group happiness should average the 1/2 stake
    inst = _all_three_instance()
    total = Fraction(0)
    runs = 400
    for seed in range(runs):
        result = cwav2(inst, EFc(0), seed=seed)
        total += sum(result.report.fractions, Fraction(0)) / 2
    mean = total / runs
    assert abs(mean - Fraction(1, 2)) < Fraction(1, 10)


# ---------------------------------------------------------------------------
# random characterization


def test_rwav2_random_runs_meet_guarantees():
    rng = random.Random(424242)
    criteria = [
        EFc(1),
        OneOutOfCMMS(2),
        OneOutOfCMMS(3),
        OneOfBestC(2),
        OneOfBestC(3),
    ]
    for _ in range(150):
        inst = random_binary_instance(rng, 2)
        criterion = rng.choice(criteria)
        first = rng.randrange(2)
        result = rwav2(inst, criterion, first_group=first)
        for g in range(2):
            assert result.report.fractions[g] >= result.guarantees[g]
        assert isinstance(result, RunResult)
        assert isinstance(result.trace, ProtocolTrace)
        assert len(result.trace.turns) == inst.m
