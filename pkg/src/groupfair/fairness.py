"""Fairness criteria, per-agent checkers, and democratic-fraction reports.

An allocation is *h-democratic fair* under a criterion when, in every group,
at least a fraction ``h`` of the members individually consider it fair.
This module provides:

* the criterion vocabulary (:class:`EFc`, :class:`PROPc`, :class:`MMS`,
  :class:`OneOutOfCMMS`, :class:`FractionMMS`, :class:`OneOfBestC`,
  :class:`PositiveMMS`) with kebab-case names like ``ef-1`` and
  ``fraction-mms:1/2``;
* per-agent predicates :func:`is_efc`, :func:`is_propc`, the exact
  :func:`mms_share` computation, and the dispatching :func:`check`;
* the binary-agent threshold map :func:`s_threshold` (how many of its ``r``
  desired goods an agent needs before the criterion is satisfied) that
  drives the picking protocols;
* :func:`democratic_report`, which evaluates every agent and reports the
  per-group happy fractions and their minimum ``h``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import lcm
from typing import Optional, Sequence, Union

from .errors import CapExceededError, FormatError
from .model import (
    AdditiveValuation,
    Agent,
    Allocation,
    BinaryValuation,
    Bundle,
    Instance,
    TabularValuation,
    Valuation,
    bundles_of,
    parse_rational,
    rational_doc,
)

__all__ = [
    "EFc",
    "PROPc",
    "MMS",
    "OneOutOfCMMS",
    "FractionMMS",
    "OneOfBestC",
    "PositiveMMS",
    "FairnessCriterion",
    "SFunction",
    "FairnessReport",
    "parse_criterion",
    "parse_criteria",
    "per_group_criteria",
    "is_efc",
    "is_propc",
    "efc_holds",
    "propc_holds",
    "mms_share",
    "check",
    "s_threshold",
    "democratic_report",
    "MMS_GOODS_CAP",
]

#: Exhaustive maximin-share computation refuses instances with more goods.
MMS_GOODS_CAP = 12


# ---------------------------------------------------------------------------
# criteria


@dataclass(frozen=True)
class EFc:
    """Envy-free up to ``c`` goods: envy toward any other group vanishes
    after removing at most ``c`` goods from that group's bundle."""

    c: int

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("EFc needs c >= 0")

    @property
    def name(self) -> str:
        return f"ef-{self.c}"


@dataclass(frozen=True)
class PROPc:
    """Proportional except ``c`` goods: the agent's group gets at least
    ``1/k`` of the agent's value for all goods minus some ``c`` unowned
    goods."""

    c: int

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("PROPc needs c >= 0")

    @property
    def name(self) -> str:
        return f"prop-{self.c}"


@dataclass(frozen=True)
class MMS:
    """The agent's bundle is worth its maximin share over ``k`` parts."""

    @property
    def name(self) -> str:
        return "mms"


@dataclass(frozen=True)
class OneOutOfCMMS:
    """Maximin share computed with ``c`` parts (a relaxation for c > k)."""

    c: int

    def __post_init__(self):
        if self.c < 1:
            raise ValueError("1-out-of-c MMS needs c >= 1")

    @property
    def name(self) -> str:
        return f"1-out-of-{self.c}-mms"


@dataclass(frozen=True)
class FractionMMS:
    """The agent's bundle is worth at least ``q`` times its maximin share."""

    q: Fraction

    def __post_init__(self):
        q = Fraction(self.q)
        if not 0 < q < 1:
            raise ValueError("fraction-mms needs q strictly between 0 and 1")
        object.__setattr__(self, "q", q)

    @property
    def name(self) -> str:
        return f"fraction-mms:{self.q.numerator}/{self.q.denominator}"


@dataclass(frozen=True)
class OneOfBestC:
    """The agent's bundle is worth at least its c-th best single good."""

    c: int

    def __post_init__(self):
        if self.c < 1:
            raise ValueError("1-of-best-c needs c >= 1")

    @property
    def name(self) -> str:
        return f"1-of-best-{self.c}"


@dataclass(frozen=True)
class PositiveMMS:
    """Positive maximin share implies positive utility."""

    @property
    def name(self) -> str:
        return "positive-mms"


FairnessCriterion = Union[
    EFc, PROPc, MMS, OneOutOfCMMS, FractionMMS, OneOfBestC, PositiveMMS
]

_CRITERION_PATTERNS = [
    (re.compile(r"ef-(\d+)$"), lambda m: EFc(int(m.group(1)))),
    (re.compile(r"prop-(\d+)$"), lambda m: PROPc(int(m.group(1)))),
    (re.compile(r"mms$"), lambda m: MMS()),
    (re.compile(r"1-out-of-(\d+)-mms$"), lambda m: OneOutOfCMMS(int(m.group(1)))),
    (re.compile(r"fraction-mms:(.+)$"), lambda m: FractionMMS(parse_rational(m.group(1)))),
    (re.compile(r"1-of-best-(\d+)$"), lambda m: OneOfBestC(int(m.group(1)))),
    (re.compile(r"positive-mms$"), lambda m: PositiveMMS()),
]

_CRITERION_SHAPES = [
    "ef-<c>",
    "prop-<c>",
    "mms",
    "1-out-of-<c>-mms",
    "fraction-mms:<q>",
    "1-of-best-<c>",
    "positive-mms",
]


def parse_criterion(text: str) -> FairnessCriterion:
    """Parse a kebab-case criterion name.

    >>> parse_criterion("ef-1"), parse_criterion("1-out-of-3-mms")
    (EFc(c=1), OneOutOfCMMS(c=3))
    >>> parse_criterion("fraction-mms:1/2").q
    Fraction(1, 2)
    """
    name = text.strip().lower()
    for pattern, build in _CRITERION_PATTERNS:
        match = pattern.fullmatch(name)
        if match:
            try:
                return build(match)
            except (ValueError, FormatError) as exc:
                raise FormatError(f"bad criterion {text!r}: {exc}") from None
    import difflib

    hints = difflib.get_close_matches(
        name, _CRITERION_SHAPES + ["ef-1", "prop-2", "1-of-best-2"], n=3, cutoff=0.4
    )
    suffix = f" (did you mean: {', '.join(hints)}?)" if hints else ""
    raise FormatError(
        f"unknown criterion {text!r}; expected one of "
        f"{', '.join(_CRITERION_SHAPES)}{suffix}"
    )


def parse_criteria(text: str, k: int) -> tuple:
    """Parse a comma-separated criterion list: one name (applies to every
    group) or exactly ``k`` names (one per group)."""
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) == 1:
        return (parse_criterion(parts[0]),) * k
    if len(parts) != k:
        raise FormatError(
            f"expected 1 or {k} comma-separated criteria, got {len(parts)}"
        )
    return tuple(parse_criterion(p) for p in parts)


def per_group_criteria(criterion, k: int) -> tuple:
    """Broadcast one criterion (or pass through a k-sequence) to k groups."""
    if isinstance(criterion, (tuple, list)):
        if len(criterion) != k:
            raise ValueError(f"need {k} per-group criteria, got {len(criterion)}")
        return tuple(criterion)
    return (criterion,) * k


# ---------------------------------------------------------------------------
# removal helpers


def _top_values(values, c: int):
    return sorted(values, reverse=True)[:c]


def _min_value_after_removal(v: Valuation, bundle: Bundle, c: int):
    """min over C subset of bundle, |C| <= c, of v(bundle minus C)."""
    if c >= len(bundle):
        return 0
    if isinstance(v, BinaryValuation):
        return max(0, v.value(bundle) - c)
    if isinstance(v, AdditiveValuation):
        inside = [v.values[i] for i in bundle]
        return v.value(bundle) - sum(_top_values(inside, c))
    # monotone tabular: removing a full c goods is always at least as good
    best = None
    for combo in itertools.combinations(list(bundle), c):
        removed = 0
        for i in combo:
            removed |= 1 << i
        val = v.table[bundle.mask & ~removed]
        if best is None or val < best:
            best = val
    return best


def _min_rest_after_unowned_removal(v: Valuation, own: Bundle, c: int):
    """min over C disjoint from own, |C| <= c, of v(all goods minus C)."""
    m = v.m
    full = Bundle.full(m)
    pool = full - own
    if isinstance(v, BinaryValuation):
        r = len(v.desired)
        removable = min(c, len(v.desired & pool))
        return r - removable
    if isinstance(v, AdditiveValuation):
        outside = [v.values[i] for i in pool]
        return v.value(full) - sum(_top_values(outside, c))
    take = min(c, len(pool))
    best = None
    for combo in itertools.combinations(list(pool), take):
        removed = 0
        for i in combo:
            removed |= 1 << i
        val = v.table[full.mask & ~removed]
        if best is None or val < best:
            best = val
    return best


# ---------------------------------------------------------------------------
# predicates


def efc_holds(v: Valuation, own: Bundle, others: Sequence[Bundle], c: int) -> bool:
    """EFc for a hypothetical split: the agent holds ``own``, each entry of
    ``others`` is another group's bundle."""
    if c < 0:
        raise ValueError("EFc needs c >= 0")
    own_value = v.value(own)
    for bundle in others:
        if own_value < _min_value_after_removal(v, bundle, c):
            return False
    return True


def propc_holds(v: Valuation, own: Bundle, k: int, c: int) -> bool:
    """PROPc for a hypothetical split with ``k`` groups where the agent's
    group holds ``own`` (the benchmark is always all goods)."""
    if c < 0:
        raise ValueError("PROPc needs c >= 0")
    rest = _min_rest_after_unowned_removal(v, own, c)
    return v.value(own) * k >= rest


def is_efc(agent: Agent, alloc: Allocation, c: int) -> bool:
    """Envy-freeness up to ``c`` goods of ``alloc`` for this agent."""
    bundles = bundles_of(alloc)
    others = [b for gi, b in enumerate(bundles) if gi != agent.group]
    return efc_holds(agent.valuation, bundles[agent.group], others, c)


def is_propc(agent: Agent, alloc: Allocation, c: int) -> bool:
    """Proportionality except ``c`` goods of ``alloc`` for this agent."""
    own = bundles_of(alloc)[agent.group]
    return propc_holds(agent.valuation, own, alloc.k, c)


def _local_value_table(v: Valuation, goods: Bundle):
    """Value table over subsets of ``goods``, relabelled to bits 0..r-1,
    scaled to integers.  Returns (table, scale)."""
    positions = list(goods)
    r = len(positions)
    if isinstance(v, AdditiveValuation):
        vals = [v.values[i] for i in positions]
        scale = lcm(*(x.denominator for x in vals)) if vals else 1
        ints = [int(x * scale) for x in vals]
        table = [0] * (1 << r)
        for mask in range(1, 1 << r):
            low = mask & -mask
            table[mask] = table[mask ^ low] + ints[low.bit_length() - 1]
        return table, scale
    # tabular
    scale = lcm(*(x.denominator for x in v.table))
    table = [0] * (1 << r)
    for mask in range(1 << r):
        gmask = 0
        rest = mask
        while rest:
            low = rest & -rest
            gmask |= 1 << positions[low.bit_length() - 1]
            rest ^= low
        table[mask] = int(v.table[gmask] * scale)
    return table, scale


@lru_cache(maxsize=65536)
def _mms_cached(v: Valuation, c: int, goods: Bundle, cap: int):
    pc = len(goods)
    if c > pc:
        return Fraction(0)
    if pc > cap:
        raise CapExceededError(
            f"maximin share over {pc} goods exceeds the cap of {cap}"
        )
    vals, scale = _local_value_table(v, goods)
    size = len(vals)
    # dp[mask] = best min-part value partitioning mask into p parts so far.
    # The part containing the lowest set bit is chosen first (canonical
    # anchoring), which enumerates every partition exactly once.
    dp = vals
    for _ in range(2, c + 1):
        new = [0] * size
        for mask in range(1, size):
            low = mask & -mask
            rest = mask ^ low
            best = 0
            sub = rest
            while True:
                part = sub | low
                cand = dp[mask ^ part]
                pv = vals[part]
                if pv < cand:
                    cand = pv
                if cand > best:
                    best = cand
                if sub == 0:
                    break
                sub = (sub - 1) & rest
            new[mask] = best
        dp = new
    return Fraction(dp[size - 1], scale)


def mms_share(
    valuation: Valuation, c: int, goods: Optional[Bundle] = None, cap: int = MMS_GOODS_CAP
):
    """Exact 1-out-of-``c`` maximin share of ``valuation`` over ``goods``.

    The best, over all partitions of ``goods`` into ``c`` parts, of the
    worst part's value.  Binary valuations short-circuit to ``r // c``;
    additive/tabular ones run an exact partition search (memoized), refusing
    more than ``cap`` goods.

    >>> mms_share(AdditiveValuation((2, 1, 1)), 2)
    Fraction(2, 1)
    >>> v = BinaryValuation(Bundle.full(7))
    >>> mms_share(v, 3)
    2
    """
    if c < 1:
        raise ValueError("mms_share needs c >= 1")
    if goods is None:
        goods = Bundle.full(valuation.m)
    if isinstance(valuation, BinaryValuation):
        return len(valuation.desired & goods) // c
    if c == 1:
        return valuation.value(goods)
    return _mms_cached(valuation, c, goods, cap)


def _best_c_threshold(v: Valuation, c: int):
    """Value of the agent's c-th most valuable single good (0 if c > m)."""
    singles = sorted(v.singleton_values(), reverse=True)
    return singles[c - 1] if c <= len(singles) else 0


def check(agent: Agent, alloc: Allocation, criterion: FairnessCriterion) -> bool:
    """Does this agent consider ``alloc`` fair under ``criterion``?"""
    v = agent.valuation
    k = alloc.k
    if isinstance(criterion, EFc):
        return is_efc(agent, alloc, criterion.c)
    if isinstance(criterion, PROPc):
        return is_propc(agent, alloc, criterion.c)
    own = bundles_of(alloc)[agent.group]
    own_value = v.value(own)
    if isinstance(criterion, MMS):
        return own_value >= mms_share(v, k)
    if isinstance(criterion, OneOutOfCMMS):
        if criterion.c < k:
            raise ValueError(
                f"1-out-of-{criterion.c}-mms needs c >= k (k={k})"
            )
        return own_value >= mms_share(v, criterion.c)
    if isinstance(criterion, FractionMMS):
        return own_value >= criterion.q * mms_share(v, k)
    if isinstance(criterion, OneOfBestC):
        return own_value >= _best_c_threshold(v, criterion.c)
    if isinstance(criterion, PositiveMMS):
        return mms_share(v, k) == 0 or own_value > 0
    raise TypeError(f"unknown criterion {criterion!r}")


# ---------------------------------------------------------------------------
# binary-agent thresholds


def s_threshold(criterion: FairnessCriterion, r: int, k: int = 2) -> int:
    """How many of its ``r`` desired goods a binary agent needs.

    A binary agent with ``r`` desired goods satisfies ``criterion`` exactly
    when its group holds ``s_threshold(criterion, r, k)`` of them.  EFc,
    PROPc and MMS have this characterization only for two groups.

    >>> s_threshold(EFc(1), 7)
    3
    >>> s_threshold(OneOutOfCMMS(3), 9)
    3
    >>> s_threshold(OneOfBestC(5), 4)
    0
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    if k < 2:
        raise ValueError("k must be >= 2")
    if isinstance(criterion, (EFc, PROPc)):
        if k != 2:
            raise ValueError(f"{criterion.name} has a threshold only for k=2")
        return max(0, (r - criterion.c + 1) // 2)
    if isinstance(criterion, MMS):
        if k != 2:
            raise ValueError("mms has a threshold only for k=2")
        return r // 2
    if isinstance(criterion, OneOutOfCMMS):
        return r // criterion.c
    if isinstance(criterion, OneOfBestC):
        return 1 if r >= criterion.c else 0
    if isinstance(criterion, PositiveMMS):
        return 1 if r >= 2 else 0
    raise ValueError(f"{criterion.name if hasattr(criterion, 'name') else criterion!r} "
                     "has no binary-agent threshold")


@dataclass(frozen=True)
class SFunction:
    """The threshold map r -> s for a fixed criterion and group count."""

    criterion: FairnessCriterion
    k: int = 2

    def __post_init__(self):
        s_threshold(self.criterion, 0, self.k)  # validate the pairing

    def __call__(self, r: int) -> int:
        return s_threshold(self.criterion, r, self.k)


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class FairnessReport:
    """Per-agent verdicts plus the per-group happy fractions.

    ``h`` is the democratic fraction: the worst group's happy share.
    """

    verdicts: tuple  # one tuple of booleans per group

    def __post_init__(self):
        object.__setattr__(
            self, "verdicts", tuple(tuple(bool(x) for x in g) for g in self.verdicts)
        )

    @property
    def sizes(self) -> tuple:
        return tuple(len(g) for g in self.verdicts)

    @property
    def happy(self) -> tuple:
        return tuple(sum(g) for g in self.verdicts)

    @property
    def fractions(self) -> tuple:
        return tuple(
            Fraction(sum(g), len(g)) for g in self.verdicts
        )

    @property
    def h(self) -> Fraction:
        return min(self.fractions)

    def to_doc(self) -> dict:
        return {
            "happy": [[sum(g), len(g)] for g in self.verdicts],
            "h": rational_doc(self.h),
            "verdicts": [list(g) for g in self.verdicts],
        }


def democratic_report(inst: Instance, alloc: Allocation, criterion) -> FairnessReport:
    """Evaluate :func:`check` for every agent; ``criterion`` may be one
    criterion or a per-group sequence of ``k`` criteria."""
    crits = per_group_criteria(criterion, inst.k)
    verdicts = tuple(
        tuple(check(agent, alloc, crits[gi]) for agent in grp)
        for gi, grp in enumerate(inst.groups)
    )
    return FairnessReport(verdicts)


if __name__ == "__main__":
    import doctest

    doctest.testmod()
