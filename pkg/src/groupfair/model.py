"""Instances, valuations, bundles and allocations, plus their JSON format.

An *instance* is a set of goods and ``k`` groups of agents; every agent has
its own valuation over bundles of goods.  An *allocation* assigns every good
to exactly one group.  Three valuation families are supported:

* binary: the agent wants a subset of the goods, a bundle is worth the
  number of wanted goods it contains;
* additive: one nonnegative value per good, a bundle is worth the sum;
* tabular: an explicit monotone table over all ``2**m`` bundles.

The JSON instance document looks like::

    {
      "goods": ["v", "w", "x", "y", "z"],
      "groups": [
        [
          {"type": "binary", "desired": ["v", "x"], "count": 2},
          {"type": "additive", "values": [1, 1, 2, 4, 8]}
        ],
        [
          {"type": "tabular", "values": {"": 0, "v": 1, "w": 1, "v,w": 1}}
        ]
      ],
      "order": ["z", "y", "x", "w", "v"]
    }

``count`` repeats an agent entry; ``order`` (optional) fixes the traversal
order used by the line protocols.  Rational numbers may be written as ints,
decimal strings, ``"p/q"`` strings, or JSON floats (read with decimal
semantics, so ``0.51`` means 51/100 exactly).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence, Union

from .errors import FormatError

__all__ = [
    "GoodId",
    "Bundle",
    "BinaryValuation",
    "AdditiveValuation",
    "TabularValuation",
    "Valuation",
    "Agent",
    "Instance",
    "Allocation",
    "value_of",
    "bundles_of",
    "parse_rational",
    "parse_instance",
    "serialize_instance",
    "parse_allocation",
    "serialize_allocation",
    "binarize_instance",
]

#: Goods are referred to by integer index inside the library; the JSON layer
#: and traces use the instance's string labels.
GoodId = int

MAX_TABULAR_GOODS = 16


# ---------------------------------------------------------------------------
# bundles


@dataclass(frozen=True)
class Bundle:
    """An immutable set of goods, stored as a bitmask over ``m`` goods.

    Bit ``i`` set means good ``i`` is in the bundle.

    >>> b = Bundle.from_indices([0, 2], 4)
    >>> list(b), len(b), 2 in b
    ([0, 2], 2, True)
    >>> list(b | Bundle.from_indices([1], 4))
    [0, 1, 2]
    """

    mask: int
    m: int

    def __post_init__(self):
        if not 0 <= self.mask < (1 << self.m):
            raise ValueError(f"mask {self.mask:#x} out of range for m={self.m}")

    @classmethod
    def empty(cls, m: int) -> "Bundle":
        return cls(0, m)

    @classmethod
    def full(cls, m: int) -> "Bundle":
        return cls((1 << m) - 1, m)

    @classmethod
    def from_indices(cls, indices: Iterable[int], m: int) -> "Bundle":
        mask = 0
        for i in indices:
            if not 0 <= i < m:
                raise ValueError(f"good index {i} out of range for m={m}")
            mask |= 1 << i
        return cls(mask, m)

    def __contains__(self, good: int) -> bool:
        return 0 <= good < self.m and bool(self.mask >> good & 1)

    def __iter__(self) -> Iterator[int]:
        mask = self.mask
        while mask:
            low = mask & -mask
            yield low.bit_length() - 1
            mask ^= low

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __bool__(self) -> bool:
        return self.mask != 0

    def _check_same_space(self, other: "Bundle"):
        if self.m != other.m:
            raise ValueError("bundles live over different good sets")

    def __or__(self, other: "Bundle") -> "Bundle":
        self._check_same_space(other)
        return Bundle(self.mask | other.mask, self.m)

    def __and__(self, other: "Bundle") -> "Bundle":
        self._check_same_space(other)
        return Bundle(self.mask & other.mask, self.m)

    def __sub__(self, other: "Bundle") -> "Bundle":
        self._check_same_space(other)
        return Bundle(self.mask & ~other.mask, self.m)

    def add(self, good: int) -> "Bundle":
        return Bundle(self.mask | (1 << good), self.m)

    def remove(self, good: int) -> "Bundle":
        return Bundle(self.mask & ~(1 << good), self.m)

    def issubset(self, other: "Bundle") -> bool:
        self._check_same_space(other)
        return self.mask & ~other.mask == 0

    def complement(self) -> "Bundle":
        return Bundle(~self.mask & ((1 << self.m) - 1), self.m)

    def __repr__(self):
        return f"Bundle({sorted(self)!r}, m={self.m})"


# ---------------------------------------------------------------------------
# valuations


@dataclass(frozen=True)
class BinaryValuation:
    """The agent wants ``desired``; a bundle is worth the overlap size.

    >>> v = BinaryValuation(Bundle.from_indices([0, 2], 3))
    >>> v.value(Bundle.from_indices([2], 3))
    1
    """

    desired: Bundle

    @property
    def m(self) -> int:
        return self.desired.m

    def value(self, bundle: Bundle) -> int:
        return (self.desired.mask & bundle.mask).bit_count()

    def singleton_values(self) -> tuple:
        return tuple(
            1 if i in self.desired else 0 for i in range(self.m)
        )


@dataclass(frozen=True)
class AdditiveValuation:
    """One nonnegative value per good; bundles are worth the sum."""

    values: tuple

    def __post_init__(self):
        vals = tuple(Fraction(v) for v in self.values)
        if any(v < 0 for v in vals):
            raise ValueError("additive values must be nonnegative")
        object.__setattr__(self, "values", vals)

    @property
    def m(self) -> int:
        return len(self.values)

    def value(self, bundle: Bundle) -> Fraction:
        return sum((self.values[i] for i in bundle), Fraction(0))

    def singleton_values(self) -> tuple:
        return self.values


@dataclass(frozen=True)
class TabularValuation:
    """An explicit table: ``table[mask]`` is the value of that bundle.

    Must have ``2**m`` entries, value 0 on the empty bundle, and be monotone
    (adding a good never lowers the value).  Capped at
    ``MAX_TABULAR_GOODS`` goods.
    """

    table: tuple
    m: int

    def __post_init__(self):
        if self.m > MAX_TABULAR_GOODS:
            raise ValueError(
                f"tabular valuations support at most {MAX_TABULAR_GOODS} goods"
            )
        table = tuple(Fraction(v) for v in self.table)
        if len(table) != 1 << self.m:
            raise ValueError(
                f"tabular valuation over {self.m} goods needs "
                f"{1 << self.m} entries, got {len(table)}"
            )
        if table[0] != 0:
            raise ValueError("tabular valuation must give the empty bundle 0")
        for mask in range(1, 1 << self.m):
            rest = mask
            while rest:
                low = rest & -rest
                if table[mask] < table[mask ^ low]:
                    raise ValueError(
                        f"tabular valuation not monotone at mask {mask:#x}"
                    )
                rest ^= low
        object.__setattr__(self, "table", table)

    def value(self, bundle: Bundle) -> Fraction:
        return self.table[bundle.mask]

    def singleton_values(self) -> tuple:
        return tuple(self.table[1 << i] for i in range(self.m))


Valuation = Union[BinaryValuation, AdditiveValuation, TabularValuation]


def value_of(valuation: Valuation, bundle: Bundle):
    """Value of ``bundle`` under ``valuation`` (int for binary, Fraction else)."""
    return valuation.value(bundle)


# ---------------------------------------------------------------------------
# agents, instances, allocations


@dataclass(frozen=True)
class Agent:
    """One agent: its group, its position inside the group, its valuation."""

    group: int
    index: int
    valuation: Valuation

    @property
    def label(self) -> str:
        """1-based ``group.member`` label used in traces."""
        return f"{self.group + 1}.{self.index + 1}"


@dataclass(frozen=True)
class Instance:
    """Immutable problem instance: labelled goods and ``k`` agent groups.

    ``order`` is the traversal order of goods (a permutation of indices)
    used by the line protocols; it defaults to instance order.
    """

    goods: tuple
    groups: tuple
    order: tuple = None  # type: ignore[assignment]

    def __post_init__(self):
        goods = tuple(self.goods)
        if not goods:
            raise ValueError("instance needs at least one good")
        for g in goods:
            if not isinstance(g, str) or not g or "," in g:
                raise ValueError(f"bad good label {g!r}")
        if len(set(goods)) != len(goods):
            raise ValueError("good labels must be unique")
        m = len(goods)
        groups = tuple(tuple(grp) for grp in self.groups)
        if not groups:
            raise ValueError("instance needs at least one group")
        for gi, grp in enumerate(groups):
            if not grp:
                raise ValueError(f"group {gi + 1} is empty")
            for ai, agent in enumerate(grp):
                if agent.group != gi or agent.index != ai:
                    raise ValueError(
                        f"agent at position {gi}.{ai} mislabelled as "
                        f"{agent.group}.{agent.index}"
                    )
                if agent.valuation.m != m:
                    raise ValueError(
                        f"agent {agent.label} valuation covers "
                        f"{agent.valuation.m} goods, instance has {m}"
                    )
        order = self.order
        if order is None:
            order = tuple(range(m))
        else:
            order = tuple(order)
            if sorted(order) != list(range(m)):
                raise ValueError("order must be a permutation of good indices")
        object.__setattr__(self, "goods", goods)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "order", order)

    @classmethod
    def from_valuations(
        cls, goods: Sequence[str], groups: Sequence[Sequence[Valuation]], order=None
    ) -> "Instance":
        """Build an instance from bare valuations (agents get labelled)."""
        built = tuple(
            tuple(Agent(gi, ai, v) for ai, v in enumerate(grp))
            for gi, grp in enumerate(groups)
        )
        return cls(tuple(goods), built, order)

    @property
    def m(self) -> int:
        return len(self.goods)

    @property
    def k(self) -> int:
        return len(self.groups)

    @property
    def sizes(self) -> tuple:
        return tuple(len(grp) for grp in self.groups)

    def agents(self) -> Iterator[Agent]:
        for grp in self.groups:
            yield from grp

    def index_of(self, label: str) -> int:
        try:
            return self.goods.index(label)
        except ValueError:
            raise FormatError(f"unknown good label {label!r}") from None

    def bundle(self, labels: Iterable[str]) -> Bundle:
        return Bundle.from_indices((self.index_of(g) for g in labels), self.m)

    def labels(self, bundle: Bundle) -> list:
        return [self.goods[i] for i in bundle]

    def is_binary(self) -> bool:
        return all(
            isinstance(a.valuation, BinaryValuation) for a in self.agents()
        )


@dataclass(frozen=True)
class Allocation:
    """A total assignment of goods to groups: ``assignment[i]`` owns good i."""

    assignment: tuple
    k: int

    def __post_init__(self):
        assignment = tuple(self.assignment)
        if not assignment:
            raise ValueError("allocation covers no goods")
        for gi, grp in enumerate(assignment):
            if not 0 <= grp < self.k:
                raise ValueError(f"good {gi} assigned to bad group {grp}")
        object.__setattr__(self, "assignment", assignment)

    @property
    def m(self) -> int:
        return len(self.assignment)

    @classmethod
    def from_bundles(cls, bundles: Sequence[Bundle]) -> "Allocation":
        m = bundles[0].m
        assignment = [-1] * m
        for gi, b in enumerate(bundles):
            for good in b:
                if assignment[good] != -1:
                    raise ValueError(f"good {good} assigned twice")
                assignment[good] = gi
        if -1 in assignment:
            raise ValueError(f"good {assignment.index(-1)} left unassigned")
        return cls(tuple(assignment), len(bundles))


def bundles_of(allocation: Allocation) -> tuple:
    """The per-group bundles of an allocation, in group order."""
    masks = [0] * allocation.k
    for good, grp in enumerate(allocation.assignment):
        masks[grp] |= 1 << good
    return tuple(Bundle(mask, allocation.m) for mask in masks)


# ---------------------------------------------------------------------------
# rationals in JSON


def parse_rational(x) -> Fraction:
    """Read a JSON-borne rational: int, decimal/`p/q` string, or float.

    Floats are read with decimal semantics (0.51 -> 51/100 exactly).

    >>> parse_rational("3/4"), parse_rational(0.51), parse_rational(2)
    (Fraction(3, 4), Fraction(51, 100), Fraction(2, 1))
    """
    if isinstance(x, bool):
        raise FormatError(f"not a rational: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        try:
            return Fraction(repr(x))
        except ValueError:
            raise FormatError(f"not a finite number: {x!r}") from None
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError):
            raise FormatError(f"not a rational: {x!r}") from None
    raise FormatError(f"not a rational: {x!r}")


def rational_doc(f: Fraction):
    """Render a Fraction for a JSON document: int when integral, else 'p/q'."""
    f = Fraction(f)
    if f.denominator == 1:
        return f.numerator
    return f"{f.numerator}/{f.denominator}"


# ---------------------------------------------------------------------------
# instance JSON


def _parse_subset_key(key: str, inst_goods: Sequence[str]) -> int:
    """A tabular key is a comma-joined label list ('' = empty bundle).

    For single-character labels plain concatenation ('vw') is accepted too.
    """
    if key == "":
        return 0
    parts = key.split(",") if "," in key else [key]
    if len(parts) == 1 and parts[0] not in inst_goods:
        if all(len(g) == 1 for g in inst_goods):
            parts = list(key)
    mask = 0
    for part in parts:
        part = part.strip()
        if part not in inst_goods:
            raise FormatError(f"unknown good {part!r} in bundle key {key!r}")
        bit = 1 << inst_goods.index(part)
        if mask & bit:
            raise FormatError(f"good {part!r} repeated in bundle key {key!r}")
        mask |= bit
    return mask


def _parse_valuation(doc, goods: Sequence[str]) -> Valuation:
    if not isinstance(doc, dict):
        raise FormatError(f"agent entry must be an object, got {doc!r}")
    kind = doc.get("type")
    m = len(goods)
    if kind == "binary":
        desired = doc.get("desired")
        if not isinstance(desired, list):
            raise FormatError("binary agent needs a 'desired' list")
        mask = 0
        for label in desired:
            if label not in goods:
                raise FormatError(f"unknown good label {label!r}")
            mask |= 1 << goods.index(label)
        return BinaryValuation(Bundle(mask, m))
    if kind == "additive":
        values = doc.get("values")
        if isinstance(values, dict):
            vec = [Fraction(0)] * m
            for label, v in values.items():
                if label not in goods:
                    raise FormatError(f"unknown good label {label!r}")
                vec[goods.index(label)] = parse_rational(v)
        elif isinstance(values, list):
            if len(values) != m:
                raise FormatError(
                    f"additive agent needs {m} values, got {len(values)}"
                )
            vec = [parse_rational(v) for v in values]
        else:
            raise FormatError("additive agent needs a 'values' list or map")
        try:
            return AdditiveValuation(tuple(vec))
        except ValueError as exc:
            raise FormatError(str(exc)) from None
    if kind == "tabular":
        values = doc.get("values")
        if not isinstance(values, dict):
            raise FormatError("tabular agent needs a 'values' map")
        if m > MAX_TABULAR_GOODS:
            raise FormatError(
                f"tabular valuations support at most {MAX_TABULAR_GOODS} goods"
            )
        table = [None] * (1 << m)
        for key, v in values.items():
            mask = _parse_subset_key(key, goods)
            if table[mask] is not None:
                raise FormatError(f"bundle key {key!r} listed twice")
            table[mask] = parse_rational(v)
        missing = [i for i, v in enumerate(table) if v is None]
        if missing:
            raise FormatError(
                f"tabular valuation misses {len(missing)} bundles "
                f"(first: mask {missing[0]:#x})"
            )
        try:
            return TabularValuation(tuple(table), m)
        except ValueError as exc:
            raise FormatError(str(exc)) from None
    raise FormatError(f"unknown agent type {kind!r}")


def parse_instance(text: str) -> Instance:
    """Parse an instance JSON document.

    >>> inst = parse_instance('''{"goods": ["v", "w"], "groups": [
    ...   [{"type": "binary", "desired": ["v"], "count": 2}],
    ...   [{"type": "additive", "values": [1, "1/2"]}]]}''')
    >>> inst.sizes
    (2, 1)
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise FormatError("instance document must be a JSON object")
    goods = doc.get("goods")
    if not isinstance(goods, list) or not goods:
        raise FormatError("instance needs a non-empty 'goods' list")
    groups_doc = doc.get("groups")
    if not isinstance(groups_doc, list) or not groups_doc:
        raise FormatError("instance needs a non-empty 'groups' list")
    goods = list(goods)
    groups = []
    for grp in groups_doc:
        if not isinstance(grp, list) or not grp:
            raise FormatError("each group must be a non-empty list of agents")
        members = []
        for entry in grp:
            if not isinstance(entry, dict):
                raise FormatError(f"agent entry must be an object, got {entry!r}")
            count = entry.get("count", 1)
            if not isinstance(count, int) or isinstance(count, bool) or count < 1:
                raise FormatError(f"bad agent count {count!r}")
            valuation = _parse_valuation(entry, goods)
            members.extend([valuation] * count)
        groups.append(members)
    order = None
    if "order" in doc:
        order_labels = doc["order"]
        if not isinstance(order_labels, list) or sorted(order_labels) != sorted(
            goods
        ):
            raise FormatError("'order' must be a permutation of the goods")
        order = tuple(goods.index(label) for label in order_labels)
    try:
        return Instance.from_valuations(goods, groups, order)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def _valuation_doc(v: Valuation, inst: Instance) -> dict:
    if isinstance(v, BinaryValuation):
        return {"type": "binary", "desired": inst.labels(v.desired)}
    if isinstance(v, AdditiveValuation):
        return {"type": "additive", "values": [rational_doc(x) for x in v.values]}
    if isinstance(v, TabularValuation):
        values = {}
        for mask in range(1 << v.m):
            key = ",".join(inst.goods[i] for i in Bundle(mask, v.m))
            values[key] = rational_doc(v.table[mask])
        return {"type": "tabular", "values": values}
    raise TypeError(f"unknown valuation {v!r}")


def serialize_instance(inst: Instance) -> str:
    """Serialize an instance to JSON; parse_instance round-trips it.

    Consecutive identical agents compress into one entry with a count.
    """
    groups_doc = []
    for grp in inst.groups:
        entries = []
        for agent in grp:
            doc = _valuation_doc(agent.valuation, inst)
            if entries and entries[-1]["_v"] == agent.valuation:
                entries[-1]["count"] = entries[-1].get("count", 1) + 1
            else:
                doc["_v"] = agent.valuation
                entries.append(doc)
        for doc in entries:
            del doc["_v"]
            if doc.get("count") == 1:
                del doc["count"]
        groups_doc.append(entries)
    doc = {"goods": list(inst.goods), "groups": groups_doc}
    if inst.order != tuple(range(inst.m)):
        doc["order"] = [inst.goods[i] for i in inst.order]
    return json.dumps(doc, indent=2)


# ---------------------------------------------------------------------------
# allocation JSON


def parse_allocation(text: str, inst: Instance) -> Allocation:
    """Parse an allocation document ``{"bundles": [[labels...], ...]}``.

    The bundles must partition the instance's goods, one per group.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or "bundles" not in doc:
        raise FormatError("allocation document needs a 'bundles' list")
    bundles = doc["bundles"]
    if not isinstance(bundles, list) or len(bundles) != inst.k:
        raise FormatError(f"allocation needs exactly {inst.k} bundles")
    assignment = [-1] * inst.m
    for gi, labels in enumerate(bundles):
        if not isinstance(labels, list):
            raise FormatError("each bundle must be a list of good labels")
        for label in labels:
            idx = inst.index_of(label)
            if assignment[idx] != -1:
                raise FormatError(f"good {label!r} assigned twice")
            assignment[idx] = gi
    if -1 in assignment:
        label = inst.goods[assignment.index(-1)]
        raise FormatError(f"good {label!r} left unassigned")
    return Allocation(tuple(assignment), inst.k)


def serialize_allocation(alloc: Allocation, inst: Instance) -> str:
    doc = {"bundles": [inst.labels(b) for b in bundles_of(alloc)]}
    return json.dumps(doc, indent=2)


# ---------------------------------------------------------------------------
# binarization


def binarize_instance(inst: Instance, c: int) -> Instance:
    """Replace every valuation with a binary one over its ``c`` best goods.

    Each agent keeps its ``c`` highest-valued goods (ties broken towards the
    lowest good index); binary agents wanting fewer than ``c`` goods keep
    what they have.  Used by the protocols whose guarantees only depend on
    each agent getting one of its best ``c`` goods.
    """
    if c < 1:
        raise ValueError("binarize needs c >= 1")
    groups = []
    for grp in inst.groups:
        members = []
        for agent in grp:
            vals = agent.valuation.singleton_values()
            ranked = sorted(range(inst.m), key=lambda i: (-vals[i], i))
            top = [i for i in ranked[:c] if vals[i] > 0]
            members.append(BinaryValuation(Bundle.from_indices(top, inst.m)))
        groups.append(members)
    return Instance.from_valuations(inst.goods, groups, inst.order)


if __name__ == "__main__":
    import doctest

    doctest.testmod()
