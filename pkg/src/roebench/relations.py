"""Finite relations stored as bitset rows.

A relation ``R`` from ``X`` to ``Y`` is a subset of ``Y x X``; pairs are
written ``(y, x)`` so that composition reads right to left like function
composition.  Row ``y`` of the bitset is an ``int`` whose bit ``x`` is set
iff ``(y, x)`` is in ``R``.

Subsets of a ground set are exchanged as ``frozenset`` of indices at the
public surface and as ``int`` bitmasks internally.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Iterator, Sequence

from .errors import GroundSetMismatch, IndexOutOfRange

_tokens = itertools.count()


class GroundSet:
    """A finite set ``{0, ..., n-1}`` with optional display labels.

    Two ground sets are equal only if they share the same identity token, so
    relations over unrelated sets of equal size cannot be mixed by accident.
    """

    __slots__ = ("size", "labels", "token")

    def __init__(self, size: int, labels: Sequence[str] | None = None, token=None):
        if size < 1:
            raise ValueError("a ground set needs at least one element")
        if labels is not None:
            labels = tuple(str(label) for label in labels)
            if len(labels) != size or len(set(labels)) != size:
                raise ValueError("labels must be pairwise distinct and match the size")
        self.size = int(size)
        self.labels = labels
        self.token = next(_tokens) if token is None else token

    def __eq__(self, other):
        if not isinstance(other, GroundSet):
            return NotImplemented
        return self.token == other.token and self.size == other.size

    def __hash__(self):
        return hash((self.token, self.size))

    def __len__(self):
        return self.size

    def __repr__(self):
        return f"GroundSet(size={self.size}, token={self.token!r})"

    @property
    def full_mask(self) -> int:
        return (1 << self.size) - 1

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels else str(i)

    def mask(self, subset: Iterable[int] | int) -> int:
        """Bitmask of ``subset``; checks bounds."""
        if isinstance(subset, int):
            if subset >> self.size:
                raise IndexOutOfRange(f"mask {subset:#x} exceeds ground set of size {self.size}")
            return subset
        m = 0
        for i in subset:
            i = int(i)
            if not 0 <= i < self.size:
                raise IndexOutOfRange(f"element {i} not in ground set of size {self.size}")
            m |= 1 << i
        return m


def bits(mask: int) -> Iterator[int]:
    """Indices of the set bits of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def members(mask: int) -> frozenset[int]:
    return frozenset(bits(mask))


def _check_same(a: GroundSet, b: GroundSet, what: str) -> None:
    if a != b:
        raise GroundSetMismatch(f"{what}: ground sets differ ({a!r} vs {b!r})")


class FiniteRelation:
    """An immutable relation ``R ⊆ Y x X`` with ``source = X``, ``target = Y``."""

    __slots__ = ("source", "target", "rows", "_hash")

    def __init__(self, source: GroundSet, target: GroundSet, rows: Sequence[int]):
        if len(rows) != target.size:
            raise ValueError("one row per target element is required")
        full = source.full_mask
        for r in rows:
            if r & ~full:
                raise IndexOutOfRange("row mask exceeds the source ground set")
        self.source = source
        self.target = target
        self.rows = tuple(int(r) for r in rows)
        self._hash = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_pairs(cls, source: GroundSet, target: GroundSet, pairs: Iterable[Sequence[int]]):
        rows = [0] * target.size
        for y, x in pairs:
            if not (0 <= y < target.size and 0 <= x < source.size):
                raise IndexOutOfRange(f"pair ({y}, {x}) out of range")
            rows[y] |= 1 << x
        return cls(source, target, rows)

    @classmethod
    def empty(cls, source: GroundSet, target: GroundSet | None = None):
        target = source if target is None else target
        return cls(source, target, [0] * target.size)

    @classmethod
    def full(cls, source: GroundSet, target: GroundSet | None = None):
        target = source if target is None else target
        return cls(source, target, [source.full_mask] * target.size)

    @classmethod
    def diagonal(cls, ground: GroundSet, subset: Iterable[int] | int | None = None):
        m = ground.full_mask if subset is None else ground.mask(subset)
        return cls(ground, ground, [(1 << y) if (m >> y) & 1 else 0 for y in range(ground.size)])

    @classmethod
    def rectangle(cls, source: GroundSet, target: GroundSet, b, a):
        """``b x a`` for ``b ⊆ Y``, ``a ⊆ X``."""
        bm, am = target.mask(b), source.mask(a)
        return cls(source, target, [am if (bm >> y) & 1 else 0 for y in range(target.size)])

    # -- basic protocol -----------------------------------------------------

    def pairs(self) -> list[tuple[int, int]]:
        """Pairs ``(y, x)`` in lexicographic order."""
        return [(y, x) for y, row in enumerate(self.rows) for x in bits(row)]

    def __iter__(self):
        return iter(self.pairs())

    def __len__(self):
        return sum(r.bit_count() for r in self.rows)

    def __bool__(self):
        return any(self.rows)

    def __contains__(self, pair) -> bool:
        y, x = pair
        return 0 <= y < self.target.size and 0 <= x < self.source.size and bool((self.rows[y] >> x) & 1)

    def __eq__(self, other):
        if not isinstance(other, FiniteRelation):
            return NotImplemented
        return self.source == other.source and self.target == other.target and self.rows == other.rows

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.source, self.target, self.rows))
        return self._hash

    def __repr__(self):
        return f"FiniteRelation({self.source.size}->{self.target.size}, {self.pairs()})"

    def __matmul__(self, other: FiniteRelation) -> FiniteRelation:
        return compose(self, other)

    def __or__(self, other: FiniteRelation) -> FiniteRelation:
        return union(self, other)

    def __and__(self, other: FiniteRelation) -> FiniteRelation:
        return intersect(self, other)

    def __le__(self, other: FiniteRelation) -> bool:
        return contains(other, self)

    def __ge__(self, other: FiniteRelation) -> bool:
        return contains(self, other)

    @property
    def T(self) -> FiniteRelation:
        return transpose(self)

    # -- projections and predicates ----------------------------------------

    def domain_mask(self) -> int:
        m = 0
        for r in self.rows:
            m |= r
        return m

    def range_mask(self) -> int:
        return sum(1 << y for y, r in enumerate(self.rows) if r)

    def domain(self) -> frozenset[int]:
        """``π_X(R)``."""
        return members(self.domain_mask())

    def range(self) -> frozenset[int]:
        """``π_Y(R)``."""
        return members(self.range_mask())

    def image_mask(self, mask: int) -> int:
        return sum(1 << y for y, r in enumerate(self.rows) if r & mask)

    def is_symmetric(self) -> bool:
        return self.source == self.target and self == transpose(self)

    def is_reflexive(self) -> bool:
        return self.source == self.target and all((r >> y) & 1 for y, r in enumerate(self.rows))

    def is_equivalence(self) -> bool:
        return self.is_reflexive() and self.is_symmetric() and contains(self, compose(self, self))

    def to_literal(self) -> dict:
        return {
            "source": self.source.size,
            "target": self.target.size,
            "pairs": [list(p) for p in self.pairs()],
        }


def relation_from_literal(lit: dict, source: GroundSet, target: GroundSet | None = None) -> FiniteRelation:
    """Parse ``{"source": n, "target": m, "pairs": [[y, x], ...]}`` over given ground sets."""
    target = source if target is None else target
    if int(lit.get("source", source.size)) != source.size or int(lit.get("target", target.size)) != target.size:
        raise GroundSetMismatch("relation literal sizes do not match the ground sets")
    return FiniteRelation.from_pairs(source, target, [tuple(p) for p in lit.get("pairs", [])])


def compose(r2: FiniteRelation, r1: FiniteRelation) -> FiniteRelation:
    """``r2 ∘ r1 = {(z, x) : ∃y (z, y) ∈ r2, (y, x) ∈ r1}``."""
    _check_same(r2.source, r1.target, "compose")
    r1rows = r1.rows
    out = []
    for row in r2.rows:
        acc = 0
        for y in bits(row):
            acc |= r1rows[y]
        out.append(acc)
    return FiniteRelation(r1.source, r2.target, out)


def compose_all(*relations: FiniteRelation) -> FiniteRelation:
    """Left-to-right fold: ``compose_all(a, b, c) == a ∘ b ∘ c``."""
    result = relations[-1]
    for r in reversed(relations[:-1]):
        result = compose(r, result)
    return result


def transpose(r: FiniteRelation) -> FiniteRelation:
    cols = [0] * r.source.size
    for y, row in enumerate(r.rows):
        for x in bits(row):
            cols[x] |= 1 << y
    return FiniteRelation(r.target, r.source, cols)


def image(r: FiniteRelation, a) -> frozenset[int]:
    """The ``R``-image ``{y : ∃x ∈ a, (y, x) ∈ R}``."""
    return members(r.image_mask(r.source.mask(a)))


def preimage(r: FiniteRelation, b) -> frozenset[int]:
    m = r.target.mask(b)
    acc = 0
    for y in bits(m):
        acc |= r.rows[y]
    return members(acc)


def is_separated(b, r: FiniteRelation, a) -> bool:
    """``B`` is ``R``-separated from ``A`` iff ``B ∩ R(A) = ∅``."""
    return not (r.target.mask(b) & r.image_mask(r.source.mask(a)))


def product_image(e: FiniteRelation, e2: FiniteRelation, d: FiniteRelation) -> FiniteRelation:
    """Image of ``D ⊆ X x X'`` under ``E ⊗ E'``, i.e. ``E ∘ D ∘ E'ᵀ``."""
    return compose(e, compose(d, transpose(e2)))


def union(a: FiniteRelation, b: FiniteRelation) -> FiniteRelation:
    _check_same(a.source, b.source, "union")
    _check_same(a.target, b.target, "union")
    return FiniteRelation(a.source, a.target, [x | y for x, y in zip(a.rows, b.rows)])


def union_all(relations: Iterable[FiniteRelation]) -> FiniteRelation:
    it = iter(relations)
    acc = next(it)
    for r in it:
        acc = union(acc, r)
    return acc


def intersect(a: FiniteRelation, b: FiniteRelation) -> FiniteRelation:
    _check_same(a.source, b.source, "intersect")
    _check_same(a.target, b.target, "intersect")
    return FiniteRelation(a.source, a.target, [x & y for x, y in zip(a.rows, b.rows)])


def contains(big: FiniteRelation, small: FiniteRelation) -> bool:
    """True iff ``small ⊆ big``."""
    _check_same(big.source, small.source, "contains")
    _check_same(big.target, small.target, "contains")
    return all(not (s & ~b) for b, s in zip(big.rows, small.rows))


def meets(a: FiniteRelation, b: FiniteRelation) -> bool:
    return any(x & y for x, y in zip(a.rows, b.rows))


def restrict_to(r: FiniteRelation, a, b) -> FiniteRelation:
    """Keep the pairs ``(y, x)`` with ``y ∈ b`` and ``x ∈ a``."""
    am, bm = r.source.mask(a), r.target.mask(b)
    return FiniteRelation(r.source, r.target, [row & am if (bm >> y) & 1 else 0 for y, row in enumerate(r.rows)])
