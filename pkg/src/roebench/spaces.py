"""Finite coarse spaces.

On a finite set every coarse structure is principal: it consists of all
subsets of a largest entourage ``e_max``, which is then an equivalence
relation.  A :class:`CoarseSpace` stores ``e_max`` together with a ladder of
gauges ``E_0 ⊆ E_1 ⊆ ... ⊆ E_k = e_max`` used to answer quantitative
questions: "there is an entourage with property P" becomes "P holds at the
least ladder index", reported as a scale.

Scales are plain ``int`` ladder indices; :data:`UNBOUNDED` (``math.inf``)
means "not even inside ``e_max``".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import networkx as nx
import numpy as np

from .errors import (
    InvalidLadder,
    InvalidPartition,
    MetricViolation,
    NonMonotoneThresholds,
    ScaleOutOfRange,
)
from .relations import FiniteRelation, GroundSet, bits, compose, contains, members, relation_from_literal

UNBOUNDED = math.inf
Scale = Union[int, float]


def scale_repr(s: Scale):
    """JSON-friendly rendering of a scale."""
    return "unbounded" if s == UNBOUNDED else int(s)


def max_scale(*scales: Scale) -> Scale:
    return max(scales, default=0)


@dataclass(frozen=True)
class Partition:
    """A partition of ``{0..n-1}`` into nonempty blocks, kept in the given order."""

    n: int
    blocks: tuple[frozenset[int], ...]
    _owner: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        blocks = tuple(frozenset(int(x) for x in b) for b in self.blocks)
        owner = [-1] * self.n
        for i, b in enumerate(blocks):
            if not b:
                raise InvalidPartition(f"block {i} is empty")
            for x in b:
                if not 0 <= x < self.n:
                    raise InvalidPartition(f"element {x} outside ground set of size {self.n}")
                if owner[x] != -1:
                    raise InvalidPartition(f"element {x} lies in blocks {owner[x]} and {i}")
                owner[x] = i
        missing = [x for x, o in enumerate(owner) if o == -1]
        if missing:
            raise InvalidPartition(f"elements {missing} are not covered")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "_owner", tuple(owner))

    @classmethod
    def singletons(cls, n: int) -> Partition:
        return cls(n, tuple(frozenset([x]) for x in range(n)))

    @classmethod
    def whole(cls, n: int) -> Partition:
        return cls(n, (frozenset(range(n)),))

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def block_of(self, x: int) -> int:
        return self._owner[x]

    @property
    def masks(self) -> tuple[int, ...]:
        return tuple(sum(1 << x for x in b) for b in self.blocks)

    def as_lists(self) -> list[list[int]]:
        return [sorted(b) for b in self.blocks]


@dataclass(frozen=True)
class LocalFinitenessReport:
    locally_finite: bool
    multiplicity: tuple[int, ...]
    # max over x of the number of blocks meeting E_i(x); an upper bound for the above
    star_multiplicity: tuple[int, ...]


class CoarseSpace:
    """A finite set with a gauge ladder whose top level is an equivalence relation."""

    def __init__(self, ground: GroundSet, ladder: Sequence[FiniteRelation], name: str | None = None):
        if not ladder:
            raise InvalidLadder("the ladder needs at least one level")
        for i, e in enumerate(ladder):
            if e.source != ground or e.target != ground:
                raise InvalidLadder(f"ladder level {i} is not a relation on the ground set")
            if not e.is_reflexive():
                raise InvalidLadder(f"ladder level {i} does not contain the diagonal")
            if not e.is_symmetric():
                raise InvalidLadder(f"ladder level {i} is not symmetric")
            if i and not contains(e, ladder[i - 1]):
                raise InvalidLadder(f"ladder level {i} does not contain level {i - 1}")
        if not contains(ladder[-1], compose(ladder[-1], ladder[-1])):
            raise InvalidLadder("top ladder level is not closed under composition")
        self.ground = ground
        self.ladder = tuple(ladder)
        self.name = name

    # -- construction -------------------------------------------------------

    @classmethod
    def from_metric(cls, dist, thresholds: Sequence[float], labels=None, name=None, atol: float = 1e-12) -> CoarseSpace:
        """Threshold ladder of an extended metric; ``inf`` marks distinct components.

        The top level is always ``{d < inf}``; it is appended when the largest
        threshold does not already produce it.
        """
        d = np.array([[_parse_extended(v) for v in row] for row in dist], dtype=float)
        n = d.shape[0]
        if d.shape != (n, n) or n < 1:
            raise MetricViolation("distance matrix must be square and nonempty")
        if np.isnan(d).any() or (d < 0).any():
            raise MetricViolation("distances must be nonnegative")
        if not np.array_equal(d, d.T):
            i, j = np.argwhere(d != d.T)[0]
            raise MetricViolation(f"asymmetric distance: d({i},{j}) != d({j},{i})")
        if (np.diag(d) != 0).any():
            raise MetricViolation("nonzero diagonal")
        for k in range(n):
            via = d[:, [k]] + d[[k], :]
            bad = d > via + atol * np.maximum(1.0, via)
            if bad.any():
                i, j = np.argwhere(bad)[0]
                raise MetricViolation(f"triangle inequality fails: d({i},{j}) > d({i},{k}) + d({k},{j})")
        thresholds = [float(t) for t in thresholds]
        if not thresholds or any(math.isinf(t) or t < 0 for t in thresholds):
            raise NonMonotoneThresholds("thresholds must be finite and nonnegative")
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise NonMonotoneThresholds(f"thresholds must be strictly ascending: {thresholds}")
        ground = GroundSet(n, labels)
        ladder = [_threshold_relation(ground, d <= t) for t in thresholds]
        e_max = _threshold_relation(ground, np.isfinite(d))
        if ladder[-1] != e_max:
            ladder.append(e_max)
        return cls(ground, ladder, name=name)

    @classmethod
    def from_ladder_literals(cls, n: int, literals: Sequence[dict], labels=None, name=None) -> CoarseSpace:
        ground = GroundSet(n, labels)
        return cls(ground, [relation_from_literal(lit, ground) for lit in literals], name=name)

    # -- basic accessors ----------------------------------------------------

    @property
    def n(self) -> int:
        return self.ground.size

    @property
    def k(self) -> int:
        return len(self.ladder) - 1

    @property
    def e_max(self) -> FiniteRelation:
        return self.ladder[-1]

    @property
    def scales(self) -> range:
        return range(len(self.ladder))

    def level(self, i: Scale) -> FiniteRelation:
        if i == UNBOUNDED or not 0 <= i <= self.k:
            raise ScaleOutOfRange(f"scale {i} outside ladder 0..{self.k}")
        return self.ladder[int(i)]

    def mask(self, a) -> int:
        return self.ground.mask(a)

    def diagonal(self) -> FiniteRelation:
        return FiniteRelation.diagonal(self.ground)

    def scale_of(self, r: FiniteRelation) -> Scale:
        """Least ladder index ``i`` with ``r ⊆ E_i``; ``UNBOUNDED`` if ``r ⊄ e_max``."""
        for i, e in enumerate(self.ladder):
            if contains(e, r):
                return i
        return UNBOUNDED

    # -- boundedness and thickenings ----------------------------------------

    def _square_scale(self, m: int) -> Scale:
        for i, e in enumerate(self.ladder):
            if all(not (m & ~e.rows[y]) for y in bits(m)):
                return i
        return UNBOUNDED

    def bound_scale(self, a) -> Scale:
        """Least ``i`` with ``a x a ⊆ E_i``."""
        return self._square_scale(self.mask(a))

    def is_bounded(self, a) -> bool:
        return self.bound_scale(a) != UNBOUNDED

    def thicken_mask(self, m: int, i: Scale) -> int:
        return self.level(i).image_mask(m)

    def thicken(self, a, i: Scale) -> frozenset[int]:
        return members(self.thicken_mask(self.mask(a), i))

    def coarse_containment(self, a, b) -> Scale:
        """Least ``i`` with ``a ⊆ E_i(b)``."""
        am, bm = self.mask(a), self.mask(b)
        for i, e in enumerate(self.ladder):
            if not (am & ~e.image_mask(bm)):
                return i
        return UNBOUNDED

    def asymptotic(self, a, b) -> bool:
        return self.coarse_containment(a, b) != UNBOUNDED and self.coarse_containment(b, a) != UNBOUNDED

    def density_scale(self, a) -> Scale:
        """Least ``i`` with ``E_i(a) = X`` (coarse density)."""
        return self.coarse_containment(range(self.n), a)

    # -- components and partitions ------------------------------------------

    def components(self) -> Partition:
        seen = 0
        blocks = []
        for x in range(self.n):
            if (seen >> x) & 1:
                continue
            cls_mask = self.e_max.rows[x]
            seen |= cls_mask
            blocks.append(members(cls_mask))
        return Partition(self.n, tuple(blocks))

    def is_connected(self) -> bool:
        return len(self.components()) == 1

    def coarse_cardinality(self) -> int:
        return len(self.components())

    def partition_control_scale(self, p: Partition) -> Scale:
        return max_scale(*(self._square_scale(m) for m in p.masks))

    def local_finiteness_report(self, p: Partition) -> LocalFinitenessReport:
        """Uniform multiplicity profile of a partition.

        ``multiplicity[i]`` is the largest number of blocks met by an
        ``E_i``-bounded set.  Every such set lies in a maximal clique of the
        graph of ``E_i``, so maximal cliques are enumerated exactly.
        """
        mult, star = [], []
        for e in self.ladder:
            g = nx.Graph()
            g.add_nodes_from(range(self.n))
            g.add_edges_from((y, x) for y, x in e.pairs() if y < x)
            best = 0
            for clique in nx.find_cliques(g):
                best = max(best, len({p.block_of(x) for x in clique}))
            mult.append(best)
            star.append(max(len({p.block_of(z) for z in bits(e.rows[x])}) for x in range(self.n)))
        return LocalFinitenessReport(True, tuple(mult), tuple(star))

    def __repr__(self):
        return f"CoarseSpace(n={self.n}, k={self.k}, name={self.name!r})"


def _parse_extended(v) -> float:
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "infinity", "+inf"):
            return math.inf
        raise MetricViolation(f"unrecognised distance literal {v!r}")
    return float(v)


def _threshold_relation(ground: GroundSet, mask_matrix: np.ndarray) -> FiniteRelation:
    rows = [sum(1 << x for x in np.flatnonzero(row)) for row in mask_matrix]
    return FiniteRelation(ground, ground, rows)


def line_space(n: int, thresholds: Iterable[float] | None = None, name: str | None = None) -> CoarseSpace:
    """Points ``0..n-1`` on a line with the ``|x - y|`` metric."""
    thresholds = list(range(n)) if thresholds is None else list(thresholds)
    idx = np.arange(n)
    return CoarseSpace.from_metric(np.abs(idx[:, None] - idx[None, :]).astype(float), thresholds, name=name)


def clusters_space(sizes: Sequence[int], intra: float = 1.0, thresholds=(0, 1), name: str | None = None) -> CoarseSpace:
    """Clusters at infinite mutual distance, points inside a cluster at distance ``intra``."""
    n = sum(sizes)
    d = np.full((n, n), math.inf)
    start = 0
    for s in sizes:
        d[start:start + s, start:start + s] = intra
        start += s
    np.fill_diagonal(d, 0.0)
    return CoarseSpace.from_metric(d, thresholds, name=name)
