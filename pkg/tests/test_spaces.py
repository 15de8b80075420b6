from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roebench.errors import InvalidLadder, MetricViolation, NonMonotoneThresholds, ScaleOutOfRange
from roebench.generators import random_controlled_partition, random_space
from roebench.relations import FiniteRelation, compose, contains
from roebench.spaces import UNBOUNDED, CoarseSpace, Partition

from conftest import band

INF = math.inf


def test_line_ladder_is_banded(line4):
    assert line4.k == 3
    for r in range(4):
        assert set(line4.ladder[r].pairs()) == band(line4, r)
    assert line4.e_max == FiniteRelation.full(line4.ground)


def test_pair_top_level(pair2x2):
    expected = {(y, x) for blk in ({0, 1}, {2, 3}) for y in blk for x in blk}
    assert set(pair2x2.e_max.pairs()) == expected


def test_single_threshold_gives_diagonal(line4):
    d = np.abs(np.subtract.outer(range(4), range(4)))
    sp = CoarseSpace.from_metric(d, [0])
    assert sp.ladder[0] == sp.diagonal()
    # e_max is appended since {d < inf} is everything
    assert sp.e_max == FiniteRelation.full(sp.ground)


def test_metric_validation():
    with pytest.raises(MetricViolation):
        CoarseSpace.from_metric([[0, 1], [2, 0]], [0])
    with pytest.raises(MetricViolation):
        CoarseSpace.from_metric([[0, 1, 5], [1, 0, 1], [5, 1, 0]], [0])
    with pytest.raises(NonMonotoneThresholds):
        CoarseSpace.from_metric([[0, 1], [1, 0]], [1, 0])


def test_ladder_validation(line4):
    g = line4.ground
    with pytest.raises(InvalidLadder):
        CoarseSpace(g, [FiniteRelation.empty(g)])
    with pytest.raises(InvalidLadder):
        CoarseSpace(g, [line4.ladder[1]])  # top not transitive
    with pytest.raises(ScaleOutOfRange):
        line4.level(4)


def test_boundedness(line4, pair2x2):
    for x in range(4):
        assert line4.bound_scale({x}) == 0
    assert pair2x2.bound_scale({0, 2}) == UNBOUNDED
    assert not pair2x2.is_bounded({0, 2})
    assert line4.bound_scale({0, 2}) == 2


def test_components():
    inf3 = [[0, "inf", "inf"], ["inf", 0, "inf"], ["inf", "inf", 0]]
    sp = CoarseSpace.from_metric(inf3, [0])
    assert sp.components().as_lists() == [[0], [1], [2]]


def test_components_examples(line4, pair2x2):
    assert line4.components().as_lists() == [[0, 1, 2, 3]]
    assert pair2x2.components().as_lists() == [[0, 1], [2, 3]]


def test_thicken_and_containment(line4, pair2x2):
    assert line4.thicken({2}, 0) == {2}
    assert line4.thicken({1}, 1) == {0, 1, 2}
    for i in line4.scales:
        assert line4.thicken(range(4), i) == set(range(4))
    assert line4.coarse_containment({1, 3}, {1, 3}) == 0
    assert line4.coarse_containment(range(4), {0}) == 3
    assert pair2x2.coarse_containment({2}, {0}) == UNBOUNDED


def test_partition_control(line4):
    assert line4.partition_control_scale(Partition.singletons(4)) == 0
    halves = Partition(4, (frozenset({0, 1}), frozenset({2, 3})))
    assert line4.partition_control_scale(halves) == 1
    assert line4.partition_control_scale(Partition.whole(4)) == 3


def _multiplicity_oracle(space: CoarseSpace, p: Partition, i: int) -> int:
    # all E_i-bounded subsets, straight from the definition
    best = 0
    for k in range(1, space.n + 1):
        for sub in itertools.combinations(range(space.n), k):
            if space.bound_scale(sub) <= i:
                best = max(best, len({p.block_of(x) for x in sub}))
    return best


def test_local_finiteness(line4, pair2x2):
    rep = line4.local_finiteness_report(Partition.singletons(4))
    assert rep.locally_finite
    # {0,1} is the largest E_1-bounded set on the line (diameter 1)
    assert rep.multiplicity[1] == 2
    assert rep.multiplicity == tuple(_multiplicity_oracle(line4, Partition.singletons(4), i) for i in line4.scales)
    assert line4.local_finiteness_report(Partition.whole(4)).multiplicity == (1, 1, 1, 1)
    assert pair2x2.local_finiteness_report(Partition.singletons(4)).multiplicity[1] == 2


def test_coarse_cardinality(line4, pair2x2):
    assert line4.coarse_cardinality() == 1
    assert pair2x2.coarse_cardinality() == 2
    five = [[0 if i == j else "inf" for j in range(5)] for i in range(5)]
    assert CoarseSpace.from_metric(five, [0]).coarse_cardinality() == 5


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_space_invariants(seed):
    rng = np.random.default_rng(seed)
    sp = random_space(rng, int(rng.integers(1, 7)), components=int(rng.integers(1, 3)))
    for a, b in zip(sp.ladder, sp.ladder[1:]):
        assert contains(b, a)
    assert contains(sp.e_max, compose(sp.e_max, sp.e_max))
    p = random_controlled_partition(rng, sp)
    rep = sp.local_finiteness_report(p)
    for i in sp.scales:
        assert rep.multiplicity[i] == _multiplicity_oracle(sp, p, i)
        assert rep.multiplicity[i] <= rep.star_multiplicity[i]
    a = {int(x) for x in rng.integers(sp.n, size=2)}
    i = sp.coarse_containment(range(sp.n), a)
    if i != UNBOUNDED:
        assert sp.thicken(a, i) == set(range(sp.n))
