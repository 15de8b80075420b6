from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roebench.errors import DomainNotCovered, NotControlled, PartitionNotControlled
from roebench.generators import random_map, random_space
from roebench.maps import (
    check_controlled,
    closeness,
    coarse_compose,
    compose_maps,
    embedding_modulus,
    function_representative,
    identity_map,
    is_coarse_equivalence,
    is_proper,
    map_from_function,
    partition_quotient_equivalence,
)
from roebench.relations import FiniteRelation, GroundSet, compose, contains, transpose
from roebench.spaces import CoarseSpace, Partition

from conftest import rel


def point_space(n: int = 1) -> CoarseSpace:
    g = GroundSet(n)
    return CoarseSpace(g, [FiniteRelation.full(g)])


def collapse_map(space: CoarseSpace):
    pt = point_space()
    return check_controlled(space, pt, FiniteRelation.full(space.ground, pt.ground))


def test_identity_modulus(line4, pair2x2):
    for sp in (line4, pair2x2):
        assert identity_map(sp).modulus == tuple(sp.scales)


def test_doubling_map(line4):
    f = map_from_function(line4, line4, [min(2 * x, 3) for x in range(4)])
    assert f.modulus[1] == 2


def test_not_controlled_witness(pair2x2):
    r = rel(pair2x2, pair2x2, [(2, 0), (0, 0), (1, 1)])
    with pytest.raises(NotControlled) as exc:
        check_controlled(pair2x2, pair2x2, r)
    (y, x), (y2, x2) = exc.value.witness
    comps = pair2x2.components()
    assert comps.block_of(x) == comps.block_of(x2)
    assert comps.block_of(y) != comps.block_of(y2)


def test_closeness_examples(line4, pair2x2):
    idl = identity_map(line4)
    assert closeness(idl, idl).scales == (0, 0)
    shift = map_from_function(line4, line4, [min(x + 1, 3) for x in range(4)])
    cert = closeness(idl, shift)
    assert cert.present and cert.scales[1] == 1
    swap = map_from_function(pair2x2, pair2x2, [2, 3, 0, 1])
    cert = closeness(identity_map(pair2x2), swap)
    assert not cert and not cert.composition_test


def test_coarse_compose(line4):
    s = rel(line4, line4, [(2, 0), (1, 3)])
    assert coarse_compose(identity_map(line4), s).scale == 0
    assert coarse_compose(identity_map(line4), s).relation == s
    partial = map_from_function(line4, line4, {0: 0, 1: 1})
    got = coarse_compose(partial, rel(line4, line4, [(2, 0)]))
    assert got.scale == 1
    assert got.relation.pairs() == [(1, 0)]


def test_coarse_compose_uncovered(pair2x2):
    partial = map_from_function(pair2x2, pair2x2, {0: 0})
    with pytest.raises(DomainNotCovered):
        coarse_compose(partial, rel(pair2x2, pair2x2, [(2, 2)]))


def test_properness(line4, pair2x2):
    assert is_proper(identity_map(line4))
    collapse = collapse_map(pair2x2)
    v = is_proper(collapse)
    assert not v and v.witness == ([0], [0, 1])
    assert is_proper(map_from_function(pair2x2, pair2x2, [2, 3, 0, 1]))


def test_embedding_modulus(line4, pair2x2):
    assert embedding_modulus(identity_map(line4)) == (0, 1, 2, 3)
    sub = CoarseSpace.from_metric([[0, 2], [2, 0]], [0, 1, 2])
    inc = map_from_function(sub, line4, [0, 2])
    # the two points are 2 apart, so they become related from target scale 2 on
    assert embedding_modulus(inc) == (0, 0, 2, 2)
    collapse = collapse_map(pair2x2)
    assert embedding_modulus(collapse) is None


def test_coarse_equivalence(line4, pair2x2):
    rep = is_coarse_equivalence(identity_map(line4))
    assert rep and rep.target_certificate.scales == (0, 0) and rep.source_certificate.scales == (0, 0)
    sub = CoarseSpace.from_metric([[0, 2], [2, 0]], [0, 1, 2])
    nearest = check_controlled(line4, sub, FiniteRelation.from_pairs(line4.ground, sub.ground,
                                                                     [(0, 0), (0, 1), (1, 2), (1, 3)]))
    assert is_coarse_equivalence(nearest)
    half = CoarseSpace.from_metric([[0, 1], [1, 0]], [0, 1])
    inc = map_from_function(half, pair2x2, [0, 1])
    assert not is_coarse_equivalence(inc)


def test_partition_quotient(line4, pair2x2):
    q, f = partition_quotient_equivalence(line4, Partition.singletons(4))
    assert [e.pairs() for e in q.ladder] == [e.pairs() for e in line4.ladder]
    q, f = partition_quotient_equivalence(line4, Partition(4, (frozenset({0, 1}), frozenset({2, 3}))))
    assert q.n == 2 and q.is_connected() and is_coarse_equivalence(f)
    q, f = partition_quotient_equivalence(pair2x2, pair2x2.components())
    assert q.n == 2 and q.coarse_cardinality() == 2 and is_coarse_equivalence(f)
    with pytest.raises(PartitionNotControlled):
        partition_quotient_equivalence(pair2x2, Partition.whole(4))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_map_laws(seed):
    rng = np.random.default_rng(seed)
    X = random_space(rng, int(rng.integers(1, 6)), components=int(rng.integers(1, 3)))
    Y = random_space(rng, int(rng.integers(1, 6)), components=int(rng.integers(1, 3)))
    Z = random_space(rng, int(rng.integers(1, 6)), components=1)
    f = random_map(rng, X, Y)
    g = random_map(rng, Y, Z)
    gf = compose_maps(g, f)
    # the modulus really bounds R E_i R^T
    for i, e in enumerate(X.ladder):
        assert contains(Y.ladder[f.modulus[i]], compose(f.relation, compose(e, transpose(f.relation))))
    assert closeness(f, f).scales == (0, 0)
    assert closeness(gf, gf).present
    # a function representative stays close to the map
    rep = map_from_function(X, Y, function_representative(f))
    assert closeness(f, rep).present
    assert is_proper(identity_map(X))
