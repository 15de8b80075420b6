from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roebench.constructions import (
    approximate_unit,
    band_decompose,
    commutant_dimension,
    component_decompose,
    conditional_expectation,
    cover,
    covers_are_close,
    ktheory_unitary,
    ql_controlled_isometry_check,
)
from roebench.errors import (
    AmplenessInsufficient,
    ComponentsNotMeasurable,
    MeasurabilityError,
    NotIsometries,
    NotIsometry,
    SurjectivityMissing,
    UnboundedPropagation,
)
from roebench.generators import random_finite_propagation, random_map, random_module, random_space
from roebench.geomodule import GeoModule, uniform_module
from roebench.maps import identity_map, map_from_function, partition_quotient_equivalence
from roebench.operators import BlockOperator, propagation_scale, random_operator, support
from roebench.spaces import UNBOUNDED, CoarseSpace, Partition

HALVES = Partition(4, (frozenset({0, 1}), frozenset({2, 3})))


# -- covers -------------------------------------------------------------------


def test_identity_unitary_cover(line4):
    m = uniform_module(line4, 1)
    c = cover(identity_map(line4), m, m, "unitary")
    assert np.array_equal(c.operator.matrix, np.eye(4))
    assert c.cover_certificate.scales == (0, 0)
    assert c.identity_error == 0


def test_rank_doubling_isometry(line4):
    m1, m2 = uniform_module(line4, 1), uniform_module(line4, 2)
    c = cover(identity_map(line4), m1, m2, "isometry")
    v = c.operator.matrix
    assert np.array_equal(v.conj().T @ v, np.eye(4))
    assert support(c.operator).atoms.pairs() == [(a, a) for a in range(4)]


def test_quotient_isometry(line4):
    q, f = partition_quotient_equivalence(line4, HALVES)
    m_x = uniform_module(line4, 1)
    m_y = uniform_module(q, 2)
    c = cover(f, m_x, m_y, "isometry")
    assert c.identity_error <= 1e-10
    assert c.cover_certificate.present
    assert c.cover_certificate.scales == (0, 0)


def test_cover_failures(line4, pair2x2):
    m1, m2 = uniform_module(line4, 1), uniform_module(line4, 2)
    with pytest.raises(AmplenessInsufficient):
        cover(identity_map(line4), m2, m1, "isometry")
    f = map_from_function(pair2x2, pair2x2, [0, 1, 0, 1])
    mp = uniform_module(pair2x2, 1)
    with pytest.raises(SurjectivityMissing):
        cover(f, mp, mp, "coisometry")
    with pytest.raises(ValueError):
        cover(identity_map(line4), m1, m1, "bogus")


def test_coisometry_cover(line4):
    m1, m2 = uniform_module(line4, 1), uniform_module(line4, 2)
    c = cover(identity_map(line4), m2, m1, "coisometry")
    v = c.operator.matrix
    assert np.allclose(v @ v.conj().T, np.eye(4))


def test_seeded_covers_are_close(line4):
    m1, m2 = uniform_module(line4, 1), uniform_module(line4, 3)
    f = identity_map(line4)
    c0 = cover(f, m1, m2, "isometry", seed=1)
    c1 = cover(f, m1, m2, "isometry", seed=7)
    rep = covers_are_close(c0, c1)
    assert rep.ok and all(s != UNBOUNDED for s in rep.scales.values())
    same = covers_are_close(c0, c0)
    p = c0.operator.matrix @ c0.operator.matrix.conj().T
    assert np.allclose(p @ p, p) and same.scales[(0, 0)] == 0


def test_unitaries_of_equivalence(line4):
    m = uniform_module(line4, 2)
    f = identity_map(line4)
    u0 = cover(f, m, m, "unitary", seed=2)
    u1 = cover(f, m, m, "unitary", seed=5)
    w = u1.operator @ u0.operator.adjoint()
    assert np.allclose(w.matrix @ w.matrix.conj().T, np.eye(8))
    assert propagation_scale(w) != UNBOUNDED


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_isometry_covers(seed):
    rng = np.random.default_rng(seed)
    X = random_space(rng, int(rng.integers(1, 6)), components=int(rng.integers(1, 3)))
    Y = random_space(rng, int(rng.integers(1, 6)), components=int(rng.integers(1, 3)))
    f = random_map(rng, X, Y)
    m_x = random_module(rng, X, max_dim=2, min_dim=1)
    # ample enough: every target atom can take every source dimension at once
    m_y = random_module(rng, Y, max_dim=1, min_dim=1)
    m_y = GeoModule(Y, m_y.atoms, [m_x.D] * m_y.n_atoms)
    c = cover(f, m_x, m_y, "isometry", seed=int(rng.integers(100)))
    assert c.identity_error <= 1e-10
    assert c.cover_certificate.present


# -- band decomposition, expectation, commutant ----------------------------------


def test_band_examples(line4, rng):
    m = uniform_module(line4, 1)
    diag = BlockOperator(m, m, np.diag([1.0, 2, 3, 4]))
    assert len(band_decompose(diag).pieces) == 1
    assert band_decompose(BlockOperator.zero(m)).pieces == ()
    tri = BlockOperator(m, m, np.eye(4) + np.eye(4, k=1) + np.eye(4, k=-1))
    bd = band_decompose(tri)
    assert len(bd.pieces) <= 3
    assert np.array_equal(sum(p.matrix for p in bd.pieces), tri.matrix)


def test_band_rejects_unbounded(pair2x2):
    mp = uniform_module(pair2x2, 1)
    mat = np.zeros((4, 4))
    mat[2, 0] = 1
    with pytest.raises(UnboundedPropagation):
        band_decompose(BlockOperator(mp, mp, mat))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_band_invariants(seed):
    rng = np.random.default_rng(seed)
    sp = random_space(rng, int(rng.integers(1, 7)), components=int(rng.integers(1, 3)))
    m = random_module(rng, sp)
    t = random_finite_propagation(rng, m)
    bd = band_decompose(t)
    assert np.array_equal(sum((p.matrix for p in bd.pieces), np.zeros_like(t.matrix)), t.matrix)
    assert len(bd.pieces) <= bd.max_degree + 1
    for p in bd.pieces:
        nz = support(p).atoms.pairs()
        assert len({b for b, _ in nz}) == len(nz) == len({a for _, a in nz})


def test_expectation_examples(line4):
    m = uniform_module(line4, 1)
    e = conditional_expectation(BlockOperator(m, m, np.ones((4, 4))), HALVES)
    assert np.array_equal(e.matrix, np.kron(np.eye(2), np.ones((2, 2))))
    assert np.array_equal(conditional_expectation(e, HALVES).matrix, e.matrix)
    with pytest.raises(MeasurabilityError):
        conditional_expectation(BlockOperator.identity(GeoModule(line4, HALVES, [1, 1])), Partition.singletons(4))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_expectation_laws(seed):
    rng = np.random.default_rng(seed)
    sp = random_space(rng, int(rng.integers(1, 6)))
    m = random_module(rng, sp)
    t, x, y = (random_operator(rng, m, density=0.8) for _ in range(3))
    dx, dy = conditional_expectation(x), conditional_expectation(y)
    e = conditional_expectation
    assert np.allclose(e(dx @ t @ dy).matrix, (dx @ e(t) @ dy).matrix, atol=1e-12)
    assert np.array_equal(e(e(t)).matrix, e(t).matrix)
    assert e(t).norm <= t.norm + 1e-12
    tt = t.adjoint() @ t
    if not np.any(e(tt).matrix):
        assert not np.any(t.matrix)


def test_commutant(line4):
    sp = line4
    assert commutant_dimension(Partition.whole(4), GeoModule(sp, Partition.whole(4), [3])).dimension == 1
    assert commutant_dimension(HALVES, GeoModule(sp, HALVES, [2, 2])).dimension == 2
    c = commutant_dimension(HALVES, GeoModule(sp, HALVES, [2, 0]))
    assert c.dimension == 1 == c.expected


# -- approximate unit ---------------------------------------------------------------


def test_approx_unit_examples(line4, rng):
    m = uniform_module(line4, 2)
    w = approximate_unit(BlockOperator.zero(m), 0.1)
    assert w.measured == 0 and not np.any(w.p_lambda.matrix)
    proj = np.zeros((8, 8))
    proj[2:4, 2:4] = np.eye(2)
    w = approximate_unit(BlockOperator(m, m, proj), 0.5)
    assert np.allclose(w.p_lambda.matrix @ proj, proj)
    t = random_finite_propagation(rng, m, 1, density=1.0)
    w = approximate_unit(t, 0.1)
    assert w.measured <= 1.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 2.0))
def test_approx_unit_invariants(seed, eps):
    rng = np.random.default_rng(seed)
    sp = random_space(rng, int(rng.integers(1, 7)), components=int(rng.integers(1, 3)))
    m = random_module(rng, sp, max_dim=3)
    t = random_finite_propagation(rng, m)
    w = approximate_unit(t, eps)
    p = w.p_lambda.matrix
    assert np.allclose(p @ p, p) and np.allclose(p, p.conj().T)
    assert w.measured <= w.certified_bound
    assert w.even_error <= 5 * eps + 1e-12 and w.odd_error <= 5 * eps + 1e-12
    # p_lambda lives on the diagonal atom blocks
    assert propagation_scale(w.p_lambda) == 0 or not np.any(p)
    assert all(r <= d for r, d in zip(w.local_ranks, m.dims))


# -- components --------------------------------------------------------------------


def test_component_examples(line4, pair2x2, rng):
    mp = uniform_module(pair2x2, 1)
    t = random_finite_propagation(rng, mp, 1, density=1.0)
    d = component_decompose(t)
    assert d.cross_blocks_zero and d.reconstructs and d.propagation != UNBOUNDED
    mat = t.matrix.copy()
    mat[2, 0] = 1
    d = component_decompose(t.with_matrix(mat))
    assert not d.reconstructs and d.propagation == UNBOUNDED
    d = component_decompose(random_operator(rng, uniform_module(line4, 1)))
    assert len(d.pieces) == 1 and d.reconstructs


def test_components_not_measurable(pair2x2):
    m = GeoModule(pair2x2, Partition(4, (frozenset({0, 2}), frozenset({1}), frozenset({3}))), [1, 1, 1])
    with pytest.raises(ComponentsNotMeasurable):
        component_decompose(BlockOperator.identity(m))


# -- K-theory unitary and quasi-local isometries -------------------------------


def test_ktheory_same_isometry(line4):
    m1, m2 = uniform_module(line4, 1), uniform_module(line4, 2)
    c = cover(identity_map(line4), m1, m2, "isometry")
    k = ktheory_unitary(c, c)
    p = c.operator.matrix @ c.operator.matrix.conj().T
    one = np.eye(8)
    assert np.allclose(k.u, np.block([[one - p, p], [p, one - p]]))
    assert k.ok


def test_ktheory_two_covers(line4):
    m1, m2 = uniform_module(line4, 1), uniform_module(line4, 2)
    f = identity_map(line4)
    k = ktheory_unitary(cover(f, m1, m2, "isometry", seed=0), cover(f, m1, m2, "isometry", seed=3))
    assert k.ok
    assert max(k.self_adjoint_error, k.involution_error, k.unitary_error, k.conjugation_error) < 1e-10


def test_ktheory_rejects_non_isometry(line4):
    m = uniform_module(line4, 1)
    with pytest.raises(NotIsometries):
        ktheory_unitary(BlockOperator.zero(m), BlockOperator.identity(m))


def test_ql_isometry(line4):
    m = uniform_module(line4, 1)
    assert ql_controlled_isometry_check(BlockOperator.identity(m)).propagation_scale == 0
    assert ql_controlled_isometry_check(BlockOperator(m, m, np.eye(4)[::-1])).ok
    with pytest.raises(NotIsometry):
        ql_controlled_isometry_check(BlockOperator.zero(m))
    # four singleton classes: the swap is controlled but has unbounded propagation
    d = [[0 if i == j else "inf" for j in range(4)] for i in range(4)]
    sp = CoarseSpace.from_metric(d, [0])
    m = uniform_module(sp, 1)
    swap = np.eye(4)[[2, 3, 0, 1]]
    chk = ql_controlled_isometry_check(BlockOperator(m, m, swap))
    assert not chk.ok and chk.witness is not None
    assert chk.witness_norm == pytest.approx(1.0)
