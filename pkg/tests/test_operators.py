from __future__ import annotations

import itertools

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from roebench.errors import AtomLimitExceeded, NotControlledOperator
from roebench.generators import UNIT_ALPHABET, random_finite_propagation, random_module, random_space
from roebench.geomodule import GeoModule, uniform_module
from roebench.operators import (
    BlockOperator,
    ad,
    ad_witness,
    analyze,
    compose_support_bound_check,
    local_rank_profile,
    operator_norm,
    point_support,
    properness_equivalence_check,
    propagation_scale,
    ql_arithmetic_check,
    ql_at,
    ql_bounds_at,
    ql_componentwise,
    ql_profile,
    random_operator,
    support,
    trunc_profile,
    truncate,
)
from roebench.relations import contains
from roebench.spaces import UNBOUNDED, Partition


# -- independent oracles -------------------------------------------------------


def power_norm(m: np.ndarray, iters: int = 3000) -> float:
    if not np.any(m):
        return 0.0
    v = np.random.default_rng(1).standard_normal(m.shape[1]) + 0j
    for _ in range(iters):
        w = m.conj().T @ (m @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
    return float(np.linalg.norm(m @ v))


def sympy_rank(m: np.ndarray) -> int:
    ints = [[sympy.Integer(int(round(z.real))) + sympy.I * sympy.Integer(int(round(z.imag))) for z in row] for row in m]
    return sympy.Matrix(ints).rank() if m.size else 0


def brute_ql(t: BlockOperator, e) -> float:
    """Max over all pairs of measurable sets, separation checked atom by atom."""
    dom, cod = t.domain, t.codomain
    best = 0.0
    for ka in range(1, dom.n_atoms + 1):
        for A in itertools.combinations(range(dom.n_atoms), ka):
            grown = e.image_mask(dom.union_mask(A))
            far = [b for b in range(cod.n_atoms) if not (cod.atom_masks[b] & grown)]
            for kb in range(1, len(far) + 1):
                for B in itertools.combinations(far, kb):
                    sub = t.matrix[np.ix_(cod.coords_of_atoms(B), dom.coords_of_atoms(A))]
                    if sub.size:
                        best = max(best, np.linalg.svd(sub, compute_uv=False)[0])
    return float(best)


# -- examples ----------------------------------------------------------------------


def test_norm_examples():
    assert operator_norm(np.diag([3.0, 1.0])) == pytest.approx(3.0)
    assert operator_norm(np.array([[0, 2], [0, 0]])) == pytest.approx(2.0)


def test_corner_entry(line4):
    m = uniform_module(line4, 1)
    mat = np.zeros((4, 4), dtype=complex)
    mat[3, 0] = 1
    t = BlockOperator(m, m, mat)
    assert support(t).atoms.pairs() == [(3, 0)]
    assert propagation_scale(t) == 3
    assert ql_profile(t) == (1.0, 1.0, 1.0, 0.0)
    assert trunc_profile(t).values == (1.0, 1.0, 1.0, 0.0)


def test_support_examples(line4, pair2x2):
    m = uniform_module(line4, 1)
    ident = BlockOperator.identity(m)
    assert contains(m.discreteness_gauge, point_support(ident))
    assert not support(BlockOperator.zero(m)).atoms
    assert propagation_scale(BlockOperator(m, m, np.diag([1, 2, 3, 4]))) == 0
    tri = np.eye(4) + np.eye(4, k=1) + np.eye(4, k=-1)
    assert propagation_scale(BlockOperator(m, m, tri)) == 1
    mp = uniform_module(pair2x2, 1)
    mat = np.zeros((4, 4))
    mat[2, 0] = 1
    assert propagation_scale(BlockOperator(mp, mp, mat)) == UNBOUNDED


def test_properness_examples(line4, pair2x2):
    m = uniform_module(line4, 1)
    rng = np.random.default_rng(0)
    assert properness_equivalence_check(random_operator(rng, m)).proper
    mp = uniform_module(pair2x2, 1)
    assert properness_equivalence_check(BlockOperator.zero(mp)).proper
    # rows 0,1 receive from both components
    mat = np.zeros((4, 4))
    mat[0, 0] = mat[1, 2] = 1
    chk = properness_equivalence_check(BlockOperator(mp, mp, mat))
    assert not chk.proper and chk.agree


def test_local_ranks(line4):
    m = GeoModule(line4, Partition.singletons(4), [1, 2, 3, 0])
    ranks = local_rank_profile(BlockOperator.identity(m))
    assert ranks.left == m.dims == ranks.right
    v = np.arange(1, m.D + 1)
    ranks = local_rank_profile(BlockOperator(m, m, np.outer(v, v)))
    assert max(ranks.left) <= 1 and max(ranks.right) <= 1


def test_support_bound_identity(line4, rng):
    m = uniform_module(line4, 2)
    t = random_operator(rng, m)
    chk = compose_support_bound_check(t, BlockOperator.identity(m))
    assert chk.ok and chk.adjoint_ok and chk.sum_ok


def test_ad_identity_and_permutation(line4):
    m = uniform_module(line4, 1)
    rng = np.random.default_rng(3)
    x = random_finite_propagation(rng, m, 1)
    res = ad(BlockOperator.identity(m), x)
    assert np.allclose(res.operator.matrix, x.matrix)
    assert res.achieved_scale <= res.predicted_scale
    # reflection x -> 3 - x is a controlled bijection
    perm = BlockOperator(m, m, np.eye(4)[::-1])
    res = ad(perm, x)
    assert res.contained and res.achieved_scale <= res.predicted_scale


def test_ad_rank_one(line4):
    m = uniform_module(line4, 2)
    mat = np.zeros((8, 8))
    mat[0, 2] = 1  # |e_0><e_2|: atom 0 to atom 1
    x = BlockOperator(m, m, mat)
    tmat = np.zeros((8, 8))
    tmat[6, 0] = tmat[4, 2] = 1  # atom 0 -> atom 3, atom 1 -> atom 2
    res = ad(BlockOperator(m, m, tmat), x)
    assert support(res.operator).atoms.pairs() == [(3, 2)]


def test_ad_rejects_uncontrolled(pair2x2):
    mp = uniform_module(pair2x2, 1)
    mat = np.zeros((4, 4))
    mat[0, 0] = mat[2, 1] = 1
    t = BlockOperator(mp, mp, mat)
    with pytest.raises(NotControlledOperator):
        ad(t, BlockOperator.identity(mp))
    w = ad_witness(t)
    assert w.x_scale != UNBOUNDED and w.conjugate_scale == UNBOUNDED
    assert ad_witness(BlockOperator.identity(mp)) is None


def test_ql_arithmetic_examples(line4, rng):
    m = uniform_module(line4, 1)
    s = random_operator(rng, m)
    lam = BlockOperator.identity(m).scaled(2 - 1j)
    chk = ql_arithmetic_check(s, lam)
    assert chk.ok
    # lam has zero ql, so the bound is ε_s(i)|λ|
    es = ql_profile(s)
    for row in chk.rows:
        assert row.rhs == pytest.approx(es[row.scale] * abs(2 - 1j))
    a = random_finite_propagation(rng, m, 1)
    b = random_finite_propagation(rng, m, 1)
    row = ql_arithmetic_check(a, b).rows[1]
    assert row.lhs == pytest.approx(0.0, abs=1e-12)


def test_atom_limit(rng):
    sp = random_space(rng, 6)
    m = uniform_module(sp, 1)
    t = random_operator(rng, m)
    with pytest.raises(AtomLimitExceeded):
        ql_at(t, sp.ladder[0], atom_limit=3)
    rep = analyze(t, atom_limit=3)
    assert rep.ql_mode == "bounds"


# -- properties against the oracles --------------------------------------------


def _instance(seed: int, max_points: int = 5):
    rng = np.random.default_rng(seed)
    sp = random_space(rng, int(rng.integers(1, max_points + 1)), components=int(rng.integers(1, 3)))
    m = random_module(rng, sp, max_dim=2)
    alphabet = UNIT_ALPHABET if rng.random() < 0.5 else None
    return rng, sp, m, random_operator(rng, m, density=float(rng.uniform(0.2, 0.9)), alphabet=alphabet)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_norm_matches_power_iteration(seed):
    _, _, _, t = _instance(seed)
    assert t.norm == pytest.approx(power_norm(t.matrix), rel=1e-6, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_local_rank_matches_sympy(seed):
    rng = np.random.default_rng(seed)
    sp = random_space(rng, int(rng.integers(1, 5)))
    m = random_module(rng, sp, max_dim=3)
    t = random_operator(rng, m, alphabet=UNIT_ALPHABET)
    ranks = local_rank_profile(t)
    for b in range(m.n_atoms):
        assert ranks.left[b] == sympy_rank(t.matrix[m.atom_slice(b), :])
    for a in range(m.n_atoms):
        assert ranks.right[a] == sympy_rank(t.matrix[:, m.atom_slice(a)])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ql_exact_matches_brute_force(seed):
    _, sp, m, t = _instance(seed)
    for i, e in enumerate(sp.ladder):
        exact = ql_at(t, e)
        assert exact == pytest.approx(brute_ql(t, e), abs=1e-9)
        b = ql_bounds_at(t, e)
        assert b.lower - 1e-9 <= exact <= b.upper + 1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_profile_invariants(seed):
    _, sp, m, t = _instance(seed)
    ql = ql_profile(t)
    tr = trunc_profile(t).values
    p = propagation_scale(t)
    for i in sp.scales:
        if i:
            assert ql[i] <= ql[i - 1] + 1e-12
            assert tr[i] <= tr[i - 1] + 1e-12
        # ε_t(i) ≤ trunc(i): a separated pair sees nothing of the truncated part
        assert ql[i] <= tr[i] + 1e-9
        if p != UNBOUNDED and i >= p:
            assert ql[i] == 0 and tr[i] == 0
        assert propagation_scale(truncate(t, i)) <= i


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_support_laws(seed):
    rng, sp, m, t = _instance(seed)
    s = random_operator(rng, m, density=0.5)
    chk = compose_support_bound_check(t, s)
    assert chk.ok and chk.adjoint_ok and chk.sum_ok
    assert analyze(t).properness.agree


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ql_arithmetic_random(seed):
    rng, sp, m, t = _instance(seed, max_points=4)
    s = random_operator(rng, m)
    assert ql_arithmetic_check(s, t).ok


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_componentwise_ql_without_cross_blocks(seed):
    rng, sp, m, t = _instance(seed)
    comps = sp.components()
    mat = t.matrix.copy()
    for b in range(m.n_atoms):
        for a in range(m.n_atoms):
            if comps.block_of(min(m.atoms.blocks[b])) != comps.block_of(min(m.atoms.blocks[a])):
                mat[m.atom_slice(b), m.atom_slice(a)] = 0
    t = t.with_matrix(mat)
    for e in sp.ladder:
        assert ql_componentwise(t, e) == pytest.approx(ql_at(t, e), abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ad_support_bound(seed):
    rng, sp, m, _ = _instance(seed)
    t = random_finite_propagation(rng, m)
    x = random_finite_propagation(rng, m)
    res = ad(t, x)
    assert res.contained
    assert res.achieved_scale <= res.predicted_scale
