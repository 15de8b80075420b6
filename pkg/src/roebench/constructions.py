"""Explicit constructions on block operators.

Covering isometries of coarse maps, covers of one map being close, band
decompositions, block-diagonal conditional expectations, commutants,
approximate units of projections, component decompositions and the 2x2
unitary comparing two covering isometries.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import networkx as nx
import numpy as np
import scipy.sparse as sp_sparse

from .errors import (
    AmplenessInsufficient,
    ComponentsNotMeasurable,
    DomainNotCovered,
    GroundSetMismatch,
    MeasurabilityError,
    NotControlledOperator,
    NotIsometries,
    NotIsometry,
    SurjectivityMissing,
    UnboundedPropagation,
)
from .geomodule import GeoModule, faithful_partition, refine_to_discrete_partition
from .maps import ClosenessCertificate, ControlledMap, controlled_witness, relation_closeness
from .operators import (
    BlockOperator,
    operator_norm,
    point_support,
    propagation_scale,
)
from .relations import FiniteRelation, compose, compose_all, members, transpose
from .spaces import UNBOUNDED, Partition, Scale, max_scale

KINDS = ("partial-isometry", "isometry", "coisometry", "unitary")


# -- covering isometries --------------------------------------------------------


@dataclass(frozen=True)
class CoverResult:
    operator: BlockOperator
    kind: str
    cover_certificate: ClosenessCertificate
    # phi[i] = index of the target block receiving source block i (None if unused)
    phi: tuple[int | None, ...]
    source_blocks: Partition
    target_blocks: tuple[frozenset[int], ...]
    # (source coordinate, target coordinate) pairs of the basis matching
    injections: tuple[tuple[int, int], ...]
    # ladder index used to thicken the representative so its domain meets every source block
    domain_scale: int
    identity_error: float


def _kind_error(mat: np.ndarray, kind: str) -> float:
    tt = mat.conj().T @ mat
    ttc = mat @ mat.conj().T
    if kind == "partial-isometry":
        return operator_norm(tt @ tt - tt)
    if kind == "isometry":
        return operator_norm(tt - np.eye(tt.shape[0]))
    if kind == "coisometry":
        return operator_norm(ttc - np.eye(ttc.shape[0]))
    return max(operator_norm(tt - np.eye(tt.shape[0])), operator_norm(ttc - np.eye(ttc.shape[0])))


def _thicken_to_cover(f: ControlledMap, block_masks: Sequence[int]) -> tuple[FiniteRelation, int]:
    """Least ``s`` such that the domain of ``R ∘ E_s`` meets every block."""
    X = f.source
    for s, e in enumerate(X.ladder):
        r = compose(f.relation, e)
        dom = r.domain_mask()
        if all(m & dom for m in block_masks):
            return r, s
    raise DomainNotCovered("map is not coarsely everywhere defined: some source block stays outside every thickened domain")


def cover(f: ControlledMap, m_x: GeoModule, m_y: GeoModule, kind: str = "isometry", seed: int | None = None) -> CoverResult:
    """Build an operator of the requested kind whose support is close to ``f``.

    Source blocks come from a discrete partition all of whose blocks carry a
    nonzero summand.  Each block is routed to a target block and its basis is
    injected into the target basis (``partial-isometry``/``isometry``), or the
    target basis is injected into the routed source bases and the adjoint
    taken (``coisometry``/``unitary``).  ``seed`` shuffles tie-breaking and
    slot order.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown cover kind {kind!r}; expected one of {KINDS}")
    if m_x.space is not f.source or m_y.space is not f.target:
        raise GroundSetMismatch("modules must live on the source and target of the map")
    rng = np.random.default_rng(seed) if seed is not None else None
    xparts = faithful_partition(m_x)
    xmasks = xparts.masks
    if kind in ("isometry", "unitary"):
        rel, dscale = _thicken_to_cover(f, xmasks)
    else:
        rel, dscale = f.relation, 0
    dom = rel.domain_mask()
    used = [i for i, m in enumerate(xmasks) if m & dom]
    images = {i: rel.image_mask(xmasks[i]) for i in used}
    if kind in ("partial-isometry", "isometry"):
        phi, tblocks, inj = _route_injective(f, m_x, m_y, xparts, used, images, rng)
    else:
        if not f.coarsely_surjective:
            raise SurjectivityMissing("map is not coarsely surjective: its image is not coarsely dense")
        phi, tblocks, inj = _route_surjective(f, m_x, m_y, xparts, used, images, rng, kind)
    mat = np.zeros((m_y.D, m_x.D), dtype=complex)
    fan = Counter(tc for _, tc in inj)
    for sc, tc in inj:
        mat[tc, sc] = 1.0 / np.sqrt(fan[tc])
    t = BlockOperator(m_x, m_y, mat, 0.0)
    cert = relation_closeness(f.source, f.target, f.relation, point_support(t))
    return CoverResult(t, kind, cert, tuple(phi), xparts, tuple(tblocks), tuple(inj), dscale, _kind_error(mat, kind))


def _ordered(items: list, rng) -> list:
    if rng is None:
        return items
    return [items[k] for k in rng.permutation(len(items))]


def _route_injective(f, m_x, m_y, xparts, used, images, rng):
    Y = f.target
    targets = list(m_y.nontrivial)
    tmasks = {j: m_y.atom_masks[j] for j in targets}
    cap = {j: m_y.dims[j] for j in targets}
    load = {j: 0 for j in targets}
    phi: list[int | None] = [None] * len(xparts)
    routed: dict[int, list[int]] = {j: [] for j in targets}
    for i in used:
        need = sum(m_x.dims[a] for a in m_x.atoms_in(xparts.blocks[i]))
        first = None
        for e in Y.ladder:
            elig = _ordered([j for j in targets if images[i] & e.image_mask(tmasks[j])], rng)
            if not elig:
                continue
            if first is None:
                first = elig[0]
            fit = next((j for j in elig if load[j] + need <= cap[j]), None)
            if fit is not None:
                phi[i] = fit
                load[fit] += need
                routed[fit].append(i)
                break
        else:
            if first is None:
                raise AmplenessInsufficient(f"near source block {i}", need, 0)
            raise AmplenessInsufficient(first, load[first] + need, cap[first])
    inj = []
    for j in targets:
        slots = list(range(cap[j]))
        if rng is not None:
            slots = [int(s) for s in rng.permutation(cap[j])]
        k = 0
        for i in routed[j]:
            for sc in m_x.coords(xparts.blocks[i]):
                inj.append((int(sc), m_y.offsets[j] + slots[k]))
                k += 1
    inj.sort()
    return phi, [members(tmasks[j]) for j in targets], inj


def _merge_trivial_blocks(m: GeoModule, p: Partition) -> Partition:
    """Fold blocks of dimension zero into the first carrying block of their component."""
    comps = m.space.components()
    dim = [sum(m.dims[a] for a in m.atoms_in(b)) for b in p.blocks]
    merged = [set(b) for b in p.blocks]
    keep = [True] * len(merged)
    for j, b in enumerate(p.blocks):
        if dim[j]:
            continue
        c = comps.block_of(min(b))
        host = next((k for k, bk in enumerate(p.blocks) if dim[k] and comps.block_of(min(bk)) == c), None)
        if host is not None:
            merged[host] |= b
            keep[j] = False
    return Partition(p.n, tuple(frozenset(b) for b, k in zip(merged, keep) if k))


def _route_surjective(f, m_x, m_y, xparts, used, images, rng, kind):
    Y = f.target
    seeds = [members(images[i]) for i in used]
    yparts = _merge_trivial_blocks(m_y, refine_to_discrete_partition(m_y, seeds))
    ymasks = yparts.masks
    phi: list[int | None] = [None] * len(xparts)
    # surjectivity first: every target block receives a block whose image it contains
    order = _ordered(list(used), rng)
    for j, bm in enumerate(ymasks):
        owner = next(i for i in order if phi[i] is None and not (images[i] & ~bm))
        phi[owner] = j
    for i in used:
        if phi[i] is not None:
            continue
        for e in Y.ladder:
            elig = _ordered([j for j, bm in enumerate(ymasks) if images[i] & e.image_mask(bm)], rng)
            if elig:
                phi[i] = elig[0]
                break
    inj = []
    for j, b in enumerate(yparts.blocks):
        groups = [m_x.coords(xparts.blocks[i]) for i in used if phi[i] == j]
        groups = [[int(c) for c in g] for g in groups if len(g)]
        if rng is not None:
            groups = [[g[k] for k in rng.permutation(len(g))] for g in _ordered(groups, rng)]
        tgt = [int(c) for c in m_y.coords(b)]
        n_src = sum(len(g) for g in groups)
        if n_src < len(tgt):
            raise AmplenessInsufficient(j, len(tgt), n_src, side="source")
        if kind == "unitary" and n_src != len(tgt):
            raise AmplenessInsufficient(j, n_src, len(tgt), side="target")
        # deal source coordinates round robin so every routed block is touched
        dealt = [g[r] for r in range(max(map(len, groups), default=0)) for g in groups if r < len(g)]
        for l, tc in enumerate(tgt):
            inj.append((dealt[l], tc))
        if tgt:
            # blocks that got nothing share the last target vector
            touched = set(dealt[: len(tgt)])
            for g in groups:
                if not touched & set(g):
                    inj.append((g[0], tgt[-1]))
    return phi, list(yparts.blocks), inj


@dataclass(frozen=True)
class CloseCovers:
    # scales[(i, j)] = propagation scale of t_i t_j*
    scales: dict
    # predicted[(i, j)] = ladder scale of S_i ∘ Ẽ ∘ S_jᵀ
    predicted: dict
    ok: bool


def covers_are_close(c0, c1) -> CloseCovers:
    """Propagation of ``t_i t_j*`` for two operators covering the same map."""
    ts = [c.operator if isinstance(c, CoverResult) else c for c in (c0, c1)]
    if ts[0].domain is not ts[1].domain or ts[0].codomain is not ts[1].codomain:
        raise GroundSetMismatch("covers act between different modules")
    g = ts[0].domain.nondegeneracy_gauge
    Y = ts[0].codomain.space
    sups = [point_support(t) for t in ts]
    scales, predicted = {}, {}
    for i in (0, 1):
        for j in (0, 1):
            scales[(i, j)] = propagation_scale(ts[i] @ ts[j].adjoint())
            predicted[(i, j)] = Y.scale_of(compose_all(sups[i], g, transpose(sups[j])))
    ok = all(s != UNBOUNDED and s <= predicted[k] for k, s in scales.items())
    return CloseCovers(scales, predicted, ok)


# -- band decomposition ----------------------------------------------------------


@dataclass(frozen=True)
class BandDecomposition:
    pieces: tuple[BlockOperator, ...]
    # (row block, column block) -> color
    coloring: dict
    max_degree: int


def _block_coords(m: GeoModule, p: Partition) -> list[np.ndarray]:
    try:
        return [m.coords(b) for b in p.blocks]
    except MeasurabilityError as exc:
        raise MeasurabilityError(f"partition blocks must be unions of atoms: {exc}", exc.straddling) from exc


def band_decompose(t: BlockOperator, p: Partition | None = None) -> BandDecomposition:
    """Split ``t`` into pieces each having at most one nonzero block per block row and column."""
    if propagation_scale(t) == UNBOUNDED:
        raise UnboundedPropagation("band decomposition needs finite propagation")
    if p is None:
        p = t.codomain.atoms
    rows = _block_coords(t.codomain, p)
    cols = _block_coords(t.domain, p)
    nz = []
    for b, rc in enumerate(rows):
        for a, cc in enumerate(cols):
            blk = t.matrix[np.ix_(rc, cc)]
            if blk.size and operator_norm(blk) > t.tolerance:
                nz.append((b, a))
    g = nx.Graph()
    g.add_nodes_from(nz)
    by_row: dict[int, list] = {}
    by_col: dict[int, list] = {}
    for v in nz:
        by_row.setdefault(v[0], []).append(v)
        by_col.setdefault(v[1], []).append(v)
    for group in list(by_row.values()) + list(by_col.values()):
        for k, u in enumerate(group):
            for w in group[k + 1:]:
                g.add_edge(u, w)
    coloring = nx.greedy_color(g, strategy=lambda graph, colors: sorted(graph)) if nz else {}
    ncolors = max(coloring.values(), default=-1) + 1
    mats = [np.zeros_like(t.matrix) for _ in range(ncolors)]
    for (b, a), c in coloring.items():
        ix = np.ix_(rows[b], cols[a])
        mats[c][ix] = t.matrix[ix]
    pieces = tuple(t.with_matrix(m) for m in mats)
    maxdeg = max((d for _, d in g.degree()), default=0)
    return BandDecomposition(pieces, dict(sorted(coloring.items())), maxdeg)


# -- conditional expectation and commutant ------------------------------------------


def conditional_expectation(t: BlockOperator, p: Partition | None = None) -> BlockOperator:
    """``Σ χ_{A_i} t χ_{A_i}`` over the blocks of ``p`` (default: the atoms)."""
    if p is None:
        p = t.codomain.atoms
    rows = _block_coords(t.codomain, p)
    cols = _block_coords(t.domain, p)
    out = np.zeros_like(t.matrix)
    for rc, cc in zip(rows, cols):
        ix = np.ix_(rc, cc)
        out[ix] = t.matrix[ix]
    return t.with_matrix(out)


@dataclass(frozen=True)
class Commutant:
    dimension: int
    # orthonormal basis of the solution space, as D x D matrices
    basis: tuple[np.ndarray, ...]
    # χ of the blocks carrying a nonzero summand: the expected basis
    block_projections: tuple[np.ndarray, ...]
    expected: int


def _generators(m: GeoModule, p: Partition) -> list[tuple[int, int]]:
    """Matrix units ``E_kk``, ``E_k,k+1``, ``E_k+1,k`` inside each block; they generate ``⊕ B(H_A)``."""
    gens = []
    for cc in _block_coords(m, p):
        cc = list(cc)
        for k, r in enumerate(cc):
            gens.append((r, r))
            if k + 1 < len(cc):
                gens.append((r, cc[k + 1]))
                gens.append((cc[k + 1], r))
    return gens


def commutant_dimension(p: Partition | None, m: GeoModule, tol: float = 1e-9) -> Commutant:
    """Solve ``z g = g z`` for all generators ``g`` of the block-diagonal algebra."""
    if p is None:
        p = m.atoms
    D = m.D
    blocks = _block_coords(m, p)
    projections = []
    for cc in blocks:
        if len(cc):
            z = np.zeros((D, D))
            z[cc, cc] = 1.0
            projections.append(z)
    if D == 0:
        return Commutant(0, (), (), 0)
    eye = sp_sparse.identity(D, format="csr")
    gram = sp_sparse.csr_matrix((D * D, D * D))
    for r, c in _generators(m, p):
        g = sp_sparse.csr_matrix(([1.0], ([r], [c])), shape=(D, D))
        # vec(z g - g z) = (gᵀ ⊗ 1 - 1 ⊗ g) vec(z) with column-major vec
        op = sp_sparse.kron(g.T, eye) - sp_sparse.kron(eye, g)
        gram = gram + (op.T @ op)
    w, v = np.linalg.eigh(gram.toarray())
    null = v[:, w < tol]
    basis = tuple(null[:, k].reshape((D, D), order="F") for k in range(null.shape[1]))
    return Commutant(len(basis), basis, tuple(projections), len(projections))


# -- approximate unit ----------------------------------------------------------------


@dataclass(frozen=True)
class Anulus:
    component: int
    index: int
    atoms: tuple[int, ...]
    neighbourhood: tuple[int, ...]
    kept_rank: int
    residual: float


@dataclass(frozen=True)
class ApproxUnitWitness:
    # lam[a] = orthonormal columns spanning the chosen subspace of block a
    lam: tuple[np.ndarray, ...]
    p_lambda: BlockOperator
    certified_bound: float
    measured: float
    even_error: float
    odd_error: float
    anuli: tuple[Anulus, ...]
    local_ranks: tuple[int, ...]
    gauge: FiniteRelation = field(repr=False)


def _orth(cols: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    if cols.shape[1] == 0:
        return cols
    u, s, _ = np.linalg.svd(cols, full_matrices=False)
    return u[:, s > tol * max(1.0, s[0] if s.size else 0.0)]


def _atom_classes(m: GeoModule, e: FiniteRelation) -> list[list[int]]:
    """Atoms not separated by any power of ``e``: connected pieces of the atom graph."""
    n = m.n_atoms
    seen = [False] * n
    classes = []
    for a in range(n):
        if seen[a]:
            continue
        cur = m.atom_masks[a]
        while True:
            nxt = m.saturate(e.image_mask(cur))
            if nxt == cur:
                break
            cur = nxt
        cls = [b for b in range(n) if m.atom_masks[b] & cur]
        for b in cls:
            seen[b] = True
        classes.append(cls)
    return classes


def approximate_unit(t: BlockOperator, epsilon: float) -> ApproxUnitWitness:
    """A block-diagonal projection ``p`` with ``‖t - p t‖`` small.

    Atoms are grouped into classes under the gauge ``E`` (atom squares joined
    with the support of ``t``); each class is cut into concentric anuli by
    repeated thickening.  On every anulus the range of ``t`` is truncated at
    accuracy ``epsilon`` and projected atom by atom.  Saturated
    neighbourhoods of anuli two or more steps apart are disjoint, so the even
    and odd anuli each contribute at most ``epsilon``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    m = t.codomain
    if t.domain is not m:
        raise GroundSetMismatch("approximate units act on a single module")
    if propagation_scale(t) == UNBOUNDED:
        raise UnboundedPropagation("approximate unit needs an operator of finite propagation")
    s = point_support(t)
    e = m.discreteness_gauge | s | transpose(s) | m.space.diagonal()
    cols: list[list[np.ndarray]] = [[] for _ in range(m.n_atoms)]
    anuli = []
    parity = np.zeros(m.D, dtype=int)
    for ell, cls in enumerate(_atom_classes(m, e)):
        cls_mask = m.union_mask(cls)
        prev = 0
        cur = m.atom_masks[min(cls)]
        n = 0
        while True:
            ring = cur & ~prev
            ring_atoms = [a for a in cls if m.atom_masks[a] & ring]
            hood = m.saturate(e.image_mask(ring))
            hood_atoms = [a for a in cls if m.atom_masks[a] & hood]
            rc, cc = m.coords_of_atoms(hood_atoms), m.coords_of_atoms(ring_atoms)
            parity[cc] = n % 2
            block = t.matrix[np.ix_(rc, cc)]
            kept, resid = 0, 0.0
            if block.size:
                u, sv, _ = np.linalg.svd(block, full_matrices=False)
                keep = sv > epsilon
                kept = int(keep.sum())
                resid = float(sv[kept]) if kept < sv.size else 0.0
                uk = np.zeros((m.D, kept), dtype=complex)
                uk[rc, :] = u[:, keep]
                for a in hood_atoms:
                    cols[a].append(uk[m.atom_slice(a), :])
            anuli.append(Anulus(ell, n, tuple(ring_atoms), tuple(hood_atoms), kept, resid))
            if cur == cls_mask:
                break
            n += 1
            grown = cur
            for _ in range(2 * n + 1):
                grown = e.image_mask(grown)
            prev, cur = cur, m.saturate(grown) & cls_mask
    lam = []
    p = np.zeros((m.D, m.D), dtype=complex)
    for a in range(m.n_atoms):
        stack = np.concatenate(cols[a], axis=1) if cols[a] else np.zeros((m.dims[a], 0), dtype=complex)
        q = _orth(stack)
        lam.append(q)
        sl = m.atom_slice(a)
        p[sl, sl] = q @ q.conj().T
    pl = BlockOperator(m, m, p, 0.0)
    resid = t.matrix - p @ t.matrix
    even = np.diag((parity == 0).astype(float))
    odd = np.eye(m.D) - even
    return ApproxUnitWitness(
        lam=tuple(lam),
        p_lambda=pl,
        certified_bound=10.0 * epsilon,
        measured=operator_norm(resid),
        even_error=operator_norm(resid @ even),
        odd_error=operator_norm(resid @ odd),
        anuli=tuple(anuli),
        local_ranks=tuple(q.shape[1] for q in lam),
        gauge=e,
    )


# -- components -------------------------------------------------------------------------


@dataclass(frozen=True)
class ComponentDecomposition:
    pieces: tuple[BlockOperator, ...]
    components: Partition
    piece_scales: tuple[Scale, ...]
    common_scale: Scale
    propagation: Scale
    cross_blocks_zero: bool
    reconstructs: bool


def component_decompose(t: BlockOperator) -> ComponentDecomposition:
    """Compress ``t`` to each coarse component and compare with ``t``."""
    m = t.codomain
    if t.domain is not m:
        raise GroundSetMismatch("component decomposition acts on a single module")
    comps = m.space.components()
    try:
        coords = [m.coords(c) for c in comps.blocks]
    except MeasurabilityError as exc:
        raise ComponentsNotMeasurable(f"components are not measurable: {exc}") from exc
    pieces = []
    total = np.zeros_like(t.matrix)
    for cc in coords:
        mat = np.zeros_like(t.matrix)
        ix = np.ix_(cc, cc)
        mat[ix] = t.matrix[ix]
        total += mat
        pieces.append(t.with_matrix(mat))
    scales = tuple(propagation_scale(pc) for pc in pieces)
    cross = t.matrix - total
    return ComponentDecomposition(
        pieces=tuple(pieces),
        components=comps,
        piece_scales=scales,
        common_scale=max_scale(*scales),
        propagation=propagation_scale(t),
        cross_blocks_zero=bool(operator_norm(cross) <= t.tolerance),
        reconstructs=bool(np.array_equal(total, t.matrix)),
    )


# -- K-theory unitary -----------------------------------------------------------------------


@dataclass(frozen=True)
class KUnitary:
    u: np.ndarray
    # propagation scales of the four blocks [[1 - t0t0*, t0t1*], [t1t0*, 1 - t1t1*]]
    block_scales: tuple[Scale, Scale, Scale, Scale]
    self_adjoint_error: float
    involution_error: float
    unitary_error: float
    conjugation_error: float
    ok: bool


def ktheory_unitary(c0, c1, samples: int = 10, seed: int = 0, atol: float = 1e-10) -> KUnitary:
    """The self-adjoint unitary exchanging ``Ad(t0)`` and ``Ad(t1)`` on the 2x2 amplification."""
    t0, t1 = (c.operator if isinstance(c, CoverResult) else c for c in (c0, c1))
    if t0.domain is not t1.domain or t0.codomain is not t1.codomain:
        raise GroundSetMismatch("isometries act between different modules")
    for name, t in (("t0", t0), ("t1", t1)):
        err = operator_norm(t.matrix.conj().T @ t.matrix - np.eye(t.domain.D))
        if err > atol:
            raise NotIsometries(f"{name} is not an isometry (‖t*t - 1‖ = {err:.3g})")
    a0, a1 = t0.matrix, t1.matrix
    DY, DX = a0.shape
    one = np.eye(DY)
    blocks = [one - a0 @ a0.conj().T, a0 @ a1.conj().T, a1 @ a0.conj().T, one - a1 @ a1.conj().T]
    u = np.block([[blocks[0], blocks[1]], [blocks[2], blocks[3]]])
    ident = np.eye(2 * DY)
    m_y = t0.codomain
    scales = tuple(propagation_scale(BlockOperator(m_y, m_y, b, 1e-12)) for b in blocks)
    rng = np.random.default_rng(seed)
    conj = 0.0
    zero = np.zeros((DY, DY))
    for _ in range(samples):
        x = rng.standard_normal((DX, DX)) + 1j * rng.standard_normal((DX, DX))
        al0 = np.block([[a0 @ x @ a0.conj().T, zero], [zero, zero]])
        al1 = np.block([[zero, zero], [zero, a1 @ x @ a1.conj().T]])
        conj = max(conj, operator_norm(u @ al0 @ u.conj().T - al1))
    sa = operator_norm(u - u.conj().T)
    inv = operator_norm(u @ u - ident)
    un = max(operator_norm(u.conj().T @ u - ident), operator_norm(u @ u.conj().T - ident))
    ok = max(sa, inv, un, conj) < atol and all(s != UNBOUNDED for s in scales)
    return KUnitary(u, scales, sa, inv, un, conj, ok)


# -- quasi-local controlled isometries ----------------------------------------------------


@dataclass(frozen=True)
class QLIsometryCheck:
    ok: bool
    propagation_scale: Scale
    # (A', A): A' is separated from A at every scale and ‖χ_{A'} t χ_A‖ = 1
    witness: tuple[frozenset[int], frozenset[int]] | None
    witness_norm: float | None


def ql_controlled_isometry_check(t: BlockOperator, atol: float = 1e-10) -> QLIsometryCheck:
    """A controlled isometry has finite propagation, or else a norm-one separated pair exists."""
    m = t.domain
    if t.codomain is not m:
        raise GroundSetMismatch("check applies to operators on one module")
    err = operator_norm(t.matrix.conj().T @ t.matrix - np.eye(m.D))
    if err > atol:
        raise NotIsometry(f"operator is not an isometry (‖t*t - 1‖ = {err:.3g})")
    s = point_support(t)
    if controlled_witness(m.space, m.space, s) is not None:
        raise NotControlledOperator("operator support is not a controlled relation")
    prop = propagation_scale(t)
    if prop != UNBOUNDED:
        return QLIsometryCheck(True, prop, None, None)
    emax = m.space.e_max
    for a in m.nontrivial:
        am = m.atom_masks[a]
        far = m.saturate(s.image_mask(am))
        if far and not (far & emax.image_mask(am)):
            rows, cols = m.coords(members(far)), m.coords_of_atoms([a])
            nrm = operator_norm(t.matrix[np.ix_(rows, cols)])
            return QLIsometryCheck(False, prop, (members(far), members(am)), nrm)
    return QLIsometryCheck(False, prop, None, None)
