"""Block operators between geometric modules and their coarse analysis.

An operator ``t: H_X -> H_Y`` is a dense complex matrix in the canonical
block coordinates of its modules.  Its block ``(b, a)`` is ``χ_b t χ_a`` for a
target atom ``b`` and a source atom ``a``; a block is nonzero when its
spectral norm exceeds the zero tolerance ``τ``.

Propagation uses separation semantics: a nonzero block ``(b, a)`` lies
within a gauge ``E`` when ``b`` is not ``E``-separated from ``a``.  For
singleton atoms this is the same as ``b x a ⊆ E``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import AtomLimitExceeded, GroundSetMismatch, NotControlled, NotControlledOperator
from .geomodule import GeoModule
from .maps import check_controlled, controlled_witness
from .relations import FiniteRelation, bits, compose_all, contains, transpose
from .spaces import UNBOUNDED, CoarseSpace, Scale

DEFAULT_RELATIVE_TOLERANCE = 1e-12
DEFAULT_ATOM_LIMIT = 16


def operator_norm(m) -> float:
    """Largest singular value (``0`` for empty matrices)."""
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.linalg.svd(m, compute_uv=False)[0])


class BlockOperator:
    """A matrix ``t: H_X -> H_Y`` together with the modules it acts between."""

    def __init__(self, domain: GeoModule, codomain: GeoModule, matrix, tolerance: float | None = None):
        mat = np.array(matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape != (codomain.D, domain.D):
            raise GroundSetMismatch(f"matrix shape {mat.shape} does not match modules ({codomain.D}, {domain.D})")
        if not np.isfinite(mat).all():
            raise ValueError("operator entries must be finite")
        self.domain = domain
        self.codomain = codomain
        self.matrix = mat
        self._norm: float | None = None
        if tolerance is None:
            tolerance = DEFAULT_RELATIVE_TOLERANCE * self.norm
        if tolerance < 0:
            raise ValueError("tolerance must be nonnegative")
        self.tolerance = float(tolerance)
        self._block_norms: np.ndarray | None = None

    @classmethod
    def identity(cls, m: GeoModule, tolerance: float | None = None) -> BlockOperator:
        return cls(m, m, np.eye(m.D), tolerance)

    @classmethod
    def zero(cls, domain: GeoModule, codomain: GeoModule | None = None) -> BlockOperator:
        codomain = domain if codomain is None else codomain
        return cls(domain, codomain, np.zeros((codomain.D, domain.D)), 0.0)

    @property
    def norm(self) -> float:
        if self._norm is None:
            self._norm = operator_norm(self.matrix)
        return self._norm

    @property
    def space(self) -> CoarseSpace:
        """The common space of an operator acting on one coarse space."""
        if self.domain.space is not self.codomain.space:
            raise GroundSetMismatch("operator does not act on a single coarse space")
        return self.domain.space

    def with_matrix(self, matrix, tolerance: float | None = None) -> BlockOperator:
        return BlockOperator(self.domain, self.codomain, matrix, self.tolerance if tolerance is None else tolerance)

    def adjoint(self) -> BlockOperator:
        return BlockOperator(self.codomain, self.domain, self.matrix.conj().T, self.tolerance)

    @property
    def H(self) -> BlockOperator:
        return self.adjoint()

    def __add__(self, other: BlockOperator) -> BlockOperator:
        _same_modules(self, other)
        return BlockOperator(self.domain, self.codomain, self.matrix + other.matrix, min(self.tolerance, other.tolerance))

    def __sub__(self, other: BlockOperator) -> BlockOperator:
        _same_modules(self, other)
        return BlockOperator(self.domain, self.codomain, self.matrix - other.matrix, min(self.tolerance, other.tolerance))

    def __matmul__(self, other: BlockOperator) -> BlockOperator:
        if other.codomain is not self.domain:
            raise GroundSetMismatch("operators are not composable: middle modules differ")
        return BlockOperator(other.domain, self.codomain, self.matrix @ other.matrix, min(self.tolerance, other.tolerance))

    def scaled(self, c: complex) -> BlockOperator:
        return BlockOperator(self.domain, self.codomain, c * self.matrix, abs(c) * self.tolerance)

    def block(self, b: int, a: int) -> np.ndarray:
        return self.matrix[self.codomain.atom_slice(b), self.domain.atom_slice(a)]

    @property
    def block_norms(self) -> np.ndarray:
        """``‖χ_b t χ_a‖`` for every target atom ``b`` and source atom ``a``."""
        if self._block_norms is None:
            out = np.zeros((self.codomain.n_atoms, self.domain.n_atoms))
            for b in self.codomain.nontrivial:
                for a in self.domain.nontrivial:
                    blk = self.block(b, a)
                    if np.any(blk):
                        out[b, a] = operator_norm(blk)
            self._block_norms = out
        return self._block_norms

    def nonzero_blocks(self) -> list[tuple[int, int]]:
        bn = self.block_norms
        return [(int(b), int(a)) for b, a in zip(*np.nonzero(bn > self.tolerance))]

    def __repr__(self):
        return f"BlockOperator({self.codomain.D}x{self.domain.D}, tol={self.tolerance:g})"


def _same_modules(t: BlockOperator, s: BlockOperator) -> None:
    if t.domain is not s.domain or t.codomain is not s.codomain:
        raise GroundSetMismatch("operators act between different modules")


# -- supports and propagation -------------------------------------------------


@dataclass(frozen=True)
class Support:
    atoms: FiniteRelation   # over (codomain atoms) x (domain atoms)
    points: FiniteRelation  # ∪ b x a over nonzero blocks


def support(t: BlockOperator) -> Support:
    dom, cod = t.domain, t.codomain
    nz = t.nonzero_blocks()
    atoms = FiniteRelation.from_pairs(dom.atom_ground, cod.atom_ground, nz)
    rows = [0] * cod.space.n
    for b, a in nz:
        am = dom.atom_masks[a]
        for y in bits(cod.atom_masks[b]):
            rows[y] |= am
    return Support(atoms, FiniteRelation(dom.space.ground, cod.space.ground, rows))


def point_support(t: BlockOperator) -> FiniteRelation:
    return support(t).points


def _block_within(t: BlockOperator, b: int, a: int, e: FiniteRelation) -> bool:
    return bool(t.codomain.atom_masks[b] & e.image_mask(t.domain.atom_masks[a]))


def propagation_scale(t: BlockOperator) -> Scale:
    """Least ``i`` such that no nonzero block is ``E_i``-separated."""
    sp = t.space
    nz = t.nonzero_blocks()
    for i, e in enumerate(sp.ladder):
        if all(_block_within(t, b, a, e) for b, a in nz):
            return i
    return UNBOUNDED


def point_propagation_scale(t: BlockOperator) -> Scale:
    """Least ``i`` with the point-level support inside ``E_i`` (coarser for non-singleton atoms)."""
    return t.space.scale_of(point_support(t))


def truncate(t: BlockOperator, e: Union[int, FiniteRelation]) -> BlockOperator:
    """Keep exactly the blocks that are not separated by ``e`` (an index or a gauge)."""
    gauge = t.space.level(e) if isinstance(e, int) else e
    out = np.zeros_like(t.matrix)
    for b in t.codomain.nontrivial:
        for a in t.domain.nontrivial:
            if _block_within(t, b, a, gauge):
                sl = (t.codomain.atom_slice(b), t.domain.atom_slice(a))
                out[sl] = t.matrix[sl]
    return t.with_matrix(out)


@dataclass(frozen=True)
class TruncProfile:
    values: tuple[float, ...]
    # witness[i] = j ≤ i whose truncation attains values[i]
    witness: tuple[int, ...]


def trunc_profile(t: BlockOperator) -> TruncProfile:
    """Distance bound to ``E_i``-propagation operators via nested block truncations.

    Zeroing blocks can increase a norm, so the value at ``i`` is the best of the
    truncations at every ``j ≤ i`` (each has propagation at most ``i``).
    """
    vals, wit = [], []
    best, arg = np.inf, 0
    for i in t.space.scales:
        d = operator_norm(t.matrix - truncate(t, i).matrix)
        if d < best:
            best, arg = d, i
        vals.append(float(best))
        wit.append(arg)
    return TruncProfile(tuple(vals), tuple(wit))


# -- quasi-locality -------------------------------------------------------------


@dataclass(frozen=True)
class QLBounds:
    lower: float
    upper: float


def _thick_atoms(t: BlockOperator, e: FiniteRelation) -> list[int]:
    """Per source atom: mask of target atoms met by its ``e``-thickening."""
    cod = t.codomain
    out = []
    for am in t.domain.atom_masks:
        grown = e.image_mask(am)
        out.append(sum(1 << b for b, bm in enumerate(cod.atom_masks) if bm & grown))
    return out


def ql_at(t: BlockOperator, e: FiniteRelation, atom_limit: int = DEFAULT_ATOM_LIMIT) -> float:
    """Exact ``max ‖χ_{A'} t χ_A‖`` over measurable pairs with ``A'`` ``e``-separated from ``A``.

    Only maximal pairs matter: for each union ``A`` of source atoms take the
    largest separated ``A'``.  Pairs are deduplicated by ``A'``.
    """
    dom, cod = t.domain, t.codomain
    if dom.n_atoms > atom_limit:
        raise AtomLimitExceeded(f"exact quasi-locality needs at most {atom_limit} atoms, module has {dom.n_atoms}")
    src = [a for a in dom.nontrivial if t.block_norms[:, a].any()]
    tgt_all = sum(1 << b for b in cod.nontrivial)
    thick = _thick_atoms(t, e)
    n = len(src)
    reach = [0] * (1 << n)
    best = 0.0
    seen: set[int] = set()
    for mask in range(1, 1 << n):
        low = mask & -mask
        reach[mask] = reach[mask ^ low] | thick[src[low.bit_length() - 1]]
        far = tgt_all & ~reach[mask]
        if not far or far in seen:
            continue
        seen.add(far)
        # the largest source set separated from `far`
        cols_atoms = [a for a in src if not (thick[a] & far)]
        rows = cod.coords_of_atoms(list(bits(far)))
        cols = dom.coords_of_atoms(cols_atoms)
        sub = t.matrix[np.ix_(rows, cols)]
        if np.any(sub):
            best = max(best, operator_norm(sub))
    return best


def ql_bounds_at(t: BlockOperator, e: FiniteRelation) -> QLBounds:
    bn = t.block_norms
    sep = [(b, a) for b in t.codomain.nontrivial for a in t.domain.nontrivial if not _block_within(t, b, a, e)]
    vals = np.array([bn[b, a] for b, a in sep]) if sep else np.zeros(0)
    return QLBounds(float(vals.max(initial=0.0)), float(np.sqrt(np.sum(vals**2))))


def ql_profile(t: BlockOperator, mode: str = "exact", atom_limit: int = DEFAULT_ATOM_LIMIT):
    """Per-scale quasi-locality: floats in exact mode, :class:`QLBounds` in bounds mode."""
    ladder = t.space.ladder
    if mode == "exact":
        return tuple(ql_at(t, e, atom_limit) for e in ladder)
    if mode == "bounds":
        return tuple(ql_bounds_at(t, e) for e in ladder)
    raise ValueError(f"unknown mode {mode!r}")


def ql_componentwise(t: BlockOperator, e: FiniteRelation, atom_limit: int = DEFAULT_ATOM_LIMIT) -> float:
    """Quasi-locality restricted to bounded pairs: ``A`` and ``A'`` each inside one component."""
    sp = t.space
    comps = sp.components()
    dom, cod = t.domain, t.codomain
    best = 0.0
    for cx in comps.masks:
        ax = [a for a in range(dom.n_atoms) if not (dom.atom_masks[a] & ~cx)]
        for cy in comps.masks:
            by = [b for b in range(cod.n_atoms) if not (cod.atom_masks[b] & ~cy)]
            piece = np.zeros_like(t.matrix)
            rows, cols = cod.coords_of_atoms(by), dom.coords_of_atoms(ax)
            piece[np.ix_(rows, cols)] = t.matrix[np.ix_(rows, cols)]
            best = max(best, ql_at(t.with_matrix(piece), e, atom_limit))
    return best


# -- properness and local ranks ---------------------------------------------------


@dataclass(frozen=True)
class PropernessCheck:
    proper: bool
    via_blocks: bool
    via_support: bool
    agree: bool
    witness: object = None


def is_proper_operator(t: BlockOperator) -> bool:
    return properness_equivalence_check(t).proper


def properness_equivalence_check(t: BlockOperator) -> PropernessCheck:
    """Compare two characterizations of properness.

    (a) for every bounded measurable ``B`` some bounded measurable ``A`` has
    ``χ_B t = χ_B t χ_A``; (b) the support pulls bounded sets back to bounded
    sets.  Components are the maximal bounded sets.
    """
    dom, cod = t.domain, t.codomain
    xcomps = dom.space.components()
    bn = t.block_norms > t.tolerance
    via_blocks, wit = True, None
    for cy in cod.space.components().masks:
        bs = [b for b in range(cod.n_atoms) if not (cod.atom_masks[b] & ~cy)]
        cols = [a for a in range(dom.n_atoms) if any(bn[b, a] for b in bs)]
        met = {xcomps.block_of(x) for a in cols for x in bits(dom.atom_masks[a])}
        if len(met) > 1:
            via_blocks, wit = False, (sorted(bits(cy)), sorted(met))
            break
    s = point_support(t)
    st = transpose(s)
    via_support = True
    for cy in cod.space.components().masks:
        pre = st.image_mask(cy)
        if len({xcomps.block_of(x) for x in bits(pre)}) > 1:
            via_support = False
            break
    return PropernessCheck(via_blocks and via_support, via_blocks, via_support, via_blocks == via_support, wit)


def _rank(m: np.ndarray, tol: float) -> int:
    if m.size == 0:
        return 0
    sv = np.linalg.svd(m, compute_uv=False)
    # never below numpy's round-off floor, even when the caller asks for tol = 0
    floor = sv.max(initial=0.0) * max(m.shape) * np.finfo(float).eps
    return int(np.sum(sv > max(tol, floor)))


@dataclass(frozen=True)
class LocalRanks:
    # rank of χ_b t per target atom b and of t χ_a per source atom a; None for unbounded atoms
    left: tuple[int | None, ...]
    right: tuple[int | None, ...]


def local_rank_profile(t: BlockOperator) -> LocalRanks:
    dom, cod = t.domain, t.codomain
    left = []
    for b in range(cod.n_atoms):
        if cod.space._square_scale(cod.atom_masks[b]) == UNBOUNDED:
            left.append(None)
        else:
            left.append(_rank(t.matrix[cod.atom_slice(b), :], t.tolerance))
    right = []
    for a in range(dom.n_atoms):
        if dom.space._square_scale(dom.atom_masks[a]) == UNBOUNDED:
            right.append(None)
        else:
            right.append(_rank(t.matrix[:, dom.atom_slice(a)], t.tolerance))
    return LocalRanks(tuple(left), tuple(right))


# -- support arithmetic -----------------------------------------------------------


@dataclass(frozen=True)
class SupportBoundCheck:
    ok: bool
    product_support: FiniteRelation
    bound: FiniteRelation
    sum_ok: bool | None
    adjoint_ok: bool


def compose_support_bound_check(t: BlockOperator, s: BlockOperator) -> SupportBoundCheck:
    """``Supp(ts) ⊆ S_t ∘ Ẽ ∘ S_s`` with ``Ẽ`` the nondegeneracy gauge of the middle module.

    Also checks the adjoint law for ``t`` and, when ``t`` and ``s`` have the
    same shape, the sum law.
    """
    st, ss = point_support(t), point_support(s)
    prod = point_support(t @ s)
    bound = compose_all(st, s.codomain.nondegeneracy_gauge, ss)
    adjoint_ok = support(t.adjoint()).atoms == transpose(support(t).atoms)
    sum_ok = None
    if t.domain is s.domain and t.codomain is s.codomain:
        sum_ok = contains(st | ss, point_support(t + s))
    return SupportBoundCheck(contains(bound, prod), prod, bound, sum_ok, adjoint_ok)


# -- conjugation ------------------------------------------------------------------


@dataclass(frozen=True)
class AdResult:
    operator: BlockOperator
    # S ∘ Ẽ ∘ E ∘ Ẽ ∘ Sᵀ with E the gauge used for x
    bound: FiniteRelation
    predicted_scale: Scale
    achieved_scale: Scale
    contained: bool


def _controlled_support(t: BlockOperator) -> FiniteRelation:
    s = point_support(t)
    try:
        check_controlled(t.domain.space, t.codomain.space, s)
    except NotControlled as exc:
        raise NotControlledOperator(f"operator support {exc}") from exc
    return s


def ad(t: BlockOperator, x: BlockOperator) -> AdResult:
    """``t x t*`` together with the support bound predicted by the support of ``t``."""
    s = _controlled_support(t)
    sp = x.space
    i = propagation_scale(x)
    e = sp.ladder[i] if i != UNBOUNDED else point_support(x) | sp.diagonal()
    g = t.domain.nondegeneracy_gauge
    bound = compose_all(s, g, e, g, transpose(s))
    out = t @ x @ t.adjoint()
    return AdResult(out, bound, t.codomain.space.scale_of(bound), propagation_scale(out), contains(bound, point_support(out)))


@dataclass(frozen=True)
class AdWitness:
    x: BlockOperator
    x_scale: Scale
    conjugate_scale: Scale
    pairs: tuple


def ad_witness(t: BlockOperator) -> AdWitness | None:
    """For non-controlled ``t``, a matrix unit ``x`` of finite propagation with ``t x t*`` unbounded.

    Returns ``None`` when the support of ``t`` is controlled.
    """
    s = point_support(t)
    w = controlled_witness(t.domain.space, t.codomain.space, s)
    if w is None:
        return None
    (y, x0), (y2, x2) = w
    dom, cod = t.domain, t.codomain
    a, a2 = dom.atom_of(x0), dom.atom_of(x2)
    b, b2 = cod.atom_of(y), cod.atom_of(y2)
    p = _live_column(t, b, a)
    q = _live_column(t, b2, a2)
    mat = np.zeros((dom.D, dom.D), dtype=complex)
    mat[p, q] = 1.0
    xop = BlockOperator(dom, dom, mat, 0.0)
    conj = t @ xop @ t.adjoint()
    return AdWitness(xop, propagation_scale(xop), propagation_scale(conj), w)


def _live_column(t: BlockOperator, b: int, a: int) -> int:
    blk = t.block(b, a)
    j = int(np.argmax(np.linalg.norm(blk, axis=0)))
    return t.domain.offsets[a] + j


# -- quasi-local arithmetic -------------------------------------------------------


@dataclass(frozen=True)
class QLArithmeticRow:
    scale: int
    composed_scale: Scale
    lhs: float
    rhs: float
    lhs_at_ladder: float
    ok: bool
    over_ladder: bool


@dataclass(frozen=True)
class QLArithmeticCheck:
    ok: bool
    rows: tuple[QLArithmeticRow, ...]


def ql_arithmetic_check(s: BlockOperator, t: BlockOperator, atom_limit: int = DEFAULT_ATOM_LIMIT, atol: float = 1e-10) -> QLArithmeticCheck:
    """``ε_{st}(E_i ∘ Ẽ ∘ E_i) ≤ ε_s(i)‖t‖ + ε_t(i)‖s‖`` at every scale ``i``."""
    if s.domain is not t.codomain:
        raise GroundSetMismatch("operators are not composable")
    sp = t.space
    st = s @ t
    g = t.codomain.nondegeneracy_gauge
    es = ql_profile(s, "exact", atom_limit)
    et = ql_profile(t, "exact", atom_limit)
    rows = []
    for i, e in enumerate(sp.ladder):
        comp = compose_all(e, g, e)
        j = sp.scale_of(comp)
        lhs = ql_at(st, comp, atom_limit)
        rhs = es[i] * t.norm + et[i] * s.norm
        over = j == UNBOUNDED
        lhs_l = ql_at(st, sp.ladder[j], atom_limit) if not over else lhs
        rows.append(QLArithmeticRow(i, j, lhs, rhs, lhs_l, lhs <= rhs + atol and lhs_l <= rhs + atol, over))
    return QLArithmeticCheck(all(r.ok for r in rows), tuple(rows))


# -- full report ------------------------------------------------------------------


@dataclass(frozen=True)
class OperatorReport:
    support: Support
    propagation_scale: Scale
    point_propagation_scale: Scale
    ql_mode: str
    ql_profile: tuple
    trunc_profile: TruncProfile
    controlled_modulus: tuple | None
    not_controlled_reason: str | None
    proper: bool
    properness: PropernessCheck
    local_rank: LocalRanks
    tolerance: float


def analyze(t: BlockOperator, atom_limit: int = DEFAULT_ATOM_LIMIT, mode: str | None = None) -> OperatorReport:
    """Everything at once; exact quasi-locality when the atom count allows it."""
    if mode is None:
        mode = "exact" if t.domain.n_atoms <= atom_limit else "bounds"
    sup = support(t)
    try:
        cm = check_controlled(t.domain.space, t.codomain.space, sup.points)
        modulus, reason = cm.modulus, None
    except NotControlled as exc:
        modulus, reason = None, str(exc)
    prop = properness_equivalence_check(t)
    return OperatorReport(
        support=sup,
        propagation_scale=propagation_scale(t),
        point_propagation_scale=point_propagation_scale(t),
        ql_mode=mode,
        ql_profile=ql_profile(t, mode, atom_limit),
        trunc_profile=trunc_profile(t),
        controlled_modulus=modulus,
        not_controlled_reason=reason,
        proper=prop.proper,
        properness=prop,
        local_rank=local_rank_profile(t),
        tolerance=t.tolerance,
    )


def random_operator(rng: np.random.Generator, domain: GeoModule, codomain: GeoModule | None = None,
                    density: float = 0.5, alphabet: Sequence[complex] | None = None) -> BlockOperator:
    """Random block-sparse operator; entries from ``alphabet`` or complex Gaussian."""
    codomain = domain if codomain is None else codomain
    mat = np.zeros((codomain.D, domain.D), dtype=complex)
    for b in codomain.nontrivial:
        for a in domain.nontrivial:
            if rng.random() < density:
                shape = (codomain.dims[b], domain.dims[a])
                if alphabet is not None:
                    blk = np.asarray(alphabet, dtype=complex)[rng.integers(len(alphabet), size=shape)]
                else:
                    blk = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
                mat[codomain.atom_slice(b), domain.atom_slice(a)] = blk
    return BlockOperator(domain, codomain, mat, 0.0)
