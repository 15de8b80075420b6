"""Finite-dimensional coarse geometric modules.

A module is generated by an atom partition of ``X``: atom ``a`` carries a
block ``C^{dims[a]}`` and the total space is the orthogonal sum of the blocks,
laid out in atom order.  Measurable sets are unions of atoms and ``χ_A`` is
the diagonal 0/1 projection onto the blocks of the atoms inside ``A``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from .errors import (
    FamilyNotCoarselyDense,
    InvalidPartition,
    MeasurabilityError,
    NotCovering,
    SeedsNotCoarselyDense,
)
from .relations import FiniteRelation, GroundSet, bits, compose_all, members
from .spaces import UNBOUNDED, CoarseSpace, Partition, Scale, max_scale


@dataclass(frozen=True)
class ModuleReport:
    nondegeneracy_scale: Scale
    admissibility_scale: Scale
    discreteness_scale: Scale
    faithfulness_scale: Scale
    # least positive block dimension over nontrivial bounded atoms; inf if none
    ampleness: Union[int, float]
    rank: int


class GeoModule:
    def __init__(self, space: CoarseSpace, atoms: Partition, dims: Sequence[int], name: str | None = None):
        if atoms.n != space.n:
            raise InvalidPartition("atom partition and space have different sizes")
        dims = tuple(int(d) for d in dims)
        if len(dims) != len(atoms):
            raise InvalidPartition(f"{len(dims)} block dimensions for {len(atoms)} atoms")
        if any(d < 0 for d in dims):
            raise InvalidPartition("block dimensions must be nonnegative")
        self.space = space
        self.atoms = atoms
        self.dims = dims
        self.name = name
        self.offsets = tuple(int(o) for o in np.concatenate([[0], np.cumsum(dims)]))

    @property
    def D(self) -> int:
        return self.offsets[-1]

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @cached_property
    def atom_masks(self) -> tuple[int, ...]:
        return self.atoms.masks

    @cached_property
    def atom_ground(self) -> GroundSet:
        """Ground set indexing the atoms (for atom-level relations)."""
        return GroundSet(len(self.atoms))

    @property
    def nontrivial(self) -> tuple[int, ...]:
        return tuple(a for a, d in enumerate(self.dims) if d > 0)

    def atom_slice(self, a: int) -> slice:
        return slice(self.offsets[a], self.offsets[a + 1])

    def atom_of(self, x: int) -> int:
        return self.atoms.block_of(x)

    # -- measurability and χ -------------------------------------------------

    def atoms_in(self, subset) -> tuple[int, ...]:
        """Atoms composing a measurable set; raises if some atom is cut."""
        m = self.space.mask(subset)
        inside, straddling = [], []
        for a, am in enumerate(self.atom_masks):
            hit = am & m
            if hit == am:
                inside.append(a)
            elif hit:
                straddling.extend(bits(hit))
        if straddling:
            raise MeasurabilityError(
                f"set is not measurable: elements {sorted(straddling)} cut their atoms", straddling
            )
        return tuple(inside)

    def atoms_meeting(self, mask: int) -> tuple[int, ...]:
        return tuple(a for a, am in enumerate(self.atom_masks) if am & mask)

    def saturate(self, mask: int) -> int:
        """Smallest measurable set containing ``mask``."""
        out = 0
        for am in self.atom_masks:
            if am & mask:
                out |= am
        return out

    def union_mask(self, atoms: Sequence[int]) -> int:
        m = 0
        for a in atoms:
            m |= self.atom_masks[a]
        return m

    def coords_of_atoms(self, atoms: Sequence[int]) -> np.ndarray:
        if not len(atoms):
            return np.zeros(0, dtype=int)
        return np.concatenate([np.arange(self.offsets[a], self.offsets[a + 1]) for a in atoms]).astype(int)

    def coords(self, subset) -> np.ndarray:
        return self.coords_of_atoms(self.atoms_in(subset))

    def chi(self, subset) -> np.ndarray:
        """Orthogonal projection ``χ_A`` for a measurable ``A``."""
        diag = np.zeros(self.D)
        diag[self.coords(subset)] = 1.0
        return np.diag(diag)

    def chi_atoms(self, atoms: Sequence[int]) -> np.ndarray:
        diag = np.zeros(self.D)
        diag[self.coords_of_atoms(atoms)] = 1.0
        return np.diag(diag)

    # -- gauges and classification -------------------------------------------

    @cached_property
    def discreteness_gauge(self) -> FiniteRelation:
        """``∪ a x a`` over all atoms."""
        g = self.space.ground
        rows = [0] * g.size
        for am in self.atom_masks:
            for y in bits(am):
                rows[y] = am
        return FiniteRelation(g, g, rows)

    @cached_property
    def nondegeneracy_gauge(self) -> FiniteRelation:
        """``Δ ∪ ⋃ a x a`` over atoms with positive dimension."""
        g = self.space.ground
        rows = [1 << y for y in range(g.size)]
        for a in self.nontrivial:
            am = self.atom_masks[a]
            for y in bits(am):
                rows[y] = am
        return FiniteRelation(g, g, rows)

    def classify(self) -> ModuleReport:
        sp = self.space
        nondeg = max_scale(*(sp._square_scale(self.atom_masks[a]) for a in self.nontrivial))
        disc = sp.partition_control_scale(self.atoms)
        support = self.union_mask(self.nontrivial)
        faithful = sp.density_scale(support) if support else UNBOUNDED
        bounded_dims = [self.dims[a] for a in self.nontrivial if sp._square_scale(self.atom_masks[a]) != UNBOUNDED]
        ample = min(bounded_dims) if bounded_dims else math.inf
        return ModuleReport(
            nondegeneracy_scale=nondeg,
            admissibility_scale=disc,
            discreteness_scale=disc,
            faithfulness_scale=faithful,
            ampleness=ample,
            rank=max(self.dims, default=0),
        )

    def to_literal(self) -> dict:
        return {"atoms": self.atoms.as_lists(), "dims": list(self.dims)}

    def __repr__(self):
        return f"GeoModule(D={self.D}, atoms={self.atoms.as_lists()}, dims={list(self.dims)})"


def uniform_module(space: CoarseSpace, rank: int, name: str | None = None) -> GeoModule:
    if rank < 1:
        raise ValueError("rank must be positive")
    return GeoModule(space, Partition.singletons(space.n), [rank] * space.n, name=name)


# -- partition lemmas --------------------------------------------------------


def family_gauge(space: CoarseSpace, masks: Sequence[int]) -> FiniteRelation:
    """Smallest gauge controlling a family: ``Δ ∪ ⋃ A x A``."""
    g = space.ground
    rows = [1 << y for y in range(g.size)]
    for m in masks:
        for y in bits(m):
            rows[y] |= m
    return FiniteRelation(g, g, rows)


def _dense_gauge(space: CoarseSpace, mask: int, err=FamilyNotCoarselyDense) -> FiniteRelation:
    """``Δ`` if ``mask`` is everything, else the least dense ladder level."""
    if mask == space.ground.full_mask:
        return space.diagonal()
    s = space.density_scale(mask)
    if s == UNBOUNDED:
        raise err(f"family is not coarsely dense: {sorted(members(space.ground.full_mask & ~space.e_max.image_mask(mask)))} unreachable")
    return space.ladder[s]


def _greedy_separated(masks: Sequence[int], e: FiniteRelation) -> list[int]:
    chosen: list[int] = []
    for l, m in enumerate(masks):
        em = e.image_mask(m)
        if all(not (masks[i] & em) and not (m & e.image_mask(masks[i])) for i in chosen):
            chosen.append(l)
    return chosen


@dataclass(frozen=True)
class SeparatedSubfamily:
    indices: tuple[int, ...]
    # E_dense ∘ Ẽ ∘ E: the union of the chosen sets is dense at this relation
    density_bound: FiniteRelation
    density_bound_scale: Scale
    # least ladder index at which the chosen union is actually dense
    density_scale: Scale


def greedy_separated_subfamily(space: CoarseSpace, family: Sequence, e: Union[int, FiniteRelation]) -> SeparatedSubfamily:
    """Greedy maximal pairwise ``E``-separated subfamily (ascending index order)."""
    masks = [space.mask(a) for a in family]
    gauge = space.level(e) if isinstance(e, int) else e
    union = 0
    for m in masks:
        union |= m
    dense = _dense_gauge(space, union)
    chosen = _greedy_separated(masks, gauge)
    bound = compose_all(dense, family_gauge(space, masks), gauge)
    chosen_union = 0
    for i in chosen:
        chosen_union |= masks[i]
    assert bound.image_mask(chosen_union) == space.ground.full_mask
    return SeparatedSubfamily(tuple(chosen), bound, space.scale_of(bound), space.density_scale(chosen_union))


def refine_to_discrete_partition(m: GeoModule, seeds: Sequence) -> Partition:
    """Coarsen the atoms into a discrete partition each of whose blocks contains a seed.

    Two phases: pick atoms far apart from each other (cores) and grow them by
    the seeds' reach; then attach every leftover atom to the first core it is
    close to.
    """
    sp = m.space
    seed_masks = [sp.mask(b) for b in seeds]
    seed_union = 0
    for s in seed_masks:
        seed_union |= s
    e_disc = m.discreteness_gauge
    e_ctrl = family_gauge(sp, seed_masks)
    e_dense = _dense_gauge(sp, seed_union, SeedsNotCoarselyDense)
    e_1 = compose_all(e_dense, e_ctrl, e_disc, e_ctrl, e_dense)
    atom_masks = m.atom_masks
    cores = _greedy_separated(atom_masks, e_1)
    reach = compose_all(e_ctrl, e_dense)
    owner = [-1] * m.n_atoms
    for c in cores:
        grown = reach.image_mask(atom_masks[c])
        for j in m.atoms_meeting(grown):
            assert owner[j] == -1, "cores overlap; separation scale too small"
            owner[j] = c
    core_union = m.union_mask(cores)
    e_3 = _dense_gauge(sp, core_union)
    for j in range(m.n_atoms):
        if owner[j] == -1:
            owner[j] = next(c for c in cores if atom_masks[j] & e_3.image_mask(atom_masks[c]))
    blocks = []
    for c in cores:
        blocks.append(frozenset(members(m.union_mask([j for j in range(m.n_atoms) if owner[j] == c]))))
    result = Partition(sp.n, tuple(blocks))
    for bm in result.masks:
        assert any(not (s & ~bm) for s in seed_masks), "block without a seed"
    return result


def faithful_partition(m: GeoModule) -> Partition:
    """Discrete partition all of whose blocks carry a nonzero block of the module."""
    return refine_to_discrete_partition(m, [members(m.atom_masks[a]) for a in m.nontrivial])


def discretize(space: CoarseSpace, covers: Sequence) -> Partition:
    """Disjointify an ordered cover: ``C_i = A_i minus (A_0 ∪ ... ∪ A_{i-1})``."""
    seen = 0
    blocks = []
    for a in covers:
        am = space.mask(a)
        c = am & ~seen
        seen |= am
        if c:
            blocks.append(members(c))
    if seen != space.ground.full_mask:
        raise NotCovering(f"elements {sorted(members(space.ground.full_mask & ~seen))} are not covered")
    return Partition(space.n, tuple(blocks))


def module_on_partition(m: GeoModule, p: Partition) -> GeoModule:
    """The same Hilbert space regarded over a coarser partition (blocks unions of atoms).

    Coordinates are permuted into the new block order; use
    :func:`coarsening_permutation` to move operators along.
    """
    dims = [sum(m.dims[a] for a in m.atoms_in(b)) for b in p.blocks]
    return GeoModule(m.space, p, dims)


def coarsening_permutation(m: GeoModule, p: Partition) -> np.ndarray:
    """Coordinate order of ``m`` listed block by block of ``p``."""
    return np.concatenate([m.coords(b) for b in p.blocks] or [np.zeros(0, dtype=int)]).astype(int)
