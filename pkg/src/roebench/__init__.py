"""Finite coarse spaces, geometric modules and block operators."""

from __future__ import annotations

__version__ = "0.1.0"

from .constructions import (
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
from .geomodule import (
    GeoModule,
    discretize,
    greedy_separated_subfamily,
    refine_to_discrete_partition,
    uniform_module,
)
from .maps import (
    check_controlled,
    closeness,
    coarse_compose,
    embedding_modulus,
    is_coarse_equivalence,
    is_proper,
    partition_quotient_equivalence,
)
from .operators import (
    BlockOperator,
    ad,
    analyze,
    operator_norm,
    propagation_scale,
    ql_profile,
    support,
    trunc_profile,
)
from .relations import FiniteRelation, GroundSet, compose, image, transpose
from .spaces import UNBOUNDED, CoarseSpace, Partition, clusters_space, line_space

__all__ = [
    "BlockOperator",
    "CoarseSpace",
    "FiniteRelation",
    "GeoModule",
    "GroundSet",
    "Partition",
    "UNBOUNDED",
    "ad",
    "analyze",
    "approximate_unit",
    "band_decompose",
    "check_controlled",
    "closeness",
    "clusters_space",
    "coarse_compose",
    "commutant_dimension",
    "component_decompose",
    "compose",
    "conditional_expectation",
    "cover",
    "covers_are_close",
    "discretize",
    "embedding_modulus",
    "greedy_separated_subfamily",
    "image",
    "is_coarse_equivalence",
    "is_proper",
    "ktheory_unitary",
    "line_space",
    "operator_norm",
    "partition_quotient_equivalence",
    "propagation_scale",
    "ql_controlled_isometry_check",
    "ql_profile",
    "refine_to_discrete_partition",
    "support",
    "transpose",
    "trunc_profile",
    "uniform_module",
]
