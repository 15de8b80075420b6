"""Exception hierarchy.

Every error message names the coarse-geometric predicate that failed, so that
CLI output is readable without a traceback.
"""

from __future__ import annotations


class RoebenchError(Exception):
    """Base class for all workbench errors."""


class InputError(RoebenchError):
    """Malformed input (maps to CLI exit code 2)."""


class GroundSetMismatch(InputError):
    pass


class IndexOutOfRange(InputError):
    pass


class MetricViolation(InputError):
    pass


class NonMonotoneThresholds(InputError):
    pass


class InvalidLadder(InputError):
    pass


class InvalidPartition(InputError):
    pass


class ScaleOutOfRange(InputError):
    pass


class MeasurabilityError(InputError):
    def __init__(self, message: str, straddling: tuple = ()):
        super().__init__(message)
        self.straddling = tuple(straddling)


class FixtureError(InputError):
    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


class UnknownSuite(InputError):
    pass


class NotControlled(RoebenchError):
    """A relation fails to be controlled; ``witness`` is ((y, x), (y2, x2))."""

    def __init__(self, message: str, witness):
        super().__init__(message)
        self.witness = witness


class NotControlledOperator(RoebenchError):
    pass


class DomainNotCovered(RoebenchError):
    pass


class PartitionNotControlled(RoebenchError):
    pass


class FamilyNotCoarselyDense(RoebenchError):
    pass


class SeedsNotCoarselyDense(FamilyNotCoarselyDense):
    pass


class NotCovering(RoebenchError):
    pass


class AtomLimitExceeded(RoebenchError):
    pass


class UnboundedPropagation(RoebenchError):
    pass


class ComponentsNotMeasurable(RoebenchError):
    pass


class AmplenessInsufficient(RoebenchError):
    def __init__(self, atom, needed: int, available: int, side: str = "target"):
        super().__init__(
            f"module not ample enough: {side} block {atom} needs rank {needed}, "
            f"has {available}"
        )
        self.atom = atom
        self.needed = needed
        self.available = available


class SurjectivityMissing(RoebenchError):
    pass


class NotIsometries(RoebenchError):
    pass


class NotIsometry(NotIsometries):
    pass
