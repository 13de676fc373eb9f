"""Exception taxonomy shared by all modules.

Every failure mode that callers are expected to catch has its own class;
anything else is a plain bug and raises the usual Python exceptions.
"""


class CircleFineError(Exception):
    """Base class for all library-specific errors."""


class RationalDetected(CircleFineError):
    """Continued-fraction expansion hit a rational (or precision ran out)."""


class NotConverged(CircleFineError):
    """An iterative estimate failed to reach the requested tolerance."""


class NotBracketed(CircleFineError):
    """A root/target value is not bracketed by the search interval."""


class PrecisionExhausted(CircleFineError):
    """Too few significant bits remain for the result to be trusted."""


class WindowsOverlap(CircleFineError):
    """Critical-point windows intersect on the circle."""


class NonMonotoneJoin(CircleFineError):
    """A polynomial join between windows would have non-positive slope."""


class AtCriticalPoint(CircleFineError):
    """Schwarzian (or similar) requested exactly at a critical point."""


class OrbitHitsCritical(CircleFineError):
    """A forward orbit landed exactly on a critical point."""


class CoverageFailure(CircleFineError):
    """Partition atoms fail to tile the circle within tolerance."""


class LevelTooLow(CircleFineError):
    """Partition level too coarse: one atom holds two critical points."""


class DegeneratePair(CircleFineError):
    """A nested interval pair has an empty or underflowing side component."""


class NonInjective(CircleFineError):
    """An iterate restricted to an interval is not injective."""


class CriticalInside(CircleFineError):
    """An intermediate image contains a critical point where a
    diffeomorphism was required."""


class StructureBroken(CircleFineError):
    """Expected translation structure of a return map does not hold."""


class TooShort(CircleFineError):
    """Not enough fundamental domains for the requested decomposition."""


class GridInvalid(CircleFineError):
    """A refinement grid violates one of its defining conditions."""


class NotIsomorphic(CircleFineError):
    """Two refinement grids do not correspond atom-by-atom."""


class OrderViolation(CircleFineError):
    """Two matched orbits disagree on their circular order."""


class ScaleBelowResolution(CircleFineError):
    """A scan scale is below the resolution of the conjugacy table."""


class IncompatibleTopology(CircleFineError):
    """Maps differ in critical-point count or rotation number."""


class NoCriticalPoints(CircleFineError):
    """Operation requires critical points but the map has none."""
