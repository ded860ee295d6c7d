"""Failure modes that callers are expected to branch on.

Plain ValueError is reserved for malformed arguments (bad ranges, wrong
shapes).  The classes below mark conditions that are legitimate outcomes
of a computation rather than caller mistakes.
"""


class NumericOverflowError(ArithmeticError):
    """A matrix product or partial sum left the representable range.

    Long unscaled products of expanding matrices overflow around
    n ~ 700 / lyapunov_exponent; callers should switch to scaled products.
    """


class NoHyperbolicityError(RuntimeError):
    """Singular-value gap of a finite product too small to certify a splitting."""

    def __init__(self, gap: float, required: float):
        super().__init__(
            f"singular value ratio {gap:.3g} below required {required:.3g}; "
            "no reliable stable direction at this depth"
        )
        self.gap = gap
        self.required = required


class LeafMismatchError(ValueError):
    """Two backward itineraries do not lie on one local unstable leaf."""


class HolonomyDivergedError(RuntimeError):
    """A holonomy limit failed its Cauchy criterion within the depth budget."""


class ResolutionError(RuntimeError):
    """Adjacent samples of a projective loop jump too far to lift reliably.

    The winding count is only trustworthy when consecutive samples move by
    less than pi/4 in the projective metric; re-sample on a finer grid.
    """


class DepthError(ValueError):
    """An itinerary is too shallow for the requested embedding tolerance."""

    def __init__(self, depth: int, required: int):
        super().__init__(
            f"itinerary depth {depth} insufficient, need at least {required}"
        )
        self.depth = depth
        self.required = required


class DegreeCheckError(RuntimeError):
    """Winding counts from independent reference vectors disagree."""
