"""Exception hierarchy.

Numerical failures derive from :class:`NumericalFailure` and input
problems from :class:`InputError`; the command line maps them to exit
codes 2 and 1 respectively.
"""

__all__ = [
    "EbresError", "NumericalFailure", "InputError",
    "KTooSmall", "NoConvergence", "ZeroOnContour", "PhaseJump",
    "SingularAtResonance", "IncompleteZeroSet", "OdeFailure",
    "NonPositiveCoefficient", "BoundaryConstraintViolated",
    "InsufficientSmoothness", "ZeroJump", "DiscontinuityError",
]


class EbresError(Exception):
    """Base class for all package errors."""


class NumericalFailure(EbresError):
    """A computation did not reach its accuracy target."""


class InputError(EbresError, ValueError):
    """Invalid user input."""


class KTooSmall(InputError):
    """|k| is below the configured floor ``k_min``."""

    def __init__(self, k, k_min):
        self.k = complex(k)
        self.k_min = float(k_min)
        super().__init__(f"|k| = {abs(self.k):.3g} below k_min = {self.k_min:.3g} at k = {self.k}")


class NoConvergence(NumericalFailure):
    """Order doubling exhausted before the tolerance was met."""

    def __init__(self, k, last, previous, order):
        self.k = complex(k)
        self.last = last
        self.previous = previous
        self.order = order
        super().__init__(
            f"determinant not converged at k = {self.k} (order {order}): "
            f"last {last!r}, previous {previous!r}")


class ZeroOnContour(NumericalFailure):
    """|D| on a counting contour fell below the admissible floor."""

    def __init__(self, center, radius, k, value):
        self.center, self.radius, self.k, self.value = center, radius, k, value
        super().__init__(f"|D| = {abs(value):.3g} at k = {k} on contour centre {center}, radius {radius}")


class PhaseJump(NumericalFailure):
    """Phase increments stayed above the admissible step after refinement."""

    def __init__(self, where, step):
        self.where, self.step = where, step
        super().__init__(f"unresolved phase step {step:.3g} near {where}")


class SingularAtResonance(NumericalFailure):
    """I + Y0(k) is numerically singular."""

    def __init__(self, k, cond):
        self.k, self.cond = k, cond
        super().__init__(f"I + Y0 singular at k = {k} (condition estimate {cond:.3g})")


class IncompleteZeroSet(NumericalFailure):
    """The supplied zeros do not match the winding count."""


class OdeFailure(NumericalFailure):
    """The Jost-solution integrator failed."""


class NonPositiveCoefficient(InputError):
    """A beam coefficient is not strictly positive."""


class BoundaryConstraintViolated(InputError):
    """The beam violates (3a'/a + 5b'/b)(0) = 0."""


class InsufficientSmoothness(InputError):
    """A coefficient has too few derivatives for the requested operation."""


class ZeroJump(InputError):
    """The end value p(gamma - 0) vanishes."""


class DiscontinuityError(InputError):
    """An undeclared jump was found at an interior breakpoint."""
