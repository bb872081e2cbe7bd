"""Exception and warning taxonomy shared across the package."""


class ValidationError(ValueError):
    """Parameter set rejected before any numerics ran."""


class AssumptionViolated(ValidationError):
    """One of the standing well-posedness conditions fails.

    `which` names the failed clause: "delta_gap", "drift_gap", "hedge_point",
    or a plain field-bound name.
    """

    def __init__(self, which, msg=None):
        self.which = which
        super().__init__(msg or f"assumption violated: {which}")


class DegenerateLiquidity(ValidationError):
    """Both trading costs are zero: the problem is frictionless.

    The no-trade interval degenerates to a point; use the closed-form
    frictionless solution instead of the ODE solver.
    """


class OutOfDomain(ValueError):
    """Evaluation requested outside the object's domain of validity."""


class NumericalBreakdown(ArithmeticError):
    """A denominator or root degenerated away from its known zero locus."""


class PositivityViolated(AssertionError):
    """A quantity that must stay one-signed on the solved interval crossed zero."""

    def __init__(self, name, msg=None):
        self.name = name
        super().__init__(msg or f"positivity violated: {name}")


class EventNotFound(RuntimeError):
    """The level-set stopping event never triggered within the safety span."""


class RegionExit(RuntimeError):
    """The trajectory left the admissible region mid-integration."""


class BracketingFailed(RuntimeError):
    """Could not bracket the shooting target between the two start limits."""


class ToleranceNotMet(RuntimeError):
    """Iteration budget exhausted before reaching the requested tolerance."""


class Singularity(ZeroDivisionError):
    """A policy-map denominator vanished (e.g. the fraction map's pole)."""


class NonpositiveWealth(RuntimeError):
    """Simulated wealth hit zero or went negative; paths are invalid."""


class StepRejected(RuntimeError):
    """Simulation step produced a non-finite state."""


class TailTooFat(RuntimeWarning):
    """Truncated-horizon tail estimate is not negligible next to the target."""


class MultipleRoots(RuntimeWarning):
    """More than one sign change where a unique root was expected."""
