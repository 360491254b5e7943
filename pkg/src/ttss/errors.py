"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Mode sizes or bond ranks of tensor-train objects do not match."""


class NumericalRankError(ValueError):
    """A matrix that must have full numerical rank does not."""


class CapExceededError(RuntimeError):
    """A dense materialization would exceed the configured entry cap."""


class MarchStepError(RuntimeError):
    """The inner linear solve of a time step did not converge."""

    def __init__(self, step, message):
        super().__init__(f"step {step}: {message}")
        self.step = step


class CrossConvergenceWarning(UserWarning):
    """Cross interpolation exhausted its rank budget before reaching tol."""
