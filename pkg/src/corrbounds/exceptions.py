class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap without meeting tolerance."""


class OutsidePolytopeError(ValueError):
    """A behavior implies a negative probability."""


class SingularSystemError(RuntimeError):
    """A linear system that should have a unique solution is singular."""


class ZeroMeanSpinError(ValueError):
    """The mean spin vector vanishes so its direction is undefined."""
