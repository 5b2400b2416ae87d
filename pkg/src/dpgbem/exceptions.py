class DPGError(Exception):
    """Base class for errors raised by dpgbem."""


class MeshError(DPGError):
    """Invalid or degenerate mesh."""


class QuadratureError(DPGError):
    """A singular or near-singular integral produced a non-finite value."""


class QuadratureWarning(UserWarning):
    """Graded quadrature hit its depth cap; the value may be inaccurate."""


class LoadError(DPGError):
    """Right-hand side violates the solvability condition."""
