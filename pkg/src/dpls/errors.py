"""Exception types shared across the package."""


class DplsError(Exception):
    """Base class for all library-specific failures."""


class ShapeError(DplsError, ValueError):
    """Array dimensions or agent counts do not line up."""


class AssumptionError(DplsError, ValueError):
    """The summed quadratic term is not safely positive definite."""


class GraphError(DplsError, ValueError):
    """Invalid communication graph (weights, connectivity, degree mass)."""


class CalibrationError(DplsError, ValueError):
    """Privacy calibration infeasible; message names the violated inequality."""


class AdjacencyError(CalibrationError):
    """Adjacency bound too large for the truncation level (ratio outside (0,1))."""


class HeadroomError(DplsError, ValueError):
    """Fixed-point or ciphertext value exceeds the modulus headroom."""


class DivergenceError(DplsError, RuntimeError):
    """Iterates grew beyond the divergence guard; the step size is too large."""


class SingularError(DplsError, RuntimeError):
    """Recovered quadratic term singular on both the first run and the retry."""


class ConvergenceError(DplsError, RuntimeError):
    """Consensus disagreement still above tolerance after the round budget."""
