"""Exception hierarchy shared by all solver modules."""


class CentralSpinError(Exception):
    """Base class for every error raised by the package."""


class ParameterDomainError(CentralSpinError, ValueError):
    """Model parameters or arguments outside their admissible domain."""


class ResourceError(CentralSpinError, MemoryError):
    """A requested construction would exceed the memory budget.

    Attributes
    ----------
    required_bytes : int
        Estimated number of bytes the construction needs.
    budget_bytes : int
        Configured budget.
    """

    def __init__(self, required_bytes: int, budget_bytes: int, what: str = "operation"):
        self.required_bytes = int(required_bytes)
        self.budget_bytes = int(budget_bytes)
        super().__init__(
            f"{what} needs about {self.required_bytes} bytes, "
            f"budget is {self.budget_bytes} bytes"
        )


class ConvergenceError(CentralSpinError, RuntimeError):
    """An iterative solver did not converge."""

    def __init__(self, message: str, residual: float = float("nan")):
        self.residual = residual
        super().__init__(f"{message} (residual {residual:.3e})")


class SingularPointError(CentralSpinError, ValueError):
    """Evaluation requested at the k = 0 boundary of the displacement disc."""


class SearchFailureError(CentralSpinError, RuntimeError):
    """Multi-start root search found no admissible root."""

    def __init__(self, message: str, min_residual: float = float("nan")):
        self.min_residual = min_residual
        super().__init__(f"{message} (smallest residual found {min_residual:.3e})")


class NearSingularExpansionError(CentralSpinError, ValueError):
    """Fluctuation coefficients requested too close to |beta|^2 = 2."""


class NoFixedPointError(CentralSpinError, RuntimeError):
    """Fluctuation dynamics is unstable, no stationary covariance exists."""


class PreconditionError(CentralSpinError, ValueError):
    """Operation preconditions are not met (e.g. spectrum not quasi-degenerate)."""


class NumericalDegeneracyError(CentralSpinError, RuntimeError):
    """A construction collapsed numerically (e.g. empty admissible interval)."""


class TruncationLossError(CentralSpinError, ValueError):
    """Finite-J truncation discards more weight than allowed."""

    def __init__(self, lost_weight: float, tol: float):
        self.lost_weight = lost_weight
        super().__init__(f"truncation lost weight {lost_weight:.3e} > {tol:.1e}")


class OutOfSegmentError(CentralSpinError, ValueError):
    """Closed-form segment solution requested outside Omega <= Omega0."""


class ConfigError(CentralSpinError, ValueError):
    """Malformed scan configuration."""
