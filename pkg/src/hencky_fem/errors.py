"""Exception hierarchy shared by all layers."""


class HenckyFemError(Exception):
    """Base class for every error raised by the package."""


class InvalidDeformationError(HenckyFemError):
    """Nonpositive stretch, det F <= 0 or a non-SPD kinematic tensor."""


class InvertedElementError(InvalidDeformationError):
    """det F <= 0 at a Gauss point; the solver answers with a step cut."""

    def __init__(self, message, elements=()):
        super().__init__(message)
        self.elements = tuple(int(e) for e in elements)


class DegenerateElementError(HenckyFemError):
    """Reference Jacobian with det J <= 0."""


class LockingLimitError(InvalidDeformationError):
    """Gent energy evaluated at or beyond its limiting extensibility."""


class EigenConvergenceError(HenckyFemError):
    """Jacobi sweeps exhausted without reaching the off-diagonal tolerance."""


class ParameterError(HenckyFemError, ValueError):
    """Material or geometric parameters outside their admissible range."""


class ConfigError(HenckyFemError, ValueError):
    """Malformed or inconsistent run configuration."""


class NonConvergenceError(HenckyFemError):
    """Newton iteration limit reached."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class SingularTangentError(HenckyFemError):
    """Zero pivot during the sparse factorization."""


class FitFailureError(HenckyFemError):
    """Least-squares calibration failed (rank deficiency or no convergence)."""

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)
