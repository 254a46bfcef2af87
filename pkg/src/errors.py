"""
Error types for the minimum Kullback entropy estimator

Every error carries a ``details`` dictionary and the process exit code the
command-line front end reports for it.
"""


class EstimationError(Exception):
    """Base class for all estimator errors"""

    exit_code = 1

    def __init__(self, message, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self):
        """Structured form used in run reports"""
        return {
            'type': type(self).__name__,
            'message': self.message,
            'exit_code': self.exit_code,
            'details': self.details,
        }


class ValidationError(EstimationError):
    """Malformed or inconsistent input"""

    exit_code = 3


class InfeasibleError(EstimationError):
    """Data that no admissible state (or process) can reproduce"""

    exit_code = 2


class SolverError(EstimationError):
    """The numerical solver gave up"""

    exit_code = 4


# Validation errors

class NonHermitianInput(ValidationError):
    pass


class DimMismatch(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class InvalidState(ValidationError):
    pass


class InvalidDistribution(ValidationError):
    pass


class InvalidMean(ValidationError):
    pass


class CutoffTooSmall(ValidationError):
    pass


class IncompleteBasis(ValidationError):
    pass


class InputFileError(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


# Infeasible or degenerate data

class InfeasibleMean(InfeasibleError):
    pass


class InfeasibleConstraints(InfeasibleError):
    pass


class DegenerateObservable(InfeasibleError):
    pass


class DegenerateSupport(InfeasibleError):
    pass


class NoInformation(InfeasibleError):
    pass


class RankDeficient(InfeasibleError):
    pass


class DegeneratePrior(InfeasibleError):
    """Raised by the Fock hierarchy solve; ``estimate`` holds the minimum-norm result"""

    def __init__(self, message, estimate=None, **details):
        super().__init__(message, **details)
        self.estimate = estimate


class UnsupportedOutcome(InfeasibleError):
    pass


class NoSupport(InfeasibleError):
    pass


class NoRoot(InfeasibleError):
    pass


class InsufficientData(InfeasibleError):
    pass


class SurfaceNotReached(InfeasibleError):
    pass


# Solver failures

class NonConvergence(SolverError):
    pass
