"""Exception hierarchy shared across the package."""


class WptlabError(Exception):
    """Base class for all wptlab errors."""


class ParameterError(WptlabError, ValueError):
    """Invalid parameter or invariant violation at construction time."""


class InvalidMomentsError(WptlabError):
    """Moment pair violating Jensen's inequality (m4 < m2^2 beyond tolerance)."""


class FitError(WptlabError):
    """Least-squares fit cannot be performed (rank-deficient design, bad data)."""


class DivergentIntegralError(WptlabError):
    """Gain integral does not converge for the given model parameters."""


class QuadratureConvergenceError(WptlabError):
    """Requested quadrature tolerance not met within the subdivision budget."""


class NyquistError(WptlabError):
    """Sample rate too low for the requested carrier and bandwidth."""


class DurationError(WptlabError):
    """Signal too short for the requested operation."""


class CsvFormatError(WptlabError):
    """Malformed CSV input.

    Carries the 1-based line number when known.
    """

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class SolverError(WptlabError):
    """Transient solver failed to converge at a time step.

    ``step_index`` is the 0-based index of the offending step.
    """

    def __init__(self, message, step_index=None):
        super().__init__(message)
        self.step_index = step_index


class SettleTimeoutError(WptlabError):
    """Steady state not reached within the maximum simulated time."""
