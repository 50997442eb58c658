"""Exception hierarchy shared across the package."""


class PrefoptError(Exception):
    """Base class for all package errors."""


class InvalidValueError(PrefoptError, ValueError):
    """A numeric input was NaN, infinite, or otherwise unusable."""


class DomainError(PrefoptError, ValueError):
    """A point lies outside the feasible box or has the wrong dimension."""


class DuplicatePointError(PrefoptError, ValueError):
    """A point coincides (within tolerance) with one already sampled."""


class InsufficientPreferencesError(PrefoptError, ValueError):
    """Fitting or cross-validation was asked to run without enough comparisons."""


class InvalidModelError(PrefoptError, ValueError):
    """A quadratic program with a non-PSD cost matrix (or inconsistent shapes)."""


class FitError(PrefoptError, RuntimeError):
    """Surrogate fitting failed; carries the preference indices involved."""

    def __init__(self, message, preference_indices=()):
        super().__init__(message)
        self.preference_indices = tuple(preference_indices)


class DescriptorError(PrefoptError, RuntimeError):
    """A descriptor function failed; carries the descriptor name and point index."""

    def __init__(self, message, descriptor=None, point_index=None):
        super().__init__(message)
        self.descriptor = descriptor
        self.point_index = point_index


class InstabilityError(PrefoptError, RuntimeError):
    """Simulation blew up (non-finite state); carries the offending parameters."""

    def __init__(self, message, params=None):
        super().__init__(message)
        self.params = params


class ProtocolError(PrefoptError, RuntimeError):
    """A loop or session operation was called out of order (stale query, replay)."""


class ConfigError(PrefoptError, ValueError):
    """An invalid configuration value; carries per-field diagnostics."""

    def __init__(self, message, fields=None):
        super().__init__(message)
        self.fields = dict(fields or {})


class AbortedRunError(PrefoptError, RuntimeError):
    """An autonomous run died mid-way; the partial trace is preserved."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class BenchError(PrefoptError, RuntimeError):
    """Monte Carlo harness failure (too many failed runs, bad reference)."""
