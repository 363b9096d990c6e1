"""Exception types shared across the package."""


class SpectrumGameError(Exception):
    """Base class for all package errors."""


class InvalidInputError(SpectrumGameError, ValueError):
    """Malformed or inconsistent input data (bad dimensions, signs, keys)."""


class DegenerateMultiplierError(SpectrumGameError, ValueError):
    """Probabilistic interference multiplier is non-positive for some channel."""


class SolverFailureError(SpectrumGameError, RuntimeError):
    """A numerical routine failed to meet its tolerance."""
