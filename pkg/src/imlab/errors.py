"""Error taxonomy shared across the package.

Exit-code mapping used by the CLI lives in cli.py: configuration and usage
problems exit 1, admissibility and certification failures exit 2, numerical
failures exit 3.
"""
from __future__ import annotations


class ImlabError(Exception):
    """Base class for all package errors."""


class ConfigError(ImlabError):
    """Malformed or inconsistent configuration input."""


class DimensionError(ConfigError):
    """A vector or matrix has the wrong shape for the requested operation."""


class DomainError(ConfigError):
    """An argument lies outside the mathematical domain of the operation."""


class AdmissibilityError(ImlabError):
    """A regularity exponent or constant violates its admissibility window."""


class GapViolationError(ImlabError):
    """Spectral gap conditions fail, or an iteration stops contracting."""


class CertificationError(ImlabError):
    """A sampled quantity exceeds its configured constant.

    Carries the witness sample so the failure is reproducible.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ConvergenceError(ImlabError):
    """A fixed-point iteration exhausted its iteration budget."""


class OverflowGuardError(ImlabError):
    """Backward integration grew past the overflow guard (horizon too long)."""
