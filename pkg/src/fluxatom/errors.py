"""Exception hierarchy.

Three families map onto the CLI exit codes: input rejections (exit 2),
internal identity mismatches (exit 3) and numerical breakdowns (exit 3).
"""

from __future__ import annotations


class FluxatomError(Exception):
    """Base class for every error raised by the package."""


# -- input rejections -------------------------------------------------------

class ModelError(FluxatomError, ValueError):
    """Physically or structurally invalid input."""


class NonUnitaryS(ModelError):
    pass


class ZeroAlpha(ModelError):
    pass


class NonPositiveFrequency(ModelError):
    pass


class DimensionMismatch(ModelError):
    pass


class ZeroDrive(ModelError):
    pass


class StepTooLarge(ModelError):
    pass


class ForwardDirection(ModelError):
    pass


class TruncationTooCoarse(ModelError):
    pass


class StateOutOfDomain(ModelError):
    """A sampled state left the set of density matrices (step too large)."""


# -- numerical breakdowns ---------------------------------------------------

class NumericalError(FluxatomError, ArithmeticError):
    pass


class SingularMatrix(NumericalError):
    pass


class NonFinite(NumericalError):
    pass


# -- internal identity checks -----------------------------------------------

class IdentityMismatch(FluxatomError):
    """Two independent evaluations of the same quantity disagree."""


class Gamma2Mismatch(IdentityMismatch):
    pass


class ClosedFormMismatch(IdentityMismatch):
    pass


class FanoIdentityMismatch(IdentityMismatch):
    pass


# -- configuration ----------------------------------------------------------

class ConfigError(FluxatomError):
    pass


class ParseError(ConfigError):
    pass


class SchemaError(ConfigError):
    pass


class ValidationError(ConfigError):
    """Wraps a model-layer rejection raised while building a config."""
