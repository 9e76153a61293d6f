"""Exception hierarchy shared by the library and the CLI.

Every error carries a short ``category`` that the CLI prints on stderr as
``error[<category>]: <message>``.
"""

from __future__ import annotations


class QuenchLabError(Exception):
    category = "error"


class ConfigError(QuenchLabError):
    category = "config"


class DomainError(QuenchLabError, ValueError):
    """Input outside the domain where a quantity is defined."""

    category = "domain"


class PreconditionError(QuenchLabError, ValueError):
    category = "precondition"


class NegativeSpeedError(DomainError):
    category = "negative-speed"


class DivergentHorizonError(QuenchLabError):
    category = "divergent-horizon"


class ConvergenceError(QuenchLabError, RuntimeError):
    category = "convergence"


class InvariantViolationError(QuenchLabError, RuntimeError):
    category = "invariant"


class AmbiguousClassificationError(QuenchLabError):
    category = "ambiguous"


class DegeneracyError(QuenchLabError):
    category = "degeneracy"


class ZeroFieldError(QuenchLabError):
    category = "zero-field"


class SingularFitError(QuenchLabError):
    category = "singular-fit"
