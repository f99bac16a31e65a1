"""Exception hierarchy shared by all modules.

The CLI maps :class:`ParameterError` to exit status 2 and every other
:class:`BundleCurvError` to exit status 1.
"""

from __future__ import annotations


class BundleCurvError(Exception):
    """Base class. ``code`` is a stable one-line identifier used on stderr."""

    code = "error"


class ParameterError(BundleCurvError, ValueError):
    code = "parameter"


class DomainError(BundleCurvError, ValueError):
    code = "domain"


class DivergenceError(BundleCurvError, ArithmeticError):
    code = "divergence"

    def __init__(self, message: str, r: float):
        super().__init__(message)
        self.r = r


class MalformedProfileError(BundleCurvError, ValueError):
    code = "malformed-profile"


class DegenerateWarpError(BundleCurvError, ValueError):
    code = "degenerate-warp"

    def __init__(self, message: str, offending=()):
        super().__init__(message)
        self.offending = list(offending)


class DegenerateMetricError(BundleCurvError, ArithmeticError):
    code = "degenerate-metric"


class NoSuchBundleError(BundleCurvError, ValueError):
    code = "no-such-bundle"
