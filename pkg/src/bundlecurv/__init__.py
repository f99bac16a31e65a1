"""Curvature of circle bundles over surfaces and their conformal flatness."""

from . import bundle, classify, oracle, profile, surface
from .errors import (
    BundleCurvError,
    DegenerateMetricError,
    DegenerateWarpError,
    DivergenceError,
    DomainError,
    MalformedProfileError,
    NoSuchBundleError,
    ParameterError,
)

__version__ = "0.1.0"
