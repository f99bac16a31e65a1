"""Rotationally symmetric surfaces ``g = dr^2 + l(r)^2 dphi^2`` and radial functions.

Works in the frame ``X = d/dr``, ``Y = (1/l) d/dphi``. For a radial function
``u`` the Hessian is diagonal in this frame with entries ``u''`` and
``(l'/l) u'``, and the Gaussian curvature is ``K = -l''/l``.

The warp may be negative: only ``l**2`` enters the metric, and the sign of
``l`` selects the orientation ``l dr ^ dphi`` of the base. All curvature
expressions below are invariant under ``l -> -l``.

Laplacian convention: ``Delta = -trace(Hess)`` (nonnegative operator). With it
the trace identity reads ``Delta H + 2 H (H^2 - K) = 0`` on conformally flat
bundles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import profile as _profile
from .errors import DegenerateMetricError, DegenerateWarpError, DomainError, ParameterError
from .profile import Profile

WARP_FLOOR = 1e-12


class RadialFunction:
    """Scalar function of ``r`` with derivatives.

    Subclasses implement ``derivs(r, order)`` returning the tuple
    ``(f, f', ..., f^(order))``.
    """

    max_order = 2

    def derivs(self, r, order: int = 2):
        raise NotImplementedError

    def __call__(self, r):
        return self.derivs(r, 0)[0]

    def _need(self, order):
        if order > self.max_order:
            raise ParameterError(
                f"{type(self).__name__} provides derivatives up to order {self.max_order}"
            )

    @staticmethod
    def constant(value: float) -> "AnalyticRadial":
        v = float(value)
        zero = lambda r: np.zeros_like(np.asarray(r, dtype=float))
        return AnalyticRadial((lambda r: np.full_like(np.asarray(r, dtype=float), v), zero, zero, zero))


@dataclass(frozen=True)
class AnalyticRadial(RadialFunction):
    """Closed-form function given as ``(f, f', f'', ...)`` callables."""

    funcs: Sequence[Callable]

    @property
    def max_order(self):
        return len(self.funcs) - 1

    def derivs(self, r, order: int = 2):
        self._need(order)
        r = np.asarray(r, dtype=float)
        return tuple(np.asarray(f(r), dtype=float) * np.ones_like(r) for f in self.funcs[: order + 1])


@dataclass(frozen=True)
class ProfileFunction(RadialFunction):
    """``scale * H^(shift)`` for a profile ``H``.

    ``shift=0`` is the curvature function itself; ``shift=1`` with
    ``scale=c`` is the warp ``l = c H'``. Derivatives beyond the interpolated
    ``H, H'`` are recovered from the ODE, so ``l'' = c H'''`` is exact up to
    the interpolation error in ``(H, H')``.
    """

    profile: Profile
    scale: float = 1.0
    shift: int = 0
    max_order = 3

    def derivs(self, r, order: int = 2):
        self._need(order)
        H, Hp = self.profile.derivatives(r, order=1)
        a = self.profile.alpha
        seq = [H, Hp]
        need = order + self.shift
        if need >= 2:
            seq.append(_profile.second_derivative(H, a))
        if need >= 3:
            seq.append(_profile.third_derivative(H, Hp, a))
        if need >= 4:
            seq.append(-0.5 * (6.0 * H * Hp * Hp + (3.0 * H * H + a) * seq[2]))
        return tuple(self.scale * s for s in seq[self.shift : self.shift + order + 1])


@dataclass(frozen=True)
class HermiteGrid(RadialFunction):
    """Cubic Hermite interpolant of samples ``(r, f, f')``.

    Derivatives are the interpolant's own: ``f''`` converges at second order
    in the grid spacing, ``f'''`` is piecewise constant.
    """

    r: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    max_order = 3

    @cached_property
    def _spline(self):
        return CubicHermiteSpline(np.asarray(self.r), np.asarray(self.values), np.asarray(self.slopes))

    def derivs(self, r, order: int = 2):
        self._need(order)
        r = np.asarray(r, dtype=float)
        s = self._spline
        return tuple(np.asarray(s(r, k)) for k in range(order + 1))


@dataclass(frozen=True)
class RotMetric:
    r_interval: tuple
    warp: RadialFunction
    cell: float | None = None

    def __post_init__(self):
        lo, hi = (float(x) for x in self.r_interval)
        if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
            raise ParameterError(f"r_interval must have positive length, got {self.r_interval}")
        object.__setattr__(self, "r_interval", (lo, hi))
        probe = np.linspace(lo, hi, 259)[1:-1]
        l = self.warp(probe)
        if np.any(np.abs(l) <= WARP_FLOOR) or not (np.all(l > 0) or np.all(l < 0)):
            raise DegenerateWarpError(
                "warp vanishes or changes sign inside the interval",
                offending=probe[np.abs(l) <= WARP_FLOOR],
            )

    @property
    def orientation(self) -> int:
        lo, hi = self.r_interval
        return 1 if float(self.warp(0.5 * (lo + hi))) > 0 else -1

    @classmethod
    def from_profile(cls, p: Profile, c: float, window=None) -> "RotMetric":
        """Base metric with warp ``l = c H'`` on ``window`` (default: first monotone window)."""
        if window is None:
            window = _profile.first_window(p)
        sub = _profile.restrict(p, window)
        _profile.warp_from_profile(sub, c, positive=False)
        return cls((sub.r[0], sub.r[-1]), ProfileFunction(p, scale=c, shift=1), cell=p.params.step)

    @classmethod
    def from_samples(cls, r, l, lp) -> "RotMetric":
        r = np.asarray(r, dtype=float)
        return cls((r[0], r[-1]), HermiteGrid(r, np.asarray(l, float), np.asarray(lp, float)),
                   cell=float(np.min(np.diff(r))))

    def contains(self, r) -> bool:
        lo, hi = self.r_interval
        r = np.asarray(r)
        return bool(np.all((r > lo) & (r < hi)))

    def _require(self, r):
        if not self.contains(r):
            raise DomainError(f"r must lie inside the open interval {self.r_interval}")
        return np.asarray(r, dtype=float)


def gaussian_curvature(m: RotMetric, r):
    r = m._require(r)
    l, _, lpp = m.warp.derivs(r, 2)
    return -lpp / l


def gaussian_curvature_derivative(m: RotMetric, r):
    """``dK/dr = -l'''/l + l'' l' / l^2``."""
    r = m._require(r)
    l, lp, lpp, lppp = m.warp.derivs(r, 3)
    return -lppp / l + lpp * lp / (l * l)


def radial_hessian(m: RotMetric, u: RadialFunction, r):
    """``(Hess u(X,X), Hess u(Y,Y)) = (u'', (l'/l) u')``; the mixed entry is zero."""
    r = m._require(r)
    l, lp = m.warp.derivs(r, 1)
    _, up, upp = u.derivs(r, 2)
    return upp, lp / l * up


def sample_window(m: RotMetric, samples: int, margin_cells: int = 2):
    """Sample points for residual sweeps plus the window they span.

    The interval is shrunk by ``margin_cells`` cells at each end, where a cell
    is the metric's grid spacing if it has one and ``length/samples``
    otherwise. Leading/trailing points where ``|l|`` is below the warp floor
    are dropped as well.
    """
    if int(samples) != samples or samples < 8:
        raise ParameterError("samples must be an integer >= 8")
    lo, hi = m.r_interval
    cell = m.cell if m.cell else (hi - lo) / samples
    a, b = lo + margin_cells * cell, hi - margin_cells * cell
    if not b > a:
        raise DegenerateMetricError(f"empty sample window after shrinking {m.r_interval}")
    r = np.linspace(a, b, int(samples))
    ok = np.abs(m.warp(r)) > WARP_FLOOR
    if not ok.any():
        raise DegenerateMetricError("warp degenerate on the whole sample window")
    first, last = np.argmax(ok), len(ok) - 1 - np.argmax(ok[::-1])
    if not ok[first : last + 1].all():
        raise DegenerateMetricError("warp vanishes inside the sample window")
    r = r[first : last + 1]
    return r, (float(r[0]), float(r[-1]))


@dataclass(frozen=True)
class FlatnessReport:
    alpha_estimate: float
    hess_residual: float
    constraint_residual: float
    trace_residual: float
    grid: np.ndarray = field(repr=False)
    window: tuple = (0.0, 0.0)

    def __post_init__(self):
        for name in ("hess_residual", "constraint_residual", "trace_residual"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be nonnegative")


@dataclass(frozen=True)
class FrameCottonReport:
    """Sup-norms of the six frame components of the Cotton obstruction.

    Order: trace, (A,A)-Hessian, (B,B)-Hessian, mixed Hessian, A-derivative
    and B-derivative of ``K/2 - 3H^2/4``.
    """

    components: tuple
    window: tuple
    grid: np.ndarray = field(repr=False)

    def max(self) -> float:
        return max(self.components)


def _pointwise(m: RotMetric, H: RadialFunction, r):
    h, hp, hpp = H.derivs(r, 2)
    K = gaussian_curvature(m, r)
    hxx, hyy = radial_hessian(m, H, r)
    return h, hp, K, hxx, hyy


def flatness_residual(m: RotMetric, H: RadialFunction, samples: int = 512) -> FlatnessReport:
    """Residuals of ``Hess H = H(H^2-K) Id`` and ``2K - 3H^2 = alpha``.

    ``alpha`` is estimated as the median of ``2K - 3H^2`` over the samples.
    """
    r, window = sample_window(m, samples)
    h, _, K, hxx, hyy = _pointwise(m, H, r)
    f = h * (h * h - K)
    con = 2.0 * K - 3.0 * h * h
    alpha = float(np.median(con))
    lap = -(hxx + hyy)
    return FlatnessReport(
        alpha_estimate=alpha,
        hess_residual=float(max(np.max(np.abs(hxx - f)), np.max(np.abs(hyy - f)))),
        constraint_residual=float(np.max(np.abs(con - alpha))),
        trace_residual=float(np.max(np.abs(lap + 2.0 * f))),
        grid=r,
        window=window,
    )


def frame_cotton_components(m: RotMetric, H: RadialFunction, r):
    """The six frame components of ``C(X,Y,Z) = (nabla_X S)(Y,Z) - (nabla_Y S)(X,Z)``.

    Slots, in order: ``(A,B,T)``, ``(A,T,B)``, ``(B,T,A)``, ``(B,T,B)``,
    ``(A,B,B)``, ``(B,A,A)``. Closed forms for radial ``H`` (signs checked
    against the finite-difference Cotton tensor):

        1/2 (Delta H + 2H(H^2-K)),  -1/2 (Hess(A,A) - H(H^2-K)),
        1/2 (Hess(B,B) - H(H^2-K)),  1/2 Hess(A,B),
        A.(K/2 - 3H^2/4),  B.(K/2 - 3H^2/4).
    """
    h, hp, K, hxx, hyy = _pointwise(m, H, r)
    f = h * (h * h - K)
    lap = -(hxx + hyy)
    dK = gaussian_curvature_derivative(m, r)
    zero = np.zeros_like(h)
    return (
        0.5 * (lap + 2.0 * f),
        -0.5 * (hxx - f),
        0.5 * (hyy - f),
        zero,  # radial functions have no mixed Hessian term
        0.5 * dK - 1.5 * h * hp,
        zero,  # radial quantities are constant along B
    )


def dnabla_s_frame_residual(m: RotMetric, H: RadialFunction, samples: int = 512) -> FrameCottonReport:
    r, window = sample_window(m, samples)
    comps = frame_cotton_components(m, H, r)
    return FrameCottonReport(tuple(float(np.max(np.abs(c))) for c in comps), window, r)
