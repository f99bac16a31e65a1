"""Curvature-function ODE ``2 H'' + H^3 + alpha H = 0`` and its profiles.

Solutions are integrated from ``H(0) = A, H'(0) = 0`` with the classical
fixed-step RK4 scheme. Every solution carries the first integral

    4 H'^2 + H^4 + 2 alpha H^2 = E,    E = 2 alpha A^2 + A^4,

and the warp ``l = c H'`` of a rotational surface metric is built from it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import (
    BundleCurvError,
    DegenerateWarpError,
    DivergenceError,
    DomainError,
    MalformedProfileError,
    ParameterError,
)

OVERFLOW_GUARD = 1e8
DEFAULT_TOLERANCE = 1e-8


class ConservationError(BundleCurvError, ArithmeticError):
    code = "conservation"


@dataclass(frozen=True)
class OdeParams:
    alpha: float
    A: float
    r_max: float
    step: float

    def __post_init__(self):
        for name in ("alpha", "A", "r_max", "step"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        if self.r_max <= 0:
            raise ParameterError(f"r_max must be positive, got {self.r_max}")
        if self.step <= 0:
            raise ParameterError(f"step must be positive, got {self.step}")
        if self.step > self.r_max / 8:
            raise ParameterError(
                f"step {self.step} leaves fewer than 8 cells on [0, {self.r_max}]"
            )
        n = self.r_max / self.step
        if abs(n - round(n)) > 1e-6 * max(1.0, n):
            raise ParameterError(
                f"r_max={self.r_max} is not an integer multiple of step={self.step}"
            )

    @property
    def n_steps(self) -> int:
        return int(round(self.r_max / self.step))

    @property
    def conserved_constant(self) -> float:
        return 2.0 * self.alpha * self.A**2 + self.A**4


def second_derivative(H, alpha):
    """``H''`` recovered from the ODE."""
    return -0.5 * (H**3 + alpha * H)


def third_derivative(H, Hp, alpha):
    return -0.5 * (3.0 * H**2 + alpha) * Hp


def rk4_path(H0: float, Hp0: float, alpha: float, step: float, n: int):
    """March ``n`` RK4 steps of signed size ``step`` from ``(H0, Hp0)``.

    Returns the arrays ``(H, Hp)`` of length ``n + 1``. Raises
    :class:`DivergenceError` once ``|H|`` or ``|H'|`` passes the overflow guard.
    """
    H = np.empty(n + 1)
    Hp = np.empty(n + 1)
    y, v = float(H0), float(Hp0)
    H[0], Hp[0] = y, v
    h = float(step)
    half = 0.5 * h
    for i in range(1, n + 1):
        k1y, k1v = v, -0.5 * (y * y * y + alpha * y)
        y2, v2 = y + half * k1y, v + half * k1v
        k2y, k2v = v2, -0.5 * (y2 * y2 * y2 + alpha * y2)
        y3, v3 = y + half * k2y, v + half * k2v
        k3y, k3v = v3, -0.5 * (y3 * y3 * y3 + alpha * y3)
        y4, v4 = y + h * k3y, v + h * k3v
        k4y, k4v = v4, -0.5 * (y4 * y4 * y4 + alpha * y4)
        y = y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        v = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if not (abs(y) <= OVERFLOW_GUARD and abs(v) <= OVERFLOW_GUARD):
            raise DivergenceError(
                f"solution exceeded overflow guard {OVERFLOW_GUARD:g} at r={i * h!r}",
                r=i * h,
            )
        H[i], Hp[i] = y, v
    return H, Hp


@dataclass(frozen=True, eq=False)
class Profile:
    """Sampled solution ``(r, H, H')`` on a uniform grid.

    Off-grid values come from cubic Hermite interpolation: ``H`` from the
    pairs ``(H, H')`` and ``H'`` from ``(H', H'')`` with ``H''`` taken from
    the ODE. Higher derivatives are recovered from the ODE as well.
    """

    params: OdeParams
    r: np.ndarray
    H: np.ndarray
    Hp: np.ndarray
    conserved_constant: float
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        for name in ("r", "H", "Hp"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if len(self.r) == 0:
            raise MalformedProfileError("profile grid is empty")
        if not (len(self.r) == len(self.H) == len(self.Hp)):
            raise MalformedProfileError("r, H, Hp lengths differ")
        if len(self.r) > 1 and not np.all(np.diff(self.r) > 0):
            raise MalformedProfileError("grid is not strictly increasing in r")

    @property
    def alpha(self) -> float:
        return self.params.alpha

    def __len__(self):
        return len(self.r)

    @cached_property
    def _H_spline(self):
        return CubicHermiteSpline(self.r, self.H, self.Hp)

    @cached_property
    def _Hp_spline(self):
        return CubicHermiteSpline(self.r, self.Hp, second_derivative(self.H, self.alpha))

    def _check_domain(self, r):
        r = np.asarray(r, dtype=float)
        lo, hi = self.r[0], self.r[-1]
        slack = 1e-12 * max(1.0, abs(hi))
        if np.any(r < lo - slack) or np.any(r > hi + slack):
            raise DomainError(f"r outside profile range [{lo}, {hi}]")
        return r

    def derivatives(self, r, order: int = 2):
        """Return ``(H, H', ..., H^(order))`` at ``r`` (order at most 3)."""
        r = self._check_domain(r)
        H = self._H_spline(r)
        Hp = self._Hp_spline(r)
        out = [H, Hp]
        if order >= 2:
            out.append(second_derivative(H, self.alpha))
        if order >= 3:
            out.append(third_derivative(H, Hp, self.alpha))
        return tuple(out[: order + 1])

    def __call__(self, r):
        return self.derivatives(r, order=0)[0]


def integrate(params: OdeParams, tolerance: float = DEFAULT_TOLERANCE) -> Profile:
    """Solve the curvature ODE on ``[0, r_max]`` with ``H(0)=A, H'(0)=0``.

    ``tolerance`` bounds the conservation residual checked before the profile
    is returned; pass ``math.inf`` to skip the check (e.g. for coarse steps in
    convergence studies).
    """
    if not isinstance(params, OdeParams):
        raise ParameterError("params must be an OdeParams")
    n = params.n_steps
    H, Hp = rk4_path(params.A, 0.0, params.alpha, params.step, n)
    r = np.arange(n + 1) * params.step
    r[-1] = params.r_max
    prof = Profile(params, r, H, Hp, params.conserved_constant, tolerance)
    res = conservation_residual(prof)
    if not res <= tolerance:
        raise ConservationError(
            f"conservation residual {res:.3e} exceeds tolerance {tolerance:.3e}"
        )
    return prof


def conservation_terms(p: Profile) -> np.ndarray:
    """Pointwise ``4 H'^2 + H^4 + 2 alpha H^2 - E`` over the grid."""
    H, Hp = p.H, p.Hp
    H2 = H * H
    return 4.0 * Hp * Hp + H2 * H2 + 2.0 * p.alpha * H2 - p.conserved_constant


def conservation_residual(p: Profile) -> float:
    if len(p.r) == 0:
        raise MalformedProfileError("profile grid is empty")
    return float(np.max(np.abs(conservation_terms(p))))


def first_turning_point(p: Profile) -> float:
    """First zero of ``H'`` strictly after ``r = 0``.

    The sign change is bracketed on the grid and refined by bisection on the
    Hermite interpolant of ``H'``.
    """
    Hp = p.Hp
    s = np.sign(Hp[1:])
    nz = np.nonzero(s)[0]
    if len(nz) == 0:
        raise DomainError("H' vanishes identically; no turning point")
    s0 = s[nz[0]]
    flips = np.nonzero(s[nz[0]:] == -s0)[0]
    if len(flips) == 0:
        raise DomainError("H' has no sign change on the profile grid")
    j = nz[0] + flips[0] + 1  # first node with opposite sign
    lo, hi = p.r[j - 1], p.r[j]
    flo = float(p._Hp_spline(lo))
    if flo == 0.0:
        return float(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fm = float(p._Hp_spline(mid))
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def monotone_windows(p: Profile):
    """Grid intervals ``(r_lo, r_hi)`` on whose interior nodes ``H'`` keeps one sign.

    Intervals are split at nodes where ``H'`` is zero and at the last node
    before each sign change.
    """
    s = np.sign(p.Hp)
    n = len(s)
    breaks = {0, n - 1}
    breaks.update(np.nonzero(s == 0)[0].tolist())
    breaks.update(np.nonzero(s[:-1] * s[1:] < 0)[0].tolist())
    breaks = sorted(breaks)
    out = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        inner = s[a + 1 : b]
        if len(inner) and inner[0] != 0 and np.all(inner == inner[0]):
            out.append((float(p.r[a]), float(p.r[b])))
    return out


def first_window(p: Profile):
    ws = monotone_windows(p)
    if not ws:
        raise DegenerateWarpError("H' is not sign-definite on any grid interval")
    return ws[0]


def restrict(p: Profile, window) -> Profile:
    """Sub-profile on the grid nodes lying in the closed ``window``."""
    lo, hi = window
    mask = (p.r >= lo - 1e-12) & (p.r <= hi + 1e-12)
    if mask.sum() < 2:
        raise DomainError(f"window {window} holds fewer than 2 grid nodes")
    return Profile(p.params, p.r[mask], p.H[mask], p.Hp[mask], p.conserved_constant, p.tolerance)


def warp_from_profile(p: Profile, c: float, positive: bool = True) -> np.ndarray:
    """Samples of the warp ``l = c H'`` on the profile grid.

    ``H'`` must be nonzero with one sign on the interior of the grid. With
    ``positive=True`` the warp must also be positive there; with
    ``positive=False`` a negative warp is accepted (it describes the same
    metric on the oppositely oriented base).
    """
    if not math.isfinite(c) or c == 0:
        raise ParameterError("c must be finite and nonzero")
    if len(p.r) < 3:
        raise DegenerateWarpError("profile has no interior grid points")
    inner, inner_r = p.Hp[1:-1], p.r[1:-1]
    zeros = inner_r[inner == 0]
    if len(zeros):
        raise DegenerateWarpError(f"H' vanishes at {len(zeros)} interior grid points", offending=zeros)
    sign = np.sign(inner)
    if np.any(sign != sign[0]):
        flips = inner_r[1:][sign[1:] != sign[:-1]]
        raise DegenerateWarpError("H' changes sign in the interior", offending=flips)
    l = c * p.Hp
    if positive and np.any(l[1:-1] <= 0):
        raise DegenerateWarpError(
            "warp c*H' is not positive on the interior; flip the sign of c",
            offending=inner_r,
        )
    return l
