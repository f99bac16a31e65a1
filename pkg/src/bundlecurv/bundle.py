"""Circle-bundle total spaces over rotational surfaces, and adapted-frame curvature.

The total space carries the chart ``(r, phi, t)`` and the metric
``pi^* g + omega (x) omega`` with connection form ``omega = dt + f(r) dphi``.
Its curvature function is ``H = f' / l``. For the conformally flat family one
takes ``l = c H'`` and ``f = (c/2) H^2``.

Frame conventions: ``T = d/dt``, ``A`` the horizontal lift of ``d/dr``, ``B``
the horizontal lift of ``(1/l) d/dphi``; ``(T, A, B)`` is positively oriented
and ``J A = B``, ``J B = -A``, ``J T = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import oracle
from .errors import ParameterError
from .profile import Profile, first_window
from .surface import AnalyticRadial, ProfileFunction, RadialFunction, RotMetric, gaussian_curvature

T, A, B = 0, 1, 2


@dataclass(frozen=True)
class CircleBundleMetric:
    base: RotMetric
    H: RadialFunction
    connection: RadialFunction
    c: float | None = None
    profile: Profile | None = None
    name: str = "bundle"

    @property
    def window(self):
        return self.base.r_interval

    def components(self, r):
        """``(g_rr, g_phiphi, g_phit, g_tt)`` at radii ``r``."""
        r = np.asarray(r, dtype=float)
        l = self.base.warp(r)
        f = self.connection(r)
        return np.ones_like(r), l * l + f * f, f, np.ones_like(r)

    def chart(self, fd_step: float = 5e-3, box=None, perturbation=None) -> oracle.ChartMetric:
        """Chart metric for the oracle.

        ``box`` defaults to the window with 10% trimmed from each end in ``r``.
        ``perturbation``, if given, is a function of ``r`` added to ``g_phiphi``.
        """
        if box is None:
            lo, hi = self.window
            trim = 0.1 * (hi - lo)
            box = ((lo + trim, hi - trim), (0.0, 2 * math.pi), (0.0, 2 * math.pi))

        def comps(x):
            r = x[:, 0]
            grr, gpp, gpt, gtt = self.components(r)
            if perturbation is not None:
                gpp = gpp + perturbation(r)
            g = np.zeros((len(r), 3, 3))
            g[:, 0, 0] = grr
            g[:, 1, 1] = gpp
            g[:, 1, 2] = g[:, 2, 1] = gpt
            g[:, 2, 2] = gtt
            return g

        name = self.name + ("+perturbed" if perturbation is not None else "")
        return oracle.ChartMetric(comps, np.asarray(box, float), fd_step, killing_axes=(1, 2), name=name)

    def frame(self, r):
        """Chart components of ``(T, A, B)`` at each radius: array ``(N, 3, 3)``, rows are fields."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        l = self.base.warp(r)
        f = self.connection(r)
        E = np.zeros((len(r), 3, 3))
        E[:, T, 2] = 1.0
        E[:, A, 0] = 1.0
        E[:, B, 1] = 1.0 / l
        E[:, B, 2] = -f / l
        return E


def build_example(p: Profile, c: float, window=None) -> CircleBundleMetric:
    """Conformally flat total space with base warp ``c H'`` and ``omega = dt + (c/2) H^2 dphi``."""
    if not (math.isfinite(c) and c != 0):
        raise ParameterError("c must be finite and nonzero")
    if window is None:
        window = first_window(p)
    base = RotMetric.from_profile(p, c, window)
    H = ProfileFunction(p)

    def f(r):
        return 0.5 * c * p(r) ** 2

    def fp(r):
        h, hp = p.derivatives(r, order=1)
        return c * h * hp

    return CircleBundleMetric(base, H, AnalyticRadial((f, fp)), c=c, profile=p, name="example")


def lens_metric(d: int) -> CircleBundleMetric:
    """Degree-``d`` bundle over the round sphere of curvature ``4/d^2`` with ``H = -2/d``.

    The total space is the lens space ``L(|d|, 1)`` of curvature ``1/d^2``; the
    chart covers the complement of the two poles.
    """
    if int(d) != d or d == 0:
        raise ParameterError("degree must be a nonzero integer")
    rho = abs(d) / 2.0
    Hc = -2.0 / d
    base = RotMetric(
        (0.0, math.pi * rho),
        AnalyticRadial((
            lambda r: rho * np.sin(r / rho),
            lambda r: np.cos(r / rho),
            lambda r: -np.sin(r / rho) / rho,
            lambda r: -np.cos(r / rho) / rho**2,
        )),
    )
    conn = AnalyticRadial((
        lambda r: 0.5 * d * np.cos(r / rho),
        lambda r: -0.5 * d / rho * np.sin(r / rho),
    ))
    return CircleBundleMetric(base, RadialFunction.constant(Hc), conn, name=f"lens{d}")


def curvature_function_check(m: CircleBundleMetric, samples: int = 512) -> float:
    """Sup over the window of ``|f'/l - H|``, ``f'/l`` being the connection's curvature function."""
    lo, hi = m.window
    r = np.linspace(lo, hi, samples + 2)[1:-1]
    l = m.base.warp(r)
    _, fp = m.connection.derivs(r, 1)
    return float(np.max(np.abs(fp / l - m.H(r))))


@dataclass(frozen=True)
class FrameConnection:
    """``gamma[i, j, k] = g(nabla_{e_i} e_j, e_k)`` in the frame ``(T, A, B)``."""

    gamma: np.ndarray

    def nabla(self, field: int) -> np.ndarray:
        """Matrix ``M[i, k] = g(nabla_{e_i} e_field, e_k)``."""
        return self.gamma[:, field, :]


def levi_civita_frame(H_val: float, lambda_grad) -> FrameConnection:
    """Connection coefficients from the curvature function and ``grad lambda``.

    ``lambda_grad = (A.lambda, B.lambda)``; for the rotational frame it is
    ``(l'/l, 0)``.
    """
    la, lb = (float(v) for v in lambda_grad)
    h = 0.5 * float(H_val)
    gam = np.zeros((3, 3, 3))
    # nabla T = (H/2) J
    gam[A, T, B] = h
    gam[B, T, A] = -h
    # nabla_V A = g(V, H/2 T + J grad lambda) B + g(V, H/2 B) T, with J grad lambda = la B - lb A
    gam[T, A, B] = h
    gam[A, A, B] = -lb
    gam[B, A, B] = la
    gam[B, A, T] = h
    # nabla B is the negative transpose partner
    gam[T, B, A] = -h
    gam[A, B, A] = lb
    gam[B, B, A] = -la
    gam[A, B, T] = -h
    assert np.allclose(gam, -np.swapaxes(gam, 1, 2)), "frame connection must be metric-skew"
    return FrameConnection(gam)


@dataclass(frozen=True)
class FrameSchouten:
    s_tt: float
    s_tx: tuple
    s_hor: float

    @property
    def trace(self) -> float:
        return self.s_tt + 2.0 * self.s_hor

    def matrix(self) -> np.ndarray:
        """Bilinear form in the frame ``(T, A, B)``."""
        M = np.diag([self.s_tt, self.s_hor, self.s_hor])
        M[T, A] = M[A, T] = self.s_tx[0]
        M[T, B] = M[B, T] = self.s_tx[1]
        return M


def schouten_frame(H_val: float, K_val: float, Hprime_val: float) -> FrameSchouten:
    """Schouten tensor of the total space at a point with radial ``H``.

    ``S(T, X) = g(-J grad H / 2, X)`` with ``grad H = H' A`` gives the
    coefficients ``(0, -H'/2)`` against ``(A, B)``.
    """
    H, K, Hp = float(H_val), float(K_val), float(Hprime_val)
    return FrameSchouten(
        s_tt=-0.5 * K + 0.625 * H * H,
        s_tx=(0.0, -0.5 * Hp),
        s_hor=-0.375 * H * H + 0.5 * K,
    )


def horizontal_sectional_curvature(H_val: float, alpha: float) -> float:
    """Sectional curvature of the horizontal plane, ``alpha/2 + 3 H^2 / 4``."""
    return 0.5 * alpha + 0.75 * H_val * H_val


def schouten_along(m: CircleBundleMetric, r) -> list:
    """Closed-form :class:`FrameSchouten` at each radius of ``r``."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    h, hp = m.H.derivs(r, 1)
    K = gaussian_curvature(m.base, r)
    return [schouten_frame(a, b, c) for a, b, c in zip(h, K, hp)]


def oracle_schouten_frame(m: CircleBundleMetric, r, fd_step: float) -> np.ndarray:
    """Finite-difference Schouten tensor projected onto ``(T, A, B)``: ``(N, 3, 3)``."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    chart = m.chart(fd_step, box=((m.window[0], m.window[1]), (0.0, 2 * math.pi), (0.0, 2 * math.pi)))
    pts = np.stack([r, np.full_like(r, math.pi), np.full_like(r, math.pi)], axis=1)
    S = oracle.schouten_chart(chart, pts)
    E = m.frame(r)
    return np.einsum("nia,nab,njb->nij", E, S, E)
