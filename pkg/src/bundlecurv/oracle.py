"""Finite-difference curvature of a metric on a 3D coordinate box.

Independent of every closed-form expression elsewhere in the package: the
only input is a function returning the metric components. First derivatives
use central differences, pure second derivatives the 3-point stencil and mixed
ones the 4-point cross stencil, all with one global ``fd_step``. The Cotton
tensor ``C_ijk = nabla_i S_jk - nabla_j S_ik`` takes one more central
difference of the Schouten tensor, so it reaches ``2 * fd_step`` from the
evaluation point.

Everything is vectorized over a leading batch axis of points.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateMetricError, DomainError, ParameterError

EIG_FLOOR = 1e-12


@dataclass(frozen=True)
class ChartMetric:
    """Metric components on a coordinate box.

    ``components`` maps an ``(N, 3)`` array of points to ``(N, 3, 3)``
    symmetric matrices and must be pure. ``killing_axes`` lists coordinates
    the components do not depend on; grid sweeps hold those at the box centre.
    """

    components: Callable[[np.ndarray], np.ndarray]
    box: np.ndarray
    fd_step: float
    killing_axes: tuple = ()
    name: str = "metric"

    def __post_init__(self):
        box = np.asarray(self.box, dtype=float)
        if box.shape != (3, 2) or np.any(box[:, 1] <= box[:, 0]):
            raise ParameterError("box must be 3 (lo, hi) pairs with lo < hi")
        object.__setattr__(self, "box", box)
        if not (math.isfinite(self.fd_step) and self.fd_step > 0):
            raise ParameterError("fd_step must be positive")

    def with_step(self, fd_step: float) -> "ChartMetric":
        return ChartMetric(self.components, self.box, fd_step, self.killing_axes, self.name)

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.asarray(self.components(x), dtype=float)


def _points(x):
    x = np.asarray(x, dtype=float)
    return x.reshape(-1, 3), x.ndim == 1


def _check_margin(m: ChartMetric, x, reach):
    lo = m.box[:, 0] + reach * m.fd_step
    hi = m.box[:, 1] - reach * m.fd_step
    free = [i for i in range(3) if i not in m.killing_axes]
    if np.any(x[:, free] < lo[free] - 1e-14) or np.any(x[:, free] > hi[free] + 1e-14):
        raise DomainError(f"point closer than {reach}*fd_step to the box boundary")


def inverse3(g):
    """Closed-form inverse of a batch of 3x3 matrices via the adjugate."""
    a, b, c = g[..., 0, 0], g[..., 0, 1], g[..., 0, 2]
    d, e, f = g[..., 1, 0], g[..., 1, 1], g[..., 1, 2]
    p, q, s = g[..., 2, 0], g[..., 2, 1], g[..., 2, 2]
    adj = np.empty_like(g)
    adj[..., 0, 0] = e * s - f * q
    adj[..., 0, 1] = c * q - b * s
    adj[..., 0, 2] = b * f - c * e
    adj[..., 1, 0] = f * p - d * s
    adj[..., 1, 1] = a * s - c * p
    adj[..., 1, 2] = c * d - a * f
    adj[..., 2, 0] = d * q - e * p
    adj[..., 2, 1] = b * p - a * q
    adj[..., 2, 2] = a * e - b * d
    det = a * adj[..., 0, 0] + b * adj[..., 1, 0] + c * adj[..., 2, 0]
    return adj / det[..., None, None], det


def _check_metric(g):
    if not np.allclose(g, np.swapaxes(g, -1, -2), rtol=0, atol=1e-12 * max(1.0, np.abs(g).max())):
        raise DegenerateMetricError("metric components are not symmetric")
    eig = np.linalg.eigvalsh(g)
    if np.any(eig[..., 0] <= EIG_FLOOR):
        raise DegenerateMetricError(
            f"metric not positive definite (min eigenvalue {eig[..., 0].min():.3e})"
        )


def metric_jet(m: ChartMetric, x):
    """``g``, ``dg[l,i,j] = d_l g_ij`` and ``ddg[l,k,i,j] = d_l d_k g_ij`` at points ``x``."""
    h = m.fd_step
    n = x.shape[0]
    E = np.eye(3) * h
    offsets = [np.zeros(3)]
    for i in range(3):
        offsets += [E[i], -E[i]]
    pairs = list(itertools.combinations(range(3), 2))
    for i, j in pairs:
        offsets += [E[i] + E[j], E[i] - E[j], -E[i] + E[j], -E[i] - E[j]]
    offsets = np.array(offsets)
    pts = (x[:, None, :] + offsets[None, :, :]).reshape(-1, 3)
    G = m(pts).reshape(n, len(offsets), 3, 3)
    g0 = G[:, 0]
    dg = np.empty((n, 3, 3, 3))
    ddg = np.empty((n, 3, 3, 3, 3))
    for i in range(3):
        gp, gm = G[:, 1 + 2 * i], G[:, 2 + 2 * i]
        dg[:, i] = (gp - gm) / (2 * h)
        ddg[:, i, i] = (gp - 2 * g0 + gm) / (h * h)
    for k, (i, j) in enumerate(pairs):
        base = 7 + 4 * k
        pp, pm, mp, mm = (G[:, base + q] for q in range(4))
        mixed = (pp - pm - mp + mm) / (4 * h * h)
        ddg[:, i, j] = mixed
        ddg[:, j, i] = mixed
    return g0, dg, ddg


def _connection(g, dg, ddg):
    ginv, _ = inverse3(g)
    # Gamma_{m i j} = 1/2 (d_i g_mj + d_j g_mi - d_m g_ij)
    low = 0.5 * (np.einsum("nimj->nmij", dg) + np.einsum("njmi->nmij", dg) - dg)
    gam = np.einsum("nkm,nmij->nkij", ginv, low)
    dlow = 0.5 * (
        np.einsum("nlimj->nlmij", ddg) + np.einsum("nljmi->nlmij", ddg) - ddg
    )
    dginv = -np.einsum("nka,nlab,nbm->nlkm", ginv, dg, ginv)
    dgam = np.einsum("nlkm,nmij->nlkij", dginv, low) + np.einsum("nkm,nlmij->nlkij", ginv, dlow)
    return ginv, gam, dgam


def christoffel(m: ChartMetric, x):
    """``Gamma[k, i, j] = Gamma^k_ij`` at ``x`` (a point or an ``(N, 3)`` batch)."""
    pts, single = _points(x)
    _check_margin(m, pts, 2)
    g, dg, ddg = metric_jet(m, pts)
    _check_metric(g)
    _, gam, _ = _connection(g, dg, ddg)
    return gam[0] if single else gam


def _curvature(m: ChartMetric, pts):
    g, dg, ddg = metric_jet(m, pts)
    _check_metric(g)
    ginv, gam, dgam = _connection(g, dg, ddg)
    # R^a_{bcd} = d_c Gamma^a_db - d_d Gamma^a_cb + Gamma^a_ce Gamma^e_db - Gamma^a_de Gamma^e_cb
    riem = (
        np.einsum("ncadb->nabcd", dgam)
        - np.einsum("ndacb->nabcd", dgam)
        + np.einsum("nace,nedb->nabcd", gam, gam)
        - np.einsum("nade,necb->nabcd", gam, gam)
    )
    ric = np.einsum("nabad->nbd", riem)
    ric = 0.5 * (ric + np.swapaxes(ric, 1, 2))
    scal = np.einsum("nbd,nbd->n", ginv, ric)
    return g, gam, riem, ric, scal


def riemann_ricci_scalar(m: ChartMetric, x):
    """``(R^a_bcd, Ric_bd, scal)`` at ``x``."""
    pts, single = _points(x)
    _check_margin(m, pts, 2)
    _, _, riem, ric, scal = _curvature(m, pts)
    if single:
        return riem[0], ric[0], float(scal[0])
    return riem, ric, scal


def _schouten(m, pts):
    g, gam, _, ric, scal = _curvature(m, pts)
    return g, gam, ric - 0.25 * scal[:, None, None] * g


def schouten_chart(m: ChartMetric, x):
    """``S = Ric - (scal/4) g`` as a bilinear form at ``x``."""
    pts, single = _points(x)
    _check_margin(m, pts, 2)
    _, _, S = _schouten(m, pts)
    return S[0] if single else S


def cotton(m: ChartMetric, x):
    """``C[i, j, k] = nabla_i S_jk - nabla_j S_ik`` at ``x``."""
    pts, single = _points(x)
    _check_margin(m, pts, 2)
    n = len(pts)
    h = m.fd_step
    _, gam, S = _schouten(m, pts)
    shifted = np.concatenate(
        [pts + s * h * np.eye(3)[i] for i in range(3) for s in (1.0, -1.0)]
    )
    _, _, Ss = _schouten(m, shifted)
    Ss = Ss.reshape(3, 2, n, 3, 3)
    dS = np.moveaxis((Ss[:, 0] - Ss[:, 1]) / (2 * h), 0, 1)  # (n, i, j, k)
    nabla = (
        dS
        - np.einsum("nmij,nmk->nijk", gam, S)
        - np.einsum("nmik,njm->nijk", gam, S)
    )
    C = nabla - np.swapaxes(nabla, 1, 2)
    return C[0] if single else C


@dataclass(frozen=True)
class CottonReport:
    sup_norm: float
    samples: list = field(repr=False)
    fd_step: float = 0.0

    def __post_init__(self):
        if not self.sup_norm >= 0:
            raise ValueError("sup_norm must be nonnegative")


def sweep_grid(m: ChartMetric, grid_density: int, reach: int = 2):
    """Interior evaluation points, ``grid_density`` per non-Killing axis."""
    if int(grid_density) != grid_density or grid_density < 1:
        raise ParameterError("grid_density must be a positive integer")
    axes = []
    for i in range(3):
        lo, hi = m.box[i]
        if i in m.killing_axes:
            axes.append(np.array([0.5 * (lo + hi)]))
            continue
        a, b = lo + reach * m.fd_step, hi - reach * m.fd_step
        if not b > a:
            raise DomainError(f"box axis {i} too narrow for fd_step {m.fd_step}")
        axes.append(np.linspace(a, b, int(grid_density)) if grid_density > 1 else np.array([0.5 * (a + b)]))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([a.ravel() for a in mesh], axis=1)


def cotton_residual(m: ChartMetric, grid_density: int) -> CottonReport:
    """Sup-norm of the coordinate Cotton components over an interior grid."""
    pts = sweep_grid(m, grid_density)
    C = cotton(m, pts)
    per_point = np.abs(C).reshape(len(pts), -1).max(axis=1)
    samples = [(tuple(map(float, p)), float(v)) for p, v in zip(pts, per_point)]
    return CottonReport(float(per_point.max()), samples, m.fd_step)


def euclidean(fd_step: float = 1e-2, box=((-1, 1), (-1, 1), (-1, 1))) -> ChartMetric:
    def comps(x):
        return np.broadcast_to(np.eye(3), (len(x), 3, 3)).copy()

    return ChartMetric(comps, np.asarray(box, float), fd_step, killing_axes=(0, 1, 2), name="flat")
