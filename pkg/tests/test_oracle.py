import math

import numpy as np
import pytest

from bundlecurv import bundle as Bd
from bundlecurv import oracle as O
from bundlecurv import profile as P
from bundlecurv.errors import DegenerateMetricError, DomainError, ParameterError


def sphere_block(fd_step):
    def comps(x):
        g = np.zeros((len(x), 3, 3))
        g[:, 0, 0] = 1.0
        g[:, 1, 1] = np.sin(x[:, 0]) ** 2
        g[:, 2, 2] = 1.0
        return g

    return O.ChartMetric(comps, ((0.1, 3.0), (0, 2 * math.pi), (0, 1)), fd_step, killing_axes=(1, 2))


@pytest.fixture(scope="module")
def example():
    return Bd.build_example(P.integrate(P.OdeParams(0.0, 1.0, 6.0, 1e-3)), 1.0)


def test_euclidean_all_zero():
    m = O.euclidean(1e-2)
    x = np.array([0.1, -0.2, 0.3])
    assert np.all(O.christoffel(m, x) == 0)
    riem, ric, scal = O.riemann_ricci_scalar(m, x)
    assert np.all(riem == 0) and np.all(ric == 0) and scal == 0
    assert np.all(O.schouten_chart(m, x) == 0)
    assert O.cotton_residual(m, 3).sup_norm <= 1e-10


def test_sphere_christoffel():
    r = math.pi / 3
    gam = O.christoffel(sphere_block(1e-3), [r, 1.0, 0.5])
    assert gam[0, 1, 1] == pytest.approx(-math.sin(r) * math.cos(r), abs=1e-6)
    assert gam[1, 0, 1] == pytest.approx(math.cos(r) / math.sin(r), abs=1e-6)
    assert np.allclose(gam, np.swapaxes(gam, 1, 2))


def test_sphere_scalar():
    _, ric, scal = O.riemann_ricci_scalar(sphere_block(1e-3), [1.2, 1.0, 0.5])
    assert scal == pytest.approx(2.0, abs=1e-5)
    assert np.allclose(ric, ric.T)


def test_riemann_symmetries(example):
    riem, _, _ = O.riemann_ricci_scalar(example.chart(5e-3), [1.5, 1.0, 1.0])
    assert np.allclose(riem, -np.swapaxes(riem, 2, 3), atol=1e-12)
    bianchi = riem + np.einsum("abcd->acdb", riem) + np.einsum("abcd->adbc", riem)
    assert np.max(np.abs(bianchi)) <= 1e-8


def test_lens_constant_curvature():
    m = Bd.lens_metric(2).chart(2.5e-3)
    x = np.array([1.3, 2.0, 3.0])
    _, ric, scal = O.riemann_ricci_scalar(m, x)
    g = m(x)[0]
    assert np.max(np.abs(ric - 0.5 * g)) <= 1e-5
    assert scal == pytest.approx(1.5, abs=1e-5)
    assert np.max(np.abs(O.schouten_chart(m, x) - 0.125 * g)) <= 1e-5


def test_cotton_antisymmetric_and_tracefree(example):
    m = example.chart(5e-3)
    pts = O.sweep_grid(m, 5)
    C = O.cotton(m, pts)
    assert np.max(np.abs(C + np.swapaxes(C, 1, 2))) <= 1e-12
    ginv, _ = O.inverse3(m(pts))
    trace = np.einsum("njk,nijk->ni", ginv, C)
    assert np.max(np.abs(trace)) <= 1e-3


def test_perturbed_cotton_is_tracefree_but_large(example):
    # the trace identity holds for every metric, perturbed or not
    m = example.chart(5e-3, perturbation=lambda r: 0.1 * r**3)
    pts = O.sweep_grid(m, 4)
    C = O.cotton(m, pts)
    ginv, _ = O.inverse3(m(pts))
    assert np.max(np.abs(np.einsum("njk,nijk->ni", ginv, C))) <= 1e-3
    assert np.max(np.abs(C)) > 0.1


def test_curvature_error_halves_by_four():
    m = Bd.lens_metric(2)
    x = np.array([1.3, 2.0, 3.0])
    errs = []
    for h in (1e-2, 5e-3):
        chart = m.chart(h)
        _, _, scal = O.riemann_ricci_scalar(chart, x)
        errs.append(abs(scal - 1.5))
    assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_perturbation_dominates(example):
    base = O.cotton_residual(example.chart(5e-3), 12).sup_norm
    pert = O.cotton_residual(example.chart(5e-3, perturbation=lambda r: 0.1 * r**3), 12).sup_norm
    assert pert >= 10 * base


def test_report_sup_is_max_of_samples(example):
    rep = O.cotton_residual(example.chart(5e-3), 6)
    assert rep.sup_norm == max(v for _, v in rep.samples)
    assert rep.fd_step == 5e-3


def test_margin_and_degeneracy_errors():
    m = sphere_block(1e-2)
    with pytest.raises(DomainError):
        O.christoffel(m, [0.105, 1.0, 0.5])

    def singular(x):
        g = np.broadcast_to(np.eye(3), (len(x), 3, 3)).copy()
        g[:, 1, 1] = 0.0
        return g

    bad = O.ChartMetric(singular, ((-1, 1), (-1, 1), (-1, 1)), 1e-2)
    with pytest.raises(DegenerateMetricError):
        O.christoffel(bad, [0.0, 0.0, 0.0])
    with pytest.raises(ParameterError):
        O.ChartMetric(singular, ((-1, 1), (1, -1), (-1, 1)), 1e-2)
    with pytest.raises(ParameterError):
        O.sweep_grid(m, 0)


def test_inverse3():
    rng = np.random.default_rng(1)
    M = rng.normal(size=(20, 3, 3))
    M = M @ np.swapaxes(M, 1, 2) + np.eye(3)
    inv, det = O.inverse3(M)
    assert np.allclose(inv @ M, np.eye(3), atol=1e-12)
    assert np.allclose(det, np.linalg.det(M))


def test_batch_equals_single(example):
    m = example.chart(5e-3)
    pts = O.sweep_grid(m, 3)
    batch = O.cotton(m, pts)
    assert np.array_equal(batch[2], O.cotton(m, pts[2]))
