import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gamma

from bundlecurv import profile as P
from bundlecurv.errors import (
    DegenerateWarpError,
    DivergenceError,
    DomainError,
    MalformedProfileError,
    ParameterError,
)

# first zero of H' for alpha=0, A=1: half period of the quartic oscillator
TURN_CLOSED_FORM = gamma(0.25) ** 2 / math.sqrt(2 * math.pi)


def run(alpha, A, r_max, step, tol=math.inf):
    return P.integrate(P.OdeParams(alpha, A, r_max, step), tolerance=tol)


def test_equilibrium_is_constant():
    p = run(-1.0, 1.0, 5.0, 1e-3, P.DEFAULT_TOLERANCE)
    assert np.all(p.H == 1.0)
    assert np.all(p.Hp == 0.0)
    assert P.conservation_residual(p) == 0.0


def test_zero_solution():
    p = run(0.0, 0.0, 1.0, 1e-2, P.DEFAULT_TOLERANCE)
    assert np.all(p.H == 0.0)
    assert P.conservation_residual(p) == 0.0


def test_grid_layout():
    p = run(0.0, 1.0, 4.0, 1e-3)
    assert len(p) == 4001
    assert p.r[0] == 0.0 and p.r[-1] == pytest.approx(4.0, abs=1e-12)
    assert np.all(np.diff(p.r) > 0)
    assert p.Hp[0] == 0.0
    with pytest.raises(ValueError):
        p.H[0] = 3.0


def test_conservation_along_oscillation():
    p = run(0.0, 1.0, 4.0, 1e-3, P.DEFAULT_TOLERANCE)
    assert np.max(np.abs(4 * p.Hp**2 + p.H**4 - 1.0)) <= 1e-8


def test_fourth_order_conservation():
    r1 = P.conservation_residual(run(0.0, 1.0, 4.0, 1e-2))
    r2 = P.conservation_residual(run(0.0, 1.0, 4.0, 5e-3))
    assert 12 <= r1 / r2 <= 20


def test_turning_point_matches_closed_form_and_richardson():
    h = 1e-2
    t = P.first_turning_point(run(0.0, 1.0, 6.0, 1e-3))
    t8 = P.first_turning_point(run(0.0, 1.0, 6.0, h / 8))
    t16 = P.first_turning_point(run(0.0, 1.0, 6.0, h / 16))
    rich = (16 * t16 - t8) / 15
    assert abs(t - rich) < 1e-9
    assert abs(t - TURN_CLOSED_FORM) < 1e-9


def test_turning_point_needs_sign_change():
    with pytest.raises(DomainError):
        P.first_turning_point(run(-1.0, 1.0, 1.0, 1e-2))
    with pytest.raises(DomainError):
        P.first_turning_point(run(0.0, 1.0, 4.0, 1e-2))  # first zero lies past r = 4


def test_even_in_r():
    n = 2000
    Hf, Hpf = P.rk4_path(1.0, 0.0, 0.3, 1e-3, n)
    Hb, Hpb = P.rk4_path(1.0, 0.0, 0.3, -1e-3, n)
    assert np.max(np.abs(Hf - Hb)) <= 1e-14
    assert np.max(np.abs(Hpf + Hpb)) <= 1e-14


def test_divergence_guard_names_radius():
    # a huge initial slope makes the step far too coarse; RK4 goes unstable
    with pytest.raises(DivergenceError) as err:
        P.rk4_path(0.0, 1e7, 0.0, 1e-2, 1000)
    assert err.value.r > 0


@pytest.mark.parametrize(
    "kw",
    [
        dict(alpha=0.0, A=1.0, r_max=4.0, step=0.0),
        dict(alpha=0.0, A=1.0, r_max=4.0, step=-1e-3),
        dict(alpha=0.0, A=1.0, r_max=0.0, step=1e-3),
        dict(alpha=0.0, A=1.0, r_max=1.0, step=0.2),
        dict(alpha=0.0, A=1.0, r_max=1.0, step=0.03),
        dict(alpha=math.nan, A=1.0, r_max=1.0, step=0.01),
        dict(alpha=0.0, A=math.inf, r_max=1.0, step=0.01),
    ],
)
def test_bad_params(kw):
    with pytest.raises(ParameterError):
        P.OdeParams(**kw)


def test_tolerance_enforced():
    with pytest.raises(P.ConservationError):
        P.integrate(P.OdeParams(1.0, 2.0, 4.0, 0.05), tolerance=1e-12)


def test_malformed_profile():
    params = P.OdeParams(0.0, 1.0, 1.0, 0.1)
    with pytest.raises(MalformedProfileError):
        P.Profile(params, [], [], [], 1.0)
    with pytest.raises(MalformedProfileError):
        P.Profile(params, [0.0, 0.1], [1.0], [0.0, 0.0], 1.0)


def test_interpolation_reproduces_nodes_and_ode():
    p = run(0.0, 1.0, 4.0, 1e-3)
    r = p.r[100:110]
    H, Hp, Hpp = p.derivatives(r, order=2)
    assert np.allclose(H, p.H[100:110], atol=1e-15)
    assert np.allclose(Hp, p.Hp[100:110], atol=1e-15)
    assert np.allclose(Hpp, -0.5 * H**3, atol=1e-15)
    with pytest.raises(DomainError):
        p.derivatives(4.5)


def test_windows_split_at_sign_change():
    p = run(0.0, 1.0, 8.0, 1e-3)
    ws = P.monotone_windows(p)
    assert len(ws) == 2
    assert ws[0][0] == 0.0
    assert abs(ws[0][1] - TURN_CLOSED_FORM) < 2e-3
    sub = P.restrict(p, ws[0])
    assert np.all(sub.Hp[1:-1] < 0)


def test_warp_errors_and_sign():
    with pytest.raises(DegenerateWarpError):
        P.warp_from_profile(run(-1.0, 1.0, 1.0, 1e-2), 1.0)
    p = run(0.0, 1.0, 6.0, 1e-3)
    sub = P.restrict(p, P.first_window(p))
    l = P.warp_from_profile(sub, -1.0)
    assert np.all(l[1:-1] > 0)
    with pytest.raises(DegenerateWarpError):
        P.warp_from_profile(sub, 1.0)
    assert np.array_equal(P.warp_from_profile(sub, 1.0, positive=False), -l)
    with pytest.raises(ParameterError):
        P.warp_from_profile(sub, 0.0)
    with pytest.raises(DegenerateWarpError) as err:
        P.warp_from_profile(p, -1.0)  # crosses the turning point
    assert len(err.value.offending) > 0


@settings(max_examples=25, deadline=None)
@given(
    alpha=st.floats(-2, 2),
    A=st.floats(-2, 2),
)
def test_conservation_property(alpha, A):
    p = run(alpha, A, 2.0, 1e-3)
    scale = max(1.0, abs(p.conserved_constant))
    assert P.conservation_residual(p) <= 1e-9 * scale
    # H -> -H is a symmetry of the ODE
    q = run(alpha, -A, 2.0, 1e-3)
    assert np.allclose(q.H, -p.H, atol=1e-15)
