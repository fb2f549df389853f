import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wehrlqpt.models import LMG, Cusp, Dicke, IbmLmg, Vibron2D
from wehrlqpt.surfaces import (
    critical_info,
    cusp_potential,
    cusp_stationary,
    dicke_equilibrium,
    dicke_point_to_zeta,
    dicke_surface,
    ibm_surface,
    ibm_xc,
    lmg_surface,
    minimize_surface,
    vibron_re,
    vibron_surface,
)

H = 1e-5


def d1(f, x):
    return (f(x + H) - f(x - H)) / (2 * H)


def test_cusp_examples():
    assert cusp_stationary(-1, 0) == pytest.approx([-1, 0, 1], abs=1e-15)
    assert cusp_potential(1, -1, 0) == cusp_potential(-1, -1, 0) == -0.25
    for v in (0.05, -0.05):
        lo, _, hi = cusp_stationary(-1, v)
        left_deeper = cusp_potential(lo, -1, v) < cusp_potential(hi, -1, v)
        assert left_deeper == (v > 0)


@given(st.floats(-3, 3), st.floats(-2, 2), st.floats(-2, 2))
def test_cusp_parity(x, u, v):
    assert cusp_potential(x, u, v) == pytest.approx(cusp_potential(-x, u, -v), abs=1e-12)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_cusp_roots_solve_cubic(u, v):
    roots = cusp_stationary(u, v)
    assert roots == sorted(roots)
    for x in roots:
        assert abs(x ** 3 + u * x + v) < 1e-9 * max(1.0, abs(x) ** 3)
    assert len(roots) == len(np.unique(np.round(roots, 8)))


def test_dicke_examples():
    p = Dicke(1, 1, 0.3, 10)
    assert dicke_equilibrium(p) == (0.0, 0.0)
    assert dicke_surface(0, 0, 0, p) == -5.0
    a, z = dicke_equilibrium(Dicke(1, 1, 1.0, 10))
    assert z == pytest.approx(math.sqrt(0.6), abs=1e-7)
    # <a + a^dag> at equilibrium
    assert 2 * a == pytest.approx(-6.123724, abs=1e-6)


def test_dicke_minimizer_matches_equilibrium():
    p = Dicke(1, 1, 1.0, 10)
    point, val = minimize_surface("dicke", p)
    alpha, zeta = dicke_point_to_zeta(point)
    a_e, z_e = dicke_equilibrium(p)
    # the surface is symmetric under (alpha, zeta) -> (-alpha, -zeta)
    s = 1 if alpha.real * a_e >= 0 else -1
    assert abs(s * alpha - a_e) < 1e-6
    assert abs(s * zeta - z_e) < 1e-6


def test_lmg_examples():
    assert lmg_surface(0, 1.3, 2.0, -4.0) == -1
    assert minimize_surface("lmg", {"gamma_x": 0.0, "gamma_y": 0.0})[1] == pytest.approx(-1, abs=1e-12)


@given(st.floats(0, math.pi), st.floats(0, 2 * math.pi), st.floats(-4, 2), st.floats(-4, 2))
def test_lmg_swap(theta, phi, gx, gy):
    assert lmg_surface(theta, phi, gx, gy) == pytest.approx(lmg_surface(theta, math.pi / 2 - phi, gy, gx), abs=1e-12)


def test_ibm_examples():
    assert ibm_xc(0) == 0.8
    assert ibm_xc(1 / math.sqrt(2)) == pytest.approx(9 / 11, abs=1e-12)
    assert ibm_surface(0.0, 0.3, 0.9) == 0.0


def test_vibron_examples():
    assert vibron_surface(0.0, 0.37) == 0.37
    assert vibron_re(0.2) == 0.0
    assert vibron_re(0.5) == pytest.approx(0.7745967, abs=1e-7)
    point, _ = minimize_surface("vibron2d", {"xi": 0.5})
    assert abs(point[0] - math.sqrt(0.6)) < 1e-6


def test_minimize_tie_break_and_validation():
    point, val = minimize_surface("cusp", {"u": -1.0, "v": 0.0})
    assert point[0] == pytest.approx(-1.0, abs=1e-8) and val == pytest.approx(-0.25)
    with pytest.raises(ValueError):
        minimize_surface("cusp", {"u": -1.0, "v": 0.0}, multistart=3)
    with pytest.raises(ValueError):
        minimize_surface("nope", {})


@pytest.mark.parametrize("xi", np.linspace(0.21, 0.95, 6))
def test_vibron_stationarity(xi):
    r = vibron_re(xi)
    assert abs(d1(lambda t: vibron_surface(t, xi), r)) < 1e-8


@pytest.mark.parametrize("lam", [0.6, 0.8, 1.3])
def test_dicke_stationarity(lam):
    p = Dicke(1, 1, lam, 8)
    a, z = dicke_equilibrium(p)
    theta = 2 * math.atan(z)
    assert abs(d1(lambda t: dicke_surface(t, theta, 0.0, p), a)) < 1e-8
    assert abs(d1(lambda t: dicke_surface(a, t, 0.0, p), theta)) < 1e-8


def test_critical_info():
    assert critical_info(Cusp(-1, 0, 0.1), "v").order == "first"
    assert critical_info(Cusp(0.3, 0, 0.1), "u").critical_value == 0.0
    assert critical_info(Dicke(1, 4, 0.3, 4), "lam").critical_value == 1.0
    assert critical_info(LMG(-2, 0, 10), "gamma_x", (-1, -4), (-3, -1)).critical_value == pytest.approx(-2)
    second = critical_info(LMG(-2, 0, 10), "gamma_x", (-1, 2), (-3, 1))
    assert second.critical_value == pytest.approx(-1) and second.order == "second"
    assert critical_info(IbmLmg(0.5, 0.5, 4), "x").order == "first"
    assert critical_info(Vibron2D(0.5, 4), "xi").critical_value == 0.2
    assert critical_info(Vibron2D(0.5, 4), "N") is None
