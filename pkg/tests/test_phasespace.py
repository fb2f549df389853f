import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import roots_laguerre

from wehrlqpt.coherent import U3Full, glauber_table, product_amplitudes, glauber_amplitudes, su2_amplitudes, \
    su2_table, u3_amplitudes, u3_table_w
from wehrlqpt.errors import ConvergenceError, GeometryError
from wehrlqpt.hamiltonians import GroundState, ground_state
from wehrlqpt.models import LMG, Cusp, Dicke, DickeProduct, Fock1D, IbmLmg, Spin, U3Block, Vibron2D
from wehrlqpt.phasespace import (
    cp2_grid,
    husimi,
    laguerre_rule,
    make_grid,
    plane_grid,
    refine_until,
    sphere_grid,
    wehrl_and_norm,
    wehrl_entropy,
)
from wehrlqpt.surfaces import vibron_re


def probe(values, basis):
    return GroundState(np.asarray(values), 0.0, basis)


def lieb_sphere(two_j):
    return two_j / (two_j + 1)


def lieb_cp2(N):
    return N * (3 + 2 * N) / ((N + 1) * (N + 2))


# --- grids ------------------------------------------------------------------


def test_laguerre_rule_matches_scipy():
    x, wex = laguerre_rule(60)
    xs, ws = roots_laguerre(60)
    assert np.allclose(x, xs, rtol=1e-13)
    assert np.allclose(wex, ws * np.exp(xs), rtol=1e-10)


def test_laguerre_rule_large_n_moments():
    x, wex = laguerre_rule(800)
    w = wex * np.exp(-x)
    assert np.all(np.isfinite(wex)) and np.all(wex > 0)
    for k in range(6):
        assert math.fsum(w * x ** k) == pytest.approx(math.factorial(k), rel=1e-11)


def test_plane_grid_basics():
    g = plane_grid(11, 21)
    assert g.size == 11 * 21 and np.all(g.weights > 0)
    f = glauber_table(g.coords["alpha"], 10)
    gram = (f.conj().T * g.weights) @ f
    assert np.max(np.abs(gram - np.eye(11))) < 1e-12
    with pytest.raises(ValueError):
        plane_grid(0, 4)


def test_plane_grid_scale():
    g = plane_grid(12, 25, scale=2.0)
    # integral of exp(-|a|^2/2) d^2a/pi = 2
    assert math.fsum(g.weights * np.exp(-np.abs(g.coords["alpha"]) ** 2 / 2)) == pytest.approx(2.0, rel=1e-12)


@pytest.mark.parametrize("two_j", [1, 2, 7, 20, 40])
def test_sphere_grid_total_and_identity(two_j):
    g = sphere_grid(two_j, two_j + 1, 2 * two_j + 2)
    assert abs(math.fsum(g.weights) - (two_j + 1)) < 1e-12
    f = su2_table(g.coords["theta"], g.coords["phi"], two_j)
    gram = (f.conj().T * g.weights) @ f
    assert np.max(np.abs(gram - np.eye(two_j + 1))) < 1e-12


@pytest.mark.parametrize("N", [1, 2, 4, 8])
def test_cp2_grid_total_and_identity(N):
    g = cp2_grid(N, N + 1, 2 * N + 1)
    dim = (N + 1) * (N + 2) // 2
    assert abs(math.fsum(g.weights) - dim) < 1e-10
    c = g.coords
    f = u3_table_w(c["w1"], c["w2"], c["phi1"], c["phi2"], N)
    gram = (f.conj().T * g.weights) @ f
    assert np.max(np.abs(gram - np.eye(dim))) < 1e-10


def test_cp2_l_symmetric_block_identity():
    N = 6
    g = cp2_grid(N, N + 1, 2 * N + 1, l_symmetric=True)
    c = g.coords
    f = u3_table_w(c["w1"], c["w2"], c["phi1"], c["phi2"], N, l_filter=0)
    gram = (f.conj().T * g.weights) @ f
    assert np.max(np.abs(gram - np.eye(U3Block(N, 0).dim))) < 1e-10


def test_cp2_reduced_grid_matches_full_for_l0():
    gs = ground_state(Vibron2D(0.45, 4))
    w_full, n_full = wehrl_and_norm(gs, cp2_grid(4, 24, 24))
    w_red, n_red = wehrl_and_norm(gs, cp2_grid(4, 24, 24, l_symmetric=True))
    assert abs(w_full - w_red) < 1e-12 and n_full < 1e-12 and n_red < 1e-12


# --- Husimi and Wehrl -------------------------------------------------------


def test_husimi_self_overlap_is_one():
    two_j = 9
    g = sphere_grid(two_j, 10, 20)
    i = 37
    state = probe(su2_amplitudes(g.coords["theta"][i], g.coords["phi"][i], two_j).values, Spin(two_j))
    field = husimi(state, g)
    assert field.q_values[i] == pytest.approx(1.0, abs=1e-14)
    assert np.all((field.q_values >= 0) & (field.q_values <= 1))
    assert field.norm_deficit < 1e-12


def test_husimi_geometry_mismatch():
    state = probe(np.eye(5)[0], Spin(4))
    with pytest.raises(GeometryError):
        husimi(state, plane_grid(4, 4))
    with pytest.raises(GeometryError):
        husimi(state, sphere_grid(6, 8, 8))
    with pytest.raises(GeometryError):
        husimi(state, cp2_grid(4, 4, 4))


def test_wehrl_entropy_matches_streamed_value():
    gs = ground_state(LMG(-3, 1, 14))
    g = sphere_grid(14, 30, 60)
    w1 = wehrl_entropy(husimi(gs, g), g)
    w2, _ = wehrl_and_norm(gs, g)
    assert abs(w1 - w2) < 1e-13


def test_glauber_coherent_state():
    st_ = probe(glauber_amplitudes(1.2 - 0.5j, 60).values, Fock1D(60))
    w, _ = refine_until(st_, w_tol=1e-10)
    assert w == pytest.approx(1.0, abs=1e-8)


def test_fock_one():
    w, diag = refine_until(probe(np.eye(2)[1], Fock1D(1)))
    assert w == pytest.approx(1 + np.euler_gamma, abs=1e-6)
    assert diag["norm_deficit"] < 1e-6


def test_spin_cat():
    two_j = 40
    a = su2_amplitudes(math.pi / 2, 0, two_j).values
    b = su2_amplitudes(math.pi / 2, math.pi, two_j).values
    cat = (a + b) / np.linalg.norm(a + b)
    w, _ = refine_until(probe(cat, Spin(two_j)))
    assert w == pytest.approx(40 / 41 + math.log(2), abs=0.02)


def test_u3_coherent_state():
    v = u3_amplitudes(0.6 - 0.2j, -0.3 + 0.9j, 8).values
    w, _ = refine_until(probe(v, U3Full(8)), w_tol=1e-8)
    assert w == pytest.approx(lieb_cp2(8), abs=1e-6)


def test_dicke_product_state():
    a = glauber_amplitudes(0.8 + 0.1j, 40)
    b = su2_amplitudes(1.1, 0.4, 6)
    st_ = probe(product_amplitudes(a, b).values, DickeProduct(40, 6))
    w, _ = refine_until(st_, w_tol=1e-8)
    assert w == pytest.approx(1 + 6 / 7, abs=1e-7)


def test_refine_until_examples():
    v = su2_amplitudes(0.7, 2.1, 10).values
    w, diag = refine_until(probe(v, Spin(10)), w_tol=1e-9)
    assert w == pytest.approx(10 / 11, abs=1e-8) and len(diag["ladder"]) == 2
    w, diag = refine_until(probe(np.ones(1), Fock1D(0)))
    assert w == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ConvergenceError) as info:
        refine_until(probe(v, Spin(10)), w_tol=0.0, max_nodes=1)
    assert "last_values" in info.value.diagnostics
    with pytest.raises(ValueError):
        refine_until(probe(v, Spin(10)), norm_tol=0.0)


def test_explicit_start_resolution():
    v = su2_amplitudes(0.7, 2.1, 10).values
    _, diag = refine_until(probe(v, Spin(10)), start=(12, 22))
    assert diag["ladder"][0]["resolution"] == (12, 22)


# --- properties on model ground states ----------------------------------------


GROUND_STATES = [
    (Cusp(-1, 0.0, 0.1), 1.0),
    (Cusp(-0.3, 0.05, 0.1), 1.0),
    (Dicke(1, 1, 0.7, 6), 1 + 6 / 7),
    (LMG(-3, 1, 20), lieb_sphere(20)),
    (LMG(0.5, 0.5, 15), lieb_sphere(15)),
    (IbmLmg(0.75, 0.0, 40), lieb_sphere(40)),
    (Vibron2D(0.4, 10), lieb_cp2(10)),
]


@pytest.mark.parametrize("params,bound", GROUND_STATES)
def test_ground_state_lieb_bound_and_norm(params, bound):
    gs = ground_state(params)
    w, diag = refine_until(gs)
    assert w >= bound - 10 * 1e-6
    assert diag["norm_deficit"] <= 1e-6
    q = husimi(gs, make_grid(gs.basis, diag["ladder"][0]["resolution"])).q_values
    assert np.all((q >= 0) & (q <= 1))


@settings(max_examples=6, deadline=None)
@given(st.floats(-3.5, 1.5), st.floats(-3.5, 1.5))
def test_lmg_swap_invariance(gx, gy):
    # a fixed grid that resolves N=16 far below 1e-8; identical nodes on both sides
    g = sphere_grid(16, 80, 160)
    w1, _ = wehrl_and_norm(ground_state(LMG(gx, gy, 16)), g)
    w2, _ = wehrl_and_norm(ground_state(LMG(gy, gx, 16)), g)
    assert abs(w1 - w2) <= 1e-8


@pytest.mark.parametrize("v", [0.003, 0.05, 0.2])
def test_cusp_mirror_wehrl(v):
    w1, _ = refine_until(ground_state(Cusp(-1, v, 0.1)))
    w2, _ = refine_until(ground_state(Cusp(-1, -v, 0.1)))
    assert abs(w1 - w2) <= 1e-6


def test_streamed_sums_reproducible():
    gs = ground_state(Dicke(1, 1, 0.8, 4))
    g = make_grid(gs.basis, (20, 40, 8, 12))
    assert wehrl_and_norm(gs, g) == wehrl_and_norm(gs, g)


@pytest.mark.parametrize("N", [8, 16])
def test_vibron_bent_state_is_projected_ring(N):
    # deep in the bent phase the l=0 ground state is the rotation-averaged
    # coherent state; its entropy excess grows with N instead of saturating
    xi = 0.6
    r = vibron_re(xi)
    a = u3_amplitudes(r / math.sqrt(2), -r / math.sqrt(2), N, l_filter=0).values
    proj = a / np.linalg.norm(a)
    gs = ground_state(Vibron2D(xi, N))
    assert abs(np.vdot(proj, gs.coefficients)) > 0.9998
    w_proj, _ = refine_until(probe(proj, U3Block(N, 0)))
    w_gs, _ = refine_until(gs)
    assert abs(w_gs - w_proj) < 0.01
    assert abs(w_proj - lieb_cp2(N) - 0.5 * math.log(N)) < 0.02
