"""Classical energy surfaces, their equilibria, and analytic critical points.

The surfaces are coherent-state expectation values of the model
Hamiltonians. :func:`minimize_surface` locates their minima numerically so
that every closed-form equilibrium here can be checked independently.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .models import LMG, Cusp, Dicke, IbmLmg, Vibron2D

# ---------------------------------------------------------------------------
# cusp


def cusp_potential(x, u, v):
    return x ** 4 / 4 + u * x ** 2 / 2 + v * x


def cusp_stationary(u: float, v: float) -> list[float]:
    """Distinct real roots of x^3 + u x + v = 0, ascending."""
    if u == 0 and v == 0:
        return [0.0]
    # rescale x = s y so the discriminant cannot under- or overflow
    s = max(math.sqrt(abs(u)), abs(v) ** (1 / 3))
    a, b = u / s ** 2, v / s ** 3
    disc = -(4 * a ** 3 + 27 * b ** 2)
    if a == 0:
        roots = [float(np.cbrt(-b))]
    elif disc > 0:
        r = 2 * math.sqrt(-a / 3)
        arg = (3 * b / (2 * a)) * math.sqrt(-3 / a)
        t = math.acos(max(-1.0, min(1.0, arg))) / 3
        roots = [r * math.cos(t - 2 * math.pi * k / 3) for k in range(3)]
    elif disc < 0:
        q = math.sqrt(b * b / 4 + a ** 3 / 27)
        roots = [float(np.cbrt(-b / 2 + q) + np.cbrt(-b / 2 - q))]
    else:
        roots = [3 * b / a, -3 * b / (2 * a)]
    polished = []
    for y in roots:
        for _ in range(3):
            d = 3 * y * y + a
            if d == 0:
                break
            y = y - (y ** 3 + a * y + b) / d
        polished.append(s * y)
    polished.sort()
    out = []
    for x in polished:
        if not out or abs(x - out[-1]) > 1e-9 * max(1.0, s):
            out.append(x)
    return out


# ---------------------------------------------------------------------------
# Dicke


def dicke_surface(alpha, theta, phi, params: Dicke) -> float:
    """<alpha, zeta|H|alpha, zeta> with zeta = tan(theta/2) e^{-i phi}.

    Written with (|z|^2-1)/(|z|^2+1) = -cos(theta) and
    Re z/(1+|z|^2) = sin(theta) cos(phi)/2 so theta = pi is regular.
    """
    j = params.j
    return (params.omega * abs(alpha) ** 2
            - j * params.omega0 * math.cos(theta)
            + params.lam * math.sqrt(2 * j) * 2 * complex(alpha).real * math.sin(theta) * math.cos(phi))


def dicke_equilibrium(params: Dicke) -> tuple[float, float]:
    """(alpha_e, zeta_e) minimizing :func:`dicke_surface`; zero in the normal phase.

    alpha_e is the coherent amplitude. The field quadrature <a + a^dag> at
    equilibrium is 2 alpha_e = -sqrt(2j) sqrt(omega0/omega) (lam/lam_c)
    sqrt(1 - lam_c^4/lam^4).
    """
    lam, lc = params.lam, params.lambda_c
    if lam < lc:
        return 0.0, 0.0
    alpha = -0.5 * (math.sqrt(2 * params.j) * math.sqrt(params.omega0 / params.omega) * (lam / lc)
                    * math.sqrt(1 - lc ** 4 / lam ** 4))
    zeta = math.sqrt((lam ** 2 - lc ** 2) / (lam ** 2 + lc ** 2))
    return alpha, zeta


# ---------------------------------------------------------------------------
# LMG, IBM-LMG, 2DVM


def lmg_surface(theta, phi, gamma_x, gamma_y):
    """Scaled LMG surface <zeta|H|zeta>/(2 omega j), constant term dropped."""
    s2 = math.sin(theta) ** 2
    return -math.cos(theta) + s2 * (gamma_x * math.cos(phi) ** 2 + gamma_y * math.sin(phi) ** 2) / 2


def ibm_surface(beta, x, y):
    """Thermodynamic-limit IBM-LMG surface per boson."""
    b2 = beta * beta
    return b2 / (1 + b2) ** 2 * (5 * x - 4 + 4 * beta * y * (x - 1) + b2 * (x + y * y * (x - 1)))


def ibm_xc(y):
    return (4 + y * y) / (5 + y * y)


def vibron_surface(r, xi):
    r2 = r * r
    return (1 - xi) * r2 / (1 + r2) + xi * ((1 - r2) / (1 + r2)) ** 2


def vibron_re(xi):
    if xi <= 0.2:
        return 0.0
    return math.sqrt((5 * xi - 1) / (3 * xi + 1))


# ---------------------------------------------------------------------------
# critical points


@dataclass(frozen=True)
class CriticalInfo:
    model: str
    control: str
    critical_value: float
    order: str
    equilibrium: dict = field(default_factory=dict)


def _lmg_line_critical(slope, offset, lo, hi):
    """Critical gamma_x on the line gamma_y = slope*gamma_x + offset within [lo, hi]."""
    found = []
    if slope != 1:
        gx = offset / (1 - slope)
        if gx < -1 and lo < gx < hi:
            found.append((gx, "first"))
    gx = -1.0
    gy = slope * gx + offset
    if gy > -1 and lo < gx < hi:
        found.append((gx, "second"))
    if slope != 0:
        gx = (-1 - offset) / slope
        if gx > -1 and lo < gx < hi:
            found.append((gx, "second"))
    return found


def critical_info(params, control: str, line=None, span=None) -> CriticalInfo | None:
    """Analytic critical point crossed when ``control`` varies.

    ``line`` is (slope, offset) for LMG trajectories gamma_y = slope*gamma_x + offset;
    ``span`` the (start, stop) of the sweep, used to pick among candidates.
    Returns None when no analytic value is known for the trajectory.
    """
    lo, hi = (-math.inf, math.inf) if span is None else (min(span), max(span))
    if isinstance(params, Cusp):
        if control == "v" and params.u < 0:
            xs = cusp_stationary(params.u, 0.0)
            return CriticalInfo("cusp", "v", 0.0, "first", {"stationary": xs})
        if control == "u" and params.v == 0:
            return CriticalInfo("cusp", "u", 0.0, "second", {})
        return None
    if isinstance(params, Dicke) and control == "lam":
        a, z = dicke_equilibrium(params)
        return CriticalInfo("dicke", "lam", params.lambda_c, "second", {"alpha_e": a, "zeta_e": z})
    if isinstance(params, LMG) and control == "gamma_x" and line is not None:
        found = _lmg_line_critical(line[0], line[1], lo, hi)
        if len(found) == 1:
            gx, order = found[0]
            return CriticalInfo("lmg", "gamma_x", gx, order, {})
        return None
    if isinstance(params, IbmLmg) and control == "x":
        return CriticalInfo("ibm_lmg", "x", ibm_xc(params.y), "second" if params.y == 0 else "first", {})
    if isinstance(params, Vibron2D) and control == "xi":
        return CriticalInfo("vibron2d", "xi", 0.2, "second", {"r_e": vibron_re(params.xi)})
    return None


# ---------------------------------------------------------------------------
# numerical minimization


def _surface_problem(model, params):
    """(objective over a coordinate tuple, box bounds, periodic flags)."""
    if model == "cusp":
        u, v = params["u"], params["v"]
        R = 2 + math.sqrt(abs(u)) + abs(v) ** (1 / 3)
        return (lambda p: cusp_potential(p[0], u, v)), [(-R, R)], [False]
    if model == "dicke":
        p = params if isinstance(params, Dicke) else Dicke(**params)
        A = p.lam * math.sqrt(2 * p.j) / p.omega + 1
        return ((lambda q: dicke_surface(complex(q[0], q[1]), q[2], q[3], p)),
                [(-A, A), (-1.0, 1.0), (0.0, math.pi), (0.0, 2 * math.pi)],
                [False, False, False, True])
    if model == "lmg":
        gx, gy = params["gamma_x"], params["gamma_y"]
        return ((lambda q: lmg_surface(q[0], q[1], gx, gy)),
                [(0.0, math.pi), (0.0, 2 * math.pi)], [False, True])
    if model == "ibm_lmg":
        x, y = params["x"], params["y"]
        return (lambda q: ibm_surface(q[0], x, y)), [(-20.0, 20.0)], [False]
    if model == "vibron2d":
        xi = params["xi"]
        return (lambda q: vibron_surface(q[0], xi)), [(0.0, 10.0)], [False]
    raise ValueError(f"unknown model {model!r}")


def _clamp(p, bounds, periodic):
    out = []
    for x, (lo, hi), per in zip(p, bounds, periodic):
        if per:
            x = lo + (x - lo) % (hi - lo)
        else:
            x = min(max(x, lo), hi)
        out.append(x)
    return tuple(out)


def _pattern_descent(f, start, step, bounds, periodic, xtol=1e-10, max_iter=20000):
    """Compass search: poll +-step along each axis, halve on failure."""
    p = _clamp(start, bounds, periodic)
    fp = f(p)
    steps = list(step)
    it = 0
    while max(steps) > xtol and it < max_iter:
        it += 1
        improved = False
        for i in range(len(p)):
            for sgn in (1.0, -1.0):
                q = list(p)
                q[i] += sgn * steps[i]
                q = _clamp(q, bounds, periodic)
                fq = f(q)
                if fq < fp:
                    p, fp = q, fq
                    improved = True
                    break
        if not improved:
            steps = [s / 2 for s in steps]
    return p, fp


def minimize_surface(model: str, params, multistart: int = 8):
    """Global minimum of a model surface.

    A coarse grid (``multistart`` points per coordinate) seeds the
    ``multistart`` best starts, each refined by pattern descent. Values
    within 1e-12 count as ties and go to the lexicographically smallest
    point. Returns (point tuple, value); coordinates are (x,) for the cusp,
    (Re alpha, Im alpha, theta, phi) for Dicke, (theta, phi) for LMG,
    (beta,) for IBM-LMG and (r,) for the 2DVM.
    """
    if multistart < 4:
        raise ValueError("multistart must be >= 4")
    if not isinstance(params, (dict, Dicke)):
        params = vars(params)
    f, bounds, periodic = _surface_problem(model, params)
    axes = []
    for (lo, hi), per in zip(bounds, periodic):
        n = multistart
        if per:
            axes.append([lo + (hi - lo) * k / n for k in range(n)])
        else:
            axes.append([lo + (hi - lo) * k / (n - 1) for k in range(n)])
    scan = sorted(((f(p), p) for p in itertools.product(*axes)), key=lambda t: (t[0], t[1]))
    step = [(hi - lo) / multistart for lo, hi in bounds]
    results = []
    for _, p0 in scan[:multistart]:
        results.append(_pattern_descent(f, p0, step, bounds, periodic))
    best_val = min(v for _, v in results)
    ties = [p for p, v in results if v - best_val < 1e-12]
    return min(ties), best_val


def dicke_point_to_zeta(point):
    """(Re alpha, Im alpha, theta, phi) -> (alpha, zeta)."""
    a = complex(point[0], point[1])
    z = math.tan(point[2] / 2) * complex(math.cos(point[3]), -math.sin(point[3]))
    return a, z
