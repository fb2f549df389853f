"""Quadrature grids, Husimi functions and Wehrl entropies.

Grid weights absorb the invariant measure of each phase space, so a
Husimi function integrates as ``sum(weights * Q)`` and the Wehrl entropy
as ``sum(weights * entr(Q))``:

* plane   d^2 alpha / pi
* sphere  (2j+1)/(4 pi) sin(theta) dtheta dphi
* CP^2    (N+1)(N+2)/(4 pi^2) dw1 dw2 dphi1 dphi2, with w_k = |z_k|^2/(1+|z1|^2+|z2|^2)

Node sets are processed in fixed-size chunks whose partial sums are
combined with ``math.fsum`` in chunk order, so results do not depend on
how the work is scheduled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import entr, roots_legendre

from .coherent import (
    CP2Point,
    PlanePoint,
    ProductPoint,
    SpherePoint,
    U3Full,
    glauber_table,
    su2_table,
    u3_table_w,
)
from .errors import ConvergenceError, GeometryError
from .models import DickeProduct, Fock1D, Spin, TwoMode, U3Block

CHUNK = 8192
Q_FLOOR = 1e-300


@dataclass(frozen=True)
class Quadrature:
    """Nodes (as coordinate arrays) and measure-absorbing weights.

    ``coords`` holds ``alpha`` for the plane, ``theta``/``phi`` for the
    sphere and ``w1``/``w2``/``phi1``/``phi2`` for CP^2.
    """

    geometry: str
    coords: dict
    weights: np.ndarray
    resolution: tuple
    params: dict = field(default_factory=dict)

    @property
    def size(self):
        return len(self.weights)

    def points(self):
        if self.geometry == "plane":
            return [PlanePoint(complex(a)) for a in self.coords["alpha"]]
        if self.geometry == "sphere":
            return [SpherePoint(float(t), float(p)) for t, p in zip(self.coords["theta"], self.coords["phi"])]
        c = self.coords
        out = []
        for w1, w2, p1, p2 in zip(c["w1"], c["w2"], c["phi1"], c["phi2"]):
            w0 = 1.0 - w1 - w2
            out.append(CP2Point(math.sqrt(w1 / w0) * complex(math.cos(p1), math.sin(p1)),
                                math.sqrt(w2 / w0) * complex(math.cos(p2), math.sin(p2))))
        return out


@dataclass(frozen=True)
class ProductQuadrature:
    """Plane x sphere grid for the Dicke model; weights are the outer product."""

    plane: Quadrature
    sphere: Quadrature
    geometry: str = "plane_x_sphere"

    @property
    def size(self):
        return self.plane.size * self.sphere.size

    @property
    def resolution(self):
        return self.plane.resolution + self.sphere.resolution

    @property
    def weights(self):
        return np.outer(self.plane.weights, self.sphere.weights).ravel()

    def points(self):
        return [ProductPoint(p.alpha, s.theta, s.phi) for p in self.plane.points() for s in self.sphere.points()]


@dataclass(frozen=True)
class HusimiField:
    q_values: np.ndarray
    state: object
    norm_deficit: float


# ---------------------------------------------------------------------------
# grids


def laguerre_rule(n: int):
    """Gauss-Laguerre nodes and the products w_k * exp(x_k).

    Nodes are eigenvalues of the Jacobi matrix. The products come from the Christoffel function of the orthonormal
    Laguerre functions exp(-x/2) L_m(x), evaluated by the three-term
    recurrence with running rescaling, so they stay finite where w_k
    underflows and exp(x_k) overflows.
    """
    k = np.arange(n)
    x = eigh_tridiagonal(2.0 * k + 1, -(k[1:].astype(float)), eigvals_only=True)
    p_prev = np.zeros_like(x)
    p = np.ones_like(x)
    logscale = -0.5 * x
    acc = p * p
    for m in range(n - 1):
        p_next = ((2 * m + 1 - x) * p - m * p_prev) / (m + 1)
        p_prev, p = p, p_next
        acc = acc + p * p
        big = np.abs(p) > 1e100
        if np.any(big):
            f = np.where(big, 1e-100, 1.0)
            p, p_prev, acc = p * f, p_prev * f, acc * f * f
            logscale = logscale + np.where(big, 100 * math.log(10.0), 0.0)
    return x, np.exp(-2 * logscale - np.log(acc))


def plane_grid(radial_nodes: int, angular_nodes: int, scale: float = 1.0) -> Quadrature:
    """Polar rule for d^2 alpha / pi: alpha = sqrt(s * scale) e^{i phi}.

    Exact for e^{-|alpha|^2/scale} times polynomials in |alpha|^2 up to
    degree 2*radial_nodes - 1 and angular harmonics |k| < angular_nodes.
    """
    if radial_nodes < 1 or angular_nodes < 1 or not scale > 0:
        raise ValueError("plane_grid needs radial_nodes, angular_nodes >= 1 and scale > 0")
    s, wes = laguerre_rule(radial_nodes)
    phi = 2 * math.pi * np.arange(angular_nodes) / angular_nodes
    r = np.sqrt(s * scale)
    alpha = (r[:, None] * np.exp(1j * phi)[None, :]).ravel()
    weights = np.repeat(scale * wes / angular_nodes, angular_nodes)
    return Quadrature("plane", {"alpha": alpha}, weights, (radial_nodes, angular_nodes), {"scale": scale})


def sphere_grid(two_j: int, theta_nodes: int, phi_nodes: int) -> Quadrature:
    """Gauss-Legendre in cos(theta), trapezoid in phi; total weight 2j+1."""
    if theta_nodes < 1 or phi_nodes < 1:
        raise ValueError("sphere_grid needs at least one node per coordinate")
    t, wt = roots_legendre(theta_nodes)
    theta = np.arccos(t)
    phi = 2 * math.pi * np.arange(phi_nodes) / phi_nodes
    weights = np.repeat((two_j + 1) * wt / (2 * phi_nodes), phi_nodes)
    return Quadrature("sphere", {"theta": np.repeat(theta, phi_nodes), "phi": np.tile(phi, theta_nodes)},
                      weights, (theta_nodes, phi_nodes), {"two_j": two_j})


def cp2_grid(N: int, simplex_nodes: int, phi_nodes: int, l_symmetric: bool = False) -> Quadrature:
    """Rule for the U(3) measure on CP^2 in simplex/torus coordinates.

    The simplex is covered by the collapsed square w1 = u, w2 = (1-u) v
    (Jacobian 1-u) with Gauss-Legendre in u and v. With ``l_symmetric``
    only phi1 is sampled (phi2 = 0): valid for states whose Husimi function
    depends on phi1 + phi2 alone, i.e. the l = 0 sector.
    """
    if N < 1 or simplex_nodes < 1 or phi_nodes < 1:
        raise ValueError("cp2_grid needs N, simplex_nodes, phi_nodes >= 1")
    g, wg = roots_legendre(simplex_nodes)
    g = 0.5 * (g + 1)
    wg = 0.5 * wg
    u, v = np.meshgrid(g, g, indexing="ij")
    wu, wv = np.meshgrid(wg, wg, indexing="ij")
    w1 = u.ravel()
    w2 = ((1 - u) * v).ravel()
    wsimp = (wu * wv * (1 - u)).ravel()
    pref = (N + 1) * (N + 2) / (4 * math.pi ** 2)
    phi = 2 * math.pi * np.arange(phi_nodes) / phi_nodes
    dphi = 2 * math.pi / phi_nodes
    if l_symmetric:
        weights = np.repeat(pref * wsimp * dphi * 2 * math.pi, phi_nodes)
        coords = {"w1": np.repeat(w1, phi_nodes), "w2": np.repeat(w2, phi_nodes),
                  "phi1": np.tile(phi, len(w1)), "phi2": np.zeros(len(w1) * phi_nodes)}
        res = (simplex_nodes, simplex_nodes, phi_nodes)
    else:
        p1, p2 = np.meshgrid(phi, phi, indexing="ij")
        np2 = phi_nodes * phi_nodes
        weights = np.repeat(pref * wsimp * dphi * dphi, np2)
        coords = {"w1": np.repeat(w1, np2), "w2": np.repeat(w2, np2),
                  "phi1": np.tile(p1.ravel(), len(w1)), "phi2": np.tile(p2.ravel(), len(w1))}
        res = (simplex_nodes, simplex_nodes, phi_nodes, phi_nodes)
    return Quadrature("cp2_l0" if l_symmetric else "cp2", coords, weights, res, {"N": N})


# ---------------------------------------------------------------------------
# amplitudes of a basis on grid nodes


def _geometry_of(basis):
    if isinstance(basis, Fock1D):
        return "plane"
    if isinstance(basis, (Spin, TwoMode)):
        return "sphere"
    if isinstance(basis, U3Block):
        return "cp2_l0" if basis.l == 0 else "cp2"
    if isinstance(basis, U3Full):
        return "cp2"
    if isinstance(basis, DickeProduct):
        return "plane_x_sphere"
    raise GeometryError(f"no phase space for basis {basis!r}")


def _table(grid: Quadrature, basis, sl=slice(None)):
    c = grid.coords
    if grid.geometry == "plane":
        return glauber_table(c["alpha"][sl], basis.cutoff)
    if grid.geometry == "sphere":
        return su2_table(c["theta"][sl], c["phi"][sl], basis.two_j)
    l_filter = basis.l if isinstance(basis, U3Block) else None
    return u3_table_w(c["w1"][sl], c["w2"][sl], c["phi1"][sl], c["phi2"][sl], basis.N, l_filter)


def _check(state, grid):
    want = _geometry_of(state.basis)
    got = grid.geometry
    ok = want == got or (want == "cp2_l0" and got == "cp2")
    if not ok:
        raise GeometryError(f"state on {state.basis!r} needs a {want} grid, got {got}")
    if isinstance(state.basis, (Spin, TwoMode)) and grid.params.get("two_j") != state.basis.two_j:
        raise GeometryError("sphere grid built for a different spin")
    if got.startswith("cp2") and grid.params.get("N") != state.basis.N:
        raise GeometryError("CP2 grid built for a different N")
    if isinstance(state.basis, DickeProduct) and grid.sphere.params.get("two_j") != state.basis.two_j:
        raise GeometryError("sphere factor built for a different spin")


def _chunks(n):
    return [slice(i, min(i + CHUNK, n)) for i in range(0, n, CHUNK)]


def _q_from_overlap(ov):
    q = ov.real ** 2 + ov.imag ** 2
    q[q < Q_FLOOR] = 0.0
    return np.minimum(q, 1.0)


def _product_blocks(state, grid: ProductQuadrature):
    """Yield (plane-slice, Q block [plane nodes x sphere nodes]) without the full tensor."""
    b = state.basis
    C = np.asarray(state.coefficients).reshape(b.n_max + 1, b.two_j + 1)
    G = np.conj(su2_table(grid.sphere.coords["theta"], grid.sphere.coords["phi"], b.two_j))
    alpha = grid.plane.coords["alpha"]
    rows = max(1, (4 * CHUNK * CHUNK) // max(grid.sphere.size, 1) // 64)
    for i in range(0, len(alpha), rows):
        sl = slice(i, min(i + rows, len(alpha)))
        U = np.conj(glauber_table(alpha[sl], b.n_max)) @ C
        yield sl, _q_from_overlap(U @ G.T)


def husimi(state, grid) -> HusimiField:
    """Q_i = |<zeta_i|psi>|^2 at every node of ``grid``."""
    _check(state, grid)
    if isinstance(grid, ProductQuadrature):
        q = np.empty((grid.plane.size, grid.sphere.size))
        for sl, block in _product_blocks(state, grid):
            q[sl] = block
        q = q.ravel()
    else:
        c = np.asarray(state.coefficients)
        q = np.empty(grid.size)
        for sl in _chunks(grid.size):
            q[sl] = _q_from_overlap(np.conj(_table(grid, state.basis, sl)) @ c)
    total = math.fsum(np.sum(grid.weights[sl] * q[sl]) for sl in _chunks(len(q)))
    return HusimiField(q, state, abs(1.0 - total))


def wehrl_entropy(field: HusimiField, grid) -> float:
    """-sum_i w_i Q_i ln Q_i, with 0 ln 0 = 0."""
    q = field.q_values
    if len(q) != grid.size:
        raise GeometryError("Husimi field and grid are not aligned")
    w = grid.weights
    return math.fsum(np.sum(w[sl] * entr(q[sl])) for sl in _chunks(len(q)))


def wehrl_and_norm(state, grid) -> tuple[float, float]:
    """Wehrl entropy and norm deficit, streamed over node chunks."""
    _check(state, grid)
    ent, nrm = [], []
    if isinstance(grid, ProductQuadrature):
        ws = grid.sphere.weights
        wp = grid.plane.weights
        for sl, q in _product_blocks(state, grid):
            ent.append(np.sum(wp[sl] * (entr(q) @ ws)))
            nrm.append(np.sum(wp[sl] * (q @ ws)))
    else:
        c = np.asarray(state.coefficients)
        for sl in _chunks(grid.size):
            q = _q_from_overlap(np.conj(_table(grid, state.basis, sl)) @ c)
            w = grid.weights[sl]
            ent.append(np.sum(w * entr(q)))
            nrm.append(np.sum(w * q))
    return math.fsum(ent), abs(1.0 - math.fsum(nrm))


# ---------------------------------------------------------------------------
# adaptive resolution


def _effective_cutoff(c, n_levels, per_level=None, eps=1e-14):
    """Highest oscillator level that still carries weight above ``eps``."""
    p = np.abs(c) ** 2 if per_level is None else per_level
    tail = np.cumsum(p[::-1])[::-1]
    keep = np.flatnonzero(tail > eps)
    return int(keep[-1]) if len(keep) else 0


def initial_resolution(state) -> tuple:
    """Starting node counts: just enough for the Husimi norm to integrate exactly."""
    b = state.basis
    if isinstance(b, Fock1D):
        n = _effective_cutoff(state.coefficients, b.dim)
        return (max(8, n // 2 + 4), max(8, 2 * n + 2))
    if isinstance(b, (Spin, TwoMode)):
        return (max(8, b.two_j + 2), max(8, 2 * b.two_j + 2))
    if isinstance(b, (U3Block, U3Full)):
        return (max(6, b.N // 2 + 2), max(8, b.N + 2))
    if isinstance(b, DickeProduct):
        per = np.sum(np.abs(np.asarray(state.coefficients).reshape(b.n_max + 1, b.two_j + 1)) ** 2, axis=1)
        n = _effective_cutoff(None, b.n_max + 1, per)
        return (max(8, n // 2 + 4), max(8, 2 * n + 2), max(8, b.two_j + 2), max(8, 2 * b.two_j + 2))
    raise GeometryError(f"no phase space for basis {b!r}")


def make_grid(basis, resolution, geometry: str | None = None):
    geometry = geometry or _geometry_of(basis)
    if geometry == "plane":
        return plane_grid(resolution[0], resolution[1])
    if geometry == "sphere":
        return sphere_grid(basis.two_j, resolution[0], resolution[1])
    if geometry in ("cp2", "cp2_l0"):
        return cp2_grid(basis.N, resolution[0], resolution[1], l_symmetric=geometry == "cp2_l0")
    if geometry == "plane_x_sphere":
        return ProductQuadrature(plane_grid(resolution[0], resolution[1]),
                                 sphere_grid(basis.two_j, resolution[2], resolution[3]))
    raise GeometryError(f"unknown geometry {geometry!r}")


def grid_size(geometry, resolution):
    if geometry == "cp2":
        return resolution[0] ** 2 * resolution[1] ** 2
    if geometry == "cp2_l0":
        return resolution[0] ** 2 * resolution[1]
    return math.prod(resolution)


def refine_until(state, geometry: str | None = None, w_tol: float = 1e-6, norm_tol: float = 1e-6,
                 max_nodes: int = 200_000_000, start: tuple | None = None):
    """Double the grid resolution until the Wehrl entropy settles.

    Stops when two successive resolutions agree to ``w_tol`` and the finer
    one integrates Q to within ``norm_tol`` of one. Returns the finer W and
    a diagnostics dict with the resolution ladder.
    """
    if not (w_tol >= 0 and norm_tol > 0):
        raise ValueError("tolerances must be positive")
    geometry = geometry or _geometry_of(state.basis)
    res = tuple(start) if start is not None else initial_resolution(state)
    ladder = []
    while True:
        nodes = grid_size(geometry, res)
        if nodes > max_nodes:
            last = [step["W"] for step in ladder[-2:]]
            raise ConvergenceError(f"Wehrl entropy not converged within {max_nodes} nodes",
                                   last_values=last, ladder=ladder)
        grid = make_grid(state.basis, res, geometry)
        W, deficit = wehrl_and_norm(state, grid)
        ladder.append({"resolution": res, "nodes": nodes, "W": W, "norm_deficit": deficit})
        if len(ladder) >= 2 and abs(W - ladder[-2]["W"]) <= w_tol and deficit <= norm_tol:
            return W, {"ladder": ladder, "nodes": nodes, "norm_deficit": deficit, "resolution": res}
        res = tuple(2 * r for r in res)
