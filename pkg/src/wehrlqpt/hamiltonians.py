"""Dense Hamiltonian matrices for the five models and their ground states.

Matrices are assembled from exact ladder-operator algebra in explicit bases
(see :mod:`wehrlqpt.models` for label orderings) and are bitwise symmetric.
Ground states come from :func:`lowest_eigenpair`, which diagonalizes each
exactly decoupled index block separately; for the infinite-dimensional
models :func:`converge_truncation` grows the cutoff until the ground state
stops moving.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ConvergenceError, ParameterError
from .models import (
    LMG,
    Cusp,
    Dicke,
    DickeProduct,
    Fock1D,
    IbmLmg,
    Spin,
    TwoMode,
    U3Block,
    Vibron2D,
)


@dataclass(frozen=True)
class HamiltonianMatrix:
    """A real symmetric matrix tied to its basis and parameters.

    ``scale`` records an affine factor already divided out of the stored
    matrix (the physical operator is ``scale * matrix``).
    """

    matrix: np.ndarray
    basis: object
    params: object
    scale: float = 1.0
    scale_note: str = ""

    def __post_init__(self):
        self.matrix.flags.writeable = False

    @property
    def dim(self):
        return self.matrix.shape[0]


@dataclass(frozen=True)
class GroundState:
    """Normalized lowest eigenvector with its energy and truncation record.

    Model ground states are real. Coherent and cat probe states built for
    testing may carry complex coefficients; everything downstream accepts
    either.
    """

    coefficients: np.ndarray
    energy: float
    basis: object
    params: object = None
    converged: bool = True
    tail_weight: float = 0.0
    cutoffs_tried: tuple = ()
    gap: float | None = None

    def __post_init__(self):
        self.coefficients.flags.writeable = False


def _sym(m):
    # (a + b)/2 == (b + a)/2 in IEEE arithmetic, so the result is exactly symmetric
    return 0.5 * (m + m.T)


def _ladder(dim):
    """Annihilation operator on levels 0..dim-1."""
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1)


# ---------------------------------------------------------------------------
# builders


def cusp_basis_frequency(params: Cusp) -> float:
    """Oscillator frequency of the expansion basis.

    Curvature of the potential at its deepest minimum; below 0.1 the well is
    essentially quartic and the width scales as K**(1/3) instead.
    """
    from .surfaces import cusp_potential, cusp_stationary

    roots = cusp_stationary(params.u, params.v)
    curv = [3 * x * x + params.u for x in roots]
    minima = [(cusp_potential(x, params.u, params.v), x, c) for x, c in zip(roots, curv) if c > 0]
    if not minima:
        # degenerate inflection (u = v = 0): pure quartic
        return params.K ** (1.0 / 3.0)
    _, _, c = min(minima)
    if c < 0.1:
        return params.K ** (1.0 / 3.0)
    return math.sqrt(c)


def build_cusp(params: Cusp, cutoff: int, basis_freq: float | None = None) -> HamiltonianMatrix:
    if cutoff < 4:
        raise ParameterError(f"cusp cutoff must be >= 4 to represent x^4, got {cutoff}")
    if basis_freq is None:
        basis_freq = cusp_basis_frequency(params)
    if not basis_freq > 0:
        raise ParameterError(f"basis frequency must be > 0, got {basis_freq}")
    K, om = params.K, basis_freq
    dim = cutoff + 1
    # intermediate states of x^4 reach at most two levels above the block
    big = dim + 2
    a = _ladder(big)
    ad = a.T
    x = math.sqrt(K / (2 * om)) * (a + ad)
    x2 = x @ x
    x4 = x2 @ x2
    # P = i sqrt(K om / 2)(a^dag - a), so P^2 = -(K om / 2)(a^dag - a)^2
    d = ad - a
    p2 = -(K * om / 2) * (d @ d)
    h = 0.5 * p2 + 0.25 * x4 + 0.5 * params.u * x2 + params.v * x
    h = _sym(h[:dim, :dim])
    return HamiltonianMatrix(h, Fock1D(cutoff), params, scale_note=f"oscillator basis, hbar_eff=K, Omega={om!r}")


def _spin_diag(two_j):
    # m = -j..j, as floats only for matrix entries
    return (np.arange(two_j + 1) - two_j / 2).astype(float)


def _jplus(two_j):
    """<m+1|J+|m> on the ascending-m basis."""
    j = two_j / 2
    m = _spin_diag(two_j)[:-1]
    return np.diag(np.sqrt(j * (j + 1) - m * (m + 1)), k=-1)


def build_dicke(params: Dicke, n_max: int) -> HamiltonianMatrix:
    if n_max < 0:
        raise ParameterError(f"photon cutoff must be >= 0, got {n_max}")
    two_j = params.two_j
    nf = n_max + 1
    ns = two_j + 1
    jz = np.diag(_spin_diag(two_j))
    jp = _jplus(two_j)
    jx2 = jp + jp.T  # J+ + J-
    a = _ladder(nf)
    num = np.diag(np.arange(nf, dtype=float))
    h = (params.omega0 * np.kron(np.eye(nf), jz)
         + params.omega * np.kron(num, np.eye(ns))
         + params.lam / math.sqrt(two_j) * np.kron(a + a.T, jx2))
    return HamiltonianMatrix(_sym(h), DickeProduct(n_max, two_j), params)


def build_lmg(params: LMG) -> HamiltonianMatrix:
    """Scaled LMG Hamiltonian h = H / (2 omega j)."""
    two_j = params.two_j
    j = two_j / 2
    m = _spin_diag(two_j)
    jp = _jplus(two_j)
    jp2 = jp @ jp
    denom = j * (two_j - 1)
    h = np.diag(m / j + (params.gamma_x + params.gamma_y) * (j * (j + 1) - m * m) / (2 * denom))
    h = h + (params.gamma_x - params.gamma_y) / (4 * denom) * (jp2 + jp2.T)
    scale = 2 * params.omega * j
    return HamiltonianMatrix(_sym(h), Spin(two_j), params, scale=scale,
                             scale_note=f"stored as H/(2 omega j); multiply by {scale!r}")


def build_ibm_lmg(params: IbmLmg) -> HamiltonianMatrix:
    N = params.N
    nt = np.arange(N + 1, dtype=float)
    up = np.sqrt((nt[:-1] + 1) * (N - nt[:-1]))
    q = np.diag(up, k=-1) + np.diag(up, k=1) + np.diag(params.y * nt)
    h = params.x * np.diag(nt) - (1 - params.x) / N * (q @ q)
    return HamiltonianMatrix(_sym(h), TwoMode(N), params)


# --- 2D vibron model: explicit three-mode boson algebra --------------------
# modes: 0 = sigma, 1 = tau_plus, 2 = tau_minus

def _apply(terms, state_vec):
    """Apply sum_k c_k * (product of ladder ops) to a dict {occupations: amp}.

    Each term is (coef, ops) with ops a sequence of (mode, dagger) applied
    right to left, as written in operator notation.
    """
    out = {}
    for coef, ops in terms:
        for occ, amp in state_vec.items():
            occ = list(occ)
            val = coef * amp
            for mode, dag in reversed(ops):
                if dag:
                    occ[mode] += 1
                    val *= math.sqrt(occ[mode])
                else:
                    if occ[mode] == 0:
                        val = 0.0
                        break
                    val *= math.sqrt(occ[mode])
                    occ[mode] -= 1
            if val != 0.0:
                key = tuple(occ)
                out[key] = out.get(key, 0.0) + val
    return out


_R2 = math.sqrt(2.0)
# D+ = sqrt2 (tau+^dag sigma - sigma^dag tau-),  D- = sqrt2 (-tau-^dag sigma + sigma^dag tau+)
_D_PLUS = [(_R2, ((1, True), (0, False))), (-_R2, ((0, True), (2, False)))]
_D_MINUS = [(-_R2, ((2, True), (0, False))), (_R2, ((0, True), (1, False)))]


def _u3_occupations(N, l):
    return [(N - n, (n + l) // 2, (n - l) // 2) for n in U3Block(N, l).labels()]


def casimir_w2(N: int, l: int = 0) -> np.ndarray:
    """Matrix of W^2 = (D+D- + D-D+)/2 + l^2 on the fixed-l block."""
    occs = _u3_occupations(N, l)
    pos = {o: i for i, o in enumerate(occs)}
    w2 = np.zeros((len(occs), len(occs)))
    for col, occ in enumerate(occs):
        ket = {occ: 1.0}
        pm = _apply(_D_PLUS, _apply(_D_MINUS, ket))
        mp = _apply(_D_MINUS, _apply(_D_PLUS, ket))
        for key in set(pm) | set(mp):
            w2[pos[key], col] += 0.5 * (pm.get(key, 0.0) + mp.get(key, 0.0))
        w2[col, col] += l * l
    return _sym(w2)


def build_2dvm(params: Vibron2D) -> HamiltonianMatrix:
    N, l = params.N, params.l
    if (N - abs(l)) < 0:
        raise ParameterError(f"no states with l={l} for N={N}")
    basis = U3Block(N, l)
    n = np.array(basis.labels(), dtype=float)
    w2 = casimir_w2(N, l)
    h = (1 - params.xi) * np.diag(n) + params.xi * (N * (N + 1) * np.eye(basis.dim) - w2) / (N - 1)
    return HamiltonianMatrix(_sym(h), basis, params)


# ---------------------------------------------------------------------------
# eigensolver


def _decoupled_blocks(m):
    n, comp = connected_components(csr_matrix(m != 0), directed=False)
    return [np.flatnonzero(comp == c) for c in range(n)]


def _fix_sign(v):
    big = np.abs(v) > 1e-12 * np.max(np.abs(v))
    first = np.argmax(big)
    return -v if v[first] < 0 else v


def lowest_eigenpair(H, tol: float = 1e-10, k: int = 1):
    """k lowest eigenpairs in ascending energy.

    Index sets that the matrix couples to nothing else (parity sectors and
    the like) are diagonalized separately, so a degenerate doublet split
    across sectors comes back as two sector eigenvectors rather than an
    arbitrary rotation of them. Eigenvectors have their first nonzero
    entry positive.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not tol > 0:
        raise ValueError("tol must be > 0")
    m = H.matrix if isinstance(H, HamiltonianMatrix) else np.asarray(H, dtype=float)
    dim = m.shape[0]
    k = min(k, dim)
    candidates = []
    for order, idx in enumerate(_decoupled_blocks(m)):
        sub = m[np.ix_(idx, idx)]
        kk = min(k, len(idx))
        if len(idx) == 1:
            vals, vecs = sub[0].copy(), np.ones((1, 1))
        else:
            vals, vecs = scipy.linalg.eigh(sub, subset_by_index=[0, kk - 1], driver="evr")
        for i in range(kk):
            candidates.append((vals[i], order, i, idx, vecs[:, i]))
    candidates.sort(key=lambda c: (c[0], c[1], c[2]))
    norm_inf = np.max(np.sum(np.abs(m), axis=1)) if dim else 0.0
    out = []
    worst = 0.0
    for val, _, _, idx, local in candidates[:k]:
        v = np.zeros(dim)
        v[idx] = local
        v /= np.linalg.norm(v)
        v = _fix_sign(v)
        resid = np.max(np.abs(m @ v - val * v))
        worst = max(worst, resid)
        out.append((float(val), v))
    if worst > tol * max(norm_inf, np.finfo(float).tiny):
        raise ConvergenceError("eigensolver residual above tolerance", best_residual=worst,
                               allowed=tol * norm_inf)
    return out


def _tail_weight(c, basis):
    """Probability in the top 10% of oscillator levels."""
    if isinstance(basis, DickeProduct):
        per_level = np.sum(np.abs(c.reshape(basis.n_max + 1, basis.two_j + 1)) ** 2, axis=1)
    else:
        per_level = np.abs(c) ** 2
    top = max(1, math.ceil(0.1 * len(per_level)))
    return float(np.sum(per_level[-top:]))


def converge_truncation(builder: Callable[[int], HamiltonianMatrix], start: int,
                        growth_factor: float = 1.5, e_tol: float = 1e-10,
                        tail_tol: float = 1e-8, max_dim: int = 20000,
                        eig_tol: float = 1e-10, levels: int = 1) -> GroundState:
    """Grow the cutoff until the ground state is converged.

    A cutoff is accepted once its tail weight is below ``tail_tol`` and the
    next cutoff reproduces its energy within ``e_tol``; the state at the
    accepted cutoff is returned.
    """
    if not growth_factor > 1:
        raise ValueError("growth_factor must be > 1")
    cutoff = start
    tried = []
    prev = None
    while True:
        H = builder(cutoff)
        if H.dim > max_dim:
            raise ConvergenceError(
                f"truncation not converged below dimension {max_dim}",
                cutoffs_tried=tried,
                last_energy=None if prev is None else prev[0],
                last_tail=None if prev is None else prev[1],
            )
        pairs = lowest_eigenpair(H, eig_tol, levels)
        e0, c0 = pairs[0]
        tail = _tail_weight(c0, H.basis)
        tried.append(cutoff)
        if prev is not None and abs(e0 - prev[0]) <= e_tol and prev[1] <= tail_tol:
            pe, ptail, pH, ppairs = prev
            gap = ppairs[1][0] - ppairs[0][0] if len(ppairs) > 1 else None
            return GroundState(ppairs[0][1], pe, pH.basis, pH.params, True, ptail, tuple(tried), gap)
        prev = (e0, tail, H, pairs)
        cutoff = max(cutoff + 1, math.ceil(cutoff * growth_factor))


# ---------------------------------------------------------------------------
# dispatch


def dicke_seed_cutoff(params: Dicke) -> int:
    return math.ceil(params.two_j * (params.omega0 / params.omega) * (params.lam / params.lambda_c) ** 2 + 10)


def cusp_seed_cutoff(params: Cusp, basis_freq: float) -> int:
    from .surfaces import cusp_stationary

    xmax = max(abs(x) for x in cusp_stationary(params.u, params.v))
    a0 = xmax * math.sqrt(basis_freq / (2 * params.K))
    return max(16, math.ceil(a0 * a0 + 6 * a0 + 16))


def ground_state(params, *, eig_tol: float = 1e-10, e_tol: float = 1e-10, tail_tol: float = 1e-8,
                 growth_factor: float = 1.5, max_dim: int = 20000, levels: int = 1) -> GroundState:
    """Converged ground state for any of the five models."""
    if isinstance(params, Cusp):
        om = cusp_basis_frequency(params)
        return converge_truncation(lambda c: build_cusp(params, c, om), cusp_seed_cutoff(params, om),
                                   growth_factor, e_tol, tail_tol, max_dim, eig_tol, max(levels, 1))
    if isinstance(params, Dicke):
        return converge_truncation(lambda c: build_dicke(params, c), dicke_seed_cutoff(params),
                                   growth_factor, e_tol, tail_tol, max_dim, eig_tol, max(levels, 1))
    if isinstance(params, LMG):
        H = build_lmg(params)
    elif isinstance(params, IbmLmg):
        H = build_ibm_lmg(params)
    elif isinstance(params, Vibron2D):
        H = build_2dvm(params)
    else:
        raise ParameterError(f"unknown model parameters {params!r}")
    pairs = lowest_eigenpair(H, eig_tol, levels)
    gap = H.scale * (pairs[1][0] - pairs[0][0]) if len(pairs) > 1 else None
    return GroundState(pairs[0][1], H.scale * pairs[0][0], H.basis, params, True, 0.0, (), gap)


def parity_signs(basis) -> np.ndarray:
    """Diagonal of the parity operator that commutes with the symmetric Hamiltonians."""
    if isinstance(basis, Fock1D):
        return (-1.0) ** np.arange(basis.dim)
    if isinstance(basis, (Spin, TwoMode)):
        return (-1.0) ** np.arange(basis.dim)
    if isinstance(basis, DickeProduct):
        n = np.repeat(np.arange(basis.n_max + 1), basis.two_j + 1)
        k = np.tile(np.arange(basis.two_j + 1), basis.n_max + 1)  # k = m + j
        return (-1.0) ** (n + k)
    if isinstance(basis, U3Block):
        return np.ones(basis.dim)
    raise TypeError(f"no parity for {basis!r}")
