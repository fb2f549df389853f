"""Coherent-state amplitude vectors <basis|zeta> for the four phase spaces.

Every factorial, binomial and multinomial enters through ``gammaln`` so
amplitudes stay finite for N ~ 100. Besides the single-point functions
required by callers there are ``*_table`` variants that evaluate many
phase-space points at once (rows = points, columns = basis labels); the
quadrature code uses those.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlogy

from .models import DickeProduct, Fock1D, Spin, U3Block


@dataclass(frozen=True)
class PlanePoint:
    alpha: complex


@dataclass(frozen=True)
class SpherePoint:
    """Point on the sphere; zeta = tan(theta/2) exp(-i phi) is derived, never stored."""

    theta: float
    phi: float

    @property
    def zeta(self):
        if self.theta >= math.pi:
            return complex(math.inf, 0)
        return math.tan(self.theta / 2) * complex(math.cos(self.phi), -math.sin(self.phi))


@dataclass(frozen=True)
class CP2Point:
    zeta1: complex
    zeta2: complex


@dataclass(frozen=True)
class ProductPoint:
    alpha: complex
    theta: float
    phi: float


@dataclass(frozen=True)
class U3Full:
    """All |N, n, l = n - 2m> with n = 0..N, m = 0..n, in (n, m) order."""

    N: int

    @property
    def dim(self):
        return (self.N + 1) * (self.N + 2) // 2

    def labels(self):
        return [(n, m) for n in range(self.N + 1) for m in range(n + 1)]


@dataclass(frozen=True)
class AmplitudeVector:
    values: np.ndarray
    point: object
    basis: object
    log_stable: bool = True

    def __post_init__(self):
        self.values.flags.writeable = False

    @property
    def norm2(self):
        return float(np.sum(np.abs(self.values) ** 2))


# ---------------------------------------------------------------------------
# tables over many points


def glauber_table(alpha, cutoff: int) -> np.ndarray:
    """Rows e^{-|a|^2/2} a^n / sqrt(n!) for n = 0..cutoff."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    n = np.arange(cutoff + 1)
    r = np.abs(alpha)[:, None]
    logmag = -0.5 * r ** 2 + xlogy(n[None, :], r) - 0.5 * gammaln(n + 1)[None, :]
    phase = np.exp(1j * np.outer(np.angle(alpha), n))
    return np.exp(logmag) * phase


def su2_table(theta, phi, two_j: int) -> np.ndarray:
    """Rows over m = -j..j: sqrt(C(2j, j+m)) cos^{j-m} sin^{j+m} e^{-i(j+m)phi} (half angles)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    k = np.arange(two_j + 1)  # k = j + m
    logbin = 0.5 * (gammaln(two_j + 1) - gammaln(k + 1) - gammaln(two_j - k + 1))
    c = np.abs(np.cos(theta / 2))[:, None]
    s = np.abs(np.sin(theta / 2))[:, None]
    logmag = logbin[None, :] + xlogy(two_j - k[None, :], c) + xlogy(k[None, :], s)
    return np.exp(logmag) * np.exp(-1j * np.outer(phi, k))


def _u3_labels(N, l_filter):
    if l_filter is None:
        pairs = [(n, m) for n in range(N + 1) for m in range(n + 1)]
    else:
        pairs = [(n, (n - l_filter) // 2) for n in U3Block(N, l_filter).labels()]
    n = np.array([p[0] for p in pairs])
    m = np.array([p[1] for p in pairs])
    return n, m


def u3_table_w(w1, w2, phi1, phi2, N: int, l_filter: int | None = None) -> np.ndarray:
    """U(3) amplitudes in simplex/torus coordinates.

    With zeta_k = sqrt(w_k / w_0) e^{i phi_k} and w_0 = 1 - w_1 - w_2 the
    amplitude is sqrt(multinomial) w0^{(N-n)/2} w1^{(n-m)/2} w2^{m/2}
    e^{i((n-m) phi1 + m phi2)}, which needs no chart at infinity.
    """
    w1 = np.atleast_1d(np.asarray(w1, dtype=float))
    w2 = np.atleast_1d(np.asarray(w2, dtype=float))
    phi1 = np.broadcast_to(np.asarray(phi1, dtype=float), w1.shape)
    phi2 = np.broadcast_to(np.asarray(phi2, dtype=float), w1.shape)
    w0 = np.clip(1.0 - w1 - w2, 0.0, 1.0)
    n, m = _u3_labels(N, l_filter)
    k0, k1, k2 = N - n, n - m, m
    logmult = 0.5 * (gammaln(N + 1) - gammaln(k0 + 1) - gammaln(k1 + 1) - gammaln(k2 + 1))
    logmag = (logmult[None, :] + 0.5 * (xlogy(k0[None, :], w0[:, None]) + xlogy(k1[None, :], w1[:, None])
                                        + xlogy(k2[None, :], w2[:, None])))
    phase = np.exp(1j * (np.outer(phi1, k1) + np.outer(phi2, k2)))
    return np.exp(logmag) * phase


def u3_table(zeta1, zeta2, N: int, l_filter: int | None = None) -> np.ndarray:
    z1 = np.atleast_1d(np.asarray(zeta1, dtype=complex))
    z2 = np.atleast_1d(np.asarray(zeta2, dtype=complex))
    d = 1.0 + np.abs(z1) ** 2 + np.abs(z2) ** 2
    return u3_table_w(np.abs(z1) ** 2 / d, np.abs(z2) ** 2 / d, np.angle(z1), np.angle(z2), N, l_filter)


# ---------------------------------------------------------------------------
# single points


def glauber_amplitudes(alpha: complex, cutoff: int) -> AmplitudeVector:
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    return AmplitudeVector(glauber_table(alpha, cutoff)[0], PlanePoint(complex(alpha)), Fock1D(cutoff))


def su2_amplitudes(theta: float, phi: float, two_j: int) -> AmplitudeVector:
    """Spin coherent state; theta = 0 is |j, -j>, theta = pi is |j, +j>."""
    if two_j < 1:
        raise ValueError("2j must be >= 1")
    return AmplitudeVector(su2_table(theta, phi, two_j)[0], SpherePoint(float(theta), float(phi)), Spin(two_j))


def u3_amplitudes(zeta1: complex, zeta2: complex, N: int, l_filter: int | None = None) -> AmplitudeVector:
    if N < 1:
        raise ValueError("N must be >= 1")
    basis = U3Full(N) if l_filter is None else U3Block(N, l_filter)
    return AmplitudeVector(u3_table(zeta1, zeta2, N, l_filter)[0], CP2Point(complex(zeta1), complex(zeta2)), basis)


def product_amplitudes(a: AmplitudeVector, b: AmplitudeVector, basis: DickeProduct | None = None) -> AmplitudeVector:
    """|alpha> x |zeta> on the Dicke product basis (n outer, m inner)."""
    target = DickeProduct(len(a.values) - 1, len(b.values) - 1)
    if basis is not None and basis != target:
        raise ValueError(f"amplitudes span {target}, not {basis}")
    point = ProductPoint(a.point.alpha, b.point.theta, b.point.phi)
    return AmplitudeVector(np.outer(a.values, b.values).ravel(), point, target)
