"""Model parameter records and basis descriptors.

Half-integer spins are carried as ``two_j`` (an int) so that labels never
go through floating point. Every basis enumerates its labels in a fixed
order and ``index``/``labels`` are inverse to each other.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ParameterError


def _check_two_j(two_j, minimum=1):
    if int(two_j) != two_j or two_j < minimum:
        raise ParameterError(f"2j must be an integer >= {minimum}, got {two_j}")


# ---------------------------------------------------------------------------
# model parameters


@dataclass(frozen=True)
class Cusp:
    """H = K^2 p^2/2 + x^4/4 + u x^2/2 + v x, with mass fixed to one."""

    u: float
    v: float
    K: float

    tag = "cusp"

    def __post_init__(self):
        if not self.K > 0:
            raise ParameterError(f"cusp classicality constant K must be > 0, got {self.K}")


@dataclass(frozen=True)
class Dicke:
    omega0: float
    omega: float
    lam: float
    two_j: int

    tag = "dicke"

    def __post_init__(self):
        _check_two_j(self.two_j)

    @property
    def j(self):
        return self.two_j / 2

    @property
    def lambda_c(self):
        return 0.5 * (self.omega * self.omega0) ** 0.5


@dataclass(frozen=True)
class LMG:
    gamma_x: float
    gamma_y: float
    two_j: int
    omega: float = 0.5

    tag = "lmg"

    def __post_init__(self):
        # the quadratic terms are divided by j(2j-1)
        _check_two_j(self.two_j, minimum=2)

    @property
    def j(self):
        return self.two_j / 2


@dataclass(frozen=True)
class IbmLmg:
    x: float
    y: float
    N: int

    tag = "ibm_lmg"

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ParameterError(f"IBM-LMG boson number must be a positive integer, got {self.N}")
        if not 0.0 <= self.x <= 1.0:
            raise ParameterError(f"IBM-LMG control x must lie in [0, 1], got {self.x}")
        if self.y < 0:
            raise ParameterError(f"IBM-LMG control y must be >= 0, got {self.y}")


@dataclass(frozen=True)
class Vibron2D:
    xi: float
    N: int
    l: int = 0

    tag = "vibron2d"

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ParameterError(f"2DVM requires an integer N >= 2, got {self.N}")
        if abs(self.l) > self.N or int(self.l) != self.l:
            raise ParameterError(f"angular momentum l={self.l} not available for N={self.N}")
        if not 0.0 <= self.xi <= 1.0:
            raise ParameterError(f"2DVM control xi must lie in [0, 1], got {self.xi}")


MODEL_TYPES = {cls.tag: cls for cls in (Cusp, Dicke, LMG, IbmLmg, Vibron2D)}


# ---------------------------------------------------------------------------
# bases


@dataclass(frozen=True)
class Fock1D:
    """Oscillator levels n = 0..cutoff."""

    cutoff: int

    @property
    def dim(self):
        return self.cutoff + 1

    def labels(self):
        return list(range(self.cutoff + 1))

    def index(self, n):
        return n


@dataclass(frozen=True)
class Spin:
    """|j, m> for m = -j..j in ascending order."""

    two_j: int

    @property
    def dim(self):
        return self.two_j + 1

    def labels(self):
        return [Fraction(k, 2) - Fraction(self.two_j, 2) for k in range(0, 2 * self.two_j + 1, 2)]

    def index(self, m):
        return int(Fraction(m) + Fraction(self.two_j, 2))


@dataclass(frozen=True)
class TwoMode:
    """Two scalar boson modes with N = n_s + n_t; labelled by n_t = 0..N."""

    N: int

    @property
    def dim(self):
        return self.N + 1

    @property
    def two_j(self):
        return self.N

    def labels(self):
        return list(range(self.N + 1))

    def index(self, n_t):
        return n_t


@dataclass(frozen=True)
class U3Block:
    """Fixed-l block of the symmetric U(3) irrep: n = |l|, |l|+2, ... <= N."""

    N: int
    l: int = 0

    @property
    def dim(self):
        return (self.N - abs(self.l)) // 2 + 1

    def labels(self):
        return list(range(abs(self.l), self.N + 1, 2))

    def index(self, n):
        return (n - abs(self.l)) // 2


@dataclass(frozen=True)
class DickeProduct:
    """|n> x |j, m>, ordered by ascending n, then ascending m."""

    n_max: int
    two_j: int

    @property
    def dim(self):
        return (self.n_max + 1) * (self.two_j + 1)

    @property
    def fock(self):
        return Fock1D(self.n_max)

    @property
    def spin(self):
        return Spin(self.two_j)

    def labels(self):
        ms = self.spin.labels()
        return [(n, m) for n in range(self.n_max + 1) for m in ms]

    def index(self, label):
        n, m = label
        return n * (self.two_j + 1) + self.spin.index(m)
