"""Radial singular solutions Phi = c1 |z|^{-gamma} and their eigenvalue algebra.

Radial quantities are parameterized by s = |z|^2 throughout.  For a radial
potential phi(s) the spectrum is

    mu = ((n-1) phi' + phi'' s, ..., (n-1) phi' + phi'' s, (n-1) phi')

with the first value repeated n-1 times, and

    S_k(mu) = (1/k) C(n-1, k-1) ((n-1) phi' + phi'' s)^{k-1}
              ((n-k) phi'' s + n(n-1) phi').

The exponent table has two branches: S_k(mu) = 0 holds when either the last
factor vanishes (generic branch, gamma = (2n^2-4n+2k)/(n-k), k < n) or the
repeated value vanishes (degenerate branch, gamma = 2n-4, k > 1).

Admissibility is branch- and sign-dependent.  With Phi = -|z|^{-gamma} the
degenerate branch has mu = (0,...,0,+) and the k=1 generic branch has
S_1(mu) = 0, both in the closure of the cone.  For 1 < k < n the generic
branch is closure-admissible only with the opposite sign Phi = +|z|^{-gamma}
(the negative sign gives S_1(mu) < 0 pointwise); see
``admissible_singularity_sign``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .symfun import elementary_symmetric

GENERIC = "generic"
DEGENERATE = "degenerate"


@dataclass(frozen=True)
class RadialPoint:
    """Radial potential data at one radius: s = |z|^2 > 0, phi, phi', phi''."""

    s: float
    phi: float
    dphi: float
    d2phi: float

    def __post_init__(self):
        if self.s <= 0:
            raise InvalidArgumentError(f"s must be > 0 (puncture excluded), got {self.s}")


@dataclass(frozen=True)
class GammaBranch:
    n: int
    k: int
    gamma: float
    branch: str


@dataclass(frozen=True)
class GammaTable:
    branches: tuple
    notes: tuple


def generic_gamma(n, k):
    """(2n^2 - 4n + 2k)/(n - k); equals 2n-2 at k=1."""
    return (2.0 * n * n - 4.0 * n + 2.0 * k) / (n - k)


def gamma_exponents(n, k):
    """Exponent branches for dimension n and order k.

    The degenerate branch is omitted with a diagnostic note when 2n-4 <= 0
    (n = 2), where the ODE solution is logarithmic rather than a power.
    """
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise InvalidArgumentError(f"n must be an integer >= 2, got {n!r}")
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise InvalidArgumentError(f"k must be an integer >= 1, got {k!r}")
    if k > n:
        raise InvalidArgumentError(f"k must be <= n, got k={k}, n={n}")
    branches = []
    notes = []
    if k < n:
        branches.append(GammaBranch(n=int(n), k=int(k), gamma=generic_gamma(n, k), branch=GENERIC))
    if k > 1:
        gd = 2.0 * n - 4.0
        if gd > 0:
            branches.append(GammaBranch(n=int(n), k=int(k), gamma=gd, branch=DEGENERATE))
        else:
            notes.append(
                f"degenerate branch omitted for n={n}: 2n-4 = {gd:g} is not a valid "
                "power exponent; the ODE s phi'' + (n-1) phi' = 0 is solved by "
                "phi = log s instead (see phi_eval_log)"
            )
    return GammaTable(branches=tuple(branches), notes=tuple(notes))


def admissible_singularity_sign(branch):
    """Sign c1 for which c1 |z|^{-gamma} has mu in the closure of Gamma_k.

    Degenerate branch and the k=1 generic branch: c1 = -1 (the standard
    fundamental solution, singular to -infinity).  Generic branch with
    1 < k < n: c1 = +1; the -1 sign has S_1(mu) < 0 there.
    """
    if branch.branch == DEGENERATE or branch.k == 1:
        return -1.0
    return +1.0


def phi_eval(gamma, s, c1=-1.0):
    """RadialPoint of phi(s) = c1 s^{-gamma/2}, normalized |c1| = 1 by default."""
    if s <= 0:
        raise InvalidArgumentError(f"s must be > 0, got {s}")
    if gamma <= 0:
        raise InvalidArgumentError(f"gamma must be > 0, got {gamma}")
    g = gamma / 2.0
    return RadialPoint(
        s=float(s),
        phi=c1 * s**-g,
        dphi=-c1 * g * s ** (-g - 1.0),
        d2phi=c1 * g * (g + 1.0) * s ** (-g - 2.0),
    )


def phi_eval_log(s, c=1.0):
    """RadialPoint of phi(s) = c log s, the n=2 replacement of the power branch."""
    if s <= 0:
        raise InvalidArgumentError(f"s must be > 0, got {s}")
    return RadialPoint(s=float(s), phi=c * math.log(s), dphi=c / s, d2phi=-c / s**2)


def radial_mu(pt, n):
    """Spectrum of a radial potential at pt: (m, ..., m, (n-1) phi')."""
    if n < 2:
        raise InvalidArgumentError(f"n must be >= 2, got {n}")
    m = (n - 1) * pt.dphi + pt.d2phi * pt.s
    out = np.full(n, m)
    out[-1] = (n - 1) * pt.dphi
    return out


def radial_sk(pt, n, k):
    """Closed-form S_k(radial_mu(pt, n))."""
    if not (1 <= k <= n):
        raise InvalidArgumentError(f"k must be in [1, n], got k={k}, n={n}")
    m = (n - 1) * pt.dphi + pt.d2phi * pt.s
    q = (n - k) * pt.d2phi * pt.s + n * (n - 1) * pt.dphi
    return math.comb(n - 1, k - 1) / k * m ** (k - 1) * q


def dense_radial_hessian(z, dphi, d2phi):
    """The complex Hessian phi'' conj(z_i) z_j + phi' delta_ij at a point z."""
    z = np.asarray(z, dtype=complex)
    return d2phi * np.outer(np.conj(z), z) + dphi * np.eye(z.size)


def fundamental_residual(branch, s_values, c1=None):
    """Scale-relative |S_k(mu[Phi])| at the given radii for one exponent branch.

    S_k is k-homogeneous, so the radial data is normalized to unit magnitude
    before evaluation (large gamma values overflow double precision
    otherwise); each residual is divided by the cancellation-free magnitude of
    the closed-form product at that scale.  Values are O(machine epsilon)
    when the branch exponent is correct.
    """
    if c1 is None:
        c1 = admissible_singularity_sign(branch)
    n, k = branch.n, branch.k
    out = []
    for s in np.asarray(s_values, dtype=float):
        pt = phi_eval(branch.gamma, s, c1=c1)
        scale = max(abs(pt.dphi), abs(pt.d2phi * s))
        pt_n = RadialPoint(s=s, phi=0.0, dphi=pt.dphi / scale, d2phi=pt.d2phi / scale)
        m_t = (n - 1) * abs(pt_n.dphi) + abs(pt_n.d2phi * s)
        q_t = (n - k) * abs(pt_n.d2phi * s) + n * (n - 1) * abs(pt_n.dphi)
        mag = math.comb(n - 1, k - 1) / k * m_t ** (k - 1) * q_t
        out.append(abs(radial_sk(pt_n, n, k)) / mag)
    return np.array(out)


def fundamental_mu_closure_defect(branch, s_values, c1=None):
    """Worst normalized negativity of S_j(mu[Phi]), j <= k, over the radii.

    Zero (up to rounding) means mu[Phi] lies in the closure of Gamma_k.  The
    spectrum is normalized to unit max-abs before the S_j evaluations (they
    are j-homogeneous), avoiding overflow at steep exponents.
    """
    if c1 is None:
        c1 = admissible_singularity_sign(branch)
    worst = 0.0
    for s in np.asarray(s_values, dtype=float):
        pt = phi_eval(branch.gamma, s, c1=c1)
        mu = radial_mu(pt, branch.n)
        scale = np.abs(mu).max()
        if scale == 0:
            continue
        mu_n = mu / scale
        norm = np.abs(mu_n).sum()
        for j in range(1, branch.k + 1):
            sj = elementary_symmetric(mu_n, j)
            worst = max(worst, -sj / norm**j)
    return worst
