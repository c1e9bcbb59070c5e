"""The operator F(A) = S_k^{1/k}(mu(A)) on Hermitian matrices, and its algebra.

Here mu(A) is the spectrum of tr(A) I - A; equivalently mu_i = S_1(lambda) - lambda_i
for the eigenvalues lambda of A.  For k = n the logarithmic form
F(A) = sum_i log mu_i is used (it linearizes the degenerate product).
Gradients are computed spectrally: diagonalize, apply the diagonal formula,
conjugate back.  This is valid because F is a symmetric spectral function;
eigenvalue multiplicities need no special-casing at first order.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InadmissiblePointError, InvalidArgumentError, NumericalError
from .symfun import all_partials, elementary_symmetric, in_gamma_k

ROOT = "root"
LOG = "log"


@dataclass(frozen=True)
class OperatorParams:
    """Dimension, order, functional form and right-hand-side level of the operator."""

    n: int
    k: int
    form: str = ROOT
    rhs_level: float = 0.0

    def __post_init__(self):
        if self.n < 2:
            raise InvalidArgumentError(f"n must be >= 2, got {self.n}")
        if not (1 <= self.k <= self.n):
            raise InvalidArgumentError(f"k must be in [1, n], got k={self.k}, n={self.n}")
        if self.form not in (ROOT, LOG):
            raise InvalidArgumentError(f"form must be {ROOT!r} or {LOG!r}, got {self.form!r}")
        if self.form == LOG and self.k != self.n:
            raise InvalidArgumentError("log form is only valid for k = n")
        if self.rhs_level < 0:
            raise InvalidArgumentError(f"rhs_level must be >= 0, got {self.rhs_level}")


class HermitianMatrix:
    """n x n complex Hermitian matrix, Hermitian by construction.

    Only the upper triangle and the real part of the diagonal of the input are
    used, so ``mat == mat.conj().T`` holds exactly (no tolerance involved).
    """

    __slots__ = ("mat",)

    def __init__(self, entries):
        m = np.asarray(entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidArgumentError(f"expected a square matrix, got shape {m.shape}")
        if m.shape[0] < 2:
            raise InvalidArgumentError("dimension must be >= 2")
        upper = np.triu(m, 1)
        self.mat = upper + upper.conj().T + np.diag(m.diagonal().real)

    @property
    def n(self):
        return self.mat.shape[0]

    def __add__(self, other):
        return HermitianMatrix(self.mat + other.mat)

    def __sub__(self, other):
        return HermitianMatrix(self.mat - other.mat)

    def __mul__(self, t):
        return HermitianMatrix(self.mat * float(t))

    __rmul__ = __mul__

    def __repr__(self):
        return f"HermitianMatrix(n={self.n})"


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (ascending) and unitary eigenvector matrix of a Hermitian A."""

    eigenvalues: np.ndarray
    unitary: np.ndarray


def mu_from_lambda(lam):
    """mu_i = S_1(lambda) - lambda_i."""
    lam = np.asarray(lam, dtype=float)
    return lam.sum() - lam


def lambda_from_mu(mu):
    """Inverse map lambda_i = S_1(mu)/(n-1) - mu_i; requires n >= 2."""
    mu = np.asarray(mu, dtype=float)
    n = mu.size
    if n < 2:
        raise InvalidArgumentError("lambda_from_mu needs n >= 2")
    return mu.sum() / (n - 1) - mu


def mu_of_matrix(A):
    """Spectrum of tr(A) I - A, plus the decomposition of A for gradient reuse."""
    try:
        lam, U = np.linalg.eigh(A.mat)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"eigendecomposition failed (matrix norm {np.linalg.norm(A.mat):.3e})"
        ) from exc
    return mu_from_lambda(lam), SpectralDecomposition(eigenvalues=lam, unitary=U)


def _check_admissible(mu, p):
    if p.form == LOG:
        if not np.all(mu > 0.0):
            raise InadmissiblePointError("mu has a nonpositive entry (log form)", mu=mu)
    else:
        if not in_gamma_k(mu, p.k):
            raise InadmissiblePointError(f"mu not in Gamma_{p.k}", mu=mu)


def f_value(A, p):
    """S_k(mu)^{1/k} (root form) or sum_i log mu_i (log form)."""
    mu, _ = mu_of_matrix(A)
    _check_admissible(mu, p)
    if p.form == LOG:
        return float(np.log(mu).sum())
    return float(elementary_symmetric(mu, p.k) ** (1.0 / p.k))


def _f_eigen_derivatives(mu, p):
    """df/dlambda_i given the mu paired with lambda (same eigen order)."""
    n = mu.size
    if p.form == LOG:
        inv = 1.0 / mu
        return inv.sum() - inv
    sk = elementary_symmetric(mu, p.k)
    partials = all_partials(mu, p.k)  # S_{k-1;j}
    pref = (1.0 / p.k) * sk ** (1.0 / p.k - 1.0)
    return pref * (partials.sum() - partials)


def f_gradient(A, p):
    """Gradient matrix U diag(f_1..f_n) U^*; positive definite at admissible A.

    The pairing convention is d/dt f(A + t H) = trace(f_gradient(A) @ H) for
    Hermitian H.
    """
    mu, dec = mu_of_matrix(A)
    _check_admissible(mu, p)
    fi = _f_eigen_derivatives(mu, p)
    G = (dec.unitary * fi) @ dec.unitary.conj().T
    return HermitianMatrix(G)


def trace_identity_residual(A, p):
    """|trace(grad . A) - F(A)| (root) or |trace(grad . A) - n| (log)."""
    G = f_gradient(A, p)
    tr = float(np.trace(G.mat @ A.mat).real)
    if p.form == LOG:
        return abs(tr - p.n)
    return abs(tr - f_value(A, p))


@dataclass(frozen=True)
class EllipticityReport:
    """min_i f_i over the total, with the closed form of the trace sum."""

    ratio: float
    f_sum: float
    f_sum_closed_form: float


def ellipticity_ratio(A, p):
    """min_i f_i / sum_i f_i for the root form with k < n.

    Also evaluates the closed form of the trace sum,
    (n-1)(n-k+1)/k * S_k^{1/k-1} S_{k-1}, and raises if the two disagree
    beyond 1e-10 relative.  k = n is rejected: the log form is not uniformly
    elliptic and the ratio is not bounded below there.
    """
    if p.form == LOG or p.k == p.n:
        raise InvalidArgumentError("ellipticity_ratio requires the root form with k < n")
    mu, _ = mu_of_matrix(A)
    _check_admissible(mu, p)
    fi = _f_eigen_derivatives(mu, p)
    f_sum = float(fi.sum())
    sk = elementary_symmetric(mu, p.k)
    sk1 = elementary_symmetric(mu, p.k - 1)
    closed = (p.n - 1) * (p.n - p.k + 1) / p.k * sk ** (1.0 / p.k - 1.0) * sk1
    if abs(f_sum - closed) > 1e-10 * abs(closed):
        raise NumericalError(
            f"trace-sum closed form mismatch: {f_sum!r} vs {closed!r} at mu={mu!r}"
        )
    return EllipticityReport(ratio=float(fi.min() / f_sum), f_sum=f_sum, f_sum_closed_form=float(closed))


def concavity_probe(A, H, p, t_max):
    """Max second central difference of t -> F(A + t H) over a 9-point stencil.

    Concavity means the result is nonpositive up to truncation and rounding.
    Differences are divided by dt^2.  Raises InadmissiblePointError if the
    segment [-t_max, t_max] leaves the admissible cone.
    """
    if t_max <= 0:
        raise InvalidArgumentError(f"t_max must be positive, got {t_max}")
    ts = np.linspace(-t_max, t_max, 9)
    dt = ts[1] - ts[0]
    g = np.array([f_value(A + float(t) * H, p) for t in ts])
    second = (g[2:] - 2.0 * g[1:-1] + g[:-2]) / dt**2
    return float(second.max())
