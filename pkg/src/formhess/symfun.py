"""Elementary symmetric polynomials, their partials, and the Garding cones.

All operations treat a spectrum as a plain 1-D float array of length n >= 2.
Nothing here sorts implicitly; ``identity_suite`` is the one routine with an
ordering convention and it sorts internally (descending).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConeViolationError, InvalidArgumentError


def as_spectrum(values):
    """Validate and return a spectrum as a float array (finite entries, n >= 2)."""
    mu = np.asarray(values, dtype=float)
    if mu.ndim != 1 or mu.size < 2:
        raise InvalidArgumentError(f"spectrum must be a 1-D vector of length >= 2, got shape {mu.shape}")
    if not np.all(np.isfinite(mu)):
        raise InvalidArgumentError("spectrum entries must be finite")
    return mu


def elementary_symmetric(mu, k):
    """S_k(mu) by the one-pass recurrence over prefix products, O(nk).

    Conventions: S_0 = 1 and S_l = 0 for l > n.  Unlike the cone predicates
    this accepts vectors of any length (deletion-reduced spectra included).
    """
    mu = np.asarray(mu, dtype=float)
    if mu.ndim != 1:
        raise InvalidArgumentError(f"expected a 1-D vector, got shape {mu.shape}")
    if not np.all(np.isfinite(mu)):
        raise InvalidArgumentError("entries must be finite")
    if not isinstance(k, (int, np.integer)):
        raise InvalidArgumentError(f"k must be an integer, got {k!r}")
    if k < 0:
        raise InvalidArgumentError(f"k must be >= 0, got {k}")
    n = mu.size
    if k > n:
        return 0.0
    e = np.zeros(k + 1)
    e[0] = 1.0
    for x in mu:
        top = min(k, n)
        for j in range(top, 0, -1):
            e[j] += e[j - 1] * x
    return float(e[k])


def elementary_symmetric_batch(mu, kmax):
    """S_0..S_kmax for a batch of spectra, shape (N, n) -> (N, kmax + 1)."""
    mu = np.asarray(mu, dtype=float)
    N, n = mu.shape
    e = np.zeros((N, kmax + 1))
    e[:, 0] = 1.0
    for i in range(n):
        x = mu[:, i]
        for j in range(min(kmax, n), 0, -1):
            e[:, j] += e[:, j - 1] * x
    return e


def partial_symmetric(mu, k, j):
    """S_{k-1;j}(mu) = dS_k/dmu_j = S_{k-1} of mu with entry j deleted.

    ``j`` is a 0-based index into the spectrum.
    """
    mu = as_spectrum(mu)
    n = mu.size
    if not isinstance(k, (int, np.integer)) or not (1 <= k <= n):
        raise InvalidArgumentError(f"k must be an integer in [1, {n}], got {k!r}")
    if not isinstance(j, (int, np.integer)) or not (0 <= j < n):
        raise InvalidArgumentError(f"index j must be in [0, {n - 1}], got {j!r}")
    reduced = np.delete(mu, j)
    return elementary_symmetric(reduced, k - 1)


def all_partials(mu, k):
    """Vector (S_{k-1;j})_j of all first partials of S_k."""
    mu = as_spectrum(mu)
    return np.array([partial_symmetric(mu, k, j) for j in range(mu.size)])


def in_gamma_k(mu, k):
    """True iff S_j(mu) > 0 strictly for all j = 1..k (no tolerance).

    The cone is open; callers needing slack must add their own margin.
    """
    mu = as_spectrum(mu)
    n = mu.size
    if not isinstance(k, (int, np.integer)) or not (1 <= k <= n):
        raise InvalidArgumentError(f"k must be an integer in [1, {n}], got {k!r}")
    e = elementary_symmetric_batch(mu[None, :], k)[0]
    return bool(np.all(e[1 : k + 1] > 0.0))


@dataclass(frozen=True)
class IdentityReport:
    """Residuals and ratios of the symmetric-polynomial identity suite.

    decomposition_residual : max_i |S_k - (S_{k;i} + mu_i S_{k-1;i})|
    maclaurin_ratio        : S_k^{1/k} / S_{k-1}^{1/(k-1)}   (None for k = 1)
    partial_sum_residual   : |sum_i S_{k-1;i} - (n-k+1) S_{k-1}|
    kth_partial_share      : S_{k-1;k} / sum_i S_{k-1;i}  with mu sorted descending
    """

    n: int
    k: int
    decomposition_residual: float
    maclaurin_ratio: float | None
    partial_sum_residual: float
    kth_partial_share: float


def identity_suite(mu, k):
    """Evaluate the identity suite at mu (must lie in Gamma_k).

    Sorts mu descending internally; the k-th-partial share requires it.
    """
    mu = as_spectrum(mu)
    n = mu.size
    if not isinstance(k, (int, np.integer)) or not (1 <= k <= n):
        raise InvalidArgumentError(f"k must be an integer in [1, {n}], got {k!r}")
    if not in_gamma_k(mu, k):
        raise ConeViolationError(f"spectrum not in Gamma_{k}", mu=mu)
    mu = np.sort(mu)[::-1]

    sk = elementary_symmetric(mu, k)
    sk1 = elementary_symmetric(mu, k - 1)
    partials_k = all_partials(mu, k)            # S_{k-1;i}
    deleted_k = np.array([elementary_symmetric(np.delete(mu, i), k) for i in range(n)])  # S_{k;i}

    decomposition = float(np.max(np.abs(sk - (deleted_k + mu * partials_k))))
    maclaurin = float(sk ** (1.0 / k) / sk1 ** (1.0 / (k - 1))) if k >= 2 else None
    partial_sum = float(abs(partials_k.sum() - (n - k + 1) * sk1))
    share = float(partials_k[k - 1] / partials_k.sum())
    return IdentityReport(
        n=n,
        k=k,
        decomposition_residual=decomposition,
        maclaurin_ratio=maclaurin,
        partial_sum_residual=partial_sum,
        kth_partial_share=share,
    )


def sample_gamma_k(rng, n, k, count):
    """Rejection-sample ``count`` spectra from a standard Gaussian into Gamma_k."""
    out = np.empty((count, n))
    got = 0
    while got < count:
        batch = rng.standard_normal((max(4 * (count - got), 256), n))
        e = elementary_symmetric_batch(batch, k)
        keep = batch[np.all(e[:, 1 : k + 1] > 0.0, axis=1)]
        take = min(len(keep), count - got)
        out[got : got + take] = keep[:take]
        got += take
    return out
