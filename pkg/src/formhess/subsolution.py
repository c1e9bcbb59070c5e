"""Subsolution constructions for the punctured Dirichlet problems.

A subsolution is a globally defined smooth function that (i) is admissible,
(ii) satisfies S_k(mu) >= rhs_floor in the domain, and (iii) matches the
boundary data.  On balls an explicit radial formula is available:
the quadratic a |z|^2 solves S_k(mu) = 1 exactly when
a = ((n-1)^k C(n,k))^{-1/k}, and adding a singular radial term with
S_k(mu) = 0 preserves the floor by concavity (superadditivity of S_k^{1/k}
over the closed cone).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConstructionFailureError,
    InvalidArgumentError,
    UnsupportedShapeError,
)
from .fundamental import dense_radial_hessian
from .hessian_operator import mu_from_lambda
from .symfun import elementary_symmetric_batch

BALL = "ball"
BOX = "box"


@dataclass(frozen=True)
class DomainSpec:
    """Ball or axis-aligned box in C^n.

    Ball: center (complex n-vector) and radius; defining function
    sigma = |z - c|^2 - R^2.  Box: lower/upper corners in the real
    coordinates (x_1, y_1, ..., x_n, y_n).
    """

    shape: str
    n: int
    center: np.ndarray | None = None
    radius: float | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        if self.n < 2:
            raise InvalidArgumentError("complex dimension must be >= 2")
        if self.shape == BALL:
            if self.radius is None or self.radius <= 0:
                raise InvalidArgumentError("ball needs a positive radius")
            c = np.zeros(self.n, dtype=complex) if self.center is None else np.asarray(self.center, dtype=complex)
            object.__setattr__(self, "center", c)
        elif self.shape == BOX:
            lo = np.asarray(self.lower, dtype=float)
            hi = np.asarray(self.upper, dtype=float)
            if lo.shape != (2 * self.n,) or hi.shape != (2 * self.n,):
                raise InvalidArgumentError("box corners must have 2n real coordinates")
            if not np.all(hi > lo):
                raise InvalidArgumentError("box must have strictly positive extents")
            object.__setattr__(self, "lower", lo)
            object.__setattr__(self, "upper", hi)
        else:
            raise InvalidArgumentError(f"unknown shape {self.shape!r}")

    def sigma(self, z):
        if self.shape != BALL:
            raise UnsupportedShapeError("defining function only available for balls")
        z = np.asarray(z, dtype=complex)
        return float(np.sum(np.abs(z - self.center) ** 2) - self.radius**2)

    def diameter(self):
        if self.shape == BALL:
            return 2.0 * self.radius
        return float(np.linalg.norm(self.upper - self.lower))


def ball(n, radius, center=None):
    return DomainSpec(shape=BALL, n=n, radius=radius, center=center)


def box(n, lower, upper):
    return DomainSpec(shape=BOX, n=n, lower=lower, upper=upper)


def levi_trace(domain, z, boundary_tol=1e-10):
    """Trace of the Levi form of the defining function on the complex tangent space.

    For a ball this is n - 1 exactly: the Hessian of sigma is the identity and
    the complex normal direction removes one unit from the trace.  Boxes are
    rejected: their boundary is not smooth and no Levi condition is needed for
    k < n anyway.
    """
    if domain.shape == BOX:
        raise UnsupportedShapeError("levi_trace: box corners are non-smooth; Levi data undefined")
    z = np.asarray(z, dtype=complex)
    sigma = np.sum(np.abs(z - domain.center) ** 2) - domain.radius**2
    scale = max(1.0, domain.radius**2)
    if abs(sigma) > boundary_tol * scale:
        raise InvalidArgumentError(f"point not on the boundary: sigma = {sigma:.3e}")
    hess = np.eye(domain.n)
    normal = z - domain.center
    n2 = np.vdot(normal, normal).real
    return float(np.trace(hess).real - (np.vdot(normal, hess @ normal).real / n2))


@dataclass(frozen=True)
class Subsolution:
    """Evaluators for value, real gradient and complex Hessian, plus metadata."""

    value: object
    gradient: object
    complex_hessian: object
    params: dict
    rhs_floor: float

    def mu(self, z):
        lam = np.linalg.eigvalsh(self.complex_hessian(z))
        return mu_from_lambda(lam)


def quadratic_coefficient(n, k):
    """a with S_k(mu[a |z|^2]) = 1: a = ((n-1)^k C(n,k))^{-1/k}."""
    return ((n - 1) ** k * math.comb(n, k)) ** (-1.0 / k)


def _radial_subsolution(n, singular, dsingular, d2singular, a, b, params, rhs_floor):
    """Assemble a Subsolution from phi(s) = singular(s) + a s + b."""

    def value(z):
        s = float(np.sum(np.abs(np.asarray(z, dtype=complex)) ** 2))
        return singular(s) + a * s + b

    def gradient(z):
        z = np.asarray(z, dtype=complex)
        s = float(np.sum(np.abs(z) ** 2))
        dphi = dsingular(s) + a
        g = 2.0 * dphi * z  # gradient in the real coordinates, packed as x + i y
        return np.concatenate([g.real, g.imag])

    def complex_hessian(z):
        z = np.asarray(z, dtype=complex)
        s = float(np.sum(np.abs(z) ** 2))
        return dense_radial_hessian(z, dsingular(s) + a, d2singular(s))

    return Subsolution(
        value=value,
        gradient=gradient,
        complex_hessian=complex_hessian,
        params=params,
        rhs_floor=rhs_floor,
    )


def ball_subsolution(R, gamma, p, boundary_constant, singular_sign=-1.0):
    """u = singular_sign |z|^{-gamma} * (-1)^... + a |z|^2 + b on the ball of radius R.

    Concretely u(z) = c1 |z|^{-gamma} + a |z|^2 + b with c1 = singular_sign,
    a = ((n-1)^k C(n,k))^{-1/k} so that the quadratic part alone has
    S_k(mu) = 1, and b chosen so u = boundary_constant on |z| = R.
    With the closure-admissible sign for the branch (see
    ``fundamental.admissible_singularity_sign``) this gives
    S_k(mu[u]) >= 1 on the punctured ball.
    """
    if gamma <= 0:
        raise InvalidArgumentError(f"gamma must be > 0, got {gamma}")
    if R <= 0:
        raise InvalidArgumentError(f"R must be > 0, got {R}")
    if singular_sign not in (-1.0, 1.0, -1, 1):
        raise InvalidArgumentError("singular_sign must be +1 or -1")
    n, k = p.n, p.k
    g = gamma / 2.0
    c1 = float(singular_sign)
    a = quadratic_coefficient(n, k)
    b = boundary_constant - c1 * R ** (-gamma) - a * R**2
    params = {"a": a, "b": b, "gamma": gamma, "singular_sign": c1, "R": R,
              "boundary_constant": boundary_constant}
    return _radial_subsolution(
        n,
        singular=lambda s: c1 * s**-g,
        dsingular=lambda s: -c1 * g * s ** (-g - 1.0),
        d2singular=lambda s: c1 * g * (g + 1.0) * s ** (-g - 2.0),
        a=a,
        b=b,
        params=params,
        rhs_floor=1.0,
    )


def log_ball_subsolution(R, p, boundary_constant, strength=1.0):
    """n = 2, k = 2 variant with the logarithmic singular part c log|z|^2.

    The power-branch exponent degenerates to zero in complex dimension two;
    the admissible singular model is c log|z|^2 with c > 0, for which the
    repeated spectrum value vanishes identically, so the quadratic part's
    floor S_k = 1 survives.
    """
    if p.n != 2 or p.k != 2:
        raise InvalidArgumentError("log_ball_subsolution is the n=2, k=2 construction")
    if strength <= 0:
        raise InvalidArgumentError("strength must be > 0")
    a = quadratic_coefficient(p.n, p.k)
    b = boundary_constant - strength * math.log(R**2) - a * R**2
    params = {"a": a, "b": b, "strength": strength, "R": R,
              "boundary_constant": boundary_constant}
    return _radial_subsolution(
        p.n,
        singular=lambda s: strength * math.log(s),
        dsingular=lambda s: strength / s,
        d2singular=lambda s: -strength / s**2,
        a=a,
        b=b,
        params=params,
        rhs_floor=1.0,
    )


class ZeroFunction:
    """The zero boundary extension (value, gradient and Hessian all vanish)."""

    def __init__(self, n):
        self.n = n

    def value(self, z):
        return 0.0

    def gradient(self, z):
        return np.zeros(2 * self.n)

    def complex_hessian(self, z):
        return np.zeros((self.n, self.n), dtype=complex)


def _box_samples(domain, per_axis=5):
    axes = [np.linspace(lo, hi, per_axis + 2)[1:-1]
            for lo, hi in zip(domain.lower, domain.upper)]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    return pts[:, 0::2] + 1j * pts[:, 1::2]


def box_subsolution(domain, boundary_data, p, h_level, max_doublings=60):
    """u = phi_ext + B (|z|^2 - d^2) with B doubled until S_k(mu[u]) >= h_level.

    Requires k < n (no boundary convexity condition is needed there).  The
    extension phi_ext must be a globally defined smooth function; pass None
    for zero data.  The returned subsolution's own boundary trace is the
    Dirichlet data it certifies.
    """
    if domain.shape != BOX:
        raise InvalidArgumentError("box_subsolution needs a box domain")
    if p.k >= p.n:
        raise InvalidArgumentError("box_subsolution requires k < n")
    if boundary_data is None:
        boundary_data = ZeroFunction(p.n)
    d2 = domain.diameter() ** 2
    samples = _box_samples(domain)
    hess_data = np.stack([boundary_data.complex_hessian(z) for z in samples])
    eye = np.eye(p.n)

    B = 1.0
    for _ in range(max_doublings + 1):
        hess = hess_data + B * eye
        lam = np.linalg.eigvalsh(hess)
        mu = lam.sum(axis=1, keepdims=True) - lam
        e = elementary_symmetric_batch(mu, p.k)
        admissible = np.all(e[:, 1 : p.k + 1] > 0.0, axis=1)
        floor_ok = e[:, p.k] >= h_level
        good = admissible & floor_ok
        if good.all():
            break
        B *= 2.0
    else:
        bad = samples[~good][0]
        raise ConstructionFailureError(
            f"coefficient doubling exceeded 2^{max_doublings}", point=bad
        )

    def value(z):
        s = float(np.sum(np.abs(np.asarray(z, dtype=complex)) ** 2))
        return boundary_data.value(z) + B * (s - d2)

    def gradient(z):
        z = np.asarray(z, dtype=complex)
        g = 2.0 * B * z
        return boundary_data.gradient(z) + np.concatenate([g.real, g.imag])

    def complex_hessian(z):
        return boundary_data.complex_hessian(z) + B * eye

    return Subsolution(
        value=value,
        gradient=gradient,
        complex_hessian=complex_hessian,
        params={"B": B, "d2": d2},
        rhs_floor=float(h_level),
    )
