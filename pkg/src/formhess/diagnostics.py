"""Post-processing: sphere profiles, blow-up rate fits, ordering checks.

The a priori bounds being probed are existential in their constants, so the
acceptance quantity is always the exponent: profiles are fitted on log-log
axes and the slope is compared against the predicted blow-up rate.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from .errors import InvalidArgumentError
from .grid_solver import GridField, hessian_batch, interpolate
from .radial_solver import RadialSolution

VALUE = "value"
GRADIENT = "gradient"
HESSIAN_NORM = "hessian_norm"


@dataclass(frozen=True)
class RateFit:
    window: tuple
    samples: tuple
    slope: float
    intercept: float
    r_squared: float


def fit_rate(samples):
    """Least-squares slope of log(value) against log(r).

    Needs at least 6 samples with strictly positive values and radii.
    """
    samples = [(float(r), float(v)) for r, v in samples]
    if len(samples) < 6:
        raise InvalidArgumentError("rate fit needs at least 6 samples")
    r = np.array([s[0] for s in samples])
    v = np.array([s[1] for s in samples])
    if np.any(r <= 0) or np.any(v <= 0):
        raise InvalidArgumentError("rate fit needs positive radii and values")
    x, y = np.log(r), np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(
        window=(float(r.min()), float(r.max())),
        samples=tuple(samples),
        slope=float(slope),
        intercept=float(intercept),
        r_squared=max(0.0, r2),
    )


def sphere_directions(count=100, seed=0):
    """Deterministic low-discrepancy unit vectors in R^4 (Sobol + Gaussian map)."""
    eng = qmc.Sobol(d=4, scramble=True, seed=seed)
    u = eng.random_base2(max(int(np.ceil(np.log2(max(count, 2)))), 1))[:count]
    z = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    return z / norms


def _radial_profile(sol, radii, quantity):
    out = []
    for r in radii:
        s = r * r
        phi, dphi, d2phi = sol.eval(s)
        if quantity == VALUE:
            out.append(abs(phi))
        elif quantity == GRADIENT:
            out.append(abs(2.0 * r * dphi))
        elif quantity == HESSIAN_NORM:
            # eigenvalue extremes of the radial Hessian = max-abs entry in its eigenframe
            out.append(max(abs(dphi + d2phi * s), abs(dphi)))
        else:
            raise InvalidArgumentError(f"unknown quantity {quantity!r}")
    return np.array(out)


def _grid_profile(field, radii, quantity, n_dirs=100, seed=0):
    g = field.grid
    dirs = sphere_directions(n_dirs, seed=seed)
    coords = g.active_coords()
    rad = np.linalg.norm(coords, axis=1)
    if quantity == VALUE:
        sample_field = field
    elif quantity == GRADIENT:
        vals = field.full_array()
        nn = len(g.axis)
        grads = np.zeros((g.n_active, 4))
        strides = np.array([nn**3, nn**2, nn, 1])
        for ax in range(4):
            up = vals[g.active_flat + strides[ax]]
            dn = vals[g.active_flat - strides[ax]]
            grads[:, ax] = (up - dn) / (2 * g.h)
        mag = np.linalg.norm(grads, axis=1)
        # derived fields exist only at Active nodes; NaN padding makes any
        # interpolation touching the boundary layer fail loudly
        sample_field = GridField(g, mag, np.full(len(g.dirichlet_flat), np.nan))
    elif quantity == HESSIAN_NORM:
        A = hessian_batch(field)
        mag = np.abs(A).max(axis=(1, 2))
        sample_field = GridField(g, mag, np.full(len(g.dirichlet_flat), np.nan))
    else:
        raise InvalidArgumentError(f"unknown quantity {quantity!r}")

    out = []
    for r in radii:
        nearby = np.count_nonzero(np.abs(rad - r) <= g.h)
        if nearby < 20:
            raise InvalidArgumentError(
                f"sphere r={r} intersects only {nearby} active nodes (need >= 20)"
            )
        pts = r * dirs
        vals = interpolate(sample_field, pts)
        out.append(float(np.abs(vals).max()))
    return np.array(out)


def sphere_profile(solution, radii, quantity, n_dirs=100, seed=0):
    """Sup over spheres |z| = r of |u|, |grad u| or the max-abs Hessian entry.

    Radial solutions are evaluated exactly; grid fields by multilinear
    interpolation at deterministic low-discrepancy sphere points (the radii
    must keep all interpolation stencils inside the known region).
    """
    radii = [float(r) for r in radii]
    if isinstance(solution, RadialSolution):
        lo = solution.problem.eps
        hi = solution.problem.R
        if any(not (lo <= r <= hi) for r in radii):
            raise InvalidArgumentError("radius outside the annulus")
        vals = _radial_profile(solution, radii, quantity)
    elif isinstance(solution, GridField):
        vals = _grid_profile(solution, radii, quantity, n_dirs=n_dirs, seed=seed)
    else:
        raise InvalidArgumentError(f"unsupported solution type {type(solution)!r}")
    return list(zip(radii, vals.tolist()))


def sandwich_check(values_fn, lower_fn, upper_fn, sample_points):
    """Max over samples of max(lower - value, value - upper)."""
    worst = -np.inf
    for x in sample_points:
        v = values_fn(x)
        worst = max(worst, lower_fn(x) - v, v - upper_fn(x))
    return float(worst)


def monotonicity_check(runs_values, slack):
    """True iff each successive run dominates the previous one up to slack.

    ``runs_values`` is a sequence of value arrays at shared probes, ordered by
    decreasing eps.  Returns (ok, worst_gap) with worst_gap the most negative
    increment (positive means strictly monotone everywhere).
    """
    arr = np.asarray(runs_values, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 2:
        raise InvalidArgumentError("need at least two runs on shared probes")
    gaps = np.diff(arr, axis=0)
    return bool(np.all(gaps >= -slack)), float(gaps.min())
