"""Finite-difference Newton solver on punctured ball-in-box grids, n = 2.

Real dimension four: coordinates ordered (x1, y1, x2, y2), one real unknown
per Active node.  The complex structure lives entirely in the discrete
Hessian u_{i jbar} = (u_{x_i x_j} + u_{y_i y_j} + i (u_{x_i y_j} - u_{x_j y_i}))/4
assembled from second-order central differences; its stencil footprint is the
center, the eight axis neighbors and sixteen diagonal pairs (25 points, so
Jacobian rows have at most 25 nonzeros).

Boundary handling is first-order Dirichlet masking: every non-Active node
within stencil reach of an Active node is frozen to a globally defined
boundary function (the subsolution extends smoothly across both shells).
"""

import io
import math
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    GridConstructionError,
    InadmissiblePointError,
    InvalidArgumentError,
    NumericalError,
    SolverFailureError,
)
from .hessian_operator import LOG, ROOT
from .symfun import elementary_symmetric_batch

_MAGIC = b"FHGRID1\x00"


def _build_stencil():
    """Offsets and per-offset 2x2 weight blocks of the discrete complex Hessian."""
    acc = {}

    def add(off, p, q, w):
        off = tuple(int(x) for x in off)
        blk = acc.setdefault(off, np.zeros((2, 2), dtype=complex))
        blk[p, q] += w
        if p != q:
            blk[q, p] += np.conj(w)

    e = np.eye(4, dtype=int)
    for i, (ax, ay) in enumerate(((0, 1), (2, 3))):
        for axis in (ax, ay):
            add(+e[axis], i, i, 0.25)
            add(-e[axis], i, i, 0.25)
            add((0, 0, 0, 0), i, i, -0.5)
    # u_{1 2bar} = (u_{x1 x2} + u_{y1 y2} + i u_{x1 y2} - i u_{x2 y1}) / 4
    for (a, b, w) in ((0, 2, 0.25), (1, 3, 0.25), (0, 3, 0.25j), (2, 1, -0.25j)):
        for sa in (+1, -1):
            for sb in (+1, -1):
                add(sa * e[a] + sb * e[b], 0, 1, w * sa * sb / 4.0)
    center = acc.pop((0, 0, 0, 0))
    offsets = sorted(acc.keys())
    weights = np.array([acc[o] for o in offsets])
    return np.array(offsets, dtype=int), weights, center


STENCIL_OFFSETS, STENCIL_WEIGHTS, STENCIL_CENTER = _build_stencil()


class Grid4:
    """Uniform grid on a 4-cube with Active / Dirichlet / Unused classification.

    Active: nodes strictly inside the annulus eps < |z| < R.  Dirichlet: all
    other nodes within stencil reach of an Active node.  The box half-width is
    R + margin * h, so every Active stencil stays inside the box.
    """

    def __init__(self, R, eps, h, margin=3):
        if not (0 < eps < R):
            raise InvalidArgumentError("need 0 < eps < R")
        if h <= 0:
            raise InvalidArgumentError("spacing must be positive")
        if eps < 2 * h:
            raise GridConstructionError(
                f"puncture radius {eps} under-resolved at spacing {h} (need >= 2h)"
            )
        self.R, self.eps, self.h = float(R), float(eps), float(h)
        nside = int(math.ceil(R / h)) + margin
        self.axis = np.arange(-nside, nside + 1) * h
        nn = len(self.axis)
        self.shape = (nn,) * 4
        mesh = np.meshgrid(self.axis, self.axis, self.axis, self.axis, indexing="ij")
        self.coords = np.stack([m.ravel() for m in mesh], axis=1)
        r2 = (self.coords**2).sum(axis=1)
        active = (r2 < R * R) & (r2 > eps * eps)
        self.active_flat = np.flatnonzero(active)
        self.n_active = len(self.active_flat)
        if self.n_active == 0:
            raise GridConstructionError("no active nodes; refine the grid")

        strides = np.array([nn**3, nn**2, nn, 1])
        idx4 = np.stack(np.unravel_index(self.active_flat, self.shape), axis=1)
        for off in STENCIL_OFFSETS:
            nb = idx4 + off
            if not np.all((nb >= 0) & (nb < nn)):
                raise GridConstructionError("active stencil leaves the box; enlarge margin")
        self.neighbors = self.active_flat[:, None] + (STENCIL_OFFSETS * strides).sum(axis=1)[None, :]

        self.active_index = -np.ones(nn**4, dtype=np.int64)
        self.active_index[self.active_flat] = np.arange(self.n_active)
        dir_mask = np.zeros(nn**4, dtype=bool)
        nb = self.neighbors.ravel()
        dir_mask[nb[self.active_index[nb] < 0]] = True
        self.dirichlet_flat = np.flatnonzero(dir_mask)

    def active_coords(self):
        return self.coords[self.active_flat]

    def complex_points(self, flat_idx):
        c = self.coords[flat_idx]
        return np.stack([c[:, 0] + 1j * c[:, 1], c[:, 2] + 1j * c[:, 3]], axis=1)


@dataclass
class GridField:
    """Values on a Grid4: unknowns at Active nodes, frozen Dirichlet values."""

    grid: Grid4
    active_values: np.ndarray
    dirichlet_values: np.ndarray = field(default=None)

    @classmethod
    def from_function(cls, grid, fn):
        """Sample a globally defined function of the real 4-coordinates."""
        av = fn(grid.active_coords())
        dv = fn(grid.coords[grid.dirichlet_flat])
        return cls(grid=grid, active_values=np.asarray(av, float),
                   dirichlet_values=np.asarray(dv, float))

    def with_dirichlet_from(self, fn):
        dv = fn(self.grid.coords[self.grid.dirichlet_flat])
        return GridField(self.grid, self.active_values.copy(), np.asarray(dv, float))

    def full_array(self):
        """Global flat value array; Unused nodes are NaN."""
        v = np.full(np.prod(self.grid.shape), np.nan)
        v[self.grid.dirichlet_flat] = self.dirichlet_values
        v[self.grid.active_flat] = self.active_values
        return v


def hessian_batch(field):
    """Discrete 2x2 complex Hessians at every Active node, shape (N, 2, 2)."""
    g = field.grid
    vals = field.full_array()
    u_nb = vals[g.neighbors]
    if np.any(np.isnan(u_nb)):
        raise GridConstructionError("stencil touches an Unused node")
    u_c = vals[g.active_flat]
    A = (np.tensordot(u_nb, STENCIL_WEIGHTS, axes=([1], [0]))
         + u_c[:, None, None] * STENCIL_CENTER) / g.h**2
    return A


def complex_hessian(field, node):
    """Discrete Hessian at one Active node (by active index)."""
    g = field.grid
    if not (0 <= node < g.n_active):
        raise InvalidArgumentError(f"active index out of range: {node}")
    vals = field.full_array()
    u_nb = vals[g.neighbors[node]]
    if np.any(np.isnan(u_nb)):
        raise GridConstructionError("stencil touches an Unused node")
    u_c = vals[g.active_flat[node]]
    return (np.tensordot(u_nb, STENCIL_WEIGHTS, axes=([0], [0]))
            + u_c * STENCIL_CENTER) / g.h**2


def _mu_batch(A):
    lam = np.linalg.eigvalsh(A)
    return lam.sum(axis=1, keepdims=True) - lam, lam


def _f_batch(A, p):
    """Operator values, gradient matrices and admissibility mask, batched."""
    mu, lam = _mu_batch(A)
    n = p.n
    if p.form == LOG:
        adm = np.all(mu > 0, axis=1)
        safe = np.where(mu > 0, mu, 1.0)
        f = np.where(adm, np.log(safe).sum(axis=1), np.nan)
        inv = 1.0 / safe
        fi = inv.sum(axis=1, keepdims=True) - inv
        fi = np.where(adm[:, None], fi, np.nan)
    else:
        e = elementary_symmetric_batch(mu, p.k)
        adm = np.all(e[:, 1 : p.k + 1] > 0, axis=1)
        # k = 1 is linear and globally defined; fractional roots need the cone
        sk = e[:, p.k] if p.k == 1 else np.where(adm, e[:, p.k], np.nan)
        f = sk ** (1.0 / p.k)
        # partial sums S_{k-1;j} via per-column deletion
        partials = np.empty_like(mu)
        for j in range(n):
            sub = np.delete(mu, j, axis=1)
            partials[:, j] = elementary_symmetric_batch(sub, p.k - 1)[:, p.k - 1]
        pref = (1.0 / p.k) * sk ** (1.0 / p.k - 1.0)
        fi = pref[:, None] * (partials.sum(axis=1, keepdims=True) - partials)
    lamv, U = np.linalg.eigh(A)
    G = np.einsum("nip,np,njp->nij", U, fi, U.conj())
    return f, G, adm


def assemble_residual(field, p, eps):
    """Per-Active-node residual F(A) - target; raises on inadmissible nodes.

    target = eps^{1/k} for the root form, log eps for the log form.  Solvers
    use the flagged variant below to drive damping instead of catching errors.
    """
    r, _, adm = _residual_masked(field, p, eps)
    if not adm.all():
        i = int(np.flatnonzero(~adm)[0])
        coords = field.grid.active_coords()[i]
        raise InadmissiblePointError(
            f"inadmissible node at coordinates {coords.tolist()}", mu=None
        )
    return r


def _residual_masked(field, p, eps):
    A = hessian_batch(field)
    f, G, adm = _f_batch(A, p)
    target = math.log(eps) if p.form == LOG else eps ** (1.0 / p.k)
    return f - target, G, adm


def _jacobian(field, G):
    g = field.grid
    N = g.n_active
    vals_nb = np.einsum("npq,oqp->no", G, STENCIL_WEIGHTS).real / g.h**2
    vals_c = np.einsum("npq,qp->n", G, STENCIL_CENTER).real / g.h**2
    cols = g.active_index[g.neighbors]
    rows = np.repeat(np.arange(N), cols.shape[1])
    keep = (cols >= 0).ravel()
    J = sp.coo_matrix(
        (vals_nb.ravel()[keep], (rows[keep], cols.ravel()[keep])), shape=(N, N)
    ).tocsr()
    return J + sp.diags(vals_c)


def linear_solve(J, rhs, rtol=1e-12, symmetric=False):
    """Preconditioned Krylov solve of J x = rhs to relative rtol.

    The Jacobians here have negative diagonal (they discretize a negative
    elliptic operator), so the AMG hierarchy is built on -J.
    """
    import pyamg

    Jn = (-J).tocsr()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ml = pyamg.smoothed_aggregation_solver(Jn, max_coarse=500)
    Mneg = ml.aspreconditioner()
    M = spla.LinearOperator(J.shape, matvec=lambda x: -Mneg.matvec(x))
    if symmetric:
        x, info = spla.cg(Jn, -rhs, rtol=rtol, atol=0.0, M=Mneg, maxiter=1000)
    else:
        x, info = spla.gmres(J, rhs, rtol=rtol, atol=0.0, M=M, maxiter=400, restart=60)
    if info != 0:
        x, info = spla.bicgstab(J, rhs, rtol=rtol, atol=0.0, M=M, maxiter=2000)
        if info != 0:
            raise NumericalError(f"linear solver stagnated (info={info})")
    return x


def solve_grid(grid, p, eps, dirichlet_fn, init=None, tol=1e-9, max_iters=60,
               max_halvings=40, lin_rtol=1e-12, verbose=False):
    """Damped Newton for S_k(mu[u]) = eps on the masked grid.

    Dirichlet nodes are frozen to ``dirichlet_fn`` (a function of the real
    4-coordinates returning values); the default initial field samples the
    same function at Active nodes, which is admissible whenever the data is a
    subsolution.  Steps are halved until every Active node stays admissible
    and the residual max-norm decreases.
    """
    if p.n != 2:
        raise InvalidArgumentError("the grid path is implemented for n = 2")
    field = GridField.from_function(grid, dirichlet_fn)
    if init is not None:
        field.active_values = np.asarray(init, dtype=float).copy()
        if field.active_values.shape != (grid.n_active,):
            raise InvalidArgumentError("init has the wrong number of active values")

    r, G, adm = _residual_masked(field, p, eps)
    if not adm.all():
        raise InvalidArgumentError(
            f"initial field inadmissible at {int(np.count_nonzero(~adm))} nodes"
        )
    history = []
    lin_iters = 0
    converged = False
    for it in range(max_iters):
        nr = float(np.abs(r).max())
        history.append(nr)
        if verbose:
            print(f"newton {it}: |r|_inf = {nr:.3e}")
        if nr <= tol * (1.0 + eps):
            converged = True
            break
        J = _jacobian(field, G)
        step = linear_solve(J, r, rtol=lin_rtol, symmetric=(p.k == 1))
        lin_iters += 1
        lam = 1.0
        for _ in range(max_halvings):
            trial = GridField(grid, field.active_values - lam * step, field.dirichlet_values)
            rt, Gt, admt = _residual_masked(trial, p, eps)
            if admt.all() and float(np.abs(rt).max()) < nr:
                field, r, G = trial, rt, Gt
                break
            lam *= 0.5
        else:
            raise SolverFailureError(
                f"line search stalled at iteration {it} (|r| = {nr:.3e})",
                history=history,
            )
    if not converged:
        last = f"{history[-1]:.3e}" if history else "n/a"
        raise SolverFailureError(
            f"no convergence in {max_iters} iterations (|r| = {last})",
            history=history,
        )
    report = {
        "h": grid.h,
        "eps": eps,
        "k": p.k,
        "form": p.form,
        "n_active": grid.n_active,
        "newton_iters": len(history) - 1,
        "linear_solves": lin_iters,
        "residual_norm": history[-1],
        "residual_history": history,
        "admissible": True,
    }
    return field, report


def interpolate(field, points):
    """Multilinear interpolation of the field at real 4-coordinate points.

    Points must be surrounded by known (Active or Dirichlet) nodes.
    """
    g = field.grid
    vals = field.full_array()
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    lo = g.axis[0]
    x = (pts - lo) / g.h
    base = np.floor(x).astype(int)
    base = np.clip(base, 0, len(g.axis) - 2)
    frac = x - base
    # snap coordinates that are nodes up to rounding, so exact lookups never
    # pull in the previous cell
    snap_hi = frac > 1.0 - 1e-9
    base = np.where(snap_hi, base + 1, base)
    frac = np.where(snap_hi, 0.0, frac)
    frac = np.where(frac < 1e-9, 0.0, frac)
    nn = len(g.axis)
    strides = np.array([nn**3, nn**2, nn, 1])
    out = np.zeros(len(pts))
    for corner in range(16):
        bits = np.array([(corner >> b) & 1 for b in (3, 2, 1, 0)])
        w = np.prod(np.where(bits, frac, 1.0 - frac), axis=1)
        flat = ((base + bits) * strides).sum(axis=1)
        v = vals[np.clip(flat, 0, len(vals) - 1)]
        with np.errstate(invalid="ignore"):
            contrib = np.where(w > 0, w * np.where(np.isnan(v), np.inf, v), 0.0)
        out += np.where(w > 0, contrib, 0.0)
    if not np.all(np.isfinite(out)):
        raise InvalidArgumentError("interpolation stencil touches an Unused node")
    return out


def snapshot_csv(field, path, plane=None):
    """CSV of node coordinates and values; optionally only the (x1,y1,0,0) plane."""
    from .reporting import format_float

    g = field.grid
    coords = g.active_coords()
    values = field.active_values
    if plane == "x1y1":
        mask = (np.abs(coords[:, 2]) < g.h / 2) & (np.abs(coords[:, 3]) < g.h / 2)
        coords, values = coords[mask], values[mask]
    with open(path, "w") as fh:
        fh.write("x1,y1,x2,y2,value\n")
        for c, v in zip(coords, values):
            fh.write(",".join(format_float(x) for x in (*c, v)) + "\n")


def _rle(mask):
    """Run-length encode a boolean array: list of (value, count)."""
    runs = []
    if len(mask) == 0:
        return runs
    start = 0
    for i in range(1, len(mask) + 1):
        if i == len(mask) or mask[i] != mask[start]:
            runs.append((bool(mask[start]), i - start))
            start = i
    return runs


def dump_binary(field, path):
    """Compact dump: header (dims, h, active-mask RLE), body little-endian f64."""
    g = field.grid
    mask = np.zeros(np.prod(g.shape), dtype=bool)
    mask[g.active_flat] = True
    runs = _rle(mask)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<4I", *g.shape))
        fh.write(struct.pack("<d", g.h))
        fh.write(struct.pack("<2d", g.R, g.eps))
        fh.write(struct.pack("<Q", len(runs)))
        for val, count in runs:
            fh.write(struct.pack("<Bq", int(val), count))
        fh.write(struct.pack("<Q", g.n_active))
        fh.write(field.active_values.astype("<f8").tobytes())


def load_binary(path):
    """Read a dump back: returns (shape, h, R, eps, active_mask, values)."""
    with open(path, "rb") as fh:
        if fh.read(8) != _MAGIC:
            raise InvalidArgumentError("not a grid dump file")
        shape = struct.unpack("<4I", fh.read(16))
        h, = struct.unpack("<d", fh.read(8))
        R, eps = struct.unpack("<2d", fh.read(16))
        nruns, = struct.unpack("<Q", fh.read(8))
        mask = np.zeros(int(np.prod(shape)), dtype=bool)
        pos = 0
        for _ in range(nruns):
            val, count = struct.unpack("<Bq", fh.read(9))
            if val:
                mask[pos : pos + count] = True
            pos += count
        n_active, = struct.unpack("<Q", fh.read(8))
        values = np.frombuffer(fh.read(8 * n_active), dtype="<f8").copy()
    return shape, h, R, eps, mask, values
