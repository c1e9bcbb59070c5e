"""Damped-Newton solver for the radial punctured-annulus Dirichlet problems.

The unknown is the radial potential phi(s), s = |z|^2, discretized on a
uniform mesh in t = log s over [log eps^2, log R^2].  Interior nodes carry the
equation S_k(mu[phi]) = eps (or its log form for k = n); the two boundary
rows carry the Dirichlet mismatch.

Stencils: 3-point weights for phi_t and phi_tt that are exact on
span{1, e^{-g t}, e^{t}} with g = gamma/2 (span{1, t, e^t} for the
logarithmic branch g = 0).  For general smooth profiles these are
second-order accurate like plain central differences; on the singular family
and on quadratic profiles a s + b they are exact, which is what keeps the
blow-up profiles resolvable on a 512-node mesh.  Plain central stencils leave
an O(g^2 dt^2) relative truncation on the singular family, which for
gamma = 10 is four orders of magnitude too coarse for the limit oracle.

Conditioning: nodal values near the puncture reach the profile's blow-up
scale, so pointwise residuals and cone checks carry float-cancellation noise
proportional to the local magnitude.  Every check here (admissibility margin,
convergence, line search) therefore works against per-node noise bounds
propagated from cancellation-free absolute sums; an absolute residual
tolerance would be unattainable in double precision.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .errors import InvalidArgumentError, SolverFailureError
from .subsolution import quadratic_coefficient

U_ROUND = 2.0**-52
NOISE_FACTOR = 30.0

ROOT = "root"
LOG = "log"


def fitted_weights(g, dt):
    """3-point stencil weights (w1 for phi_t, w2 for phi_tt) at the center node.

    Exact on span{1, e^{-g t}, e^{t}} for g > 0, span{1, t, e^t} for g = 0.
    Closed form via expm1 to avoid the ill-conditioned 3x3 solve.
    """
    if dt <= 0:
        raise InvalidArgumentError("dt must be positive")
    if abs(g) < 1e-12:
        a11, a12 = -dt, dt
        d1, d2 = 1.0, 0.0
    else:
        a11, a12 = math.expm1(g * dt), math.expm1(-g * dt)
        d1, d2 = -g, g * g
    a21, a22 = math.expm1(-dt), math.expm1(dt)
    det = a11 * a22 - a12 * a21

    def solve(r1, r2):
        wm = (r1 * a22 - a12 * r2) / det
        wp = (a11 * r2 - r1 * a21) / det
        return np.array([wm, -(wm + wp), wp])

    return solve(d1, 1.0), solve(d2, 1.0)


@dataclass(frozen=True)
class RadialProblem:
    """Annulus problem: S_k(mu[phi]) = eps on eps < |z| < R with Dirichlet data.

    ``gamma`` selects the singular-family branch used by the fitted stencils
    and the default initial profile; gamma = 0 means the logarithmic branch.
    ``boundary`` holds (value at s = eps^2, value at s = R^2).
    """

    n: int
    k: int
    form: str
    gamma: float
    R: float
    eps: float
    boundary: tuple
    M: int = 512
    rhs_level: float = None  # defaults to eps (the shrinking-puncture coupling)

    def __post_init__(self):
        if self.rhs_level is None:
            object.__setattr__(self, "rhs_level", float(self.eps))
        if self.rhs_level <= 0:
            raise InvalidArgumentError("rhs_level must be positive")
        if self.form not in (ROOT, LOG):
            raise InvalidArgumentError(f"form must be {ROOT!r} or {LOG!r}")
        if self.form == LOG and self.k != self.n:
            raise InvalidArgumentError("log form requires k = n")
        if not (0 < self.eps < self.R):
            raise InvalidArgumentError("need 0 < eps < R")
        if self.M < 32:
            raise InvalidArgumentError("mesh must have at least 32 cells")
        if self.gamma < 0:
            raise InvalidArgumentError("gamma must be >= 0 (0 selects the log branch)")
        if not all(np.isfinite(self.boundary)):
            raise InvalidArgumentError("boundary values must be finite")

    @property
    def t_nodes(self):
        return np.linspace(2.0 * math.log(self.eps), 2.0 * math.log(self.R), self.M + 1)

    @property
    def s_nodes(self):
        return np.exp(self.t_nodes)


class _Discretization:
    """Mesh, stencils, residual/Jacobian assembly for one problem."""

    def __init__(self, problem):
        self.pb = problem
        self.t = problem.t_nodes
        self.dt = self.t[1] - self.t[0]
        self.s = np.exp(self.t)
        self.g = problem.gamma / 2.0
        self.w1, self.w2 = fitted_weights(self.g, self.dt)
        self.binom = math.comb(problem.n - 1, problem.k - 1)

    def parts(self, phi):
        n, k = self.pb.n, self.pb.k
        w1, w2 = self.w1, self.w2
        s = self.s[1:-1]
        pt = w1[0] * phi[:-2] + w1[1] * phi[1:-1] + w1[2] * phi[2:]
        ptt = w2[0] * phi[:-2] + w2[1] * phi[1:-1] + w2[2] * phi[2:]
        aphi = np.abs(phi)
        pt_b = abs(w1[0]) * aphi[:-2] + abs(w1[1]) * aphi[1:-1] + abs(w1[2]) * aphi[2:]
        ptt_b = abs(w2[0]) * aphi[:-2] + abs(w2[1]) * aphi[1:-1] + abs(w2[2]) * aphi[2:]
        dphi = pt / s
        d2s = (ptt - pt) / s
        m = (n - 1) * dphi + d2s
        mun = (n - 1) * dphi
        q = (n - k) * d2s + n * (n - 1) * dphi
        c = self.binom / k
        sk = c * m ** (k - 1) * q
        # first-order rounding-noise propagation from the stencil sums
        e_t, e_tt = U_ROUND * pt_b, U_ROUND * ptt_b
        e_dphi = e_t / s
        e_d2s = (e_tt + e_t) / s
        e_m = (n - 1) * e_dphi + e_d2s
        e_mun = (n - 1) * e_dphi
        e_q = (n - k) * e_d2s + n * (n - 1) * e_dphi
        am, aq = np.abs(m) + e_m, np.abs(q) + e_q
        if k > 1:
            e_sk = c * ((k - 1) * am ** (k - 2) * e_m * aq + am ** (k - 1) * e_q)
        else:
            e_sk = c * e_q
        mag_sk = c * ((n - 1) * np.abs(dphi) + np.abs(d2s)) ** (k - 1) * (
            (n - k) * np.abs(d2s) + n * (n - 1) * np.abs(dphi)
        )
        return dict(s=s, dphi=dphi, d2s=d2s, m=m, mun=mun, q=q, sk=sk,
                    e_m=e_m, e_mun=e_mun, e_sk=e_sk, mag_sk=mag_sk)

    def admissible_mask(self, phi, parts=None):
        """Per-node test that mu = (m,...,m,mun) lies in Gamma_k beyond noise."""
        n, k = self.pb.n, self.pb.k
        p = parts or self.parts(phi)
        m, mun, e_m, e_mun = p["m"], p["mun"], p["e_m"], p["e_mun"]
        am = np.abs(m) + e_m
        amun = np.abs(mun) + e_mun
        ok = np.ones(len(m), dtype=bool)
        for j in range(1, k + 1):
            cj, cj1 = math.comb(n - 1, j), math.comb(n - 1, j - 1)
            sj = cj * m**j + cj1 * m ** (j - 1) * mun
            e_sj = cj * j * am ** (j - 1) * e_m + cj1 * (
                (j - 1) * am ** max(j - 2, 0) * e_m * amun + am ** (j - 1) * e_mun
            )
            ok &= sj >= -NOISE_FACTOR * e_sj
        if self.pb.form == LOG:
            ok &= p["sk"] > 0
        return ok

    def residual(self, phi, parts=None):
        p = parts or self.parts(phi)
        r = np.empty(self.pb.M + 1)
        r[0] = phi[0] - self.pb.boundary[0]
        r[-1] = phi[-1] - self.pb.boundary[1]
        if self.pb.form == LOG:
            with np.errstate(invalid="ignore", divide="ignore"):
                r[1:-1] = np.log(p["sk"]) - math.log(self.pb.rhs_level)
        else:
            r[1:-1] = p["sk"] - self.pb.rhs_level
        return r

    def tolerance_profile(self, tol, parts):
        """Per-interior-node convergence tolerance: scale-relative plus noise."""
        eps = self.pb.rhs_level
        if self.pb.form == LOG:
            return tol * (1 + eps) + NOISE_FACTOR * parts["e_sk"] / eps
        return tol * (1 + eps) * (1.0 + parts["mag_sk"] + eps) + NOISE_FACTOR * parts["e_sk"]

    def merit(self, phi, tol, tol_profile=None):
        """max over rows of |residual| / tolerance; <= 1 means converged."""
        p = self.parts(phi)
        r = self.residual(phi, p)
        te = self.tolerance_profile(tol, p) if tol_profile is None else tol_profile
        vals = np.abs(r[1:-1]) / te
        vals = np.where(np.isfinite(vals), vals, np.inf)
        bnd = max(abs(r[0]), abs(r[-1])) / (tol * (1 + self.pb.eps))
        return max(float(vals.max()), float(bnd))

    def jacobian_bands(self, phi):
        n, k = self.pb.n, self.pb.k
        M = self.pb.M
        p = self.parts(phi)
        s, m, q = p["s"], p["m"], p["q"]
        c = self.binom / k
        mkm2 = m ** (k - 2) if k > 1 else np.zeros_like(m)
        dr_dd = c * ((k - 1) * mkm2 * (n - 1) * q + m ** (k - 1) * n * (n - 1))
        dr_dv = c * ((k - 1) * mkm2 * q + m ** (k - 1) * (n - k))
        if self.pb.form == LOG:
            dr_dd = dr_dd / p["sk"]
            dr_dv = dr_dv / p["sk"]
        lo = np.zeros(M + 1)
        di = np.zeros(M + 1)
        up = np.zeros(M + 1)
        di[0] = 1.0
        di[M] = 1.0
        for idx, (wi1, wi2) in enumerate(zip(self.w1, self.w2)):
            dd = wi1 / s
            dv = (wi2 - wi1) / s
            val = dr_dd * dd + dr_dv * dv
            if idx == 0:
                lo[1:M] = val
            elif idx == 1:
                di[1:M] = val
            else:
                up[1:M] = val
        return lo, di, up

    def newton_step(self, phi):
        r = self.residual(phi)
        lo, di, up = self.jacobian_bands(phi)
        scale = np.maximum(np.maximum(np.abs(lo), np.abs(di)), np.abs(up))
        scale = np.where(scale > 0, scale, 1.0)
        ab = np.zeros((3, self.pb.M + 1))
        ab[0, 1:] = (up / scale)[:-1]
        ab[1, :] = di / scale
        ab[2, :-1] = (lo / scale)[1:]
        return solve_banded((1, 1), ab, r / scale)


@dataclass(frozen=True)
class RadialSolution:
    """Converged nodal profile with evaluators and solve metadata."""

    problem: RadialProblem
    values: np.ndarray
    residual_norm: float
    newton_iters: int
    admissible: bool
    _disc: _Discretization = field(repr=False, compare=False, default=None)
    _spline: object = field(repr=False, compare=False, default=None)

    def eval(self, s):
        """(phi, phi', phi'') at s via the local singular-family interpolant.

        This is exact on the blow-up family the stencils resolve; use
        ``eval_spline`` for the plain cubic-interpolation reconstruction.
        """
        return _local_eval(self._disc, self.values, s)

    def eval_spline(self, s):
        """(phi, phi', phi'') from a cubic spline in t, chain-ruled to s."""
        t = math.log(s)
        sp = self._spline
        phi = float(sp(t))
        pt = float(sp(t, 1))
        ptt = float(sp(t, 2))
        return phi, pt / s, (ptt - pt) / s**2


def _local_eval(disc, values, s):
    if not (disc.s[0] * (1 - 1e-12) <= s <= disc.s[-1] * (1 + 1e-12)):
        raise InvalidArgumentError(f"s = {s} outside the annulus [{disc.s[0]}, {disc.s[-1]}]")
    t_eval = math.log(s)
    j = int(np.searchsorted(disc.t, t_eval))
    j = min(max(j, 1), disc.pb.M - 1)
    tau = disc.t[j - 1 : j + 2] - disc.t[j]
    te = t_eval - disc.t[j]
    g = disc.g
    if abs(g) < 1e-12:
        basis = np.stack([np.ones(3), tau, np.expm1(tau)], axis=1)
        b0 = np.array([1.0, te, math.expm1(te)])
        b1 = np.array([0.0, 1.0, math.exp(te)])
        b2 = np.array([0.0, 0.0, math.exp(te)])
    else:
        basis = np.stack([np.ones(3), np.expm1(-g * tau), np.expm1(tau)], axis=1)
        b0 = np.array([1.0, math.expm1(-g * te), math.expm1(te)])
        b1 = np.array([0.0, -g * math.exp(-g * te), math.exp(te)])
        b2 = np.array([0.0, g * g * math.exp(-g * te), math.exp(te)])
    coef = np.linalg.solve(basis, values[j - 1 : j + 2])
    # basis columns use expm1; the constant column absorbs the offset
    phi = float(coef @ b0)
    pt = float(coef @ b1)
    ptt = float(coef @ b2)
    return phi, pt / s, (ptt - pt) / s**2


def default_init(problem, quad_coefficient=None):
    """Admissible initial profile c * Phi_gamma + a s + b through the data.

    Fits the singular coefficient c and the constant b to the two boundary
    values, keeping the quadratic coefficient at the subsolution value.  When
    the data comes from the ball subsolution this returns it exactly.  The
    singular direction's sign follows the sign of the fitted c, so both the
    standard and the mirrored problems get admissible starts.
    """
    a = quadratic_coefficient(problem.n, problem.k) if quad_coefficient is None else quad_coefficient
    g = problem.gamma / 2.0
    if abs(g) < 1e-12:
        sing = np.log(problem.s_nodes)
        sing_in, sing_out = math.log(problem.eps**2), math.log(problem.R**2)
    else:
        sing = -problem.s_nodes**-g
        sing_in, sing_out = -problem.eps ** (-2 * g), -problem.R ** (-2 * g)
    bc_in, bc_out = problem.boundary
    e2, R2 = problem.eps**2, problem.R**2
    c = ((bc_in - bc_out) - a * (e2 - R2)) / (sing_in - sing_out)
    b = bc_out - c * sing_out - a * R2
    return c * sing + a * problem.s_nodes + b


def radial_residual(profile, problem):
    """Raw residual of a nodal profile, plus per-node admissibility flags.

    Interior rows carry S_k(mu) - eps (root) or log S_k(mu) - log eps;
    boundary rows carry the Dirichlet mismatch.  Inadmissible nodes are
    flagged rather than raised; Newton damping consumes the flags.
    """
    disc = _Discretization(problem)
    phi = np.asarray(profile, dtype=float)
    if phi.shape != (problem.M + 1,):
        raise InvalidArgumentError(f"profile must have {problem.M + 1} nodes")
    p = disc.parts(phi)
    flags = np.ones(problem.M + 1, dtype=bool)
    flags[1:-1] = disc.admissible_mask(phi, p)
    return disc.residual(phi, p), flags


def solve_radial(problem, init=None, tol=1e-10, max_iters=100, max_halvings=50):
    """Damped Newton on the radial residual.

    Full steps, halved until every interior node stays in Gamma_k (beyond the
    float-noise band) and the merit decreases; the merit freezes the per-node
    tolerance profile at the current iterate so line-search comparisons are
    monotone in one fixed norm.  Convergence: merit <= 1, i.e. every residual
    row is below tol * (1 + eps) relative to its local scale plus its noise
    floor.
    """
    disc = _Discretization(problem)
    phi = default_init(problem) if init is None else np.asarray(init, dtype=float).copy()
    if phi.shape != (problem.M + 1,):
        raise InvalidArgumentError(f"init must have {problem.M + 1} nodes")
    phi[0], phi[-1] = problem.boundary
    if not disc.admissible_mask(phi).all():
        raise InvalidArgumentError("initial profile is not admissible at all interior nodes")

    history = []
    iters_used = 0
    for it in range(max_iters):
        p = disc.parts(phi)
        te = disc.tolerance_profile(tol, p)
        merit = disc.merit(phi, tol, te)
        history.append(merit)
        if merit <= 1.0:
            iters_used = it
            break
        step = disc.newton_step(phi)
        lam = 1.0
        for _ in range(max_halvings):
            trial = phi - lam * step
            trial[0], trial[-1] = problem.boundary
            if disc.admissible_mask(trial).all():
                if disc.merit(trial, tol, te) < merit:
                    phi = trial
                    break
            lam *= 0.5
        else:
            raise SolverFailureError(
                f"line search stalled at iteration {it} (merit {merit:.3e})",
                history=history,
            )
    else:
        raise SolverFailureError(
            f"no convergence in {max_iters} iterations (merit {history[-1]:.3e})",
            history=history,
        )

    p = disc.parts(phi)
    resid = disc.residual(phi, p)
    scale = 1.0 + p["mag_sk"] + problem.eps
    rnorm = float(np.max(np.abs(resid[1:-1]) / scale)) if problem.form == ROOT else float(
        np.max(np.abs(resid[1:-1]))
    )
    spline = CubicSpline(disc.t, phi)
    return RadialSolution(
        problem=problem,
        values=phi,
        residual_norm=rnorm,
        newton_iters=iters_used,
        admissible=bool(disc.admissible_mask(phi).all()),
        _disc=disc,
        _spline=spline,
    )


def geometric_extrapolate(values):
    """Limit estimate of a sequence with geometric-like Cauchy differences.

    Estimates the ratio from the last two differences and sums the tail; falls
    back to the last value when the ratio is not contraction-like.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        return float(v[-1])
    d = np.diff(v)
    if d[-2] == 0.0:
        return float(v[-1])
    rho = d[-1] / d[-2]
    if not abs(rho) < 0.95:
        return float(v[-1])
    return float(v[-1] + d[-1] * rho / (1.0 - rho))


def _homogeneous_profile(gamma, R, boundary_constant, sign):
    """g(s) = sign * (-s^{-gamma/2} + R^{-gamma}) + boundary_constant at s."""
    g = gamma / 2.0

    def fn(s):
        return sign * (-(s**-g) + R ** (-2 * g)) + boundary_constant

    return fn


def green_limit(
    n,
    k,
    gamma,
    R,
    eps_schedule,
    probe_radii,
    boundary_constant=0.0,
    data_mode="subsolution",
    M=512,
    tol=1e-10,
    orientation=None,
):
    """Solve the shrinking-puncture family and report the monotone limit.

    ``data_mode`` selects the inner Dirichlet data: "subsolution" uses the
    ball subsolution's trace (the scheme whose monotonicity in eps is a
    maximum-principle fact), "exact-homogeneous" uses the closed-form singular
    solution's values (the oracle comparison; its first coarse levels need not
    be monotone since the data moves with eps).

    ``orientation`` = +1 solves for u itself; -1 solves the mirrored problem
    for -u (admissible for even k when the requested branch's singular model
    -|z|^{-gamma} has mu outside the closed cone) and maps back.  None picks
    the orientation from the branch sign.  All comparisons (monotonicity,
    sandwich) are performed on the admissible side.
    """
    from .fundamental import DEGENERATE, GENERIC, GammaBranch, admissible_singularity_sign

    eps_schedule = sorted(set(float(e) for e in eps_schedule), reverse=True)
    probe_radii = [float(r) for r in probe_radii]
    if any(not (0 < e < R) for e in eps_schedule):
        raise InvalidArgumentError("eps schedule must lie in (0, R)")
    if any(not (max(eps_schedule) < r < R) for r in probe_radii):
        raise InvalidArgumentError("probe radii must lie strictly inside every annulus")
    if data_mode not in ("subsolution", "exact-homogeneous"):
        raise InvalidArgumentError(f"unknown data_mode {data_mode!r}")

    if orientation is None:
        is_generic = k < n and abs(gamma - ((2 * n * n - 4 * n + 2 * k) / (n - k))) < 1e-9
        branch = GammaBranch(n=n, k=k, gamma=gamma, branch=GENERIC if is_generic else DEGENERATE)
        sign = admissible_singularity_sign(branch)
        orientation = -1.0 if sign > 0 else 1.0
    orientation = float(orientation)
    if orientation not in (-1.0, 1.0):
        raise InvalidArgumentError("orientation must be +1 or -1")
    if orientation < 0 and (k % 2 != 0):
        raise InvalidArgumentError(
            "mirrored solves need even k: S_k is odd under u -> -u for odd k"
        )
    if orientation < 0 and gamma == 0:
        raise InvalidArgumentError("the logarithmic branch has no mirrored variant")

    form = LOG if k == n else ROOT
    a = quadratic_coefficient(n, k)
    # admissible-side objects: w = orientation * u
    w_bc_out = orientation * boundary_constant
    sing_sign = orientation  # singular part of w is orientation * (-|z|^{-gamma})
    g = gamma / 2.0

    def w_singular(s):
        return sing_sign * (-(s**-g)) if g > 0 else math.log(s)

    b_sub = w_bc_out - w_singular(R**2) - a * R**2

    def w_subsolution(s):
        return w_singular(s) + a * s + b_sub

    def w_homogeneous(s):
        return w_singular(s) - w_singular(R**2) + w_bc_out

    w_data_in = w_homogeneous if data_mode == "exact-homogeneous" else w_subsolution

    runs = []
    values = np.empty((len(eps_schedule), len(probe_radii)))
    scaling_sup = []
    for i, eps in enumerate(eps_schedule):
        pb = RadialProblem(
            n=n, k=k, form=form, gamma=gamma, R=R, eps=eps,
            boundary=(w_data_in(eps**2), w_bc_out), M=M,
        )
        sol = solve_radial(pb, tol=tol)
        runs.append(sol)
        for j, r in enumerate(probe_radii):
            values[i, j] = orientation * sol.eval(r * r)[0]
        # scaled profile eps^gamma * u(eps * z) sampled at |z| in [1, 2]
        rr = np.linspace(max(1.0, 1.0 + 1e-9), min(2.0, 0.999 * R / eps), 9)
        scaling_sup.append(
            float(max(abs(eps**gamma * sol.eval((eps * x) ** 2)[0]) for x in rr))
        )

    # monotone increase on the admissible side, slack for discretization
    w_values = orientation * values
    mono_gaps = np.diff(w_values, axis=0)
    monotone_ok = bool(np.all(mono_gaps >= -1e-8))
    worst_gap = float(mono_gaps.min()) if mono_gaps.size else 0.0

    # sandwich on the admissible side: w_sub <= w <= w_singular + C0.
    # Violations are normalized by the local profile scale: near the puncture
    # the bounds are differences of blow-up-sized values, so an absolute
    # comparison would only measure float cancellation noise.
    c0 = max(abs(b_sub), abs(a * R**2 + b_sub))
    sandwich_viol = 0.0
    for i, eps in enumerate(eps_schedule):
        radii = np.concatenate([
            np.geomspace(1.02 * eps, 0.98 * R, 25), np.asarray(probe_radii)
        ])
        for r in radii:
            w_val = runs[i].eval(r * r)[0]
            lower = w_subsolution(r * r)
            upper = w_singular(r * r) - w_singular(R**2) + w_bc_out + c0
            scale = 1.0 + abs(w_singular(r * r) - w_singular(R**2))
            sandwich_viol = max(
                sandwich_viol, (lower - w_val) / scale, (w_val - upper) / scale
            )

    extrapolated = [
        orientation * geometric_extrapolate(w_values[:, j]) for j in range(len(probe_radii))
    ]
    cauchy = np.diff(values, axis=0)

    report = {
        "n": n, "k": k, "gamma": gamma, "R": R, "M": M,
        "form": form,
        "data_mode": data_mode,
        "orientation": orientation,
        "boundary_constant": boundary_constant,
        "eps_schedule": list(eps_schedule),
        "probe_radii": probe_radii,
        "values": values.tolist(),
        "cauchy_differences": cauchy.tolist(),
        "extrapolated": extrapolated,
        "monotonicity_ok": monotone_ok,
        "monotone_admissible_side": monotone_ok,
        "worst_monotonicity_gap": worst_gap,
        "sandwich_violation": float(sandwich_viol),
        "sandwich_c0": float(c0),
        "scaling_diagnostic_sup": scaling_sup,
        "scaling_bounded": bool(
            all(v <= 2.0 * scaling_sup[0] + 1e-12 for v in scaling_sup)
        ),
        "newton_iters": [s.newton_iters for s in runs],
        "residual_norms": [s.residual_norm for s in runs],
    }
    return report, runs
