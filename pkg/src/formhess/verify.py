"""Randomized property suite behind the ``verify`` command.

Each check reports a count, a worst normalized residual and a pass flag; the
suite passes iff all checks do.  All randomness flows from one seed.  The
symmetric-polynomial calls route through the ``symfun`` module namespace so a
corrupted build (or a deliberately negated test double) is caught by the
identity checks.
"""

import numpy as np

from . import fundamental, symfun
from .hessian_operator import (
    LOG,
    ROOT,
    HermitianMatrix,
    OperatorParams,
    _f_eigen_derivatives,
    concavity_probe,
    ellipticity_ratio,
    f_gradient,
    f_value,
    mu_of_matrix,
    trace_identity_residual,
)


def _check(worst, tol):
    return {"worst": float(worst), "tolerance": float(tol), "pass": bool(worst <= tol)}


def _random_admissible_matrix(rng, n, k, form):
    while True:
        B = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        A = HermitianMatrix((B + B.conj().T) / 2)
        lam = np.linalg.eigvalsh(A.mat)
        shift = float(np.abs(lam).max() * rng.uniform(0.5, 2.0))
        A = HermitianMatrix(A.mat + shift * np.eye(n))
        mu, _ = mu_of_matrix(A)
        if form == LOG:
            if np.all(mu > 0):
                return A
        elif symfun.in_gamma_k(mu, k):
            return A


def identity_checks(rng, samples, n_max):
    """Symmetric-polynomial identities over cone samples, all n <= n_max."""
    pairs = [(n, k) for n in range(2, n_max + 1) for k in range(1, n + 1)]
    per = max(1, samples // len(pairs))
    worst_p04 = worst_p02 = worst_mono = worst_fd = 0.0
    min_share = np.inf
    count = 0
    for n, k in pairs:
        mus = symfun.sample_gamma_k(rng, n, k, per)
        fd_every = max(1, per // 25)
        for idx, mu in enumerate(mus):
            count += 1
            mu = np.sort(mu)[::-1]
            sk = symfun.elementary_symmetric(mu, k)
            sk1 = symfun.elementary_symmetric(mu, k - 1)
            partials = symfun.all_partials(mu, k)
            for i in range(n):
                ski = symfun.elementary_symmetric(np.delete(mu, i), k)
                res = abs(sk - (ski + mu[i] * partials[i])) / (1.0 + abs(sk))
                worst_p04 = max(worst_p04, res)
            res2 = abs(partials.sum() - (n - k + 1) * sk1) / (1.0 + abs(sk1))
            worst_p02 = max(worst_p02, res2)
            min_share = min(min_share, partials[k - 1] / partials.sum())
            # with mu sorted descending the partials S_{k-1;i} ascend in i
            scale = np.abs(partials).max() + 1.0
            worst_mono = max(worst_mono, float(np.max(-np.diff(partials))) / scale)
            if idx % fd_every == 0:
                h = 1e-5 * (1.0 + abs(mu[0]))
                for j in range(n):
                    ep = mu.copy(); ep[j] += h
                    em = mu.copy(); em[j] -= h
                    fd = (symfun.elementary_symmetric(ep, k) - symfun.elementary_symmetric(em, k)) / (2 * h)
                    ref = partials[j]
                    worst_fd = max(worst_fd, abs(fd - ref) / (1.0 + abs(ref)))
    return {
        "decomposition_identity": _check(worst_p04, 1e-10),
        "partial_sum_identity": _check(worst_p02, 1e-10),
        "partial_monotonicity": _check(worst_mono, 1e-12),
        "partial_vs_finite_difference": _check(worst_fd, 1e-6),
        "kth_partial_share_positive": {
            "worst": float(min_share), "tolerance": 0.0, "pass": bool(min_share > 0)
        },
        "samples": count,
    }


def schur_monotonicity_check(rng, samples, n_max):
    """f_i <= f_j whenever lambda_i >= lambda_j, over cone samples."""
    pairs = [(n, k) for n in range(2, n_max + 1) for k in range(1, n + 1)]
    per = max(1, samples // len(pairs))
    worst = 0.0
    count = 0
    for n, k in pairs:
        form = LOG if k == n else ROOT
        mus = symfun.sample_gamma_k(rng, n, k, per)
        for mu in mus:
            if form == LOG and np.any(mu <= 0):
                continue
            count += 1
            p = OperatorParams(n=n, k=k, form=form)
            lam = mu.sum() / (n - 1) - mu
            fi = _f_eigen_derivatives(mu, p)
            order = np.argsort(lam)          # lambda ascending
            f_sorted = fi[order]             # must be descending... larger lambda -> smaller f
            scale = np.abs(fi).max() + 1e-300
            worst = max(worst, float(np.max(np.diff(f_sorted)) / scale))
    return {**_check(worst, 1e-12), "samples": count}


def operator_checks(rng, samples, n_max):
    """Spectral-operator invariants on random admissible Hermitian matrices."""
    out = {}
    worst_hom = worst_unit = worst_trace = worst_grad_fd = 0.0
    worst_concavity = 0.0
    min_grad_eig = np.inf
    count = 0
    ns = [n for n in (2, 3, 4) if n <= n_max]
    per = max(1, samples // (len(ns) * 4))
    for n in ns:
        for k in range(1, n + 1):
            for form in ((ROOT,) if k < n else (ROOT, LOG)):
                p = OperatorParams(n=n, k=k, form=form)
                for i in range(per):
                    count += 1
                    A = _random_admissible_matrix(rng, n, k, form)
                    fv = f_value(A, p)
                    if form == ROOT:
                        t = rng.uniform(0.5, 2.0)
                        worst_hom = max(worst_hom, abs(f_value(t * A, p) - t * fv) / (1 + abs(t * fv)))
                    Q = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))[0]
                    AU = HermitianMatrix(Q @ A.mat @ Q.conj().T)
                    worst_unit = max(worst_unit, abs(f_value(AU, p) - fv) / (1 + abs(fv)))
                    worst_trace = max(worst_trace, trace_identity_residual(A, p) / (1 + abs(fv)))
                    G = f_gradient(A, p)
                    min_grad_eig = min(min_grad_eig, float(np.linalg.eigvalsh(G.mat).min()))
                    if i % 5 == 0:
                        worst_grad_fd = max(worst_grad_fd, gradient_fd_error(A, p))
                    if i % 5 == 0:
                        B = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
                        H = HermitianMatrix((B + B.conj().T) / 2)
                        H = H * (1.0 / np.linalg.norm(H.mat))
                        t_max = 0.005 * np.linalg.norm(A.mat)
                        d2max = None
                        for _ in range(20):
                            try:
                                d2max = concavity_probe(A, H, p, t_max)
                                break
                            except Exception:
                                t_max /= 2
                        if d2max is not None:
                            worst_concavity = max(worst_concavity, d2max / max(1.0, abs(d2max)))
    out["homogeneity"] = _check(worst_hom, 1e-12)
    out["unitary_invariance"] = _check(worst_unit, 1e-10)
    out["trace_identity"] = _check(worst_trace, 1e-8)
    out["gradient_vs_finite_difference"] = _check(worst_grad_fd, 1e-5)
    out["gradient_positive_definite"] = {
        "worst": float(min_grad_eig), "tolerance": 0.0, "pass": bool(min_grad_eig > 0)
    }
    out["concavity"] = _check(worst_concavity, 1e-6)
    out["samples"] = count
    return out


def gradient_fd_error(A, p, step=1e-6):
    """Entrywise relative error of f_gradient against central differences."""
    n = A.n
    G = f_gradient(A, p).mat
    scale = 1.0 + np.abs(G).max()
    worst = 0.0
    h = step * (1.0 + np.linalg.norm(A.mat))
    for i in range(n):
        for j in range(i, n):
            dirs = [np.zeros((n, n), dtype=complex)]
            dirs[0][i, j] = 1.0
            if i != j:
                dirs[0][j, i] = 1.0
                d2 = np.zeros((n, n), dtype=complex)
                d2[i, j] = 1j
                d2[j, i] = -1j
                dirs.append(d2)
            for H in dirs:
                HM = HermitianMatrix(H)
                fd = (f_value(HermitianMatrix(A.mat + h * H), p)
                      - f_value(HermitianMatrix(A.mat - h * H), p)) / (2 * h)
                an = float(np.trace(G @ H).real)
                worst = max(worst, abs(fd - an) / scale)
    return worst


def ellipticity_floor_check(rng, samples, n_max=4, floor=0.01):
    """min_i f_i / sum f_i over cone samples, k < n <= n_max."""
    worst = np.inf
    count = 0
    pairs = [(n, k) for n in range(2, min(n_max, 4) + 1) for k in range(1, n)]
    per = max(1, samples // len(pairs))
    for n, k in pairs:
        mus = symfun.sample_gamma_k(rng, n, k, per)
        # min_i sum_{j != i} S_{k-1;j} / ((n-1) sum_j S_{k-1;j}); prefactors cancel
        partials = np.empty_like(mus)
        for j in range(n):
            sub = np.delete(mus, j, axis=1)
            partials[:, j] = symfun.elementary_symmetric_batch(sub, k - 1)[:, k - 1]
        tot = partials.sum(axis=1)
        ratio = (tot[:, None] - partials).min(axis=1) / ((n - 1) * tot)
        worst = min(worst, float(ratio.min()))
        count += len(mus)
    return {
        "worst": float(worst), "tolerance": float(floor),
        "pass": bool(worst >= floor), "samples": count,
    }


def fundamental_checks(rng, n_max):
    """Singular-solution residuals, closure admissibility, dense cross-check."""
    worst_res = 0.0
    worst_closure = 0.0
    worst_dense = 0.0
    count = 0
    s_values = np.geomspace(1e-2, 1e1, 50)
    for n in range(2, n_max + 1):
        for k in range(1, n + 1):
            table = fundamental.gamma_exponents(n, k)
            for branch in table.branches:
                count += 1
                res = fundamental.fundamental_residual(branch, s_values)
                worst_res = max(worst_res, float(np.max(res)))
                worst_closure = max(
                    worst_closure, fundamental.fundamental_mu_closure_defect(branch, s_values)
                )
                c1 = fundamental.admissible_singularity_sign(branch)
                for _ in range(10):
                    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
                    s = float(np.sum(np.abs(z) ** 2))
                    pt = fundamental.phi_eval(branch.gamma, s, c1=c1)
                    H = HermitianMatrix(fundamental.dense_radial_hessian(z, pt.dphi, pt.d2phi))
                    mu_dense, _ = mu_of_matrix(H)
                    mu_rad = fundamental.radial_mu(pt, n)
                    gap = np.max(np.abs(np.sort(mu_dense) - np.sort(mu_rad)))
                    scale = 1.0 + np.abs(mu_rad).max()
                    worst_dense = max(worst_dense, float(gap / scale))
    return {
        "singular_solution_residual": _check(worst_res, 1e-10),
        "closure_admissibility": _check(worst_closure, 1e-12),
        "dense_hessian_cross_check": _check(worst_dense, 1e-9),
        "branches": count,
    }


def run_verify(samples=10000, seed=42, n_max=6):
    """Run the full property suite; returns a JSON-ready summary."""
    rng = np.random.default_rng(seed)
    report = {
        "seed": int(seed),
        "samples": int(samples),
        "n_max": int(n_max),
        "identities": identity_checks(rng, samples, n_max) if samples else {"samples": 0},
        "schur_monotonicity": schur_monotonicity_check(rng, samples, n_max)
        if samples else {"samples": 0, "pass": True},
        "operator": operator_checks(rng, max(1, samples // 20), n_max)
        if samples else {"samples": 0},
        "ellipticity_floor": ellipticity_floor_check(rng, max(1, samples), n_max)
        if samples else {"samples": 0, "pass": True},
        "fundamental": fundamental_checks(rng, n_max),
    }
    failures = []

    def walk(prefix, node):
        if isinstance(node, dict):
            if "pass" in node and not node["pass"]:
                failures.append(prefix)
            for key, val in node.items():
                walk(f"{prefix}.{key}" if prefix else key, val)

    walk("", report)
    report["failures"] = sorted(failures)
    report["all_pass"] = not failures
    return report
