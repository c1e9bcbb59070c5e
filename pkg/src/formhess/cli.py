"""Command-line frontend.

Exit codes: 0 success, 1 numerical or diagnostic failure, 2 configuration
error.  Flags override values from an optional JSON config file; every
effective setting is echoed into the JSON report for provenance, and all
randomness flows from the single --seed.
"""

import argparse
import json
import math
import sys

import numpy as np

from . import fundamental
from .diagnostics import fit_rate
from .errors import InvalidArgumentError, SolverFailureError
from .hessian_operator import LOG, ROOT, OperatorParams
from .radial_solver import RadialProblem, green_limit, solve_radial
from .reporting import canonical_json, format_float, write_csv, write_json
from .verify import run_verify

CONFIG_ERROR = 2
CHECK_FAILED = 1


def _merge_config(args, parser):
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config file: {exc}")
        for key, val in cfg.items():
            attr = key.replace("-", "_")
            if not hasattr(args, attr):
                parser.error(f"unknown config key {key!r}")
            # explicit command-line flags win over the file
            if f"--{key}" not in sys.argv and attr != "config":
                setattr(args, attr, val)
    return args


def cmd_gamma(args):
    try:
        table = fundamental.gamma_exponents(args.n, args.k)
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    rows = []
    for br in table.branches:
        sign = fundamental.admissible_singularity_sign(br)
        rows.append({"branch": br.branch, "gamma": br.gamma, "admissible_sign": sign})
        print(f"{br.branch:>10s}: gamma = {br.gamma:g}   admissible singular sign = {sign:+.0f}")
    for note in table.notes:
        print(f"note: {note}")
    if args.json:
        write_json(args.json, {"n": args.n, "k": args.k, "branches": rows,
                               "notes": list(table.notes)})
    return 0


def cmd_verify(args):
    report = run_verify(samples=args.samples, seed=args.seed, n_max=args.n_max)
    for name in ("identities", "schur_monotonicity", "operator", "ellipticity_floor",
                 "fundamental"):
        node = report.get(name, {})
        if isinstance(node, dict):
            for key, val in sorted(node.items()):
                if isinstance(val, dict) and "pass" in val:
                    status = "pass" if val["pass"] else "FAIL"
                    print(f"{name}.{key}: worst={val['worst']:.3e} "
                          f"tol={val['tolerance']:.3e} [{status}]")
            if "pass" in node:
                print(f"{name}: worst={node.get('worst', float('nan')):.3e} "
                      f"[{'pass' if node['pass'] else 'FAIL'}]")
    print(f"all_pass: {report['all_pass']}")
    if args.out:
        write_json(args.out, report)
    else:
        print(canonical_json(report))
    return 0 if report["all_pass"] else CHECK_FAILED


def cmd_fundamental_check(args):
    rng = np.random.default_rng(args.seed)
    from .verify import fundamental_checks

    report = fundamental_checks(rng, args.n_max)
    ok = all(v["pass"] for v in report.values() if isinstance(v, dict) and "pass" in v)
    report = {"seed": args.seed, "n_max": args.n_max, "all_pass": ok, **report}
    print(canonical_json(report))
    if args.out:
        write_json(args.out, report)
    return 0 if ok else CHECK_FAILED


def _radial_problem_from(args):
    form = LOG if args.k == args.n else ROOT
    if args.inner is None or args.outer is None:
        # default data: the ball subsolution trace on both shells
        from .subsolution import quadratic_coefficient

        a = quadratic_coefficient(args.n, args.k)
        g = args.gamma / 2.0
        if args.gamma > 0:
            sing = lambda s: -(s**-g)
        else:
            sing = math.log
        b = args.boundary_constant - sing(args.R**2) - a * args.R**2
        data = lambda s: sing(s) + a * s + b
        inner = data(args.eps**2) if args.inner is None else args.inner
        outer = data(args.R**2) if args.outer is None else args.outer
    else:
        inner, outer = args.inner, args.outer
    return RadialProblem(
        n=args.n, k=args.k, form=form, gamma=args.gamma, R=args.R,
        eps=args.eps, boundary=(inner, outer), M=args.mesh,
    )


def cmd_radial_solve(args):
    try:
        problem = _radial_problem_from(args)
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    try:
        sol = solve_radial(problem, tol=args.tol)
    except SolverFailureError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        if args.json:
            write_json(args.json, {"failed": True, "residual_history": exc.history})
        return CHECK_FAILED
    from .radial_solver import _Discretization

    disc = sol._disc
    parts = disc.parts(sol.values)
    resid = disc.residual(sol.values, parts)
    if args.csv:
        rows = [
            (s, sol.values[i], *sol.eval(s)[1:], resid[i])
            for i, s in enumerate(problem.s_nodes)
        ]
        write_csv(args.csv, ["s", "phi", "dphi", "d2phi", "residual"], rows)
    report = {
        "n": args.n, "k": args.k, "gamma": args.gamma, "R": args.R, "eps": args.eps,
        "M": args.mesh, "form": problem.form, "boundary": list(problem.boundary),
        "newton_iters": sol.newton_iters, "residual_norm": sol.residual_norm,
        "admissible": sol.admissible, "seed": args.seed,
    }
    print(canonical_json(report))
    if args.json:
        write_json(args.json, report)
    return 0


def cmd_radial_green(args):
    eps_schedule = [args.eps0 * 2.0**-j for j in range(args.levels + 1)]
    try:
        report, runs = green_limit(
            n=args.n, k=args.k, gamma=args.gamma, R=args.R,
            eps_schedule=eps_schedule, probe_radii=args.probes,
            boundary_constant=args.boundary_constant,
            data_mode=args.data_mode, M=args.mesh, tol=args.tol,
        )
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    except SolverFailureError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return CHECK_FAILED
    report["seed"] = args.seed
    # rate fits on the finest-eps run
    fine = runs[-1]
    lo = 2.0 * min(eps_schedule)
    hi = 0.2 * args.R
    if lo < hi:
        radii = np.geomspace(max(lo, 1.02 * min(eps_schedule)), hi, 12)
        from .diagnostics import sphere_profile

        vals = sphere_profile(fine, radii, "value")
        grads = sphere_profile(fine, radii, "gradient")
        vfit = fit_rate(vals)
        gfit = fit_rate(grads)
        report["value_rate"] = {"slope": vfit.slope, "r_squared": vfit.r_squared,
                                "window": list(vfit.window)}
        report["gradient_rate"] = {"slope": gfit.slope, "r_squared": gfit.r_squared,
                                   "window": list(gfit.window)}
    if args.csv_prefix:
        from formhess.radial_solver import radial_residual

        for sol in runs:
            pb = sol.problem
            resid, _ = radial_residual(sol.values, pb)
            rows = [
                (s, sol.values[i], *sol.eval(s)[1:], resid[i])
                for i, s in enumerate(pb.s_nodes)
            ]
            write_csv(f"{args.csv_prefix}_eps{pb.eps:g}.csv",
                      ["s", "phi", "dphi", "d2phi", "residual"], rows)
        if "value_rate" in report:
            from formhess.diagnostics import sphere_profile as _sp

            radii = np.geomspace(max(2.0 * min(eps_schedule), 1.02 * min(eps_schedule)),
                                 0.5 * args.R, 40)
            vals = _sp(fine, radii, "value")
            grads = _sp(fine, radii, "gradient")
            write_csv(f"{args.csv_prefix}_profiles.csv", ["r", "value", "gradient"],
                      [(r, v, g[1]) for (r, v), g in zip(vals, grads)])
    ok = report["monotone_admissible_side"] and report["sandwich_violation"] <= 1e-6
    print(canonical_json(report))
    if args.json:
        write_json(args.json, report)
    return 0 if ok else CHECK_FAILED


def cmd_grid_solve(args):
    from .grid_solver import Grid4, GridField, dump_binary, snapshot_csv, solve_grid
    from .subsolution import log_ball_subsolution, quadratic_coefficient

    p = OperatorParams(n=2, k=args.k, form=LOG if args.k == 2 else ROOT)
    try:
        grid = Grid4(args.R, args.eps, args.h)
    except (InvalidArgumentError, Exception) as exc:
        if isinstance(exc, (InvalidArgumentError,)) or "Grid" in type(exc).__name__:
            print(f"error: {exc}", file=sys.stderr)
            return CONFIG_ERROR
        raise

    if args.data == "log":
        sub = log_ball_subsolution(args.R, p, args.boundary_constant)

        def data_fn(coords):
            z = np.stack([coords[:, 0] + 1j * coords[:, 1],
                          coords[:, 2] + 1j * coords[:, 3]], axis=1)
            return np.array([sub.value(zz) for zz in z])
    else:  # quadratic subsolution
        a = quadratic_coefficient(2, args.k)

        def data_fn(coords):
            s = (coords**2).sum(axis=1)
            return a * (s - args.R**2) + args.boundary_constant

    try:
        field, report = solve_grid(grid, p, args.eps, data_fn, tol=args.tol)
    except SolverFailureError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return CHECK_FAILED
    report["seed"] = args.seed
    report["data"] = args.data
    report["R"] = args.R
    print(canonical_json({k: v for k, v in report.items() if k != "residual_history"}))
    if args.csv:
        snapshot_csv(field, args.csv, plane="x1y1")
    if args.dump:
        dump_binary(field, args.dump)
    if args.json:
        write_json(args.json, report)
    return 0


def cmd_rates(args):
    try:
        data = np.loadtxt(args.input, delimiter=",", skiprows=1)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    samples = [(r, v) for r, v in data[:, :2]]
    if args.rmin is not None:
        samples = [s for s in samples if s[0] >= args.rmin]
    if args.rmax is not None:
        samples = [s for s in samples if s[0] <= args.rmax]
    try:
        fit = fit_rate(samples)
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    report = {"slope": fit.slope, "intercept": fit.intercept,
              "r_squared": fit.r_squared, "window": list(fit.window),
              "count": len(samples)}
    print(canonical_json(report))
    if args.json:
        write_json(args.json, report)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="formhess")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file; flags override it")
        sp.add_argument("--seed", type=int, default=42)

    sp = sub.add_parser("gamma", help="print the singular-exponent branch table")
    common(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--json")
    sp.set_defaults(fn=cmd_gamma)

    sp = sub.add_parser("verify", help="run the randomized property suite")
    common(sp)
    sp.add_argument("--samples", type=int, default=10000)
    sp.add_argument("--n-max", type=int, default=6, dest="n_max")
    sp.add_argument("--out", help="write the JSON summary here")
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("fundamental-check", help="singular-solution residual sweep")
    common(sp)
    sp.add_argument("--n-max", type=int, default=6, dest="n_max")
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_fundamental_check)

    sp = sub.add_parser("radial-solve", help="solve one radial annulus problem")
    common(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--R", type=float, default=1.0)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--mesh", type=int, default=512)
    sp.add_argument("--inner", type=float, default=None)
    sp.add_argument("--outer", type=float, default=None)
    sp.add_argument("--boundary-constant", type=float, default=0.0, dest="boundary_constant")
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--csv")
    sp.add_argument("--json")
    sp.set_defaults(fn=cmd_radial_solve)

    sp = sub.add_parser("radial-green", help="shrinking-puncture limit study")
    common(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--R", type=float, default=1.0)
    sp.add_argument("--eps0", type=float, default=0.2)
    sp.add_argument("--levels", type=int, default=6)
    sp.add_argument("--probes", type=float, nargs="+", default=[0.3, 0.5, 0.7])
    sp.add_argument("--mesh", type=int, default=512)
    sp.add_argument("--boundary-constant", type=float, default=0.0, dest="boundary_constant")
    sp.add_argument("--data-mode", choices=["subsolution", "exact-homogeneous"],
                    default="subsolution", dest="data_mode")
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--csv-prefix", dest="csv_prefix")
    sp.add_argument("--json")
    sp.set_defaults(fn=cmd_radial_green)

    sp = sub.add_parser("grid-solve", help="4-dimensional masked-grid solve (n = 2)")
    common(sp)
    sp.add_argument("--k", type=int, choices=[1, 2], required=True)
    sp.add_argument("--R", type=float, default=0.75)
    sp.add_argument("--eps", type=float, default=0.25)
    sp.add_argument("--h", type=float, default=1 / 16)
    sp.add_argument("--data", choices=["log", "quad"], default="quad")
    sp.add_argument("--boundary-constant", type=float, default=0.0, dest="boundary_constant")
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--csv")
    sp.add_argument("--dump")
    sp.add_argument("--json")
    sp.set_defaults(fn=cmd_grid_solve)

    sp = sub.add_parser("rates", help="log-log rate fit of a CSV (r, value) table")
    common(sp)
    sp.add_argument("--input", required=True)
    sp.add_argument("--rmin", type=float, default=None)
    sp.add_argument("--rmax", type=float, default=None)
    sp.add_argument("--json")
    sp.set_defaults(fn=cmd_rates)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args = _merge_config(args, parser)
    try:
        return args.fn(args)
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
