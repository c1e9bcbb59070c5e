import math

import numpy as np
import pytest

from formhess.errors import InvalidArgumentError, SolverFailureError
from formhess.radial_solver import (
    RadialProblem,
    default_init,
    fitted_weights,
    geometric_extrapolate,
    green_limit,
    radial_residual,
    solve_radial,
)
from formhess.subsolution import quadratic_coefficient


def homogeneous_data(gamma, R):
    g = gamma / 2.0
    return lambda s: -(s**-g) + R ** (-gamma)


class TestFittedWeights:
    def test_exact_on_family(self):
        g, dt = 5.0, 0.02
        w1, w2 = fitted_weights(g, dt)
        for fn, d1, d2 in (
            (lambda t: 1.0, 0.0, 0.0),
            (lambda t: math.exp(-g * t), -g, g * g),
            (lambda t: math.exp(t), 1.0, 1.0),
        ):
            vals = np.array([fn(-dt), fn(0.0), fn(dt)])
            assert w1 @ vals == pytest.approx(d1, abs=1e-11)
            assert w2 @ vals == pytest.approx(d2, abs=1e-9)

    def test_second_order_on_generic_smooth(self):
        g, dt = 3.0, 0.01
        w1, w2 = fitted_weights(g, dt)
        f = lambda t: math.sin(2.0 + 3.0 * t)
        vals = np.array([f(-dt), f(0.0), f(dt)])
        assert w1 @ vals == pytest.approx(3.0 * math.cos(2.0), abs=5e-4)
        assert w2 @ vals == pytest.approx(-9.0 * math.sin(2.0), abs=5e-3)

    def test_log_branch(self):
        w1, w2 = fitted_weights(0.0, 0.05)
        ts = np.array([-0.05, 0.0, 0.05])
        assert w1 @ ts == pytest.approx(1.0, abs=1e-12)
        assert w2 @ ts == pytest.approx(0.0, abs=1e-10)


class TestRadialResidual:
    def test_homogeneous_profile_residual_is_minus_eps(self):
        gamma, R, eps = 10.0, 1.0, 0.2
        data = homogeneous_data(gamma, R)
        pb = RadialProblem(n=3, k=2, form="root", gamma=gamma, R=R, eps=eps,
                           boundary=(data(eps**2), data(R**2)), M=128)
        profile = np.array([data(s) for s in pb.s_nodes])
        r, flags = radial_residual(profile, pb)
        # fitted stencils annihilate the singular family: S_k = 0 to rounding,
        # so the residual is -eps up to scale-relative cancellation noise
        assert abs(r[0]) == 0.0 and abs(r[-1]) == 0.0
        from formhess.fundamental import phi_eval

        n, k = 3, 2
        mags = []
        for s in pb.s_nodes[1:-1]:
            pt = phi_eval(gamma, s)
            m_t = (n - 1) * abs(pt.dphi) + abs(pt.d2phi * s)
            q_t = (n - k) * abs(pt.d2phi * s) + n * (n - 1) * abs(pt.dphi)
            mags.append(m_t ** (k - 1) * q_t)
        noise = 1e-12 * np.array(mags)
        assert np.all(np.abs(r[1:-1] + eps) <= eps * 1e-9 + noise)

    def test_quadratic_profile_unit_level(self):
        n, k = 3, 2
        a = quadratic_coefficient(n, k)
        eps = 0.25
        pb = RadialProblem(n=n, k=k, form="root", gamma=10.0, R=1.0, eps=eps,
                           boundary=(a * eps**2, a * 1.0), M=64)
        profile = a * pb.s_nodes
        r, flags = radial_residual(profile, pb)
        assert flags.all()
        assert np.abs(r[1:-1] - (1.0 - eps)).max() <= 1e-12

    def test_inadmissible_nodes_flagged_not_raised(self):
        pb = RadialProblem(n=3, k=2, form="root", gamma=10.0, R=1.0, eps=0.25,
                           boundary=(0.0, 0.0), M=64)
        profile = -pb.s_nodes  # a|z|^2 with a < 0: mu all negative
        r, flags = radial_residual(profile, pb)
        assert not flags[1:-1].any()
        assert np.isfinite(r[1:-1]).all()


class TestSolveRadial:
    def test_k1_linear_one_newton_step(self):
        gamma, R, eps = 2.0, 1.0, 0.25
        data = homogeneous_data(gamma, R)
        pb = RadialProblem(n=2, k=1, form="root", gamma=gamma, R=R, eps=eps,
                           boundary=(data(eps**2), 0.0), M=256)
        sol = solve_radial(pb)
        assert sol.newton_iters == 1
        assert sol.admissible

    def test_k1_matches_closed_form(self):
        # 2 phi' + s phi'' = eps has general solution A + B/s + (eps/2) s
        gamma, R, eps = 2.0, 1.0, 0.25
        pb = RadialProblem(n=2, k=1, form="root", gamma=gamma, R=R, eps=eps,
                           boundary=(-3.0, 0.5), M=256)
        sol = solve_radial(pb)
        e2 = eps**2
        lhs = np.array([[1.0, 1.0 / e2], [1.0, 1.0]])
        rhs = np.array([-3.0 - eps / 2 * e2, 0.5 - eps / 2])
        A, B = np.linalg.solve(lhs, rhs)
        exact = A + B / pb.s_nodes + eps / 2 * pb.s_nodes
        assert np.abs(sol.values - exact).max() <= 1e-6

    def test_restart_from_solution_converges_immediately(self):
        pb = RadialProblem(n=3, k=2, form="root", gamma=2.0, R=1.0, eps=0.2,
                           boundary=(-20.0, 0.0), M=128)
        sol = solve_radial(pb)
        again = solve_radial(pb, init=sol.values)
        assert again.newton_iters <= 1

    def test_regression_anchor_gamma10(self):
        # mirrored generic-branch run: admissible data carries +|z|^{-10}
        gamma, R, eps = 10.0, 1.0, 0.2
        g = gamma / 2
        data = lambda s: s**-g - 1.0
        pb = RadialProblem(n=3, k=2, form="root", gamma=gamma, R=R, eps=eps,
                           boundary=(data(eps**2), data(R**2)), M=512)
        sol = solve_radial(pb)
        assert sol.newton_iters <= 30
        assert sol.residual_norm <= 1e-10 * (1 + eps)
        assert sol.admissible

    def test_inadmissible_init_rejected(self):
        pb = RadialProblem(n=3, k=2, form="root", gamma=10.0, R=1.0, eps=0.25,
                           boundary=(0.0, 0.0), M=64)
        with pytest.raises(InvalidArgumentError):
            solve_radial(pb, init=-pb.s_nodes)

    def test_comparison_principle_in_rhs_level(self):
        # same annulus and data, larger right-hand side lies below
        gamma, R = 2.0, 1.0
        data = homogeneous_data(gamma, R)
        common = dict(n=3, k=3, form="log", gamma=gamma, R=R, eps=0.2,
                      boundary=(data(0.04), 0.0), M=256)
        hi = solve_radial(RadialProblem(rhs_level=0.2, **common))
        lo = solve_radial(RadialProblem(rhs_level=0.05, **common))
        assert np.all(hi.values <= lo.values + 1e-8)

    def test_eval_consistency_between_interpolants(self):
        pb = RadialProblem(n=3, k=3, form="log", gamma=2.0, R=1.0, eps=0.3,
                           boundary=(-10.0, 0.0), M=256)
        sol = solve_radial(pb)
        for s in np.geomspace(0.1, 0.95, 17):
            a = sol.eval(s)[0]
            b = sol.eval_spline(s)[0]
            assert a == pytest.approx(b, rel=1e-6, abs=1e-8)

    def test_solver_failure_carries_history(self):
        pb = RadialProblem(n=3, k=2, form="root", gamma=2.0, R=1.0, eps=0.2,
                           boundary=(-20.0, 0.0), M=64)
        with pytest.raises(SolverFailureError) as err:
            solve_radial(pb, max_iters=2)
        assert len(err.value.history) > 0


class TestMeshRefinement:
    def test_error_drops_by_three_per_doubling(self):
        gamma, R, eps = 2.0, 1.0, 0.25
        data = homogeneous_data(gamma, R)

        def run(M):
            pb = RadialProblem(n=3, k=3, form="log", gamma=gamma, R=R, eps=eps,
                               boundary=(data(eps**2), 0.0), M=M)
            return solve_radial(pb)

        ref = run(2048)
        probes = [0.4, 0.6]
        errs = []
        for M in (64, 128, 256):
            sol = run(M)
            errs.append(max(abs(sol.eval(r * r)[0] - ref.eval(r * r)[0]) for r in probes))
        assert errs[0] / errs[1] >= 3.0
        assert errs[1] / errs[2] >= 3.0


class TestDefaultInit:
    def test_recovers_subsolution_for_subsolution_data(self):
        n, k, gamma, R, eps = 3, 3, 2.0, 1.0, 0.2
        a = quadratic_coefficient(n, k)
        g = gamma / 2
        b = 0.0 - (-(R ** (-gamma))) - a * R**2
        sub = lambda s: -(s**-g) + a * s + b
        pb = RadialProblem(n=n, k=k, form="log", gamma=gamma, R=R, eps=eps,
                           boundary=(sub(eps**2), sub(R**2)), M=64)
        init = default_init(pb)
        expect = np.array([sub(s) for s in pb.s_nodes])
        assert np.abs(init - expect).max() <= 1e-10 * (1 + np.abs(expect).max())


class TestExtrapolation:
    def test_geometric_sequence_exact(self):
        v = 5.0 - 3.0 * 0.5 ** np.arange(8)
        assert geometric_extrapolate(v) == pytest.approx(5.0, abs=1e-12)

    def test_sqrt_eps_sequence(self):
        rho = 2.0**-0.5
        v = -2.0 + 0.1 * rho ** np.arange(8)
        assert geometric_extrapolate(v) == pytest.approx(-2.0, abs=1e-10)

    def test_non_contracting_falls_back(self):
        v = np.array([0.0, 1.0, 3.0, 7.0])
        assert geometric_extrapolate(v) == 7.0


class TestGreenLimit:
    def test_small_schedule_k1(self):
        eps = [0.2 * 2.0**-j for j in range(4)]
        rep, runs = green_limit(n=3, k=1, gamma=4.0, R=1.0, eps_schedule=eps,
                                probe_radii=[0.5], data_mode="exact-homogeneous", M=128)
        assert rep["orientation"] == 1.0
        assert rep["monotone_admissible_side"]
        assert abs(rep["extrapolated"][0] - (-(0.5**-4.0) + 1.0)) <= 1e-4

    def test_mirrored_orientation_detected(self):
        eps = [0.2 * 2.0**-j for j in range(3)]
        rep, _ = green_limit(n=3, k=2, gamma=10.0, R=1.0, eps_schedule=eps,
                             probe_radii=[0.5], M=128)
        assert rep["orientation"] == -1.0

    def test_mirror_rejected_for_odd_k(self):
        eps = [0.2, 0.1]
        with pytest.raises(InvalidArgumentError):
            green_limit(n=4, k=3, gamma=22.0, R=1.0, eps_schedule=eps,
                        probe_radii=[0.5], M=64)

    def test_monotonicity_flag_sensitive(self):
        # shuffled schedule values are re-sorted internally; feeding a
        # deliberately non-monotone value table to the checker must fail
        from formhess.diagnostics import monotonicity_check

        ok, gap = monotonicity_check([[0.0], [1.0], [0.5]], slack=1e-8)
        assert not ok and gap == -0.5
