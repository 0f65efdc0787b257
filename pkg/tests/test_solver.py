"""Load programs, sparse solve, Newton increments and step control."""

from __future__ import annotations

import numpy as np
import pytest
import scipy.sparse as sp

from hencky_fem.bench.cases import CaseSpec, default_material, generate_case
from hencky_fem.errors import ConfigError, SingularTangentError
from hencky_fem.solver import (
    LoadProgram,
    NewtonConfig,
    Problem,
    linear_solve,
    newton_solve_step,
    run_program,
)
from hencky_fem.verification import QUADRATIC_BOUND, convergence_ratios


def _cube(density=2, steps=5, target=5.0):
    spec = CaseSpec("uniaxial_cube", density, steps=steps, target=target)
    case = generate_case(spec)
    return case, Problem(case.mesh, case.dofmap, default_material(spec))


class TestNewtonConfig:
    def test_defaults(self):
        cfg = NewtonConfig()
        assert cfg.tol_rel == 1e-10 and cfg.max_iter == 25

    @pytest.mark.parametrize("kw", [dict(tol_abs=0.0), dict(tol_rel=-1.0), dict(max_iter=0),
                                    dict(max_step_cuts=-1)])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            NewtonConfig(**kw)


class TestLoadProgram:
    def test_interpolation(self):
        prog = LoadProgram(np.array([[1.0], [3.0]]), load_scale=[2.0, 4.0], abscissa=[10.0, 20.0])
        p, s, x = prog.at(0.5)
        np.testing.assert_allclose(p, [0.5])
        assert (s, x) == (1.0, 5.0)
        p, s, x = prog.at(1.25)
        np.testing.assert_allclose(p, [1.5])
        assert (s, x) == (2.5, 12.5)

    def test_defaults(self):
        prog = LoadProgram(np.zeros((3, 2)))
        np.testing.assert_array_equal(prog.load_scale, 0.0)
        np.testing.assert_array_equal(prog.abscissa, [1, 2, 3])

    def test_reversed(self):
        prog = LoadProgram(np.array([[1.0], [2.0]])).reversed()
        np.testing.assert_array_equal(prog.prescribed.ravel(), [1.0, 2.0, 1.0, 0.0])
        np.testing.assert_array_equal(prog.abscissa, [1.0, 2.0, 1.0, 0.0])

    def test_empty(self):
        assert LoadProgram.empty(4).nsteps == 0

    def test_non_finite(self):
        with pytest.raises(ConfigError):
            LoadProgram(np.array([[np.nan]]))


class TestLinearSolve:
    def test_identity(self):
        rhs = np.arange(5.0)
        np.testing.assert_array_equal(linear_solve(sp.identity(5, format="csr"), rhs), rhs)

    def test_one_by_one(self):
        np.testing.assert_allclose(linear_solve(sp.csr_matrix([[4.0]]), np.array([2.0])), [0.5])

    def test_random_spd_against_dense(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(50, 50))
        K = a @ a.T + 50 * np.eye(50)
        rhs = rng.normal(size=50)
        x = linear_solve(sp.csr_matrix(K), rhs)
        ref = np.linalg.solve(K, rhs)
        assert np.linalg.norm(x - ref) <= 1e-10 * np.linalg.norm(ref)

    def test_indefinite(self):
        K = sp.csr_matrix(np.diag([1.0, -2.0, 3.0]))
        np.testing.assert_allclose(linear_solve(K, np.ones(3)), [1.0, -0.5, 1 / 3])

    def test_singular(self):
        with pytest.raises(SingularTangentError):
            linear_solve(sp.csr_matrix((3, 3)), np.ones(3))

    def test_iterative_path_spd(self):
        # a 2D Laplacian-like SPD stiffness, forced through the AMG-CG branch
        n = 40
        lap = sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(n, n))
        K = (sp.kron(lap, sp.identity(n)) + sp.kron(sp.identity(n), lap)).tocsr()
        rhs = np.random.default_rng(1).normal(size=n * n)
        x = linear_solve(K, rhs, iterative_min=1)
        assert np.linalg.norm(K @ x - rhs) <= 1e-12 * np.linalg.norm(rhs)

    def test_iterative_falls_back_on_indefinite(self):
        K = sp.csr_matrix(np.diag([1.0, -2.0, 3.0, -4.0]))
        np.testing.assert_allclose(linear_solve(K, np.ones(4), iterative_min=1), [1, -0.5, 1 / 3, -0.25])

    def test_empty_and_mismatch(self):
        assert linear_solve(sp.csr_matrix((0, 0)), np.zeros(0)).shape == (0,)
        with pytest.raises(ValueError):
            linear_solve(sp.identity(3), np.ones(2))


class TestNewtonStep:
    def test_zero_increment_takes_no_iterations(self):
        case, prob = _cube()
        u0 = np.zeros(case.mesh.ndof)
        u, its, hist, _ = newton_solve_step(prob, u0, np.zeros(len(case.dofmap.constrained)))
        assert its == 0
        np.testing.assert_array_equal(u, u0)

    def test_quadratic_convergence(self):
        case, prob = _cube()
        u, its, hist, R = newton_solve_step(prob, np.zeros(case.mesh.ndof), case.program.prescribed[-1])
        assert its <= 6
        assert hist[-1] <= max(1e-9, 1e-10 * hist[0])
        assert max(convergence_ratios(hist), default=0.0) <= QUADRATIC_BOUND
        np.testing.assert_allclose(u[case.dofmap.constrained], case.program.prescribed[-1])
        assert np.linalg.norm(R[case.dofmap.free]) == pytest.approx(hist[-1])


class TestConvergenceRatios:
    def test_quadratic_sequence(self):
        np.testing.assert_allclose(convergence_ratios([1.0, 1e-2, 1e-4, 1e-8]), [1.0, 1.0])

    def test_roundoff_floor_skipped(self):
        assert convergence_ratios([1.0, 1e-3, 1e-6, 1e-13]) == [1.0]

    def test_short_history(self):
        assert convergence_ratios([1.0, 1e-9]) == []


class TestRunProgram:
    def test_zero_step_program(self):
        case, prob = _cube()
        rep = run_program(prob, LoadProgram.empty(len(case.dofmap.constrained)))
        assert rep.steps == [] and not rep.aborted
        np.testing.assert_array_equal(rep.u, 0.0)
        assert rep.curve()[0].size == 0

    def test_program_width_checked(self):
        case, prob = _cube()
        with pytest.raises(ConfigError):
            run_program(prob, LoadProgram(np.zeros((1, 3))))

    def test_compression_without_cuts(self):
        case, prob = _cube(density=4, steps=15, target=-15.0)
        rep = run_program(prob, case.program)
        assert not rep.aborted
        assert all(s.cuts == 0 for s in rep.steps)
        assert rep.max_iterations <= 5

    def test_tension_iterations(self):
        case, prob = _cube(density=2, steps=70, target=70.0)
        rep = run_program(prob, case.program, record_states=False)
        assert not rep.aborted
        assert rep.max_iterations <= 5
        assert rep.trajectory[-1][2] is None

    def test_load_unload_round_trip(self):
        case, prob = _cube(density=2, steps=10, target=20.0)
        rep = run_program(prob, case.program.reversed())
        assert not rep.aborted
        _, r = rep.curve()
        scale = np.abs(r).max()
        assert abs(r[-1]) <= 1e-8 * scale
        np.testing.assert_allclose(rep.u, 0.0, atol=1e-9)
        # same state on the way up and down
        np.testing.assert_allclose(r[:9], r[10:-1][::-1], rtol=1e-8)

    def test_path_independence(self):
        c1, p1 = _cube(density=2, steps=1, target=10.0)
        c5, p5 = _cube(density=2, steps=5, target=10.0)
        r1 = run_program(p1, c1.program)
        r5 = run_program(p5, c5.program)
        np.testing.assert_allclose(r1.u, r5.u, atol=1e-9)
        assert r1.steps[-1].resultant == pytest.approx(r5.steps[-1].resultant, rel=1e-9)

    def test_step_cutting(self):
        case, prob = _cube(density=2, steps=1, target=-19.0)
        rep = run_program(prob, case.program, NewtonConfig(max_step_cuts=6))
        assert not rep.aborted
        assert rep.steps[0].cuts >= 1

    def test_abort_when_cut_budget_exhausted(self):
        case, prob = _cube(density=2, steps=1, target=-19.0)
        rep = run_program(prob, case.program, NewtonConfig(max_step_cuts=0))
        assert rep.aborted
        assert "step 1" in rep.message
        assert rep.steps == []

    def test_reaction_balance_under_applied_load(self):
        spec = CaseSpec("cook2d", 2, steps=2, target=20.0)
        case = generate_case(spec)
        prob = Problem(case.mesh, case.dofmap, default_material(spec), case.f_ext)
        rep = run_program(prob, case.program)
        assert not rep.aborted
        scale = case.program.load_scale[-1]
        total = case.f_ext.reshape(-1, 2).sum(axis=0) * scale
        reactions = np.zeros(case.mesh.ndof)
        reactions[case.dofmap.constrained] = rep.reactions
        np.testing.assert_allclose(reactions.reshape(-1, 2).sum(axis=0), -total, atol=1e-8 * scale)

    def test_displacement_control_balance(self):
        case, prob = _cube(density=2, steps=3, target=6.0)
        rep = run_program(prob, case.program)
        reactions = np.zeros(case.mesh.ndof)
        reactions[case.dofmap.constrained] = rep.reactions
        # internal forces are self-equilibrated: reactions sum to zero
        np.testing.assert_allclose(reactions.reshape(-1, 3).sum(axis=0), 0.0,
                                   atol=1e-8 * abs(rep.steps[-1].resultant))

    def test_callback(self):
        case, prob = _cube(density=1, steps=3, target=3.0)
        seen = []
        run_program(prob, case.program, callback=lambda s, u, rep: seen.append(s))
        assert seen == [1, 2, 3]
