"""Incremental Newton-Raphson driver with Dirichlet lifting and step bisection.

A problem is advanced along a pseudo-time ``t in [0, nsteps]``; at the end of
step ``s`` the constrained dofs carry ``program.prescribed[s-1]`` and the
external load vector is ``program.load_scale[s-1] * f_ext``.  Inside a step the
targets are linearly interpolated, which is what the bisection uses.

Sign convention: the assembled out-of-balance vector is
``R = f_int - f_ext``; at a converged state ``R`` vanishes on free dofs and
its constrained entries are the support reactions.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import pyamg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    ConfigError,
    InvalidDeformationError,
    NonConvergenceError,
    SingularTangentError,
)
from .fem import Assembler, DofMap, Mesh


@dataclass(frozen=True)
class NewtonConfig:
    """Convergence control.

    The step converges when the free-dof residual satisfies
    ``||R_f|| <= max(tol_abs, tol_rel * ||R_first||)`` where ``R_first`` is the
    right-hand side of the first iteration (which includes the lifting of the
    new prescribed values).  As a guard against a round-off floor, a step is
    also accepted if the last correction is below ``tol_increment`` (mm) and
    the residual is within ``100 x`` the tolerance.
    """

    tol_abs: float = 1e-9
    tol_rel: float = 1e-10
    tol_increment: float = 1e-13
    max_iter: int = 25
    max_step_cuts: int = 6

    def __post_init__(self):
        if min(self.tol_abs, self.tol_rel, self.tol_increment) <= 0.0:
            raise ConfigError("Newton tolerances must be positive")
        if self.max_iter < 1 or self.max_step_cuts < 0:
            raise ConfigError("max_iter must be >= 1 and max_step_cuts >= 0")


@dataclass
class LoadProgram:
    """Dirichlet / load program.

    Parameters
    ----------
    prescribed : (nsteps, nconstrained)
        Total prescribed values (mm) of ``dofmap.constrained`` at step ends.
    load_scale : (nsteps,), optional
        Total multiplier of the reference external load vector at step ends.
    abscissa : (nsteps,), optional
        Curve abscissa at step ends (defaults to the step index).
    reaction_dofs : array of int, optional
        Constrained dofs whose reactions are summed into the reported
        resultant.  Defaults to the dofs with a nonzero prescribed program.
    """

    prescribed: np.ndarray
    load_scale: np.ndarray | None = None
    abscissa: np.ndarray | None = None
    reaction_dofs: np.ndarray | None = None
    tag: str = ""
    initial: np.ndarray | None = None

    def __post_init__(self):
        self.prescribed = np.atleast_2d(np.asarray(self.prescribed, dtype=float))
        n = self.nsteps
        if self.load_scale is None:
            self.load_scale = np.zeros(n)
        self.load_scale = np.asarray(self.load_scale, dtype=float).reshape(n)
        if self.abscissa is None:
            self.abscissa = np.arange(1, n + 1, dtype=float)
        self.abscissa = np.asarray(self.abscissa, dtype=float).reshape(n)
        if not (np.all(np.isfinite(self.prescribed)) and np.all(np.isfinite(self.load_scale))):
            raise ConfigError("prescribed values must be finite")
        if self.initial is None:
            self.initial = np.zeros(self.prescribed.shape[1])

    @property
    def nsteps(self) -> int:
        return self.prescribed.shape[0]

    @classmethod
    def empty(cls, nconstrained: int, tag: str = "") -> "LoadProgram":
        return cls(np.zeros((0, nconstrained)), tag=tag)

    def at(self, t: float):
        """Prescribed values, load scale and abscissa at pseudo-time ``t``."""
        s = int(np.clip(np.floor(t), 0, max(self.nsteps - 1, 0)))
        a = t - s
        prev_p = self.initial if s == 0 else self.prescribed[s - 1]
        prev_l = 0.0 if s == 0 else self.load_scale[s - 1]
        prev_x = 0.0 if s == 0 else self.abscissa[s - 1]
        return (
            (1 - a) * prev_p + a * self.prescribed[s],
            (1 - a) * prev_l + a * self.load_scale[s],
            (1 - a) * prev_x + a * self.abscissa[s],
        )

    def reversed(self) -> "LoadProgram":
        """Load then unload back to the initial state along the same path."""
        back = np.vstack([self.prescribed[-2::-1], self.initial[None]])
        back_l = np.concatenate([self.load_scale[-2::-1], [0.0]])
        back_x = np.concatenate([self.abscissa[-2::-1], [0.0]])
        return LoadProgram(
            np.vstack([self.prescribed, back]),
            np.concatenate([self.load_scale, back_l]),
            np.concatenate([self.abscissa, back_x]),
            self.reaction_dofs,
            self.tag + "+unload",
            self.initial,
        )


@dataclass
class Problem:
    """Mesh, constraints, material and reference external load."""

    mesh: Mesh
    dofmap: DofMap
    material: object
    f_ext: np.ndarray | None = None
    threads: int | None = None

    def __post_init__(self):
        if self.f_ext is None:
            self.f_ext = np.zeros(self.mesh.ndof)
        self.f_ext = np.asarray(self.f_ext, dtype=float)
        if self.f_ext.shape != (self.mesh.ndof,):
            raise ConfigError("external load vector has the wrong size")
        self.assembler = Assembler(self.mesh, self.material, threads=self.threads)
        self._last = None

    def assemble(self, u, load_scale: float = 0.0):
        """Tangent and out-of-balance force at ``u``.

        The internal part of the last evaluation is cached, so the converged
        state of one increment seeds the next without a second assembly.
        """
        if self._last is not None and np.array_equal(self._last[0], u):
            K, f_int = self._last[1], self._last[2]
        else:
            res = self.assembler.assemble(u)
            K, f_int = res.K, res.R
            self._last = (np.array(u, copy=True), K, f_int)
        return K, f_int - load_scale * self.f_ext


@dataclass
class StepRecord:
    step: int
    t: float
    iterations: int
    residuals: list
    resultant: float
    cuts: int = 0


@dataclass
class SolveReport:
    steps: list = field(default_factory=list)
    trajectory: list = field(default_factory=list)
    wall_time: float = 0.0
    aborted: bool = False
    message: str = ""
    u: np.ndarray | None = None
    reactions: np.ndarray | None = None

    @property
    def iterations(self) -> list:
        return [s.iterations for s in self.steps]

    @property
    def max_iterations(self) -> int:
        return max(self.iterations, default=0)

    def curve(self):
        """``(abscissa, resultant)`` arrays of the recorded trajectory."""
        if not self.trajectory:
            return np.zeros(0), np.zeros(0)
        a = np.array([p[0] for p in self.trajectory])
        r = np.array([p[1] for p in self.trajectory])
        return a, r


ITERATIVE_MIN_SIZE = 10000
ITERATIVE_TOL = 1e-12


def _amg_cg(K, rhs, tol=ITERATIVE_TOL, maxiter=300):
    """Smoothed-aggregation AMG preconditioned CG; ``None`` when it falls short."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ml = pyamg.smoothed_aggregation_solver(sp.csr_matrix(K), symmetry="symmetric")
            x = ml.solve(rhs, tol=0.1 * tol, accel="cg", maxiter=maxiter)
    except (ValueError, ArithmeticError, RuntimeError, np.linalg.LinAlgError):
        return None
    # judged by the true residual, so a CG breakdown on an indefinite K is caught
    if not np.all(np.isfinite(x)) or np.linalg.norm(rhs - K @ x) > tol * np.linalg.norm(rhs):
        return None
    return x


def linear_solve(K, rhs, refine: int = 2, iterative_min: int = ITERATIVE_MIN_SIZE) -> np.ndarray:
    """Solve ``K x = rhs`` for a sparse stiffness.

    Systems with at least ``iterative_min`` unknowns first try AMG-preconditioned
    CG to a relative residual of ``ITERATIVE_TOL``; smaller systems, and large
    ones where CG does not get there (indefinite or badly conditioned K), use a
    direct sparse LU with pivoting and ``refine`` rounds of iterative refinement.
    """
    rhs = np.asarray(rhs, dtype=float)
    if K.shape[0] != K.shape[1] or K.shape[0] != rhs.shape[0]:
        raise ValueError("dimension mismatch in linear_solve")
    if K.shape[0] == 0:
        return np.zeros(0)
    if K.shape[0] >= iterative_min and np.any(rhs):
        x = _amg_cg(K, rhs)
        if x is not None:
            return x
    K = sp.csc_matrix(K)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", spla.MatrixRankWarning)
            # symmetric-pattern ordering with threshold pivoting: cheap on the
            # structurally symmetric stiffness, still safe when K is indefinite
            lu = spla.splu(K, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.1,
                           options={"SymmetricMode": True})
    except RuntimeError as exc:
        raise SingularTangentError(f"sparse factorization failed: {exc}") from exc
    x = lu.solve(rhs)
    if not np.all(np.isfinite(x)):
        raise SingularTangentError("non-finite solution from sparse factorization")
    nb = np.linalg.norm(rhs)
    for _ in range(refine):
        r = rhs - K @ x
        if np.linalg.norm(r) <= 1e-14 * nb:
            break
        x = x + lu.solve(r)
    return x


def _free_blocks(K, free, constrained):
    Kf = K[free]
    return Kf[:, free], Kf[:, constrained]


def newton_solve_step(problem: Problem, u_start, target, load_scale: float = 0.0,
                      cfg: NewtonConfig = NewtonConfig()):
    """Solve one increment to equilibrium.

    Returns ``(u, iterations, residual_history, R)`` where ``R`` is the full
    out-of-balance vector at the converged state.
    """
    dm = problem.dofmap
    free, con = dm.free, dm.constrained
    u = np.array(u_start, dtype=float, copy=True)
    K, R = problem.assemble(u, load_scale)
    du_c = np.asarray(target, dtype=float) - u[con]
    Kff, Kfc = _free_blocks(K, free, con)
    rhs = -(R[free] + Kfc @ du_c)
    r0 = float(np.linalg.norm(rhs))
    tol = max(cfg.tol_abs, cfg.tol_rel * r0)
    history = [r0]
    if r0 <= cfg.tol_abs and not np.any(du_c):
        return u, 0, history, R
    for it in range(1, cfg.max_iter + 1):
        try:
            dx = linear_solve(Kff, rhs)
        except SingularTangentError as exc:
            raise SingularTangentError(f"{exc} (iteration {it})") from exc
        u[free] += dx
        if it == 1:
            u[con] = target
        K, R = problem.assemble(u, load_scale)
        rhs = -R[free]
        r = float(np.linalg.norm(rhs))
        history.append(r)
        if not np.isfinite(r):
            raise InvalidDeformationError("non-finite residual")
        if r <= tol or (np.max(np.abs(dx), initial=0.0) <= cfg.tol_increment and r <= 100 * tol):
            return u, it, history, R
        Kff, _ = _free_blocks(K, free, con)
    raise NonConvergenceError(
        f"no convergence in {cfg.max_iter} iterations (residual {history[-1]:.3e}, tol {tol:.3e})",
        history=history,
    )


_RECOVERABLE = (NonConvergenceError, InvalidDeformationError, SingularTangentError)


def run_program(problem: Problem, program: LoadProgram, cfg: NewtonConfig = NewtonConfig(),
                u0=None, record_states: bool = True, callback=None) -> SolveReport:
    """Apply all steps of ``program``; failed increments are bisected.

    The trajectory holds ``(abscissa, resultant, u)`` at each completed step
    (``u`` is ``None`` when ``record_states`` is false).  When the cut budget is
    exhausted the report is returned with ``aborted=True`` and the partial
    trajectory.
    """
    t_start = time.perf_counter()
    dm = problem.dofmap
    con = dm.constrained
    if program.prescribed.shape[1] != len(con):
        raise ConfigError("program width does not match the constrained dof set")
    rdofs = program.reaction_dofs
    if rdofs is None:
        mask = np.any(program.prescribed != 0.0, axis=0) if program.nsteps else np.zeros(len(con), bool)
        rpos = np.nonzero(mask)[0]
    else:
        rpos = dm.position(np.asarray(rdofs, dtype=np.int64))
    u = np.zeros(problem.mesh.ndof) if u0 is None else np.array(u0, dtype=float)
    u[con] = program.initial
    report = SolveReport(u=u)
    min_dt = 0.5 ** cfg.max_step_cuts
    for s in range(program.nsteps):
        t, t_end, dt = float(s), float(s + 1), 1.0
        iters, hist, cuts = 0, [], 0
        R = None
        while t < t_end - 1e-14:
            t_next = t + dt
            if t_next >= t_end - 1e-14:
                t_next = t_end
                target, scale = program.prescribed[s], program.load_scale[s]
            else:
                target, scale, _ = program.at(t_next)
            try:
                u_new, it, h, R = newton_solve_step(problem, u, target, scale, cfg)
            except _RECOVERABLE as exc:
                cuts += 1
                dt *= 0.5
                if dt < min_dt * (1 - 1e-12):
                    report.aborted = True
                    report.message = f"step {s + 1}: step-cut budget exhausted ({exc})"
                    report.wall_time = time.perf_counter() - t_start
                    report.u = u
                    return report
                continue
            u = u_new
            t = t_next
            iters = max(iters, it) if cuts else it
            hist = h
            if cuts:
                dt = min(2 * dt, 1.0)
        reactions = R[con]
        resultant = float(np.sum(reactions[rpos]))
        report.steps.append(StepRecord(s + 1, t_end, iters, hist, resultant, cuts))
        report.trajectory.append((float(program.abscissa[s]), resultant,
                                  u.copy() if record_states else None))
        report.reactions = reactions
        if callback is not None:
            callback(s + 1, u, report)
    report.u = u
    report.wall_time = time.perf_counter() - t_start
    return report
