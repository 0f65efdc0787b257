"""Oracle-based consistency checks shared by the ``verify`` command and the test suite.

Every check returns one or more :class:`Check` records; nothing here raises on
a failed comparison.  Finite-difference oracles only use energies, stresses
and internal forces, never the analytic tangents being checked.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import materials as mat
from . import tensorlab as tl
from .bench.calibration import fit_uniaxial, uniaxial_incompressible_stress
from .bench.cases import CaseSpec, default_material, generate_case, structured_grid
from .bench.mpoint import material_point_uniaxial
from .fem import DofMap, Mesh, corners, element_force_and_stiffness, gauss_rule, reference_gradients
from .solver import LoadProgram, NewtonConfig, Problem, run_program


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    tol: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.value:.3e} (tol {self.tol:.1e}) {self.detail}".rstrip()


def _rel(a, b, axes):
    num = np.sqrt(np.sum((a - b) ** 2, axis=axes))
    den = np.sqrt(np.sum(b**2, axis=axes))
    return num / np.maximum(den, 1e-300)


# --------------------------------------------------------------------------
# random states


def random_stretches(rng, p: mat.MaterialParams, n: int, lo: float = 0.3, hi: float = 4.0,
                     margin: float = 0.9):
    """Uniform stretches in ``[lo, hi]^dim``; Gent samples stay inside ``margin * Jm``."""
    out = np.empty((0, p.dim))
    while len(out) < n:
        lam = rng.uniform(lo, hi, size=(2 * n, p.dim))
        if p.model == "gent":
            s = mat.PrincipalState.from_stretches(lam)
            inv = np.sum(np.exp(2 * s.loglam_bar), axis=-1) - p.dim
            lam = lam[inv < margin * p.jm]
        out = np.vstack([out, lam])
    return out[:n]


def random_deformations(rng, p, n, **kw):
    """``F = R1 diag(lam) R2^T`` with Haar rotations."""
    lam = random_stretches(rng, p, n, **kw)
    r1 = tl.random_rotation(rng, p.dim, n)
    r2 = tl.random_rotation(rng, p.dim, n)
    return np.einsum("nij,nj,nkj->nik", r1, lam, r2), lam


def all_models(dim=3):
    models = mat.MODELS if dim == 3 else mat.PLANAR_MODELS
    return [mat.MaterialParams.reference(m, dim=dim) for m in models]


# --------------------------------------------------------------------------
# 1. tangent consistency


def check_tangents(n_states: int = 1000, seed: int = 0, models=None):
    """Stress vs energy FD, Hessian vs stress FD, mixed modulus vs FD of S1, push-forward."""
    rng = np.random.default_rng(seed)
    checks = []
    t0 = time.perf_counter()
    for p in models or all_models():
        n = p.dim
        F, lam = random_deformations(rng, p, n_states)
        loglam = np.log(lam)
        W, tau, d2 = mat.derivatives(p, mat.PrincipalState.from_log(loglam))
        h = 1e-6
        tau_fd = np.empty_like(tau)
        for k in range(n):
            e = np.zeros(n)
            e[k] = h
            wp = mat.energy(p, mat.PrincipalState.from_log(loglam + e))
            wm = mat.energy(p, mat.PrincipalState.from_log(loglam - e))
            tau_fd[:, k] = (wp - wm) / (2 * h)
        err_a = _rel(tau, tau_fd, -1).max()
        checks.append(Check(f"1a tau vs FD(W) [{p.model}]", err_a <= 1e-6, err_a, 1e-6))

        h = 1e-5
        d2_fd = np.empty_like(d2)
        for k in range(n):
            e = np.zeros(n)
            e[k] = h
            tp = mat.principal_tau(p, mat.PrincipalState.from_log(loglam + e)).tau
            tm = mat.principal_tau(p, mat.PrincipalState.from_log(loglam - e)).tau
            d2_fd[:, :, k] = (tp - tm) / (2 * h)
        err_b = _rel(d2, d2_fd, (-2, -1)).max()
        checks.append(Check(f"1b d2W vs FD(tau) [{p.model}]", err_b <= 5e-4, err_b, 5e-4))

        dF = rng.standard_normal(F.shape)
        dF *= (np.linalg.norm(F, axis=(-2, -1)) / np.linalg.norm(dF, axis=(-2, -1)))[:, None, None]
        h = 1e-6
        s1_fd = (mat.first_pk(p, F + h * dF) - mat.first_pk(p, F - h * dF)) / (2 * h)
        s1_an = np.einsum("...ijkl,...kl->...ij", mat.mixed_tangent(p, F), dF)
        err_c = _rel(s1_an, s1_fd, (-2, -1)).max()
        checks.append(Check(f"1c mixed modulus vs FD(S1) [{p.model}]", err_c <= 5e-4, err_c, 5e-4))

        B = np.einsum("nik,njk->nij", F, F)
        C = np.einsum("nki,nkj->nij", F, F)
        c_sp = mat.spatial_tangent_and_stress(p, B).c_spatial
        c_pf = tl.voigt_pack(tl.push_forward4(F, tl.voigt_unpack(mat.material_tangent(p, C), n)))
        err_d = _rel(c_sp, c_pf, (-2, -1)).max()
        checks.append(Check(f"1d spatial modulus = push-forward(material) [{p.model}]",
                            err_d <= 1e-12, err_d, 1e-12))
    elapsed = time.perf_counter() - t0
    checks.append(Check("1 runtime [s]", elapsed < 10.0, elapsed, 10.0, f"{n_states} states/model"))
    return checks


# --------------------------------------------------------------------------
# 2. equal eigenvalues


def exp_hencky_chi_closed_form(p, s: mat.PrincipalState, k: int):
    """Closed-form limit ``mu exp(k sum lb^2) - tau_k`` (second form, expanded)."""
    lb = s.loglam_bar
    theta = s.logJ
    e_iso = np.exp(p.k * np.sum(lb * lb, axis=-1))
    e_vol = np.exp(p.khat * theta * theta)
    return p.mu * e_iso * (1.0 - 2.0 * lb[..., k]) - p.kappa * e_vol * theta


def check_equal_eigenvalues(n_states: int = 100, seed: int = 1):
    rng = np.random.default_rng(seed)
    checks = []
    for p in all_models():
        lam = random_stretches(rng, p, n_states, lo=0.5, hi=2.5, margin=0.7)
        worst = 0.0
        for eps in (1e-5, 1e-6, 1e-7):
            ll = lam.copy()
            ll[:, 1] = ll[:, 0] * (1 + eps)
            s = mat.PrincipalState.from_stretches(ll)
            _, tau, d2 = mat.derivatives(p, s)
            lam2 = ll * ll
            divided = (tau[:, 0] * lam2[:, 1] - tau[:, 1] * lam2[:, 0]) / (lam2[:, 0] - lam2[:, 1])
            limit = mat.chi_limit(p, s, 0, 1)
            scale = np.abs(limit) + np.linalg.norm(tau, axis=-1) + np.linalg.norm(d2, axis=(-2, -1))
            worst = max(worst, float(np.max(np.abs(divided - limit) / scale) / eps))
        checks.append(Check(f"2 divided difference -> limit, err/eps [{p.model}]", worst <= 10.0,
                            worst, 10.0, "eps in {1e-5,1e-6,1e-7}"))
    for model in ("exp_hencky", "quad_hencky"):
        p = mat.MaterialParams.reference(model)
        lam = random_stretches(rng, p, n_states, lo=0.3, hi=4.0)
        lam[:, 1] = lam[:, 0]
        s = mat.PrincipalState.from_stretches(lam)
        generic = mat.chi_limit(p, s, 0, 1)
        if model == "exp_hencky":
            lb = s.loglam_bar
            first = p.mu * np.exp(p.k * np.sum(lb * lb, -1)) - mat.principal_tau(p, s).tau[:, 0]
            second = exp_hencky_chi_closed_form(p, s, 0)
            oracle = np.stack([first, second])
        else:
            oracle = (p.mu - mat.principal_tau(p, s).tau[:, 0])[None]
        tau_k = mat.principal_tau(p, s).tau[:, 0]
        # both forms are differences of O(|tau_k|) terms
        scale = np.maximum(np.maximum(np.abs(generic), np.abs(tau_k)), p.mu)
        err = float(np.max(np.abs(oracle - generic) / scale))
        checks.append(Check(f"2 closed-form limit [{model}]", err <= 1e-12, err, 1e-12))
    return checks


# --------------------------------------------------------------------------
# 3. small-exponent limit


def check_small_k_limit(n_states: int = 1000, seed: int = 2):
    rng = np.random.default_rng(seed)
    pe = mat.MaterialParams("exp_hencky", 1.0, 4.7, k=1e-9, khat=1e-9)
    pq = mat.MaterialParams.reference("quad_hencky")
    lam = rng.uniform(0.3, 4.0, size=(n_states, 3))
    s = mat.PrincipalState.from_stretches(lam)
    _, te, de = mat.derivatives(pe, s)
    # quadratic model written out directly
    tq = 2 * pq.mu * s.loglam_bar + pq.kappa * s.logJ[:, None]
    dq = np.broadcast_to(2 * pq.mu * (np.eye(3) - 1.0 / 3.0) + pq.kappa, de.shape)
    err_t = float(_rel(te, tq, -1).max())
    err_d = float(_rel(de, dq, (-2, -1)).max())
    _, tq2, dq2 = mat.derivatives(pq, s)
    err_q = max(float(_rel(tq2, tq, -1).max()), float(_rel(dq2, dq, (-2, -1)).max()))
    return [
        Check("3 small-k stresses vs quadratic model", err_t <= 1e-6, err_t, 1e-6),
        Check("3 small-k Hessian vs quadratic model", err_d <= 1e-6, err_d, 1e-6),
        Check("3 quadratic model vs closed form", err_q <= 1e-12, err_q, 1e-12),
    ]


# --------------------------------------------------------------------------
# 4. elements


def _distorted_element(kind, rng):
    X = 0.5 * (corners(kind) + 1.0)
    return X * np.array([2.0, 1.5, 1.2][: X.shape[1]]) + 0.05 * rng.standard_normal(X.shape)


def check_element_fd(seed: int = 3, h: float = 1e-7):
    rng = np.random.default_rng(seed)
    checks = []
    for kind, dim in (("H8", 3), ("Q4", 2)):
        for p in all_models(dim):
            X = _distorted_element(kind, rng)
            u = 0.1 * rng.standard_normal(X.shape)
            _, K = element_force_and_stiffness(p, X, u, kind)
            K_fd = np.empty_like(K)
            for j in range(u.size):
                du = np.zeros(u.size)
                du[j] = h
                fp, _ = element_force_and_stiffness(p, X, u + du.reshape(u.shape), kind)
                fm, _ = element_force_and_stiffness(p, X, u - du.reshape(u.shape), kind)
                K_fd[:, j] = (fp - fm) / (2 * h)
            err = float(np.linalg.norm(K - K_fd) / np.linalg.norm(K_fd))
            checks.append(Check(f"4 element K vs FD(f_int) [{kind} {p.model}]", err <= 1e-5, err, 1e-5))
    return checks


def patch_mesh(dim, n=3, seed=4):
    """Unit box with randomly perturbed interior nodes."""
    rng = np.random.default_rng(seed)
    nodes, elements, kind = structured_grid((1.0,) * dim, (n,) * dim)
    interior = np.all((nodes > 1e-9) & (nodes < 1 - 1e-9), axis=1)
    nodes[interior] += 0.15 / n * rng.uniform(-1, 1, size=(interior.sum(), dim))
    return Mesh(nodes, elements, kind), ~interior


def check_patch_test(seed: int = 4):
    rng = np.random.default_rng(seed)
    checks = []
    for dim in (3, 2):
        mesh, boundary = patch_mesh(dim, seed=seed)
        A = np.eye(dim) + 0.2 * rng.uniform(-1, 1, size=(dim, dim))
        u_aff = (mesh.nodes @ (A - np.eye(dim)).T).ravel()
        bnodes = np.nonzero(boundary)[0]
        con = (bnodes[:, None] * dim + np.arange(dim)).ravel()
        dm = DofMap(mesh.ndof, dim, con)
        p = mat.MaterialParams.reference("exp_hencky", dim=dim)
        prob = Problem(mesh, dm, p)
        prog = LoadProgram(u_aff[dm.constrained][None])
        cfg = NewtonConfig(tol_abs=1e-13, tol_rel=1e-15)
        rep = run_program(prob, prog, cfg)
        u = rep.u
        x = mesh.nodes + u.reshape(-1, dim)
        F = np.einsum("eai,egaj->egij", x[mesh.elements], prob.assembler.dNdX)
        err_F = float(np.abs(F - A).max() / np.abs(A).max())
        tau = mat.kirchhoff_stress(p, np.einsum("egik,egjk->egij", F, F))
        tau_ref = mat.kirchhoff_stress(p, A @ A.T)
        err_t = float(np.abs(tau - tau_ref).max() / np.abs(tau_ref).max())
        res = prob.assembler.assemble(u, need_K=False)
        scale = p.mu * prob.assembler.volume
        err_r = float(np.abs(res.R[dm.free]).max() / scale)
        worst = max(err_F, err_t, err_r)
        checks.append(Check(f"4 patch test [{mesh.kind}]", worst <= 1e-12 and not rep.aborted, worst, 1e-12,
                            f"F {err_F:.1e}, tau {err_t:.1e}, R {err_r:.1e}"))
    return checks


def check_rigid_rotation(seed: int = 5):
    rng = np.random.default_rng(seed)
    checks = []
    for kind, dim in (("H8", 3), ("Q4", 2)):
        for p in all_models(dim):
            X = _distorted_element(kind, rng)
            R = tl.random_rotation(rng, dim)
            f, _ = element_force_and_stiffness(p, X, X @ R.T - X, kind)
            pts, w = gauss_rule(kind)
            V = float(np.sum(w * reference_gradients(X, kind, pts)[1]))
            val = float(np.abs(f).max() / (p.mu * V))
            checks.append(Check(f"4 rigid rotation residual [{kind} {p.model}]", val <= 1e-10, val, 1e-10))
    return checks


# --------------------------------------------------------------------------
# 5. Newton convergence on the uniaxial cube

QUADRATIC_BOUND = 1e4
ROUNDOFF_FLOOR = 1e-12


def convergence_ratios(residuals):
    """Normalized ``rho_{i+1} / rho_i^2`` of the last two ratios, ``rho = r / r_0``.

    Ratios whose numerator already sits below the round-off floor
    ``1e-12 * r_0`` carry no information about the convergence rate and are
    skipped.
    """
    r = np.asarray(residuals, dtype=float)
    if len(r) < 3 or r[0] == 0.0:
        return []
    rho = r / r[0]
    out = []
    for i in range(max(1, len(rho) - 3), len(rho) - 1):
        if rho[i + 1] <= ROUNDOFF_FLOOR:
            continue
        out.append(rho[i + 1] / rho[i] ** 2)
    return out


def check_newton_convergence(density: int = 4):
    checks = []
    p = mat.MaterialParams.reference("exp_hencky")
    for target, steps in ((70.0, 70), (-15.0, 15)):
        spec = CaseSpec("uniaxial_cube", density, steps=steps, target=target)
        case = generate_case(spec)
        rep = run_program(Problem(case.mesh, case.dofmap, p), case.program, NewtonConfig(tol_rel=1e-10))
        ratios = [x for s in rep.steps for x in convergence_ratios(s.residuals)]
        worst = max(ratios, default=0.0)
        checks.append(Check(f"5 quadratic rate max rho(i+1)/rho(i)^2 [w={target:+g}]",
                            worst <= QUADRATIC_BOUND and not rep.aborted, worst, QUADRATIC_BOUND))
        checks.append(Check(f"5 max Newton iterations per step [w={target:+g}]",
                            rep.max_iterations <= 6 and not rep.aborted, rep.max_iterations, 6))
    return checks


# --------------------------------------------------------------------------
# 6. mesh bookkeeping

MESH_COUNTS = [
    (("uniaxial_cube", 4), (64, 125, 375)),
    (("footing3d", 16), (4096, 4913, 14739)),
    (("arc2d", 1), (90, 124, 248)),
    (("arc2d", 2), (900, 1001, 2002)),
    (("arc2d", 3), (3600, 3801, 7602)),
]


def check_mesh_counts():
    checks = []
    for (case, density), (ne, nn, nd) in MESH_COUNTS:
        m = generate_case(CaseSpec(case, density)).mesh
        ok = (m.nelems, m.nnodes, m.ndof) == (ne, nn, nd)
        checks.append(Check(f"6 mesh counts [{case} {density}]", ok, 0.0 if ok else 1.0, 0.0,
                            f"elements={m.nelems} nodes={m.nnodes} dofs={m.ndof}"))
    return checks


# --------------------------------------------------------------------------
# 7. uniaxial cross-validation

CROSS_STRETCHES = (0.25, 0.5, 2.0, 3.0, 4.5)


def uniaxial_fe_curve(p, density=4, size=20.0):
    """FE nominal stress S1/mu on the cube at the stretches of CROSS_STRETCHES."""
    out = {}
    for target, steps in ((70.0, 70), (-15.0, 15)):
        spec = CaseSpec("uniaxial_cube", density, steps=steps, target=target, size=size)
        case = generate_case(spec)
        rep = run_program(Problem(case.mesh, case.dofmap, p), case.program)
        for w, r in zip(*rep.curve()):
            out[round(1.0 + w / size, 12)] = r / case.area / p.mu
    return np.array([out.get(round(s, 12), np.nan) for s in CROSS_STRETCHES])


def check_uniaxial_cross(density: int = 4, models=None):
    checks = []
    stresses = {}
    for p in models or all_models():
        fe = uniaxial_fe_curve(p, density)
        mp = material_point_uniaxial(p, CROSS_STRETCHES).ordinate
        err = float(np.max(np.abs(fe - mp) / np.abs(mp)))
        err = err if np.isfinite(err) else np.inf
        checks.append(Check(f"7 cube FE vs material point [{p.model}]", err <= 1e-6, err, 1e-6))
        stresses[p.model] = mp[-1]
    return checks + check_model_ordering()


def check_model_ordering():
    ps = {p.model: p for p in all_models()}
    s = {m: material_point_uniaxial(p, [4.5]).ordinate[0] for m, p in ps.items()}
    ok = s["exp_hencky"] > s["gent"] > s["neo_hooke"] > s["quad_hencky"]
    detail = " > ".join(f"{m}={s[m]:.4g}" for m in ("exp_hencky", "gent", "neo_hooke", "quad_hencky"))
    checks = [Check("7 ordering at stretch 4.5", ok, 0.0 if ok else 1.0, 0.0, detail)]
    lam = np.linspace(2.0, 4.5, 26)
    d2q = np.diff(material_point_uniaxial(ps["quad_hencky"], lam).ordinate, 2)
    d2e = np.diff(material_point_uniaxial(ps["exp_hencky"], lam).ordinate, 2)
    checks.append(Check("7 quadratic model non-stiffening (max 2nd difference, stretch 2-4.5)",
                        bool(np.all(d2q <= 0)), float(d2q.max()), 0.0))
    checks.append(Check("7 exponentiated model stiffening (min 2nd difference, stretch 2-4.5)",
                        bool(np.all(d2e > 0)), float(d2e.min()), 0.0))
    return checks


# --------------------------------------------------------------------------
# 8. incompressible limit and calibration

FIT_REFERENCE = (0.612, 1.173)


def check_incompressible_and_fit():
    mu, k = FIT_REFERENCE
    p = mat.MaterialParams("exp_hencky", mu, 1e4 * mu, k=k, khat=1.5 * k)
    lam = np.linspace(0.5, 3.0, 26)
    lam = lam[np.abs(lam - 1.0) > 1e-12]
    mp = material_point_uniaxial(p, lam).ordinate * mu
    ref = uniaxial_incompressible_stress(mu, k, lam)
    err = float(np.max(np.abs(mp - ref) / np.abs(ref)))
    checks = [Check("8 near-incompressible material point vs closed form", err <= 5e-3, err, 5e-3)]
    data_lam = np.array([0.5, 0.8, 1.2, 1.5, 2.0, 2.5, 3.0])
    fit = fit_uniaxial(data_lam, uniaxial_incompressible_stress(mu, k, data_lam))
    e_fit = max(abs(fit.mu - mu) / mu, abs(fit.k - k) / k)
    checks.append(Check("8 calibration recovers (mu, k)", e_fit <= 1e-8, e_fit, 1e-8,
                        f"mu={fit.mu:.12g} k={fit.k:.12g}"))
    return checks


# --------------------------------------------------------------------------
# 10. Jaumann conversion


def jaumann_brute_force(c_voigt, tau):
    n = tau.shape[-1]
    c4 = tl.voigt_unpack(c_voigt, n)
    d = np.eye(n)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    c4[i, j, k, l] += 0.5 * (tau[i, k] * d[j, l] + tau[j, k] * d[i, l]
                                             + tau[i, l] * d[j, k] + tau[j, l] * d[i, k])
    return tl.voigt_pack(c4)


def check_jaumann(n_states: int = 100, seed: int = 6):
    rng = np.random.default_rng(seed)
    worst, ident = 0.0, 0.0
    for dim in (3, 2):
        p = mat.MaterialParams.reference("exp_hencky", dim=dim)
        F, _ = random_deformations(rng, p, n_states, lo=0.6, hi=1.6)
        st = mat.spatial_tangent_and_stress(p, np.einsum("nik,njk->nij", F, F))
        out = mat.jaumann_modulus(st.c_spatial, st.tau_tensor)
        for c, t, o in zip(st.c_spatial, st.tau_tensor, out):
            ref = jaumann_brute_force(c, t)
            worst = max(worst, float(np.abs((o - c) - (ref - c)).max() / max(np.abs(t).max(), 1e-300)))
        zero = mat.jaumann_modulus(st.c_spatial, np.zeros_like(st.tau_tensor))
        ident = max(ident, float(np.abs(zero - st.c_spatial).max()))
    return [
        Check("10 Jaumann shift vs component loop", worst <= 1e-14, worst, 1e-14),
        Check("10 Jaumann with tau = 0 is identity", ident == 0.0, ident, 0.0),
    ]


# --------------------------------------------------------------------------
# 9. structural benchmarks (minutes; not part of run_all)

COOK_DENSITIES = (2, 4, 8, 16, 32, 40)
COOK_KAPPAS = (4.7, 50.0)
COOK_TOL = 0.02
PLANAR_BUDGET = 30.0
SOLID_BUDGET = 300.0


def _solve_case(case, density, material=None, **spec_kw):
    spec = CaseSpec(case, density, **spec_kw)
    p = material or default_material(spec)
    case_obj = generate_case(spec)
    rep = run_program(Problem(case_obj.mesh, case_obj.dofmap, p, case_obj.f_ext),
                      case_obj.program, record_states=False)
    return case_obj, rep


def cook_tip_displacements(kappa, densities=COOK_DENSITIES):
    """Final vertical displacement of node A for each mesh density."""
    out = []
    for n in densities:
        spec = CaseSpec("cook2d", n)
        case, rep = _solve_case("cook2d", n, default_material(spec, kappa=kappa))
        out.append((n, np.nan if rep.aborted else float(rep.u[case.monitor_dof]), rep.wall_time))
    return out


def check_cook(densities=COOK_DENSITIES, kappas=COOK_KAPPAS):
    checks = []
    for kappa in kappas:
        res = cook_tip_displacements(kappa, densities)
        (_, v1, _), (_, v2, _) = res[-2], res[-1]
        change = abs(v2 - v1) / abs(v2) if np.isfinite(v1 * v2) else np.inf
        detail = " ".join(f"{n}:{v:.4f}" for n, v, _ in res)
        checks.append(Check(f"9 Cook tip displacement change between two finest meshes [kappa/mu={kappa:g}]",
                            change < COOK_TOL, change, COOK_TOL, detail))
        slowest = max(t for _, _, t in res)
        checks.append(Check(f"9 Cook runtime per mesh [kappa/mu={kappa:g}] (s)",
                            slowest <= PLANAR_BUDGET, slowest, PLANAR_BUDGET))
    return checks


def arc_peak(resultants):
    """Index and value of the first local maximum of ``|R|`` followed by a drop.

    Returns ``(None, nan)`` when the curve has no limit point (at least a 1 %
    drop after the maximum is required).
    """
    r = np.abs(np.asarray(resultants, dtype=float))
    for i in range(1, len(r) - 1):
        if r[i] >= r[i - 1] and r[i] > r[i + 1]:
            if np.min(r[i + 1:]) < 0.99 * r[i]:
                return i, float(r[i])
    return None, float("nan")


def check_arc(coarse: int = 1, fine: int = 3):
    checks = []
    peaks = {}
    for mesh in (coarse, fine):
        _, rep = _solve_case("arc2d", mesh)
        x, r = rep.curve()
        i, peak = arc_peak(r)
        peaks[mesh] = peak
        detail = f"peak |R|={peak:.5g} at v={x[i]:g}" if i is not None else "no limit point"
        checks.append(Check(f"9 arc limit point [mesh {mesh}]", i is not None and not rep.aborted,
                            peak, 0.0, detail))
        checks.append(Check(f"9 arc runtime [mesh {mesh}] (s)", rep.wall_time <= PLANAR_BUDGET,
                            rep.wall_time, PLANAR_BUDGET))
    ok = peaks[coarse] > peaks[fine]
    checks.append(Check("9 arc coarse-mesh peak above fine-mesh peak", bool(ok),
                        peaks[coarse] - peaks[fine], 0.0,
                        f"mesh {coarse}: {peaks[coarse]:.5g}, mesh {fine}: {peaks[fine]:.5g}"))
    return checks


def check_footing(case: str, density: int, budget: float):
    c, rep = _solve_case(case, density)
    x, r = rep.curve()
    reached = float(x[-1]) if len(x) else 0.0
    ok = not rep.aborted and np.isclose(reached, c.spec.target)
    return [
        Check(f"9 {case} completes to {c.spec.target:g} mm [{c.spec.mesh_label}]", bool(ok),
              reached, 0.0, f"max iterations {rep.max_iterations}, final resultant {r[-1] if len(r) else 0:.6g}"),
        Check(f"9 {case} runtime [{c.spec.mesh_label}] (s)", rep.wall_time <= budget, rep.wall_time, budget),
    ]


def check_structural():
    checks = check_cook() + check_arc()
    checks += check_footing("footing2d", 30, PLANAR_BUDGET)
    checks += check_footing("footing3d", 16, SOLID_BUDGET)
    return checks


# --------------------------------------------------------------------------


def run_all(quick: bool = False):
    """Criteria that run in seconds; ``quick`` reduces the random sample sizes."""
    n = 200 if quick else 1000
    checks = []
    checks += check_tangents(n)
    checks += check_equal_eigenvalues(100)
    checks += check_small_k_limit(n)
    checks += check_element_fd()
    checks += check_patch_test()
    checks += check_rigid_rotation()
    checks += check_newton_convergence(2 if quick else 4)
    checks += check_mesh_counts()
    checks += check_uniaxial_cross(1 if quick else 4)
    checks += check_incompressible_and_fit()
    checks += check_jaumann()
    return checks
