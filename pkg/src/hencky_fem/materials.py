"""Isotropic hyperelastic energies written in principal logarithmic stretches.

Four models share one interface: given ``loglam = log(lambda_k)`` each returns
the energy, the principal Kirchhoff stresses ``tau_k = dW/dlog(lambda_k)`` and
the Hessian ``d2W/dlog(lambda_i) dlog(lambda_j)``.  The tensor-valued outputs
(Kirchhoff stress, spatial / material / mixed moduli) are assembled from
those three arrays through the spectral decomposition of ``B`` (or ``C``).

Models
------
``exp_hencky``
    ``mu/k exp(k |dev_n log U|^2) + kappa/(2 khat) exp(khat (tr log U)^2)``,
    in 3D or as the intrinsic planar model (``dim=2``, ``n=2`` everywhere).
``quad_hencky``
    ``mu |dev_n log U|^2 + kappa/2 (tr log U)^2``.
``neo_hooke``
    ``mu/2 (|F/J^(1/3)|^2 - 3) + 3/8 kappa (J^(4/3) + 2 J^(-2/3) - 3)``, 3D only.
``gent``
    ``-Jm mu/2 log(1 - (|F/J^(1/3)|^2 - 3)/Jm)`` plus the same volumetric part, 3D only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensorlab as tl
from .errors import InvalidDeformationError, LockingLimitError, ParameterError

MODELS = ("exp_hencky", "quad_hencky", "neo_hooke", "gent")
PLANAR_MODELS = ("exp_hencky", "quad_hencky")

_ALIASES = {
    "exphencky": "exp_hencky",
    "eh": "exp_hencky",
    "quadhencky": "quad_hencky",
    "hencky": "quad_hencky",
    "neohooke": "neo_hooke",
    "nhk": "neo_hooke",
    "gent": "gent",
}

# relative gap in squared stretches below which the l'Hopital limit replaces
# the divided difference
TOL_EQUAL = 1e-8


def normalize_model(name: str) -> str:
    key = str(name).strip().lower().replace("_", "").replace("-", "")
    if key in _ALIASES:
        return _ALIASES[key]
    raise ParameterError(f"unknown material model {name!r}; expected one of {MODELS}")


@dataclass(frozen=True)
class MaterialParams:
    """Material identity and constants (stresses in MPa)."""

    model: str
    mu: float
    kappa: float
    k: float = 0.0
    khat: float = 0.0
    jm: float = 0.0
    dim: int = 3

    def __post_init__(self):
        object.__setattr__(self, "model", normalize_model(self.model))
        if self.dim not in (2, 3):
            raise ParameterError(f"dim must be 2 or 3, got {self.dim}")
        if not (np.isfinite(self.mu) and self.mu > 0.0):
            raise ParameterError(f"shear modulus mu must be > 0, got {self.mu}")
        if not (np.isfinite(self.kappa) and self.kappa > 0.0):
            raise ParameterError(f"bulk modulus kappa must be > 0, got {self.kappa}")
        if self.k < 0.0 or self.khat < 0.0:
            raise ParameterError(f"k and khat must be >= 0, got k={self.k}, khat={self.khat}")
        if self.model == "gent" and not self.jm > 0.0:
            raise ParameterError(f"Gent limiting extensibility Jm must be > 0, got {self.jm}")
        if self.dim == 2 and self.model not in PLANAR_MODELS:
            raise ParameterError(f"model {self.model} is only defined in 3D")

    @classmethod
    def reference(cls, model: str, mu: float = 1.0, dim: int = 3) -> "MaterialParams":
        """Reference parameter set: kappa = 4.7 mu, k = 2, khat = 3, Jm = 5."""
        model = normalize_model(model)
        kw = dict(model=model, mu=mu, kappa=4.7 * mu, dim=dim)
        if model == "exp_hencky":
            kw.update(k=2.0, khat=3.0)
        elif model == "gent":
            kw.update(jm=5.0)
        return cls(**kw)

    def with_(self, **changes) -> "MaterialParams":
        data = dict(model=self.model, mu=self.mu, kappa=self.kappa, k=self.k,
                    khat=self.khat, jm=self.jm, dim=self.dim)
        data.update(changes)
        return MaterialParams(**data)


@dataclass(frozen=True)
class PrincipalState:
    """Principal stretches and their logarithms (batched along leading axes)."""

    loglam: np.ndarray
    loglam_bar: np.ndarray = field(repr=False)
    logJ: np.ndarray = field(repr=False)

    @classmethod
    def from_log(cls, loglam) -> "PrincipalState":
        loglam = np.asarray(loglam, dtype=float)
        if not np.all(np.isfinite(loglam)):
            raise InvalidDeformationError("non-finite logarithmic stretch")
        logJ = loglam.sum(axis=-1)
        return cls(loglam, loglam - logJ[..., None] / loglam.shape[-1], logJ)

    @classmethod
    def from_stretches(cls, lam) -> "PrincipalState":
        lam = np.asarray(lam, dtype=float)
        if np.any(lam <= 0.0):
            raise InvalidDeformationError("principal stretches must be positive")
        return cls.from_log(np.log(lam))

    @property
    def dim(self) -> int:
        return self.loglam.shape[-1]

    @property
    def lam(self) -> np.ndarray:
        return np.exp(self.loglam)

    @property
    def J(self) -> np.ndarray:
        return np.exp(self.logJ)


@dataclass(frozen=True)
class PrincipalStresses:
    tau: np.ndarray
    s1: np.ndarray
    s2: np.ndarray


@dataclass(frozen=True)
class StressAndTangent:
    """Kirchhoff stress, spatial modulus (Voigt) and energy density."""

    tau_tensor: np.ndarray
    c_spatial: np.ndarray
    energy: np.ndarray


# --------------------------------------------------------------------------
# scalar energies


def _check_dim(p: MaterialParams, n: int):
    if n != p.dim:
        raise ParameterError(f"state has {n} principal stretches but material dim={p.dim}")


def _hencky(p, s, k, khat, order):
    n = s.dim
    lb, theta = s.loglam_bar, s.logJ
    x = np.sum(lb * lb, axis=-1)
    e_iso = np.exp(k * x)
    e_vol = np.exp(khat * theta * theta)
    W = (p.mu / k * e_iso if k > 0.0 else p.mu * x) + (
        0.5 * p.kappa / khat * e_vol if khat > 0.0 else 0.5 * p.kappa * theta * theta
    )
    if order == 0:
        return W, None, None
    tau = 2.0 * p.mu * e_iso[..., None] * lb + (p.kappa * e_vol * theta)[..., None]
    if order == 1:
        return W, tau, None
    eye = np.eye(n)
    d2 = 2.0 * p.mu * e_iso[..., None, None] * (
        2.0 * k * lb[..., :, None] * lb[..., None, :] + eye - 1.0 / n
    ) + (p.kappa * e_vol * (2.0 * khat * theta * theta + 1.0))[..., None, None]
    return W, tau, d2


def _isochoric_invariant(s):
    """``I = sum lbar_k^2`` with first and second log-stretch derivatives."""
    n = s.dim
    lb2 = np.exp(2.0 * s.loglam_bar)
    I = lb2.sum(axis=-1)
    dI = 2.0 * (lb2 - I[..., None] / n)
    eye = np.eye(n)
    d2I = 4.0 * lb2[..., :, None] * (eye - 1.0 / n) - (4.0 / n) * (
        lb2[..., None, :] - I[..., None, None] / n
    )
    return I, dI, d2I


def _volumetric_rubber(p, theta):
    """``3/8 kappa (J^(4/3) + 2 J^(-2/3) - 3)`` and its derivatives in log J."""
    a = np.exp(4.0 * theta / 3.0)
    b = np.exp(-2.0 * theta / 3.0)
    U = 0.375 * p.kappa * (a + 2.0 * b - 3.0)
    dU = 0.5 * p.kappa * (a - b)
    d2U = 0.5 * p.kappa * (4.0 * a + 2.0 * b) / 3.0
    return U, dU, d2U


def _rubber(p, s, order):
    I, dI, d2I = _isochoric_invariant(s)
    if p.model == "neo_hooke":
        W_iso = 0.5 * p.mu * (I - 3.0)
        g = np.full_like(I, 0.5 * p.mu)
        dg = np.zeros_like(I)
    else:
        D = 1.0 - (I - 3.0) / p.jm
        if np.any(D <= 0.0):
            raise LockingLimitError(
                f"Gent locking limit reached: max(I1bar - 3) = {np.max(I - 3.0):.6g} >= Jm = {p.jm}"
            )
        W_iso = -0.5 * p.jm * p.mu * np.log(D)
        g = 0.5 * p.mu / D
        dg = 0.5 * p.mu / (p.jm * D * D)
    U, dU, d2U = _volumetric_rubber(p, s.logJ)
    W = W_iso + U
    if order == 0:
        return W, None, None
    tau = g[..., None] * dI + dU[..., None]
    if order == 1:
        return W, tau, None
    d2 = (
        dg[..., None, None] * dI[..., :, None] * dI[..., None, :]
        + g[..., None, None] * d2I
        + d2U[..., None, None]
    )
    return W, tau, d2


def derivatives(p: MaterialParams, s: PrincipalState, order: int = 2):
    """Energy, principal Kirchhoff stresses and log-stretch Hessian.

    Entries beyond ``order`` are returned as ``None``.
    """
    _check_dim(p, s.dim)
    if p.model == "exp_hencky":
        return _hencky(p, s, p.k, p.khat, order)
    if p.model == "quad_hencky":
        return _hencky(p, s, 0.0, 0.0, order)
    return _rubber(p, s, order)


def energy(p: MaterialParams, s: PrincipalState) -> np.ndarray:
    return derivatives(p, s, order=0)[0]


def principal_tau(p: MaterialParams, s: PrincipalState) -> PrincipalStresses:
    tau = derivatives(p, s, order=1)[1]
    lam = s.lam
    return PrincipalStresses(tau=tau, s1=tau / lam, s2=tau / (lam * lam))


def d2W(p: MaterialParams, s: PrincipalState) -> np.ndarray:
    return derivatives(p, s, order=2)[2]


# --------------------------------------------------------------------------
# divided-difference factor


def chi_matrix(lam2, tau, d2, tol: float = TOL_EQUAL) -> np.ndarray:
    """Pairwise ``chi_kl = (tau_k lam_l^2 - tau_l lam_k^2) / (lam_k^2 - lam_l^2)``.

    Pairs whose squared stretches agree to ``tol`` (relative) use the limit
    ``1/2 (d2W_kk - d2W_kl) - tau_l``, symmetrized over ``k <-> l`` so the
    result stays symmetric.  The diagonal is zero.
    """
    lk = lam2[..., :, None]
    ll = lam2[..., None, :]
    tk = tau[..., :, None]
    tl_ = tau[..., None, :]
    gap = lk - ll
    close = np.abs(gap) <= tol * np.maximum(lk, ll)
    safe = np.where(close, 1.0, gap)
    divided = (tk * ll - tl_ * lk) / safe
    diag = np.diagonal(d2, axis1=-2, axis2=-1)
    limit_kl = 0.5 * (diag[..., :, None] - d2) - tl_
    limit = 0.5 * (limit_kl + np.swapaxes(limit_kl, -1, -2))
    out = np.where(close, limit, divided)
    n = lam2.shape[-1]
    out[..., np.arange(n), np.arange(n)] = 0.0
    return out


def chi(p: MaterialParams, s: PrincipalState, k: int, l: int, tol: float = TOL_EQUAL):
    """Divided-difference factor for one pair ``k != l``."""
    if k == l:
        raise ValueError("chi is defined for k != l only")
    _, tau, d2 = derivatives(p, s)
    return chi_matrix(np.exp(2.0 * s.loglam), tau, d2, tol)[..., k, l]


def chi_limit(p: MaterialParams, s: PrincipalState, k: int, l: int):
    """Equal-eigenvalue limit for the pair, evaluated with ``log lam_l := log lam_k``."""
    loglam = np.array(s.loglam, dtype=float, copy=True)
    loglam[..., l] = loglam[..., k]
    _, tau, d2 = derivatives(p, PrincipalState.from_log(loglam))
    return 0.5 * (d2[..., k, k] - d2[..., k, l]) - tau[..., l]


# --------------------------------------------------------------------------
# tensor assembly


def _dyads(vectors):
    """Voigt rows of ``v_k (x) v_k`` and of ``sym(v_k (x) v_l)`` for k < l."""
    n = vectors.shape[-1]
    i, j = tl._pair_index(n)
    vi = vectors[..., i, :]
    vj = vectors[..., j, :]
    diag = np.swapaxes(vi * vj, -1, -2)  # (..., k, I)
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    offd = np.stack(
        [0.5 * (vi[..., a] * vj[..., b] + vi[..., b] * vj[..., a]) for a, b in pairs], axis=-2
    )
    return diag, offd, pairs


def _spectral_modulus(vectors, A, pair_factor):
    """``sum_kl A_kl m_k (x) m_l + sum_{k!=l} f_kl v_k v_l {v_k v_l + v_l v_k}`` in Voigt."""
    diag, offd, pairs = _dyads(vectors)
    diag_t = np.swapaxes(diag, -1, -2)
    c = np.matmul(diag_t, np.matmul(A, diag))
    f = np.stack([pair_factor[..., a, b] for a, b in pairs], axis=-1)
    c += 4.0 * np.matmul(np.swapaxes(offd, -1, -2), f[..., None] * offd)
    return c


def _spd_spectral(X, what):
    X = np.asarray(X, dtype=float)
    spec = tl.jacobi_eigen(X)
    if np.any(spec.values <= 0.0):
        raise InvalidDeformationError(f"{what} is not positive definite")
    return spec


def _finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise InvalidDeformationError("non-finite stress or modulus (energy overflow)")


def kirchhoff_stress(p: MaterialParams, B) -> np.ndarray:
    spec = _spd_spectral(B, "left Cauchy-Green tensor B")
    _check_dim(p, spec.dim)
    s = PrincipalState.from_log(0.5 * np.log(spec.values))
    tau = derivatives(p, s, order=1)[1]
    _finite(tau)
    return spec.map(lambda _: tau)


def spatial_tangent_and_stress(p: MaterialParams, B) -> StressAndTangent:
    """Kirchhoff stress and spatial modulus from ``B = F F^T``.

    Steps: Jacobi decomposition of ``B``; log stretches; principal Kirchhoff
    stresses; Hessian and pairwise chi factors; modulus assembled on the
    spatial eigenframe and packed to Voigt form.
    """
    spec = _spd_spectral(B, "left Cauchy-Green tensor B")
    _check_dim(p, spec.dim)
    lam2 = spec.values
    s = PrincipalState.from_log(0.5 * np.log(lam2))
    W, tau, d2 = derivatives(p, s)
    n = s.dim
    A = d2 - 2.0 * np.eye(n) * tau[..., None, :]
    c = _spectral_modulus(spec.vectors, A, chi_matrix(lam2, tau, d2))
    tau_tensor = spec.map(lambda _: tau)
    _finite(tau_tensor, c)
    return StressAndTangent(tau_tensor=tau_tensor, c_spatial=c, energy=W)


def second_pk(p: MaterialParams, C) -> np.ndarray:
    spec = _spd_spectral(C, "right Cauchy-Green tensor C")
    _check_dim(p, spec.dim)
    s = PrincipalState.from_log(0.5 * np.log(spec.values))
    tau = derivatives(p, s, order=1)[1]
    return spec.map(lambda v: tau / v)


def material_tangent(p: MaterialParams, C) -> np.ndarray:
    """Material modulus ``4 d2W/dC2`` (Voigt) on the Lagrangian eigenframe.

    The pair factor ``(S2_k - S2_l)/(lam_k^2 - lam_l^2)`` equals
    ``chi_kl / (lam_k^2 lam_l^2)``, which carries its equal-eigenvalue limit.
    """
    spec = _spd_spectral(C, "right Cauchy-Green tensor C")
    _check_dim(p, spec.dim)
    lam2 = spec.values
    s = PrincipalState.from_log(0.5 * np.log(lam2))
    _, tau, d2 = derivatives(p, s)
    n = s.dim
    scale = lam2[..., :, None] * lam2[..., None, :]
    A = (d2 - 2.0 * np.eye(n) * tau[..., None, :]) / scale
    return _spectral_modulus(spec.vectors, A, chi_matrix(lam2, tau, d2) / scale)


def _polar_frames(F):
    F = np.asarray(F, dtype=float)
    det = np.linalg.det(F)
    if np.any(det <= 0.0):
        raise InvalidDeformationError("det F <= 0")
    spec = _spd_spectral(np.einsum("...ki,...kj->...ij", F, F), "F^T F")
    lam = np.sqrt(spec.values)
    N = spec.vectors
    nvec = np.einsum("...ij,...jk->...ik", F, N) / lam[..., None, :]
    return lam, N, nvec


def first_pk(p: MaterialParams, F) -> np.ndarray:
    """``S1 = sum_k tau_k / lam_k n_k (x) N_k``."""
    lam, N, nvec = _polar_frames(F)
    _check_dim(p, lam.shape[-1])
    tau = derivatives(p, PrincipalState.from_log(np.log(lam)), order=1)[1]
    return np.einsum("...ik,...k,...jk->...ij", nvec, tau / lam, N)


def mixed_tangent(p: MaterialParams, F) -> np.ndarray:
    """Mixed modulus ``d2W/dF2`` as a full ``(..., n, n, n, n)`` array.

    Layout ``A[i, J, k, L] = dS1_iJ / dF_kL``.  Built on the dyads
    ``n_a (x) N_b`` with the coefficients of ``d2W/dlam_a dlam_b`` and the two
    pair factors ``(tau_a - tau_b)/(lam_a^2 - lam_b^2) = (chi_ab + tau_b)/lam_b^2``
    and ``(lam_b S1_a - lam_a S1_b)/(lam_a^2 - lam_b^2) = chi_ab/(lam_a lam_b)``.
    """
    lam, N, nvec = _polar_frames(F)
    n = lam.shape[-1]
    _check_dim(p, n)
    s = PrincipalState.from_log(np.log(lam))
    _, tau, d2 = derivatives(p, s)
    lam2 = lam * lam
    ch = chi_matrix(lam2, tau, d2)
    lalb = lam[..., :, None] * lam[..., None, :]
    A = d2 / lalb - np.eye(n) * (tau / lam2)[..., None, :]
    c1 = (ch + tau[..., None, :]) / lam2[..., None, :]
    c1 = 0.5 * (c1 + np.swapaxes(c1, -1, -2))
    c2 = ch / lalb
    off = 1.0 - np.eye(n)
    G = np.einsum("...ia,...jb->...abij", nvec, N)
    Gd = G[..., np.arange(n), np.arange(n), :, :]
    out = np.einsum("...ab,...aij,...bkl->...ijkl", A, Gd, Gd)
    out += np.einsum("...ab,...abij,...abkl->...ijkl", c1 * off, G, G)
    out += np.einsum("...ab,...abij,...bakl->...ijkl", c2 * off, G, G)
    return out


def jaumann_modulus(c, tau) -> np.ndarray:
    """Add ``1/2 (tau_ik d_jl + tau_jk d_il + tau_il d_jk + tau_jl d_ik)`` (Voigt in/out)."""
    tau = np.asarray(tau, dtype=float)
    n = tau.shape[-1]
    d = np.eye(n)
    shift = 0.5 * (
        np.einsum("...ik,jl->...ijkl", tau, d)
        + np.einsum("...jk,il->...ijkl", tau, d)
        + np.einsum("...il,jk->...ijkl", tau, d)
        + np.einsum("...jl,ik->...ijkl", tau, d)
    )
    return np.asarray(c, dtype=float) + tl.voigt_pack(shift)


def cauchy_from_kirchhoff(tau, J):
    J = np.asarray(J, dtype=float)
    if np.any(J <= 0.0):
        raise InvalidDeformationError("J = det F must be positive")
    return np.asarray(tau, dtype=float) / J[..., None, None]


def log_strain_measures(s: PrincipalState):
    """Isochoric and volumetric logarithmic strain measures ``(omega_iso, omega_vol)``."""
    return np.sqrt(np.sum(s.loglam_bar**2, axis=-1)), np.abs(s.logJ)


def params_from_engineering(E: float, nu: float, k: float = 0.0, coupled: bool = False,
                            model: str = "exp_hencky", dim: int = 3, khat: float = 0.0,
                            jm: float = 0.0) -> MaterialParams:
    """Shear and bulk moduli from Young's modulus and Poisson's ratio.

    With ``coupled=True`` the volumetric exponent is tied to ``khat = 3 k / 2``
    (zero lateral contraction at ``nu = 0``).
    """
    if not E > 0.0:
        raise ParameterError(f"Young's modulus must be > 0, got {E}")
    if not -1.0 < nu < 0.5:
        raise ParameterError(f"Poisson's ratio must lie in (-1, 1/2), got {nu}")
    mu = E / (2.0 * (1.0 + nu))
    kappa = E / (3.0 * (1.0 - 2.0 * nu))
    if not np.isfinite(kappa) or kappa > 1e300:
        raise ParameterError("incompressible limit: bulk modulus overflows")
    if coupled:
        khat = 1.5 * k
    return MaterialParams(model=model, mu=mu, kappa=kappa, k=k, khat=khat, jm=jm, dim=dim)


def engineering_from_params(p: MaterialParams):
    """``(E, nu)`` of the linearized response."""
    E = 9.0 * p.kappa * p.mu / (3.0 * p.kappa + p.mu)
    nu = (3.0 * p.kappa - 2.0 * p.mu) / (6.0 * p.kappa + 2.0 * p.mu)
    return E, nu
