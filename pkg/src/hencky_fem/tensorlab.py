"""Small dense tensor algebra in two and three dimensions.

Everything here works on stacks: a symmetric tensor is an ndarray of shape
``(..., n, n)`` and the leading axes are treated as a batch, so a whole mesh
worth of Gauss points goes through :func:`jacobi_eigen` in one call.

Voigt convention
----------------
Order ``11, 22, 33, 12, 23, 13`` in 3D and ``11, 22, 12`` in 2D.  Fourth-order
moduli are packed *without* engineering-shear doubling, i.e. every Voigt entry
is a genuine tensor component ``C_ijkl``.  The factor 2 on shear strains lives
in the discrete strain operator of :mod:`hencky_fem.fem`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EigenConvergenceError, InvalidDeformationError

VOIGT_PAIRS = {
    2: ((0, 0), (1, 1), (0, 1)),
    3: ((0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2)),
}

JACOBI_MAX_SWEEPS = 50
JACOBI_ROTATION_THRESHOLD = 1e-15
JACOBI_OFFDIAG_TOL = 1e-14


def voigt_size(dim: int) -> int:
    return 3 if dim == 2 else 6


def _pair_index(dim):
    pairs = VOIGT_PAIRS[dim]
    return np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])


@dataclass(frozen=True)
class Spectral:
    """Eigenvalues (descending) and orthonormal eigenvectors stored as columns."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.shape[-1]

    def reconstruct(self) -> np.ndarray:
        return self.map(lambda v: v)

    def map(self, func) -> np.ndarray:
        """Isotropic tensor function ``sum_k func(value_k) v_k (x) v_k``."""
        V = self.vectors
        return np.matmul(V * func(self.values)[..., None, :], np.swapaxes(V, -1, -2))


def jacobi_eigen(a, max_sweeps: int = JACOBI_MAX_SWEEPS) -> Spectral:
    """Spectral decomposition of symmetric 2x2 / 3x3 matrices by cyclic Jacobi sweeps.

    Parameters
    ----------
    a : array_like, shape (..., n, n)
        Symmetric matrices (only the symmetric part is used).
    max_sweeps : int
        Upper bound on cyclic sweeps before :class:`EigenConvergenceError`.

    Returns
    -------
    Spectral
        Eigenvalues sorted in descending order (ties keep their input order)
        and eigenvectors as columns; in 3D the frame is right-handed.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[-1]
    if a.shape[-2:] != (n, n) or n not in (2, 3):
        raise ValueError(f"expected (..., n, n) with n in (2, 3), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidDeformationError("non-finite entries in symmetric tensor")
    batch = a.shape[:-2]
    A = a.reshape(-1, n, n)
    A = 0.5 * (A + np.swapaxes(A, -1, -2))
    V = np.broadcast_to(np.eye(n), A.shape).copy()
    scale = np.sqrt(np.einsum("bij,bij->b", A, A))
    floor = JACOBI_ROTATION_THRESHOLD * scale
    pairs = ((0, 1),) if n == 2 else ((0, 1), (0, 2), (1, 2))

    for _ in range(max_sweeps):
        rotated = False
        for p, q in pairs:
            apq = A[:, p, q]
            # relative threshold keeps small eigenvalues accurate to working precision
            local = JACOBI_ROTATION_THRESHOLD * np.sqrt(np.abs(A[:, p, p] * A[:, q, q]))
            idx = np.nonzero(np.abs(apq) > np.maximum(local, floor * JACOBI_ROTATION_THRESHOLD))[0]
            if idx.size == 0:
                continue
            rotated = True
            Ai = A[idx]
            Vi = V[idx]
            apq = Ai[:, p, q]
            theta = (Ai[:, q, q] - Ai[:, p, p]) / (2.0 * apq)
            t = np.where(theta >= 0.0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            cc, ss = c[:, None], s[:, None]
            colp, colq = Ai[:, :, p].copy(), Ai[:, :, q].copy()
            Ai[:, :, p] = cc * colp - ss * colq
            Ai[:, :, q] = ss * colp + cc * colq
            rowp, rowq = Ai[:, p, :].copy(), Ai[:, q, :].copy()
            Ai[:, p, :] = cc * rowp - ss * rowq
            Ai[:, q, :] = ss * rowp + cc * rowq
            Ai[:, p, q] = 0.0
            Ai[:, q, p] = 0.0
            vp, vq = Vi[:, :, p].copy(), Vi[:, :, q].copy()
            Vi[:, :, p] = cc * vp - ss * vq
            Vi[:, :, q] = ss * vp + cc * vq
            A[idx] = Ai
            V[idx] = Vi
        if not rotated:
            break
    else:
        off = np.sqrt(np.sum(A[:, ~np.eye(n, dtype=bool)] ** 2, axis=-1))
        if np.any(off > JACOBI_OFFDIAG_TOL * scale):
            raise EigenConvergenceError(f"Jacobi method did not converge in {max_sweeps} sweeps")

    w = np.diagonal(A, axis1=-2, axis2=-1).copy()
    order = np.argsort(-w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    V = np.take_along_axis(V, order[:, None, :], axis=-1)
    if n == 3:
        flip = np.linalg.det(V) < 0.0
        V[flip, :, 2] *= -1.0
    return Spectral(w.reshape(batch + (n,)), V.reshape(batch + (n, n)))


def spectral_log(spec: Spectral) -> np.ndarray:
    """``log V`` from the spectral decomposition of ``B = V**2``.

    The eigenvalues of ``spec`` are squared stretches; the result is
    ``sum_k 1/2 log(lambda_k**2) n_k (x) n_k``.
    """
    if np.any(spec.values <= 0.0):
        raise InvalidDeformationError("nonpositive eigenvalue in left Cauchy-Green tensor")
    return spec.map(lambda v: 0.5 * np.log(v))


def dev(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    n = a.shape[-1]
    tr = np.trace(a, axis1=-2, axis2=-1)
    return a - (tr / n)[..., None, None] * np.eye(n)


def sym(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def sym_to_voigt(a) -> np.ndarray:
    """Tensor components of a symmetric tensor in Voigt order (no shear factor)."""
    a = np.asarray(a, dtype=float)
    i, j = _pair_index(a.shape[-1])
    return a[..., i, j]


def voigt_to_sym(v, dim: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (dim, dim))
    for I, (i, j) in enumerate(VOIGT_PAIRS[dim]):
        out[..., i, j] = v[..., I]
        out[..., j, i] = v[..., I]
    return out


def voigt_pack(c4) -> np.ndarray:
    """Full ``(..., n, n, n, n)`` minor-symmetric tensor to ``(..., nv, nv)``."""
    c4 = np.asarray(c4, dtype=float)
    i, j = _pair_index(c4.shape[-1])
    return c4[..., i[:, None], j[:, None], i[None, :], j[None, :]]


def voigt_unpack(cv, dim: int) -> np.ndarray:
    """Inverse of :func:`voigt_pack`, filling all minor-symmetric slots."""
    cv = np.asarray(cv, dtype=float)
    out = np.zeros(cv.shape[:-2] + (dim,) * 4)
    pairs = VOIGT_PAIRS[dim]
    for I, (i, j) in enumerate(pairs):
        for J, (k, l) in enumerate(pairs):
            val = cv[..., I, J]
            out[..., i, j, k, l] = val
            out[..., j, i, k, l] = val
            out[..., i, j, l, k] = val
            out[..., j, i, l, k] = val
    return out


def identity4(dim: int) -> np.ndarray:
    """Symmetric fourth-order identity ``1/2 (d_ik d_jl + d_il d_jk)``."""
    d = np.eye(dim)
    return 0.5 * (np.einsum("ik,jl->ijkl", d, d) + np.einsum("il,jk->ijkl", d, d))


def push_forward4(F, c4) -> np.ndarray:
    """``F_iA F_jB F_kC F_lD c_ABCD``."""
    return np.einsum("...ia,...jb,...kc,...ld,...abcd->...ijkl", F, F, F, F, c4, optimize=True)


def det_inv(a):
    """Determinant and inverse of stacked 2x2 / 3x3 matrices by cofactors."""
    a = np.asarray(a, dtype=float)
    n = a.shape[-1]
    if n == 2:
        det = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
        adj = np.stack([np.stack([a[..., 1, 1], -a[..., 0, 1]], -1),
                        np.stack([-a[..., 1, 0], a[..., 0, 0]], -1)], -2)
    elif n == 3:
        c0 = np.cross(a[..., 1, :], a[..., 2, :])
        c1 = np.cross(a[..., 2, :], a[..., 0, :])
        c2 = np.cross(a[..., 0, :], a[..., 1, :])
        det = np.sum(a[..., 0, :] * c0, axis=-1)
        adj = np.stack([c0, c1, c2], axis=-1)
    else:
        raise ValueError(f"det_inv supports 2x2 and 3x3 matrices, got {n}x{n}")
    with np.errstate(divide="ignore", invalid="ignore"):
        return det, adj / det[..., None, None]


def random_rotation(rng, dim: int = 3, size=None) -> np.ndarray:
    """Haar-distributed rotation(s) with det = +1."""
    shape = () if size is None else (size,) if np.isscalar(size) else tuple(size)
    g = rng.standard_normal(shape + (dim, dim))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diagonal(r, axis1=-2, axis2=-1))[..., None, :]
    det = np.linalg.det(q)
    q[..., :, 0] *= np.sign(det)[..., None]
    return q
