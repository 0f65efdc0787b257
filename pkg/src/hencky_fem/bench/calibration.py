"""Incompressible uniaxial response and least-squares calibration of (mu, k)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import FitFailureError

FIT_MAX_ITER = 100


def uniaxial_incompressible_stress(mu, k, lam):
    """Nominal stress ``3 mu exp(3/2 k ln^2 lam) ln(lam) / lam`` of the incompressible limit."""
    lam = np.asarray(lam, dtype=float)
    ln = np.log(lam)
    return 3.0 * mu * np.exp(1.5 * k * ln * ln) * ln / lam


@dataclass
class FitResult:
    mu: float
    k: float
    residual: float
    iterations: int
    trace: list


def fit_uniaxial(lam, stress, tol: float = 1e-14, max_iter: int = FIT_MAX_ITER) -> FitResult:
    """Gauss-Newton fit of :func:`uniaxial_incompressible_stress` to data.

    ``mu`` starts from the linear (``k = 0``) least-squares slope and ``k``
    from zero.  Steps that increase the sum of squares are halved.

    Raises
    ------
    FitFailureError
        Rank-deficient data or no convergence within ``max_iter`` iterations.
    """
    lam = np.asarray(lam, dtype=float).ravel()
    y = np.asarray(stress, dtype=float).ravel()
    if lam.shape != y.shape or lam.size < 2:
        raise FitFailureError("need at least two (stretch, stress) pairs")
    if np.any(lam <= 0.0) or not np.all(np.isfinite(y)):
        raise FitFailureError("stretches must be positive and stresses finite")
    ln = np.log(lam)
    g = 3.0 * ln / lam
    q = 1.5 * ln * ln
    if np.count_nonzero(np.abs(ln) > 1e-12) < 2 or np.ptp(q) <= 1e-14 * max(q.max(), 1.0):
        raise FitFailureError("data are rank deficient for a two-parameter fit")
    mu = float(g @ y / (g @ g))
    k = 0.0
    trace = []

    def ssr(mu_, k_):
        r = mu_ * g * np.exp(k_ * q) - y
        return float(r @ r), r

    f, r = ssr(mu, k)
    for it in range(1, max_iter + 1):
        e = np.exp(k * q)
        J = np.column_stack([g * e, mu * g * e * q])
        if np.linalg.matrix_rank(J) < 2:
            raise FitFailureError("Jacobian became rank deficient", trace)
        step, *_ = np.linalg.lstsq(J, -r, rcond=None)
        t = 1.0
        while True:
            f_new, r_new = ssr(mu + t * step[0], k + t * step[1])
            if f_new <= f or t < 1e-10:
                break
            t *= 0.5
        mu, k = mu + t * step[0], k + t * step[1]
        trace.append((mu, k, f_new))
        converged = abs(t * step[0]) <= tol * abs(mu) + 1e-300 and abs(t * step[1]) <= tol * max(abs(k), 1.0)
        f, r = f_new, r_new
        if converged or f == 0.0:
            return FitResult(mu, k, f, it, trace)
    raise FitFailureError(f"no convergence in {max_iter} Gauss-Newton iterations", trace)
