"""Homogeneous uniaxial tension/compression at a single material point."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import materials as mat
from ..errors import HenckyFemError, NonConvergenceError, ParameterError

LATERAL_TOL = 1e-12


@dataclass
class CurveRecord:
    """One curve: abscissa, ordinate and optional extra columns."""

    abscissa: np.ndarray
    ordinate: np.ndarray
    xname: str = "x"
    yname: str = "y"
    tags: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def columns(self):
        names = [self.xname, self.yname] + list(self.extra)
        cols = [self.abscissa, self.ordinate] + [self.extra[k] for k in self.extra]
        return names, np.column_stack(cols) if len(self.abscissa) else np.zeros((0, len(names)))


def _lateral_residual(p, x, log_axial):
    """Lateral Kirchhoff stress and its derivative wrt the lateral log-stretch."""
    dim = p.dim
    loglam = np.full(dim, x)
    loglam[-1] = log_axial
    _, tau, d2 = mat.derivatives(p, mat.PrincipalState.from_log(loglam), order=2)
    # all lateral stretches move together
    slope = d2[0, :-1].sum()
    return tau[0], slope, tau


def solve_lateral(p, stretch: float, x0: float = 0.0, tol: float = LATERAL_TOL, max_iter: int = 100):
    """Lateral log-stretch with vanishing lateral nominal stress.

    Scalar Newton on ``x = log(lambda_lateral)`` with a bisection safeguard
    (the lateral stress is increasing in ``x``).  Returns ``(x, tau)``.
    """
    a = np.log(stretch)
    lo, hi = -np.inf, np.inf
    x = x0
    for _ in range(max_iter):
        try:
            g, dg, tau = _lateral_residual(p, x, a)
        except HenckyFemError:
            # Inadmissible trial (Gent locking).  The admissible set is an
            # interval around x = a (no isochoric stretch), and the lateral
            # stress blows up with the sign of x - a at its ends.
            if x < a:
                lo = max(lo, x)
            else:
                hi = min(hi, x)
            x = 0.5 * (lo + hi) if np.isfinite(lo) and np.isfinite(hi) else 0.5 * (x + a)
            continue
        s1 = g / np.exp(x)
        if abs(s1) <= tol * max(p.mu, 1.0):
            return x, tau
        if g > 0:
            hi = min(hi, x)
        else:
            lo = max(lo, x)
        step = x - g / dg if dg > 0 else np.nan
        if not (np.isfinite(step) and lo < step < hi):
            if np.isfinite(lo) and np.isfinite(hi):
                step = 0.5 * (lo + hi)
            else:
                step = x - np.sign(g) * 0.5
        x = step
    raise NonConvergenceError(f"lateral equilibrium not found at stretch {stretch}")


def material_point_uniaxial(p: mat.MaterialParams, stretches, steps: int | None = None) -> CurveRecord:
    """Nominal axial stress ``S1/mu`` versus axial stretch under uniaxial stress.

    Parameters
    ----------
    p : MaterialParams
    stretches : sequence of float, or ``(start, stop)`` together with ``steps``
        Axial stretches; each solve starts from the previous lateral stretch.

    Returns
    -------
    CurveRecord
        Points where the lateral solve fails are recorded as ``nan``.
    """
    if steps is not None:
        lo, hi = stretches
        stretches = np.linspace(lo, hi, steps + 1)
    stretches = np.asarray(stretches, dtype=float)
    if np.any(stretches <= 0.0):
        raise ParameterError("stretches must be positive")
    out = np.full(len(stretches), np.nan)
    lateral = np.full(len(stretches), np.nan)
    # march outward from lambda = 1 so every solve has a good initial guess
    order = np.argsort(np.abs(np.log(stretches)), kind="stable")
    guesses = {}
    for i in order:
        lam = stretches[i]
        side = np.sign(np.log(lam))
        x0 = guesses.get(side, 0.0)
        try:
            x, tau = solve_lateral(p, lam, x0)
        except HenckyFemError:
            continue
        guesses[side] = x
        lateral[i] = np.exp(x)
        out[i] = tau[-1] / lam / p.mu
    return CurveRecord(stretches, out, "stretch", "S1_axial_over_mu",
                       tags={"model": p.model, "dim": p.dim}, extra={"lateral_stretch": lateral})


def quad_hencky_lateral(p: mat.MaterialParams, stretch: float) -> float:
    """Closed-form lateral stretch of the quadratic model under uniaxial stress."""
    n = p.dim
    a = np.log(stretch)
    # 2 mu (x - (x (n-1) + a)/n) + kappa ((n-1) x + a) = 0
    c_x = 2 * p.mu * (1 - (n - 1) / n) + p.kappa * (n - 1)
    c_0 = -2 * p.mu * a / n + p.kappa * a
    return float(np.exp(-c_0 / c_x))
