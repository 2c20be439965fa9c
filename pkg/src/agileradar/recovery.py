"""Sparse range-Doppler recovery: basis pursuit, Lasso, support extraction, scoring.

Both solvers work on a rescaled copy of the problem (unit-norm data,
unit-norm columns) so their internal step sizes do not depend on the radar
gain or the noise level. Results are mapped back to the caller's scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import ConfigError, DegenerateProblemError, SolverError, UndefinedMetricError
from .model import Scene, grid_cell


@dataclass(frozen=True)
class RecoveryResult:
    beta_hat: np.ndarray
    support: np.ndarray
    rd_estimates: list

    @classmethod
    def from_beta(cls, beta_hat, support, M: int, N: int) -> "RecoveryResult":
        rd = []
        for s in support:
            m, n = grid_cell(s, N)
            rd.append((2 * np.pi * m / M, 2 * np.pi * n / N))
        return cls(beta_hat=beta_hat, support=np.asarray(support, dtype=int), rd_estimates=rd)


def soft_threshold(v: np.ndarray, tau: float) -> np.ndarray:
    """Complex soft thresholding: shrink magnitudes by ``tau``, keep phases."""
    mag = np.abs(v)
    scale = np.maximum(1.0 - tau / np.maximum(mag, np.finfo(float).tiny), 0.0)
    return scale * v


def _normalize(z: np.ndarray, Phi: np.ndarray):
    z = np.asarray(z, dtype=complex)
    Phi = np.asarray(Phi, dtype=complex)
    if Phi.ndim != 2 or Phi.shape[0] < 1:
        raise DegenerateProblemError("sensing matrix has no rows")
    if z.shape != (Phi.shape[0],):
        raise ConfigError(f"data length {z.shape} does not match {Phi.shape[0]} rows")
    if not np.all(np.isfinite(z)):
        raise ConfigError("non-finite observations")
    col = np.linalg.norm(Phi, axis=0)
    if np.any(col == 0):
        raise DegenerateProblemError("sensing matrix has an all-zero column")
    return z, Phi / col, np.linalg.norm(z), col


def _certified_sparse(A, y, w, tol, weights):
    """Least-squares fit on the support of ``w``, if a dual certificate proves it optimal.

    The fit is accepted when it meets the residual tolerance and the
    minimum-norm dual vector agreeing with its phases on the support stays
    strictly inside the unit ball elsewhere (Fuchs' condition), which makes it
    the unique basis pursuit solution.
    """
    T = np.flatnonzero(w)
    if not 0 < T.size <= A.shape[0]:
        return None
    AT = A[:, T]
    bT, *_ = np.linalg.lstsq(AT, y, rcond=None)
    if np.linalg.norm(AT @ bT - y) > tol or np.any(bT == 0):
        return None
    try:
        dual = AT @ np.linalg.solve(AT.conj().T @ AT, weights[T] * bT / np.abs(bT))
    except np.linalg.LinAlgError:
        return None
    corr = np.abs(A.conj().T @ dual) / weights
    corr[T] = 0.0
    if corr.max(initial=0.0) >= 1.0 - 1e-9:
        return None
    out = np.zeros(A.shape[1], dtype=complex)
    out[T] = bT
    return out


def basis_pursuit(z, Phi, tol: float = 1e-6, max_iter: int = 20000, rho: float = 20.0,
                  relax: float = 1.6, check_every: int = 20) -> np.ndarray:
    """Minimum l1-norm solution of ``Phi @ beta = z`` via ADMM.

    The x-step projects onto the affine constraint set (a Cholesky factor of
    Phi Phi^H is computed once), the w-step soft-thresholds, and the penalty
    is adapted by residual balancing. Every ``check_every`` iterations the
    current support is tested for a certified exact sparse solution, which
    ends the run early on consistent sparse data.

    Returns the sparse ADMM iterate once ``||Phi beta - z|| <= tol ||z||`` and
    the iterates have settled; raises ``SolverError`` after ``max_iter``.
    """
    z, A, scale, col = _normalize(z, Phi)
    n = A.shape[1]
    if scale == 0:
        return np.zeros(n, dtype=complex)
    y = z / scale
    # l1 weights of the rescaled variable; all ones for unit-modulus matrices
    weights = col.mean() / col
    try:
        factor = sla.cho_factor(A @ A.conj().T)
    except np.linalg.LinAlgError as exc:
        raise SolverError("sensing matrix rows are linearly dependent") from exc
    back = sla.cho_solve(factor, A).conj().T  # A^H (A A^H)^-1
    offset = back @ y

    w = np.zeros(n, dtype=complex)
    u = np.zeros(n, dtype=complex)
    residual = np.inf
    for it in range(1, max_iter + 1):
        x = w - u
        x = x - back @ (A @ x) + offset
        x_relaxed = relax * x + (1 - relax) * w
        w_old = w
        w = soft_threshold(x_relaxed + u, weights / rho)
        u = u + x_relaxed - w
        if it % check_every:
            continue
        exact = _certified_sparse(A, y, w, tol, weights)
        if exact is not None:
            return exact * scale / col
        primal = np.linalg.norm(x - w)
        dual = rho * np.linalg.norm(w - w_old)
        residual = np.linalg.norm(A @ w - y)
        if residual <= tol and dual <= 10 * tol:
            return w * scale / col
        if primal > 10 * dual:
            rho *= 2.0
            u /= 2.0
        elif dual > 10 * primal:
            rho /= 2.0
            u *= 2.0
    raise SolverError(f"basis pursuit did not converge in {max_iter} iterations "
                      f"(relative residual {residual:.3e})", residual=residual, iterations=max_iter)


def default_lambda(z, Phi, ratio: float = 0.1) -> float:
    return ratio * float(np.max(np.abs(np.asarray(Phi).conj().T @ np.asarray(z))))


def lasso_kkt_residual(beta, z, Phi, lam) -> float:
    """Largest violation of the Lasso optimality conditions, divided by ``lam``."""
    g = Phi.conj().T @ (Phi @ beta - z)
    on = beta != 0
    viol = np.zeros(beta.shape)
    viol[on] = np.abs(g[on] + lam * beta[on] / np.abs(beta[on]))
    viol[~on] = np.maximum(np.abs(g[~on]) - lam, 0.0)
    return float(viol.max(initial=0.0) / lam)


def lasso(z, Phi, lam: float | None = None, tol: float = 1e-6, max_iter: int = 50000,
          check_every: int = 10) -> np.ndarray:
    """FISTA for ``0.5 ||Phi beta - z||^2 + lam ||beta||_1``.

    Uses gradient-based adaptive restart. Stops once the optimality
    violation, relative to ``max|Phi^H z|``, drops below ``tol``. ``lam``
    defaults to a tenth of ``max|Phi^H z|``.
    """
    z, A, scale, col = _normalize(z, Phi)
    n = A.shape[1]
    if lam is None:
        lam = default_lambda(z, Phi)
    if lam <= 0:
        raise ConfigError("lambda must be positive")
    if scale == 0:
        return np.zeros(n, dtype=complex)
    y = z / scale
    # beta = x * scale / col turns the objective into 0.5||Ax - y||^2 + sum(lam_i |x_i|)
    lam_x = lam / (scale * col)
    # violations are reported in the caller's units, relative to max|Phi^H z|
    ref = np.max(col * np.abs(A.conj().T @ y))
    step = 1.0 / np.linalg.eigvalsh(A @ A.conj().T)[-1]

    x = np.zeros(n, dtype=complex)
    v = x.copy()
    t = 1.0
    gap = np.inf
    for it in range(1, max_iter + 1):
        grad = A.conj().T @ (A @ v - y)
        x_new = soft_threshold(v - step * grad, step * lam_x)
        if np.real(np.vdot(v - x_new, x_new - x)) > 0:
            t = 1.0  # restart momentum
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        v = x_new + ((t - 1) / t_new) * (x_new - x)
        x, t = x_new, t_new
        if it % check_every:
            continue
        g = A.conj().T @ (A @ x - y)
        on = x != 0
        viol = np.maximum(np.abs(g) - lam_x, 0.0)
        viol[on] = np.abs(g[on] + lam_x[on] * x[on] / np.abs(x[on]))
        gap = np.max(col * viol) / ref
        if gap <= tol:
            return x * scale / col
    raise SolverError(f"lasso did not converge in {max_iter} iterations "
                      f"(relative KKT violation {gap:.3e})", residual=gap, iterations=max_iter)


def extract_support(beta_hat, S: int) -> np.ndarray:
    """Indices of the ``S`` largest magnitudes, ties going to the lower index."""
    if S < 1:
        raise ConfigError("S must be at least 1")
    mag = np.abs(np.asarray(beta_hat))
    order = np.argsort(-mag, kind="stable")
    return np.sort(order[:S])


def threshold_support(beta_hat, tau: float = 0.3) -> np.ndarray:
    """Indices with magnitude at least ``tau * max|beta_hat|`` (unknown sparsity)."""
    mag = np.abs(np.asarray(beta_hat))
    peak = mag.max(initial=0.0)
    if peak == 0:
        return np.array([], dtype=int)
    return np.flatnonzero(mag >= tau * peak)


def hit_count(support, scene: Scene, N: int) -> int:
    return len(set(np.asarray(support).tolist()) & set(scene.flat_indices(N).tolist()))


def hit_rate(support, scene: Scene, N: int) -> float:
    """Fraction of true grid cells present in the recovered support."""
    if len(scene) == 0:
        raise UndefinedMetricError("hit rate of an empty scene")
    return hit_count(support, scene, N) / len(scene)
