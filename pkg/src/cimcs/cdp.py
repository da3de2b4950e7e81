"""Signal estimation on a fixed support.

With the support sigma held fixed, the stationary condition for the signal is

    R_r * G_rr = h_r,   h_r = -sum_{r' != r} G_{rr'} R_{r'} sigma_{r'} + z_r

for every r on the support, and R_r = 0 off the support.  This is the normal
system (A_sigma^T A_sigma) R_sigma = z_sigma, solved here either by Jacobi
sweeps of the fixed-point form R_r <- h_r / G_rr or by conjugate gradients on
the support-restricted system.  The support-restricted normal matrix is not
always diagonally dominant, so Jacobi carries divergence detection and CG is
the robust default.
"""

from dataclasses import dataclass

import numpy as np

from .qubo import symv

_DIVERGENCE_WINDOW = 25


@dataclass(frozen=True)
class CdpResult:
    R: np.ndarray        # (N,) estimate, exactly zero off support
    residual: float      # max-norm violation of the stationary condition
    iterations: int
    converged: bool


def eta_schedule(i, eta_init, eta_end, velo):
    """Linear threshold decay eta_i = max(eta_init * (1 - i/velo), eta_end)."""
    if not (isinstance(velo, (int, np.integer)) and velo >= 1):
        raise ValueError(f"velo must be an integer >= 1, got {velo}")
    if not eta_init >= eta_end >= 0.0:
        raise ValueError(f"need eta_init >= eta_end >= 0, got {eta_init}, {eta_end}")
    return max(eta_init * (1.0 - i / velo), eta_end)


def _prepare(problem, sigma, R0):
    sigma = np.asarray(sigma)
    if sigma.shape != (problem.n,):
        raise ValueError("sigma must be a length-N vector")
    support = np.flatnonzero(sigma)
    if R0 is None:
        R0 = np.zeros(problem.n)
    R0 = np.asarray(R0, dtype=float)
    if R0.shape != (problem.n,):
        raise ValueError("R0 must be a length-N vector")
    if support.size and np.any(problem.col_norms[support] <= 0.0):
        raise ValueError("zero column norm on the support")
    return support, R0


def solve_signal_jacobi(problem, sigma, R0=None, tol=1e-10, max_iter=1000):
    """Jacobi iteration of R_r <- sigma_r * h_r / G_rr from warm start R0.

    Aborts with converged=False if the residual grows for 25 consecutive
    sweeps (the support-restricted system can fail diagonal dominance).
    """
    support, R0 = _prepare(problem, sigma, R0)
    R = np.zeros(problem.n)
    if support.size == 0:
        return CdpResult(R=R, residual=0.0, iterations=0, converged=True)
    R[support] = R0[support]

    cn = problem.col_norms
    prev_resid, growth = np.inf, 0
    for sweep in range(max_iter + 1):
        field = symv(problem.J, R) + problem.z
        resid = float(np.max(np.abs(R[support] * cn[support] - field[support])))
        if resid <= tol:
            return CdpResult(R=R, residual=resid, iterations=sweep, converged=True)
        growth = growth + 1 if resid > prev_resid else 0
        if growth >= _DIVERGENCE_WINDOW or sweep == max_iter:
            return CdpResult(R=R, residual=resid, iterations=sweep, converged=False)
        prev_resid = resid
        R_new = np.zeros(problem.n)
        R_new[support] = field[support] / cn[support]
        R = R_new
    raise AssertionError("unreachable")


def solve_signal_cgd(problem, sigma, R0=None, tol=1e-10, max_iter=1000):
    """Conjugate gradients on the support-restricted normal system."""
    support, R0 = _prepare(problem, sigma, R0)
    R = np.zeros(problem.n)
    if support.size == 0:
        return CdpResult(R=R, residual=0.0, iterations=0, converged=True)

    k = support.size
    K = -problem.J[np.ix_(support, support)]
    K[np.arange(k), np.arange(k)] = problem.col_norms[support]
    b = problem.z[support]

    x = R0[support].copy()
    r = b - K @ x
    p = r.copy()
    rs = float(r @ r)
    iterations = 0
    resid = float(np.max(np.abs(r)))
    while resid > tol and iterations < max_iter:
        Kp = K @ p
        denom = float(p @ Kp)
        if denom <= 0.0:
            break  # numerically singular direction; return best iterate
        alpha = rs / denom
        x += alpha * p
        r -= alpha * Kp
        rs_new = float(r @ r)
        p = r + (rs_new / rs) * p
        rs = rs_new
        iterations += 1
        resid = float(np.max(np.abs(r)))
    R[support] = x
    # report the exact residual of the returned iterate
    resid = float(np.max(np.abs(K @ x - b)))
    return CdpResult(R=R, residual=resid, iterations=iterations,
                     converged=resid <= tol)
