"""
Cascade Lifecycle: Numerical Kernel
Shared numerical routines used by the detector, the network measures and the
causality / forecasting stage.

    - ols              least squares through a QR factorization
    - f_sf             upper tail of the F distribution (regularized incomplete beta)
    - poisson_nll      Poisson negative log-likelihood with Gamma-extended factorial
    - nelder_mead      simplex minimizer (reflection 1, expansion 2, contraction 0.5, shrink 0.5)
    - power_iteration  dominant eigenvalue of a symmetric matrix
    - moving_mean      trailing mean over the previous w samples
    - dense_solve      guarded dense linear solve

All functions are pure and reentrant.
"""

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
import pandas as pd
from scipy import linalg, optimize, special

from exceptions import CollinearityError, ConvergenceError

# ==========================================
# 1. TOLERANCES
# ==========================================
RANK_TOL = 1e-10            # |R_kk| relative to max |R_kk| below this => rank deficient
NM_TOL = 1e-8
NM_MAX_ITER = 500
POWER_TOL = 1e-10
POWER_MAX_ITER = 50000
MAX_CONDITION = 1e12


# ==========================================
# 2. LEAST SQUARES
# ==========================================
@dataclass(frozen=True)
class LeastSquaresFit:
    coefficients: np.ndarray
    rss: float
    n_obs: int
    n_params: int
    residuals: np.ndarray

    def predict(self, design):
        return np.asarray(design, dtype=float) @ self.coefficients


def ols(design, target):
    """
    Ordinary least squares via an economic QR factorization.

    Raises CollinearityError when the design is rank deficient (including a
    constant regressor next to the intercept column).
    """
    X = np.asarray(design, dtype=float)
    y = np.asarray(target, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError(f"design {X.shape} and target {y.shape} do not conform")
    n_obs, n_params = X.shape
    if n_obs < n_params:
        raise ValueError(f"{n_obs} rows cannot identify {n_params} coefficients")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("design and target must be finite")

    Q, R = linalg.qr(X, mode="economic")
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag.min() <= RANK_TOL * max(diag.max(), 1.0):
        raise CollinearityError(f"design matrix is rank deficient ({n_obs}x{n_params})")

    coefficients = linalg.solve_triangular(R, Q.T @ y)
    residuals = y - X @ coefficients
    rss = float(residuals @ residuals)
    return LeastSquaresFit(coefficients, rss, n_obs, n_params, residuals)


# ==========================================
# 3. DISTRIBUTIONS
# ==========================================
def f_sf(x, d1, d2):
    """P(F > x) for F ~ F(d1, d2), as I_{d2/(d2 + d1 x)}(d2/2, d1/2)."""
    if d1 < 1 or d2 < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if x <= 0:
        return 1.0
    if np.isinf(x):
        return 0.0
    z = d2 / (d2 + d1 * x)
    return float(np.clip(special.betainc(d2 / 2.0, d1 / 2.0, z), 0.0, 1.0))


def poisson_nll(beta, values):
    """-log L(beta) for a Poisson density, x! extended as Gamma(x + 1)."""
    beta = float(np.atleast_1d(beta)[0])
    if not beta > 0:
        return np.inf
    x = np.asarray(values, dtype=float)
    return float(np.sum(beta - x * np.log(beta) + special.gammaln(x + 1.0)))


# ==========================================
# 4. OPTIMIZATION
# ==========================================
class MinimizeResult(NamedTuple):
    x: np.ndarray
    fun: float
    converged: bool
    n_iter: int


def nelder_mead(objective: Callable, start, tol=NM_TOL, max_iter=NM_MAX_ITER):
    """
    Nelder-Mead simplex search. Converged when both the simplex spread and the
    spread of objective values fall below `tol`; otherwise the best vertex is
    returned with converged=False.
    """
    x0 = np.atleast_1d(np.asarray(start, dtype=float))
    f0 = objective(x0)
    if not np.isfinite(f0):
        raise ValueError("objective is not finite at the start point")

    res = optimize.minimize(
        objective, x0, method="Nelder-Mead",
        options={"xatol": tol, "fatol": tol, "maxiter": max_iter,
                 "maxfev": 4 * max_iter, "adaptive": False},
    )
    x, fun = np.atleast_1d(res.x), float(res.fun)
    if not fun <= f0:
        x, fun = x0, float(f0)
    return MinimizeResult(x, fun, bool(res.success), int(res.nit))


# ==========================================
# 5. LINEAR ALGEBRA
# ==========================================
def power_iteration(matrix, tol=POWER_TOL, max_iter=POWER_MAX_ITER):
    """
    Largest eigenvalue of a symmetric matrix.

    Iterates on A + cI with c the Gershgorin radius so the shifted spectrum is
    nonnegative and the largest eigenvalue is also the dominant one (bipartite
    adjacencies have -lambda_max in their spectrum). Stops when
    ||Av - lambda v|| < tol ||v|| with lambda the Rayleigh quotient of A.
    """
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ValueError("power iteration needs a nonempty square matrix")
    if not np.allclose(A, A.T):
        raise ValueError("power iteration expects a symmetric matrix")

    shift = float(np.max(np.sum(np.abs(A), axis=1)))
    if shift == 0.0:
        return 0.0
    B = A + shift * np.eye(A.shape[0])

    v = np.ones(A.shape[0]) / np.sqrt(A.shape[0])
    lam = float(v @ A @ v)
    for _ in range(max_iter):
        w = B @ v
        v = w / np.linalg.norm(w)
        Av = A @ v
        lam = float(v @ Av)
        if np.linalg.norm(Av - lam * v) < tol:
            return lam
    raise ConvergenceError(f"power iteration did not converge in {max_iter} steps", last=lam)


def dense_solve(matrix, rhs):
    A = np.asarray(matrix, dtype=float)
    if np.linalg.cond(A) > MAX_CONDITION:
        raise np.linalg.LinAlgError("system is singular or ill-conditioned")
    return linalg.solve(A, np.asarray(rhs, dtype=float))


# ==========================================
# 6. SMOOTHING
# ==========================================
def moving_mean(values, window):
    """Mean of the previous `window` samples, current sample excluded (NaN at index 0)."""
    if window < 1:
        raise ValueError("window must be >= 1")
    s = pd.Series(np.asarray(values, dtype=float))
    return s.shift(1).rolling(window, min_periods=1).mean().to_numpy()
