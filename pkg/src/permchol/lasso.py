"""Coordinate-descent Lasso with the exact ||y - Za||_2^2 + lam*||a||_1 scaling.

No 1/n or 1/2 prefactor: the soft-threshold update for coordinate j is

    a_j <- S(z_j' r_j, lam/2) / (z_j' z_j)

with r_j the partial residual.  The solver works on the Gram system
(Z'Z, Z'y), which gives the same iterates as the residual form and keeps
the hot loop small enough to JIT.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConvergenceError
from .mcd import VARIANCE_FLOOR

DEFAULT_TOL = 1e-7
DEFAULT_MAX_SWEEPS = 10_000


@dataclass(frozen=True)
class LassoFit:
    coef: np.ndarray
    lam: float
    objective: float
    iterations: int


@dataclass(frozen=True)
class CvConfig:
    """Cross-validation policy for per-regression tuning.

    The grid is 20 logarithmically spaced values in
    [min_ratio * lam_max, lam_max] with lam_max = 2 max_j |z_j'y|, so
    tuning is scale-aware.
    """

    n_lambdas: int = 20
    min_ratio: float = 1e-3
    folds: int = 5
    seed: int = 0


@njit(cache=True, nogil=True)
def _cd_sweeps(gram, zty, lam_half, coef, tol, max_sweeps):
    """Cyclic coordinate descent on the Gram system; mutates coef in place.

    Returns (sweeps_done, last_max_change, converged).  Columns with zero
    norm keep coefficient 0.  The dot products are hand-rolled: BLAS call
    overhead dominates at these sizes.
    """
    q = coef.shape[0]
    max_change = 0.0
    for s in range(max_sweeps):
        max_change = 0.0
        for j in range(q):
            gjj = gram[j, j]
            if gjj <= 0.0:
                continue
            acc = 0.0
            for k in range(q):
                acc += gram[j, k] * coef[k]
            cj = zty[j] - acc + gjj * coef[j]
            if cj > lam_half:
                new = (cj - lam_half) / gjj
            elif cj < -lam_half:
                new = (cj + lam_half) / gjj
            else:
                new = 0.0
            change = abs(new - coef[j])
            if change > max_change:
                max_change = change
            coef[j] = new
        if max_change < tol:
            return s + 1, max_change, True
    return max_sweeps, max_change, False


@njit(cache=True, nogil=True)
def _cv_path_sse(gram, zty, z_test, y_test, lams_desc, tol, max_sweeps):
    """Warm-started solve along a descending lambda path for one CV fold.

    Returns (sse per lambda on the held-out rows, converged flags).
    """
    n_lam = lams_desc.shape[0]
    q = gram.shape[0]
    coef = np.zeros(q)
    sse = np.empty(n_lam)
    ok = np.empty(n_lam, dtype=np.bool_)
    for l in range(n_lam):
        _, _, conv = _cd_sweeps(gram, zty, lams_desc[l] / 2.0, coef, tol, max_sweeps)
        ok[l] = conv
        acc = 0.0
        for i in range(y_test.shape[0]):
            pred = 0.0
            for k in range(q):
                pred += z_test[i, k] * coef[k]
            r = y_test[i] - pred
            acc += r * r
        sse[l] = acc
    return sse, ok


def lasso_objective(z: np.ndarray, y: np.ndarray, coef: np.ndarray, lam: float) -> float:
    """||y - Z coef||_2^2 + lam * ||coef||_1."""
    r = y - z @ coef
    return float(r @ r + lam * np.sum(np.abs(coef)))


def lambda_max(z: np.ndarray, y: np.ndarray) -> float:
    """Smallest lambda at which the all-zero vector is optimal: 2 max|z_j'y|."""
    return float(2.0 * np.max(np.abs(z.T @ y)))


def default_lambda_grid(
    z: np.ndarray,
    y: np.ndarray,
    n_lambdas: int = 20,
    min_ratio: float = 1e-3,
) -> np.ndarray:
    """Log-spaced grid in [min_ratio * lam_max, lam_max]; {0} if lam_max is 0."""
    lmax = lambda_max(z, y)
    if lmax <= 0.0:
        return np.array([0.0])
    return np.geomspace(min_ratio * lmax, lmax, n_lambdas)


def _validate_problem(z, y, lam):
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    if z.ndim != 2:
        raise ValueError(f"Z must be 2-d, got ndim={z.ndim}")
    if y.ndim != 1 or y.shape[0] != z.shape[0]:
        raise ValueError(f"y must be length {z.shape[0]}, got shape {y.shape}")
    if z.shape[0] < 1 or z.shape[1] < 1:
        raise ValueError("Z must have at least one row and one column")
    if not (np.isfinite(lam) and lam >= 0.0):
        raise ValueError(f"lambda must be finite and >= 0, got {lam}")
    if not (np.all(np.isfinite(z)) and np.all(np.isfinite(y))):
        raise ValueError("Z and y must be finite")
    return z, y


def _kkt_violation(gram, zty, coef, lam) -> float:
    """Worst violation of the stationarity conditions: |2 z_j'r| <= lam at
    zero coefficients, 2 z_j'r = lam * sign(a_j) at nonzero ones."""
    g = 2.0 * (zty - gram @ coef)
    worst = 0.0
    for j in range(coef.shape[0]):
        if coef[j] == 0.0:
            worst = max(worst, abs(g[j]) - lam)
        else:
            worst = max(worst, abs(g[j] - lam * np.sign(coef[j])))
    return worst


def lasso_fit(
    z: np.ndarray,
    y: np.ndarray,
    lam: float,
    coef0: np.ndarray | None = None,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> LassoFit:
    """Minimize ||y - Za||_2^2 + lam*||a||_1 by cyclic coordinate descent.

    Sweeps stop when the largest coefficient change drops below ``tol``,
    then continue at tighter tolerances until the subgradient conditions
    hold to 1e-6 relative to the problem's gradient scale.  Raises
    ConvergenceError (carrying the last iterate) after ``max_sweeps``
    sweeps without convergence.
    """
    z, y = _validate_problem(z, y, lam)
    gram = np.ascontiguousarray(z.T @ z)
    zty = z.T @ y
    coef = np.zeros(z.shape[1]) if coef0 is None else np.array(coef0, dtype=float)
    if coef.shape != (z.shape[1],):
        raise ValueError(f"coef0 must have length {z.shape[1]}")

    kkt_tol = 1e-6 * max(1.0, lam, 2.0 * float(np.abs(zty).max()))
    budget = max_sweeps
    sweeps = 0
    cur_tol = tol
    converged = False
    while budget > 0:
        done, _, ok = _cd_sweeps(gram, zty, lam / 2.0, coef, cur_tol, budget)
        sweeps += done
        budget -= done
        if not ok:
            break
        if _kkt_violation(gram, zty, coef, lam) <= kkt_tol:
            converged = True
            break
        cur_tol /= 10.0

    fit = LassoFit(
        coef=coef,
        lam=float(lam),
        objective=lasso_objective(z, y, coef, lam),
        iterations=int(sweeps),
    )
    if not converged:
        raise ConvergenceError(
            f"coordinate descent did not converge in {max_sweeps} sweeps", fit=fit
        )
    return fit


def cv_select_lambda(
    z: np.ndarray,
    y: np.ndarray,
    grid: np.ndarray | None = None,
    folds: int = 5,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> float:
    """Pick the grid lambda minimizing mean out-of-fold squared prediction error.

    Fold assignment is derived deterministically from ``seed``; ties are
    broken toward the larger lambda (sparser model).  The grid defaults to
    ``default_lambda_grid(z, y)``.

    A lambda whose fold fits exhaust the sweep budget cannot be assessed
    and is disqualified from selection; raises ConvergenceError only when
    no grid value converges in every fold.
    """
    z, y = _validate_problem(z, y, 0.0)
    n = z.shape[0]
    if folds < 2:
        raise ValueError(f"folds must be >= 2, got {folds}")
    if folds > n:
        raise ValueError(f"folds={folds} exceeds n={n}")
    if grid is None:
        grid = default_lambda_grid(z, y)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("lambda grid must be non-empty")
    if np.any(grid < 0.0) or not np.all(np.isfinite(grid)):
        raise ValueError("lambda grid must be finite and >= 0")
    lams_desc = np.unique(grid)[::-1].copy()

    rng = np.random.default_rng(seed)
    shuffled = rng.permutation(n)
    fold_of = np.empty(n, dtype=np.intp)
    fold_of[shuffled] = np.arange(n) % folds

    total_sse = np.zeros(lams_desc.shape[0])
    usable = np.ones(lams_desc.shape[0], dtype=bool)
    for k in range(folds):
        test = fold_of == k
        z_tr, y_tr = z[~test], y[~test]
        gram = np.ascontiguousarray(z_tr.T @ z_tr)
        zty = z_tr.T @ y_tr
        sse, ok = _cv_path_sse(
            gram, zty, np.ascontiguousarray(z[test]), y[test], lams_desc, tol, max_sweeps
        )
        usable &= ok
        total_sse += sse
    if not np.any(usable):
        raise ConvergenceError(
            f"no lambda in the grid converged within {max_sweeps} sweeps in every fold"
        )
    total_sse[~usable] = np.inf
    # descending order, so the first argmin is the largest lambda among ties
    return float(lams_desc[int(np.argmin(total_sse))])


def residual_variance(
    y: np.ndarray,
    z: np.ndarray | None = None,
    coef: np.ndarray | None = None,
) -> float:
    """Sample variance (denominator n) of y - Z coef, floored at the
    variance floor.  Empty Z handles the first-in-order variable."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("y must be a non-empty vector")
    if z is None or np.size(z) == 0:
        r = y
    else:
        z = np.asarray(z, dtype=float)
        coef = np.asarray(coef, dtype=float)
        if z.shape != (y.shape[0], coef.shape[0]):
            raise ValueError(
                f"Z shape {z.shape} incompatible with y ({y.shape[0]}) and coef ({coef.shape[0]})"
            )
        r = y - z @ coef
    v = float(np.mean((r - r.mean()) ** 2))
    return max(v, VARIANCE_FLOOR)
