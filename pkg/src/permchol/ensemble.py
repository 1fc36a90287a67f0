"""Permutation-ensemble estimators for sparse precision matrices.

The pipeline: draw M random variable orders, fit a regression-based
Cholesky pair under each order with per-regression Lasso (tuning by CV),
transform each pair back to the original coordinates, and average the
factors:

    T_tilde = (1/M) sum_k T_hat_k,    D_tilde = (1/M) sum_k D_hat_k.

The ensemble estimate reconstructs T_tilde' D_tilde^{-1} T_tilde (the
"m1" estimator).  Hard-thresholding the off-diagonal of T_tilde at a
BIC-selected delta before reconstructing gives the sparse "m2" estimator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EstimationError, SingularEstimateError
from .lasso import (
    CvConfig,
    cv_select_lambda,
    default_lambda_grid,
    lasso_fit,
    residual_variance,
)
from .mcd import (
    VARIANCE_FLOOR,
    CholeskyPair,
    Method,
    Permutation,
    PrecisionEstimate,
    apply_permutation,
    precision_from_factors,
)

DEFAULT_N_QUANTILES = 50


@dataclass(frozen=True)
class EnsembleState:
    """Averaged factors across M permutations plus the orders that made them."""

    t_tilde: np.ndarray
    d_tilde: np.ndarray
    m: int
    seed: int | None
    orders: tuple[Permutation, ...]

    def __post_init__(self):
        t = np.array(self.t_tilde, dtype=float)
        d = np.array(self.d_tilde, dtype=float)
        if not np.all(np.diag(t) == 1.0):
            raise ValueError("t_tilde must have a unit diagonal")
        if not np.all(d >= VARIANCE_FLOOR):
            raise ValueError(f"d_tilde entries must be >= {VARIANCE_FLOOR}")
        t.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "t_tilde", t)
        object.__setattr__(self, "d_tilde", d)
        object.__setattr__(self, "orders", tuple(self.orders))

    @property
    def p(self) -> int:
        return self.t_tilde.shape[0]


@dataclass(frozen=True)
class ThresholdSelection:
    """BIC values over the threshold grid; NaN marks singular (skipped) deltas."""

    grid: np.ndarray
    bic_values: np.ndarray
    delta_opt: float


def draw_orders(p: int, m: int, seed: int) -> tuple[Permutation, ...]:
    """Draw m iid uniform permutations from a generator seeded with ``seed``.

    Duplicates are allowed.  This single stream is shared by the ensemble
    and the naive-average baseline so they are compared on identical orders.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    rng = np.random.default_rng(seed)
    return tuple(Permutation.random(p, rng) for _ in range(m))


def fit_single_order(
    x: np.ndarray,
    pi: Permutation,
    tuning: CvConfig | None = None,
) -> CholeskyPair:
    """Fit the Cholesky pair of centered data under one variable order.

    Permutes the columns by ``pi``, then takes the first permuted column's
    sample variance as d_1 and, for j = 2..p, Lasso-regresses the j-th
    permuted column on the first j-1 with a CV-selected lambda.  Row j of
    the returned T holds the negated coefficients; the result lives in the
    permuted coordinates.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ValueError(f"x must be an n x p matrix with p >= 1, got {x.shape}")
    if x.shape[0] < 2:
        raise ValueError(f"need n >= 2 observations, got {x.shape[0]}")
    tuning = tuning or CvConfig()

    xp = apply_permutation(x, pi)
    p = xp.shape[1]
    t = np.eye(p)
    d = np.empty(p)
    d[0] = residual_variance(xp[:, 0])
    for j in range(1, p):
        z = xp[:, :j]
        y = xp[:, j]
        lam = cv_select_lambda(
            z,
            y,
            grid=default_lambda_grid(z, y, tuning.n_lambdas, tuning.min_ratio),
            folds=tuning.folds,
            seed=tuning.seed,
        )
        fit = lasso_fit(z, y, lam)
        t[j, :j] = -fit.coef
        d[j] = residual_variance(y, z, fit.coef)
    return CholeskyPair(t=t, d=d, order=pi)


def back_transform(tp: CholeskyPair, pi: Permutation) -> CholeskyPair:
    """Transform a pair fitted in pi-coordinates back to the original order:
    T -> P T P' and the diagonal of D permuted accordingly."""
    if tp.p != pi.size:
        raise ValueError(f"pair size {tp.p} does not match permutation size {pi.size}")
    idx = pi.map
    t = np.empty_like(tp.t)
    t[np.ix_(idx, idx)] = tp.t
    d = np.empty_like(tp.d)
    d[idx] = tp.d
    return CholeskyPair(t=t, d=d, order=pi)


def ensemble_fit(
    x: np.ndarray,
    m: int,
    seed: int,
    tuning: CvConfig | None = None,
    orders: tuple[Permutation, ...] | None = None,
) -> EnsembleState:
    """Fit all M orders, back-transform, and average T and D entrywise.

    ``orders`` overrides the seeded draw (for forcing specific orders in
    tests).  The accumulation runs in a fixed k order so results are
    bit-reproducible regardless of execution environment.
    """
    x = np.asarray(x, dtype=float)
    if orders is None:
        orders = draw_orders(x.shape[1], m, seed)
    else:
        orders = tuple(orders)
        if len(orders) != m:
            raise ValueError(f"expected {m} orders, got {len(orders)}")
    p = x.shape[1]
    t_sum = np.zeros((p, p))
    d_sum = np.zeros(p)
    for pi in orders:
        pair = back_transform(fit_single_order(x, pi, tuning), pi)
        t_sum += pair.t
        d_sum += pair.d
    t_tilde = t_sum / m
    np.fill_diagonal(t_tilde, 1.0)  # average of exact ones, kept exact
    d_tilde = np.maximum(d_sum / m, VARIANCE_FLOOR)
    return EnsembleState(t_tilde=t_tilde, d_tilde=d_tilde, m=m, seed=seed, orders=orders)


def hard_threshold(t_tilde: np.ndarray, delta: float) -> np.ndarray:
    """Zero the off-diagonal entries with |t_ij| <= delta; the diagonal
    (all ones) is never thresholded."""
    if delta < 0.0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    t = np.array(t_tilde, dtype=float)
    off = ~np.eye(t.shape[0], dtype=bool)
    t[off & (np.abs(t) <= delta)] = 0.0
    return t


def bic_score(omega_delta: PrecisionEstimate | np.ndarray, s: np.ndarray, n: int) -> float:
    """BIC of a thresholded estimate against the sample covariance:

        -log|Omega| + tr(Omega S) + (log n / n) * #nonzero upper-triangle
        entries (diagonal included).

    Raises SingularEstimateError when the log-determinant does not exist.
    """
    om = omega_delta.omega if isinstance(omega_delta, PrecisionEstimate) else np.asarray(omega_delta, dtype=float)
    s = np.asarray(s, dtype=float)
    if om.shape != s.shape:
        raise ValueError(f"shape mismatch: omega {om.shape} vs S {s.shape}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    try:
        chol = np.linalg.cholesky(om)
    except np.linalg.LinAlgError as exc:
        raise SingularEstimateError("thresholded estimate is not positive definite") from exc
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    fit_term = float(np.sum(om * s))
    n_nonzero = int(np.count_nonzero(np.triu(om)))
    return -logdet + fit_term + (np.log(n) / n) * n_nonzero


def select_threshold(
    state: EnsembleState,
    s: np.ndarray,
    n: int,
    n_quantiles: int = DEFAULT_N_QUANTILES,
) -> ThresholdSelection:
    """Choose the hard threshold minimizing BIC over {0} plus quantiles of
    the nonzero off-diagonal magnitudes of T_tilde.

    Deltas whose thresholded factor yields a singular estimate are skipped
    (their BIC is recorded as NaN).  Ties go to the largest delta.
    """
    off = np.abs(state.t_tilde[~np.eye(state.p, dtype=bool)])
    off = off[off > 0.0]
    if off.size > 0:
        qs = np.quantile(off, np.linspace(0.0, 1.0, n_quantiles))
        grid = np.unique(np.concatenate(([0.0], qs)))
    else:
        grid = np.array([0.0])

    bics = np.full(grid.shape, np.nan)
    for i, delta in enumerate(grid):
        t_d = hard_threshold(state.t_tilde, delta)
        try:
            bics[i] = bic_score(
                precision_from_factors(t_d, state.d_tilde), s, n
            )
        except SingularEstimateError:
            continue
    if np.all(np.isnan(bics)):
        raise EstimationError("every threshold in the grid gave a singular estimate")
    best = np.nanmin(bics)
    delta_opt = float(grid[bics == best].max())
    return ThresholdSelection(grid=grid, bic_values=bics, delta_opt=delta_opt)


def _estimate_from_state(state: EnsembleState, delta: float, method: Method) -> PrecisionEstimate:
    om = precision_from_factors(hard_threshold(state.t_tilde, delta), state.d_tilde)
    return PrecisionEstimate(
        omega=om, method=method, m=state.m, delta=float(delta), seed=state.seed
    )


def estimate_m1(
    x: np.ndarray,
    m: int,
    seed: int,
    tuning: CvConfig | None = None,
    orders: tuple[Permutation, ...] | None = None,
) -> PrecisionEstimate:
    """Ensemble estimate with no thresholding (delta = 0)."""
    state = ensemble_fit(x, m, seed, tuning, orders)
    return _estimate_from_state(state, 0.0, Method.M1)


def estimate_m2(
    x: np.ndarray,
    m: int,
    seed: int,
    tuning: CvConfig | None = None,
    orders: tuple[Permutation, ...] | None = None,
    delta: float | None = None,
    n_quantiles: int = DEFAULT_N_QUANTILES,
) -> PrecisionEstimate:
    """Sparse ensemble estimate: BIC-selected hard threshold on T_tilde.

    ``delta`` overrides the BIC selection; forcing delta=0 reproduces the
    m1 estimate bitwise.
    """
    x = np.asarray(x, dtype=float)
    state = ensemble_fit(x, m, seed, tuning, orders)
    if delta is None:
        n = x.shape[0]
        s = x.T @ x / n  # sample covariance of centered data, denominator n
        delta = select_threshold(state, s, n, n_quantiles).delta_opt
    return _estimate_from_state(state, delta, Method.M2)
