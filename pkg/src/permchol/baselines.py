"""Comparison estimators sharing the MCD core.

- naive ensemble average of per-order precision estimates (AVE),
- single-order MCD with the order picked by forward BIC selection,
- sample covariance and its diagonal-only precision.
"""

from __future__ import annotations

import numpy as np

from .ensemble import back_transform, draw_orders, fit_single_order
from .lasso import CvConfig
from .mcd import (
    VARIANCE_FLOOR,
    Method,
    Permutation,
    PrecisionEstimate,
    precision_from_factors,
)

_RIDGE = 1e-6


def estimate_ave(
    x: np.ndarray,
    m: int,
    seed: int,
    tuning: CvConfig | None = None,
    orders: tuple[Permutation, ...] | None = None,
) -> PrecisionEstimate:
    """Average the per-order precision estimates themselves:
    Omega_bar = (1/M) sum_k Omega_hat_k.

    Uses the same seeded permutation stream as the ensemble estimators so
    the two are compared on identical orders.
    """
    x = np.asarray(x, dtype=float)
    if orders is None:
        orders = draw_orders(x.shape[1], m, seed)
    else:
        orders = tuple(orders)
        if len(orders) != m:
            raise ValueError(f"expected {m} orders, got {len(orders)}")
    p = x.shape[1]
    om_sum = np.zeros((p, p))
    for pi in orders:
        pair = back_transform(fit_single_order(x, pi, tuning), pi)
        om_sum += precision_from_factors(pair.t, pair.d)
    return PrecisionEstimate(omega=om_sum / m, method=Method.AVE, m=m, seed=seed)


def _ls_fit(z: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Least squares with ridge-stabilized normal equations when the
    predictor count reaches n; returns (coef, rss)."""
    n, q = z.shape
    if q >= n:
        gram = z.T @ z + _RIDGE * np.eye(q)
        coef = np.linalg.solve(gram, z.T @ y)
    else:
        coef, *_ = np.linalg.lstsq(z, y, rcond=None)
    r = y - z @ coef
    return coef, float(r @ r)


def _regression_bic(z: np.ndarray, y: np.ndarray) -> float:
    n = y.shape[0]
    coef, rss = _ls_fit(z, y)
    k = int(np.count_nonzero(coef))
    return n * np.log(max(rss / n, VARIANCE_FLOOR)) + k * np.log(n)


def bic_order_select(x: np.ndarray) -> Permutation:
    """Pick a variable order by forward BIC selection, filling positions
    from the end: at each step the candidate with the smallest regression
    BIC against the remaining candidates takes the latest open slot.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"x must be 2-d, got ndim={x.ndim}")
    n, p = x.shape
    if n <= 2:
        raise ValueError(f"need n > 2 observations, got {n}")
    if p < 1:
        raise ValueError("need at least one variable")

    remaining = list(range(p))
    order = np.empty(p, dtype=np.intp)
    for pos in range(p - 1, 0, -1):
        bics = np.empty(len(remaining))
        for i, j in enumerate(remaining):
            others = [k for k in remaining if k != j]
            bics[i] = _regression_bic(x[:, others], x[:, j])
        chosen = remaining[int(np.argmin(bics))]
        order[pos] = chosen
        remaining.remove(chosen)
    order[0] = remaining[0]
    return Permutation(order)


def estimate_bic_order(x: np.ndarray, tuning: CvConfig | None = None) -> PrecisionEstimate:
    """Single-order MCD estimate under the BIC-selected order."""
    x = np.asarray(x, dtype=float)
    pi = bic_order_select(x)
    pair = back_transform(fit_single_order(x, pi, tuning), pi)
    return PrecisionEstimate(
        omega=precision_from_factors(pair.t, pair.d), method=Method.BIC_ORDER
    )


def sample_covariance(x: np.ndarray) -> np.ndarray:
    """S = (1/n) X'X on centered data (no internal centering)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError(f"x must be a non-empty n x p matrix, got {x.shape}")
    s = x.T @ x / x.shape[0]
    return (s + s.T) / 2.0


def diagonal_precision(s: np.ndarray) -> PrecisionEstimate:
    """diag(1 / S_jj) with the diagonal floored at the variance floor."""
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"S must be square, got shape {s.shape}")
    d = np.maximum(np.diag(s), VARIANCE_FLOOR)
    return PrecisionEstimate(omega=np.diag(1.0 / d), method=Method.DIAGONAL)
