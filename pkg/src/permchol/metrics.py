"""Accuracy and sparsity-recovery losses for precision matrix estimates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

DEFAULT_ZERO_TOL = 1e-8


@dataclass(frozen=True)
class LossReport:
    """Losses of one estimate against a reference precision matrix.

    delta1: Kullback-Leibler loss (1/p)(tr(Om^-1 Oh) - log|Om^-1 Oh| - p)
    delta2: entropy loss, same form with the roles swapped; None when the
            estimate is singular
    delta3: quadratic loss (1/p) [tr(Om^-1 Oh - I)]^2
    mae / mse: entrywise absolute / squared error summed, divided by p
    fp_count: true-nonzero entries estimated as zero
    fn_count: true-zero entries estimated as nonzero
    fsl_percent: 100 (fp + fn) / p^2
    """

    delta1: float
    delta2: float | None
    delta3: float
    mae: float
    mse: float
    fp_count: int
    fn_count: int
    fsl_percent: float


def _chol_logdet(a: np.ndarray):
    """(cholesky factor, log-determinant) or (None, None) if not PD."""
    try:
        c = sla.cholesky(a, lower=True)
    except sla.LinAlgError:
        return None, None
    return c, 2.0 * float(np.sum(np.log(np.diag(c))))


def loss_report(omega_hat, omega_true: np.ndarray, zero_tol: float = DEFAULT_ZERO_TOL) -> LossReport:
    """Compute all losses of ``omega_hat`` against the true ``omega_true``.

    The truth must be positive definite.  "Zero" means |entry| <= zero_tol
    for the estimate and exactly 0 for the truth.
    """
    from .mcd import PrecisionEstimate

    oh = omega_hat.omega if isinstance(omega_hat, PrecisionEstimate) else np.asarray(omega_hat, dtype=float)
    om = np.asarray(omega_true, dtype=float)
    if oh.shape != om.shape or oh.ndim != 2 or oh.shape[0] != oh.shape[1]:
        raise ValueError(f"shape mismatch: estimate {oh.shape} vs truth {om.shape}")
    if not np.allclose(oh, oh.T) or not np.allclose(om, om.T):
        raise ValueError("both matrices must be symmetric")
    p = om.shape[0]

    c_true, logdet_true = _chol_logdet(om)
    if c_true is None:
        raise ValueError("omega_true must be positive definite")
    c_hat, logdet_hat = _chol_logdet(oh)

    # tr(Om^-1 Oh) via triangular solves against the truth's factor
    a = sla.cho_solve((c_true, True), oh)
    tr_a = float(np.trace(a))
    if c_hat is None:
        delta1 = float("inf")  # log|Oh| = -inf for a singular estimate
        delta2 = None
    else:
        delta1 = (tr_a - (logdet_hat - logdet_true) - p) / p
        b = sla.cho_solve((c_hat, True), om)
        delta2 = (float(np.trace(b)) - (logdet_true - logdet_hat) - p) / p
    delta3 = (tr_a - p) ** 2 / p

    diff = oh - om
    mae = float(np.sum(np.abs(diff))) / p
    mse = float(np.sum(diff**2)) / p

    hat_zero = np.abs(oh) <= zero_tol
    true_zero = om == 0.0
    fp = int(np.count_nonzero(~true_zero & hat_zero))
    fn = int(np.count_nonzero(true_zero & ~hat_zero))
    return LossReport(
        delta1=delta1,
        delta2=delta2,
        delta3=delta3,
        mae=mae,
        mse=mse,
        fp_count=fp,
        fn_count=fn,
        fsl_percent=100.0 * (fp + fn) / p**2,
    )
