"""Linear discriminant analysis with a pluggable precision estimator.

The classification rule scores a test vector x against each class k by

    eta_k(x) = x' Om mu_k - 0.5 mu_k' Om mu_k + log pi_k

where Om is any precision estimate of the within-class covariance.  The
estimate is built from per-class-centered residuals pooled into a single
matrix, so the ensemble estimators see centered data as they expect.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .baselines import diagonal_precision, estimate_ave, estimate_bic_order
from .ensemble import estimate_m1, estimate_m2
from .errors import SingularEstimateError
from .lasso import CvConfig
from .mcd import Method, PrecisionEstimate


@dataclass(frozen=True)
class LdaModel:
    """Trained classifier state; immutable and shareable."""

    means: np.ndarray          # K x m class means on the selected variables
    priors: np.ndarray         # K class frequencies, summing to 1
    precision: PrecisionEstimate
    selected: np.ndarray       # indices into the original p variables
    classes: np.ndarray        # class labels, sorted
    n_features_in: int

    @property
    def n_classes(self) -> int:
        return self.classes.shape[0]


def pooled_within_covariance(x: np.ndarray, labels) -> np.ndarray:
    """(1/(n-K)) sum_k sum_{i in class k} (x_i - mu_k)(x_i - mu_k)'."""
    x = np.asarray(x, dtype=float)
    labels = np.asarray(labels)
    if x.ndim != 2 or labels.shape != (x.shape[0],):
        raise ValueError("x must be n x p with one label per row")
    classes = np.unique(labels)
    n, k = x.shape[0], classes.shape[0]
    if n <= k:
        raise ValueError(f"need n > K, got n={n} K={k}")
    scatter = np.zeros((x.shape[1], x.shape[1]))
    for c in classes:
        rows = x[labels == c]
        centered = rows - rows.mean(axis=0)
        scatter += centered.T @ centered
    return scatter / (n - k)


def t_test_screen(x: np.ndarray, labels, top_m: int) -> np.ndarray:
    """Rank variables by two-sample Welch t statistics; return the indices
    of the top_m largest |t|, best first, ties broken by lower index."""
    x = np.asarray(x, dtype=float)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if classes.shape[0] != 2:
        raise ValueError(f"screening needs exactly two classes, got {classes.shape[0]}")
    if top_m < 0 or top_m > x.shape[1]:
        raise ValueError(f"top_m must be in 0..{x.shape[1]}, got {top_m}")
    a = x[labels == classes[0]]
    b = x[labels == classes[1]]
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise ValueError("each class needs at least 2 observations")
    denom = np.sqrt(a.var(axis=0, ddof=1) / a.shape[0] + b.var(axis=0, ddof=1) / b.shape[0])
    num = a.mean(axis=0) - b.mean(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.abs(num / denom)
    t[np.isnan(t)] = 0.0  # 0/0: no shift, no spread
    # stable sort on (-|t|, index)
    ranked = np.lexsort((np.arange(x.shape[1]), -t))
    return ranked[:top_m]


def _within_class_residuals(x: np.ndarray, labels, classes) -> np.ndarray:
    r = np.empty_like(x)
    for c in classes:
        mask = labels == c
        r[mask] = x[mask] - x[mask].mean(axis=0)
    return r


def lda_train(
    x: np.ndarray,
    labels,
    method: Method | str,
    m: int = 100,
    seed: int = 0,
    screen_top: int | None = None,
    tuning: CvConfig | None = None,
) -> LdaModel:
    """Fit class means, priors, and the chosen precision estimate.

    ``screen_top`` keeps only the top-ranked variables by t-test (two-class
    problems); test data must then be projected onto ``model.selected``.
    """
    x = np.asarray(x, dtype=float)
    labels = np.asarray(labels)
    if x.ndim != 2 or labels.shape != (x.shape[0],):
        raise ValueError("x must be n x p with one label per row")
    method = Method(method) if not isinstance(method, Method) else method
    classes = np.unique(labels)
    if classes.shape[0] < 2:
        raise ValueError("need at least two classes")

    if screen_top is not None:
        selected = t_test_screen(x, labels, screen_top)
        if selected.size == 0:
            raise ValueError("screening selected no variables")
    else:
        selected = np.arange(x.shape[1])
    xs = x[:, selected]

    means = np.vstack([xs[labels == c].mean(axis=0) for c in classes])
    priors = np.array([np.count_nonzero(labels == c) for c in classes], dtype=float)
    priors /= priors.sum()

    if method is Method.SAMPLE:
        pooled = pooled_within_covariance(xs, labels)
        try:
            c = sla.cholesky(pooled, lower=True)
        except sla.LinAlgError as exc:
            raise SingularEstimateError(
                "pooled within-class covariance is singular; use an MCD-based estimator"
            ) from exc
        om = sla.cho_solve((c, True), np.eye(xs.shape[1]))
        precision = PrecisionEstimate(omega=(om + om.T) / 2.0, method=Method.SAMPLE)
    elif method is Method.DIAGONAL:
        precision = diagonal_precision(pooled_within_covariance(xs, labels))
    else:
        residuals = _within_class_residuals(xs, labels, classes)
        if method is Method.M1:
            precision = estimate_m1(residuals, m, seed, tuning)
        elif method is Method.M2:
            precision = estimate_m2(residuals, m, seed, tuning)
        elif method is Method.AVE:
            precision = estimate_ave(residuals, m, seed, tuning)
        elif method is Method.BIC_ORDER:
            precision = estimate_bic_order(residuals, tuning)
        else:  # pragma: no cover
            raise ValueError(f"unsupported estimator {method}")

    return LdaModel(
        means=means,
        priors=priors,
        precision=precision,
        selected=selected,
        classes=classes,
        n_features_in=x.shape[1],
    )


def _scores(model: LdaModel, x: np.ndarray) -> np.ndarray:
    om = model.precision.omega
    om_mu = om @ model.means.T                      # m x K
    quad = 0.5 * np.sum(model.means.T * om_mu, axis=0)
    return x @ om_mu - quad + np.log(model.priors)


def lda_predict(model: LdaModel, x: np.ndarray):
    """Classify one observation (already restricted to model.selected);
    ties go to the lowest class index."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.means.shape[1],):
        raise ValueError(
            f"x must have length {model.means.shape[1]}, got shape {x.shape}"
        )
    return model.classes[int(np.argmax(_scores(model, x)))]


def lda_predict_rows(model: LdaModel, x: np.ndarray) -> np.ndarray:
    """Classify each row of a test matrix.  Full-width matrices are
    projected onto the model's selected variables."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"x must be 2-d, got ndim={x.ndim}")
    m = model.means.shape[1]
    if x.shape[1] == m:
        xs = x
    elif x.shape[1] == model.n_features_in:
        xs = x[:, model.selected]
    else:
        raise ValueError(
            f"test data has {x.shape[1]} columns; expected {m} or {model.n_features_in}"
        )
    return model.classes[np.argmax(_scores(model, xs), axis=1)]


def misclassification_error(model: LdaModel, x_test: np.ndarray, labels_test) -> tuple[int, float]:
    """(count, rate) of mispredicted rows."""
    labels_test = np.asarray(labels_test)
    pred = lda_predict_rows(model, x_test)
    if labels_test.shape != pred.shape:
        raise ValueError("x_test must have one label per row")
    count = int(np.count_nonzero(pred != labels_test))
    return count, count / pred.shape[0]
