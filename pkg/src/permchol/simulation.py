"""True-model generators, a seeded Gaussian sampler, and the Monte-Carlo
benchmark runner that scores estimators against the generating precision
matrix."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .baselines import estimate_ave, estimate_bic_order
from .ensemble import estimate_m1, estimate_m2
from .errors import NotPositiveDefiniteError, NumericalError
from .lasso import CvConfig
from .mcd import Permutation, PrecisionEstimate, conjugate_by_permutation
from .metrics import DEFAULT_ZERO_TOL, LossReport, loss_report

LOSS_NAMES = ("delta1", "delta2", "delta3", "mae", "mse", "fsl_percent")


@dataclass(frozen=True)
class ModelSpec:
    """One of the six benchmark precision structures.

    1: banded, unit diagonal, 0.5 on the first and 0.3 on the second
       sub/super-diagonals
    2: model 1 with rows and columns permuted at random (fixed by perm_seed)
    3: 10x10 compound-symmetry(0.5) block, identity elsewhere (p >= 10)
    4: autoregressive decay 0.5^|i-j|
    5: inverse of diag(p, p-1, ..., 1)
    6: 100 * T'T with T unit lower bidiagonal, subdiagonal -0.8
    """

    id: int
    p: int
    perm_seed: int = 0

    def __post_init__(self):
        if self.id not in range(1, 7):
            raise ValueError(f"model id must be in 1..6, got {self.id}")
        if self.p < 2:
            raise ValueError(f"p must be >= 2, got {self.p}")
        if self.id == 3 and self.p < 10:
            raise ValueError(f"model 3 requires p >= 10, got {self.p}")


def make_model(spec: ModelSpec) -> np.ndarray:
    """Build the true precision matrix for a ModelSpec; verified PD."""
    p = spec.p
    if spec.id == 1:
        om = np.eye(p)
        om += 0.5 * (np.eye(p, k=1) + np.eye(p, k=-1))
        om += 0.3 * (np.eye(p, k=2) + np.eye(p, k=-2))
    elif spec.id == 2:
        base = make_model(ModelSpec(id=1, p=p))
        rng = np.random.default_rng(spec.perm_seed)
        om = conjugate_by_permutation(base, Permutation.random(p, rng))
    elif spec.id == 3:
        om = np.eye(p)
        om[:10, :10] = 0.5
        np.fill_diagonal(om[:10, :10], 1.0)
    elif spec.id == 4:
        idx = np.arange(p)
        om = 0.5 ** np.abs(idx[:, None] - idx[None, :])
    elif spec.id == 5:
        om = np.diag(1.0 / np.arange(p, 0, -1))
    else:
        t = np.eye(p) - 0.8 * np.eye(p, k=-1)
        om = 100.0 * (t.T @ t)
    try:
        np.linalg.cholesky(om)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - all six are PD
        raise NotPositiveDefiniteError(f"model {spec.id} matrix is not PD") from exc
    return om


def sample_mvn(omega: np.ndarray, n: int, seed: int) -> np.ndarray:
    """Draw n iid rows from N(0, omega^-1), bit-reproducible per seed.

    Rows are z @ L' with Sigma = omega^-1 = L L' (lower Cholesky) and z a
    seeded standard-normal matrix.
    """
    om = np.asarray(omega, dtype=float)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    try:
        c = sla.cholesky(om, lower=True)
    except sla.LinAlgError as exc:
        raise NotPositiveDefiniteError("omega must be positive definite") from exc
    sigma = sla.cho_solve((c, True), np.eye(om.shape[0]))
    sigma = (sigma + sigma.T) / 2.0
    chol_sigma = np.linalg.cholesky(sigma)
    z = np.random.default_rng(seed).standard_normal((n, om.shape[0]))
    return z @ chol_sigma.T


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    n: int
    reps: int
    m: int
    methods: tuple[str, ...]
    seed: int
    threads: int = 1
    zero_tol: float = DEFAULT_ZERO_TOL
    tuning: CvConfig | None = None

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        methods = tuple(str(m).lower() for m in self.methods)
        unknown = [m for m in methods if m not in _RUNNERS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; expected {sorted(_RUNNERS)}")
        object.__setattr__(self, "methods", methods)


@dataclass(frozen=True)
class ExperimentReport:
    """Per-method mean and standard error of each loss across reps.

    ``results[method][loss]`` is (mean, se); se is None with fewer than two
    usable reps.  ``failures[method]`` counts reps where estimation raised,
    which are excluded from the averages.
    """

    config: ExperimentConfig
    results: dict
    failures: dict
    reps_used: dict

    def to_dict(self) -> dict:
        cfg = self.config
        return {
            "config": {
                "model": cfg.model.id,
                "p": cfg.model.p,
                "perm_seed": cfg.model.perm_seed,
                "n": cfg.n,
                "reps": cfg.reps,
                "M": cfg.m,
                "methods": list(cfg.methods),
                "seed": cfg.seed,
                "zero_tol": cfg.zero_tol,
            },
            "results": {
                meth: {
                    loss: {"mean": mean, "se": se}
                    for loss, (mean, se) in losses.items()
                }
                for meth, losses in self.results.items()
            },
            "failures": dict(self.failures),
        }


def _run_method(name: str, x: np.ndarray, m: int, seed: int, tuning) -> PrecisionEstimate:
    return _RUNNERS[name](x, m, seed, tuning)


_RUNNERS = {
    "m1": lambda x, m, seed, tuning: estimate_m1(x, m, seed, tuning),
    "m2": lambda x, m, seed, tuning: estimate_m2(x, m, seed, tuning),
    "ave": lambda x, m, seed, tuning: estimate_ave(x, m, seed, tuning),
    "bic": lambda x, m, seed, tuning: estimate_bic_order(x, tuning),
}


def _rep_seeds(seed: int, reps: int) -> list[tuple[int, int]]:
    """Derive (data_seed, method_seed) per rep from the experiment seed."""
    children = np.random.SeedSequence(seed).spawn(reps)
    return [tuple(int(s) for s in c.generate_state(2)) for c in children]


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run the Monte-Carlo benchmark described by ``cfg``.

    Each rep samples fresh data with its derived seed, centers columns,
    runs every requested method on the identical centered matrix, and
    scores it against the true precision matrix.  Reps may execute
    concurrently; the reduction happens in rep order, so results do not
    depend on the thread count.
    """
    om_true = make_model(cfg.model)
    seeds = _rep_seeds(cfg.seed, cfg.reps)

    def one_rep(i: int) -> dict:
        data_seed, method_seed = seeds[i]
        x = sample_mvn(om_true, cfg.n, data_seed)
        xc = x - x.mean(axis=0)
        tuning = cfg.tuning or CvConfig(seed=method_seed)
        out = {}
        for meth in cfg.methods:
            try:
                est = _run_method(meth, xc, cfg.m, method_seed, tuning)
            except NumericalError as exc:
                out[meth] = exc
            else:
                out[meth] = loss_report(est, om_true, cfg.zero_tol)
        return out

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            rep_outputs = list(pool.map(one_rep, range(cfg.reps)))
    else:
        rep_outputs = [one_rep(i) for i in range(cfg.reps)]

    results = {}
    failures = {}
    reps_used = {}
    for meth in cfg.methods:
        reports = [r[meth] for r in rep_outputs if isinstance(r[meth], LossReport)]
        failures[meth] = cfg.reps - len(reports)
        reps_used[meth] = len(reports)
        results[meth] = {
            loss: _mean_se([getattr(rep, loss) for rep in reports])
            for loss in LOSS_NAMES
        }
    return ExperimentReport(config=cfg, results=results, failures=failures, reps_used=reps_used)


def _mean_se(values: list) -> tuple[float | None, float | None]:
    vals = np.array([v for v in values if v is not None], dtype=float)
    if vals.size == 0:
        return None, None
    mean = float(vals.mean())
    if vals.size < 2:
        return mean, None
    return mean, float(vals.std(ddof=1) / np.sqrt(vals.size))
