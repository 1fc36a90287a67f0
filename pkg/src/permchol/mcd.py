"""Permutations and modified-Cholesky machinery for precision matrices.

A precision matrix admits the decomposition Omega = T' D^{-1} T where T is
unit lower triangular (row j holds the negated coefficients of regressing
variable j on variables 1..j-1) and D is the diagonal of residual
variances.  This module provides the permutation actions used to re-order
variables, the exact decomposition of a known matrix, and the
reconstruction Omega = T' D^{-1} T.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import NotPositiveDefiniteError

# Floor for residual variances d_j^2.  A regression that fits perfectly
# would otherwise put a zero on the diagonal of D and blow up D^{-1}.
VARIANCE_FLOOR = 1e-8


@dataclass(frozen=True)
class Permutation:
    """A bijection on {0, ..., p-1}; ``map[j]`` is the image of position j.

    The associated matrix P has a single 1 per row and column, at position
    (map[j], j) in column j.  P is never materialized: column gathers
    implement X @ P and index gathers implement P @ A @ P'.
    """

    map: np.ndarray

    def __post_init__(self):
        m = np.array(self.map, dtype=np.intp)
        if m.ndim != 1 or m.size == 0:
            raise ValueError("permutation map must be a non-empty 1-d sequence")
        if not np.array_equal(np.sort(m), np.arange(m.size)):
            raise ValueError("permutation map must be a bijection on 0..p-1")
        m.setflags(write=False)
        object.__setattr__(self, "map", m)

    @property
    def size(self) -> int:
        return int(self.map.size)

    @classmethod
    def identity(cls, p: int) -> "Permutation":
        return cls(np.arange(p))

    @classmethod
    def random(cls, p: int, rng: np.random.Generator) -> "Permutation":
        """Draw uniformly at random from the p! permutations."""
        return cls(rng.permutation(p))

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.map, np.arange(self.size)))

    def inverse(self) -> "Permutation":
        inv = np.empty(self.size, dtype=np.intp)
        inv[self.map] = np.arange(self.size)
        return Permutation(inv)

    def compose(self, other: "Permutation") -> "Permutation":
        """Return self o other, i.e. j -> self(other(j))."""
        if other.size != self.size:
            raise ValueError("cannot compose permutations of different sizes")
        return Permutation(self.map[other.map])


class Method(Enum):
    """Provenance tag for a precision estimate."""

    M1 = "m1"
    M2 = "m2"
    AVE = "ave"
    BIC_ORDER = "bic"
    SAMPLE = "sample"
    DIAGONAL = "diagonal"


@dataclass(frozen=True)
class CholeskyPair:
    """Unit-diagonal factor ``t`` and residual variances ``d``.

    ``order`` records the permutation under which the regressions were
    performed.  Straight from a fit, ``t`` is lower triangular in the
    permuted coordinates; after back-transformation to the original
    coordinates it generally is not.  The reconstruction t' diag(1/d) t is
    valid either way, in the coordinates the pair currently lives in.
    """

    t: np.ndarray
    d: np.ndarray
    order: Permutation

    def __post_init__(self):
        t = np.array(self.t, dtype=float)
        d = np.array(self.d, dtype=float)
        p = self.order.size
        if t.shape != (p, p):
            raise ValueError(f"t must be {p}x{p} to match order, got {t.shape}")
        if d.shape != (p,):
            raise ValueError(f"d must have length {p}, got {d.shape}")
        if not np.all(np.diag(t) == 1.0):
            raise ValueError("t must have an exactly unit diagonal")
        if not np.all(d >= VARIANCE_FLOOR):
            raise ValueError(f"all entries of d must be >= {VARIANCE_FLOOR}")
        if self.order.is_identity() and np.any(np.triu(t, k=1) != 0.0):
            raise ValueError("t must be lower triangular under the identity order")
        t.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "d", d)

    @property
    def p(self) -> int:
        return self.order.size


@dataclass(frozen=True)
class PrecisionEstimate:
    """A symmetric precision matrix estimate plus estimator metadata.

    ``method`` is None for raw reconstructions not produced by a named
    pipeline.  ``m`` is the number of permutations used, ``delta`` the hard
    threshold (estimators that do not threshold leave it None).
    """

    omega: np.ndarray
    method: Method | None = None
    m: int | None = None
    delta: float | None = None
    seed: int | None = None

    def __post_init__(self):
        om = np.array(self.omega, dtype=float)
        if om.ndim != 2 or om.shape[0] != om.shape[1]:
            raise ValueError(f"omega must be square, got shape {om.shape}")
        if not np.array_equal(om, om.T):
            raise ValueError("omega must be exactly symmetric")
        om.setflags(write=False)
        object.__setattr__(self, "omega", om)

    @property
    def p(self) -> int:
        return self.omega.shape[0]


def apply_permutation(x: np.ndarray, pi: Permutation) -> np.ndarray:
    """Permute the columns of a data matrix: column j of the result is
    column pi(j) of ``x`` (the action X @ P)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"x must be 2-d, got ndim={x.ndim}")
    if x.shape[1] != pi.size:
        raise ValueError(
            f"permutation size {pi.size} does not match {x.shape[1]} columns"
        )
    return x[:, pi.map]


def conjugate_by_permutation(a: np.ndarray, pi: Permutation) -> np.ndarray:
    """Return P A P' without materializing P.

    Entry (pi(i), pi(j)) of the result equals entry (i, j) of ``a``, so the
    Frobenius norm and the diagonal multiset are preserved.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"a must be square, got shape {a.shape}")
    if a.shape[0] != pi.size:
        raise ValueError(f"permutation size {pi.size} does not match {a.shape[0]}")
    inv = pi.inverse().map
    return a[np.ix_(inv, inv)]


def precision_from_factors(t: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Compute t' diag(1/d) t, symmetrized by averaging with its transpose.

    The symmetrization kills the round-off asymmetry of the float matrix
    product; (a_ij + a_ji)/2 is exactly symmetric bitwise.
    """
    t = np.asarray(t, dtype=float)
    d = np.asarray(d, dtype=float)
    if np.any(d < VARIANCE_FLOOR):
        raise ValueError(
            f"residual variances below {VARIANCE_FLOOR}: floor must be applied upstream"
        )
    om = (t.T * (1.0 / d)) @ t
    return (om + om.T) / 2.0


def reconstruct_precision(tp: CholeskyPair, method: Method | None = None) -> PrecisionEstimate:
    """Reconstruct the precision matrix t' diag(1/d) t of a CholeskyPair."""
    return PrecisionEstimate(omega=precision_from_factors(tp.t, tp.d), method=method)


def mcd_exact(omega: np.ndarray) -> CholeskyPair:
    """Exact modified Cholesky decomposition of a known SPD matrix.

    Returns the unique unit-lower-triangular T and positive diagonal D
    with omega = T' D^{-1} T under the identity order.  Computed as a
    root-free UDU'-style factorization working from the last pivot up:
    writing omega = U E U' with U = T' unit upper triangular and
    E = D^{-1},

        e_j = omega_jj - sum_{k>j} u_jk^2 e_k
        u_ij = (omega_ij - sum_{k>j} u_ik e_k u_jk) / e_j   for i < j.

    A non-positive pivot e_j means omega is not positive definite.
    """
    om = np.asarray(omega, dtype=float)
    if om.ndim != 2 or om.shape[0] != om.shape[1]:
        raise ValueError(f"omega must be square, got shape {om.shape}")
    if not np.allclose(om, om.T, rtol=0.0, atol=1e-8 * max(1.0, np.abs(om).max())):
        raise ValueError("omega must be symmetric")
    om = (om + om.T) / 2.0

    p = om.shape[0]
    u = np.eye(p)
    e = np.zeros(p)
    for j in range(p - 1, -1, -1):
        tail = u[j, j + 1 :]
        e[j] = om[j, j] - np.dot(tail * e[j + 1 :], tail)
        if e[j] <= 0.0 or not np.isfinite(e[j]):
            raise NotPositiveDefiniteError(
                f"pivot {e[j]!r} at index {j}: matrix is not positive definite"
            )
        if j > 0:
            u[:j, j] = (om[:j, j] - u[:j, j + 1 :] @ (e[j + 1 :] * tail)) / e[j]
    return CholeskyPair(t=u.T, d=1.0 / e, order=Permutation.identity(p))
