import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import permchol as pc
from permchol.mcd import VARIANCE_FLOOR

from conftest import rand_pd


def permutation_matrix(pi: pc.Permutation) -> np.ndarray:
    """Materialized P with a 1 at (pi(j), j) per column, as an oracle."""
    p = np.zeros((pi.size, pi.size))
    for j, target in enumerate(pi.map):
        p[target, j] = 1.0
    return p


class TestPermutation:
    def test_rejects_non_bijection(self):
        with pytest.raises(ValueError):
            pc.Permutation(np.array([0, 0, 1]))
        with pytest.raises(ValueError):
            pc.Permutation(np.array([1, 2, 3]))
        with pytest.raises(ValueError):
            pc.Permutation(np.array([], dtype=int))

    def test_identity_and_inverse(self):
        pi = pc.Permutation(np.array([2, 0, 1]))
        assert not pi.is_identity()
        assert pi.compose(pi.inverse()).is_identity()
        assert pi.inverse().compose(pi).is_identity()
        assert pc.Permutation.identity(4).is_identity()

    @given(st.integers(0, 2**32 - 1), st.integers(2, 8))
    @settings(max_examples=25, deadline=None)
    def test_matrix_action_matches_definition(self, seed, p):
        rng = np.random.default_rng(seed)
        pi = pc.Permutation.random(p, rng)
        x = rng.normal(size=(3, p))
        assert np.array_equal(pc.apply_permutation(x, pi), x @ permutation_matrix(pi))


class TestApplyPermutation:
    def test_identity(self):
        x = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(pc.apply_permutation(x, pc.Permutation.identity(2)), x)

    def test_swap_two_columns(self):
        # multiply X by P = [[0,1],[1,0]] by hand
        x = np.array([[1.0, 2.0], [3.0, 4.0]])
        swapped = pc.apply_permutation(x, pc.Permutation(np.array([1, 0])))
        assert np.array_equal(swapped, np.array([[2.0, 1.0], [4.0, 3.0]]))

    def test_inverse_round_trip(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(5, 6))
        pi = pc.Permutation.random(6, rng)
        back = pc.apply_permutation(pc.apply_permutation(x, pi), pi.inverse())
        assert np.array_equal(back, x)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            pc.apply_permutation(np.ones((2, 3)), pc.Permutation.identity(2))


class TestConjugation:
    def test_identity(self):
        a = np.arange(9.0).reshape(3, 3)
        assert np.array_equal(
            pc.conjugate_by_permutation(a, pc.Permutation.identity(3)), a
        )

    def test_swap_diagonal(self):
        a = np.diag([1.0, 2.0])
        out = pc.conjugate_by_permutation(a, pc.Permutation(np.array([1, 0])))
        assert np.array_equal(out, np.diag([2.0, 1.0]))

    def test_matches_explicit_product(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(5, 5))
        pi = pc.Permutation.random(5, rng)
        pmat = permutation_matrix(pi)
        assert np.allclose(
            pc.conjugate_by_permutation(a, pi), pmat @ a @ pmat.T, atol=0
        )

    @given(st.integers(0, 2**32 - 1), st.integers(2, 10))
    @settings(max_examples=25, deadline=None)
    def test_frobenius_norm_preserved(self, seed, p):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(p, p))
        pi = pc.Permutation.random(p, rng)
        out = pc.conjugate_by_permutation(a, pi)
        ref = np.linalg.norm(a)
        assert abs(np.linalg.norm(out) - ref) <= 1e-12 * ref
        assert sorted(np.diag(out)) == pytest.approx(sorted(np.diag(a)))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            pc.conjugate_by_permutation(np.ones((3, 3)), pc.Permutation.identity(2))


class TestReconstruct:
    def test_identity_pair(self):
        pair = pc.CholeskyPair(np.eye(3), np.ones(3), pc.Permutation.identity(3))
        assert np.array_equal(pc.reconstruct_precision(pair).omega, np.eye(3))

    def test_hand_value(self):
        pair = pc.CholeskyPair(
            np.array([[1.0, 0.0], [-0.5, 1.0]]), np.ones(2), pc.Permutation.identity(2)
        )
        expected = np.array([[1.25, -0.5], [-0.5, 1.0]])
        assert np.allclose(pc.reconstruct_precision(pair).omega, expected, atol=1e-15)

    def test_diagonal_pair(self):
        d = np.array([2.0, 5.0, 0.25])
        pair = pc.CholeskyPair(np.eye(3), d, pc.Permutation.identity(3))
        assert np.allclose(pc.reconstruct_precision(pair).omega, np.diag(1.0 / d))

    def test_output_psd(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            t = np.tril(rng.normal(size=(6, 6)), -1) + np.eye(6)
            d = rng.uniform(0.1, 3.0, size=6)
            om = pc.reconstruct_precision(
                pc.CholeskyPair(t, d, pc.Permutation.identity(6))
            ).omega
            assert np.array_equal(om, om.T)
            assert np.linalg.eigvalsh(om).min() >= -1e-10

    def test_floor_guard(self):
        with pytest.raises(ValueError):
            pc.precision_from_factors(np.eye(2), np.array([1.0, 1e-12]))


class TestMcdExact:
    def test_identity(self):
        pair = pc.mcd_exact(np.eye(4))
        assert np.array_equal(pair.t, np.eye(4))
        assert np.array_equal(pair.d, np.ones(4))

    def test_hand_value(self):
        pair = pc.mcd_exact(np.array([[1.25, -0.5], [-0.5, 1.0]]))
        assert np.allclose(pair.t, [[1.0, 0.0], [-0.5, 1.0]], atol=1e-12)
        assert np.allclose(pair.d, [1.0, 1.0], atol=1e-12)

    def test_diagonal(self):
        pair = pc.mcd_exact(np.diag([3.0, 2.0, 1.0]))
        assert np.allclose(pair.t, np.eye(3), atol=0)
        assert np.allclose(pair.d, [1.0 / 3.0, 0.5, 1.0], atol=1e-15)

    def test_round_trip_random(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            p = int(rng.integers(2, 9))
            om = rand_pd(rng, p)
            back = pc.reconstruct_precision(pc.mcd_exact(om)).omega
            assert np.linalg.norm(back - om) <= 1e-10 * max(1.0, np.linalg.norm(om))

    def test_inverse_of_reconstruct(self):
        # mcd_exact o reconstruct_precision is the identity on pairs
        rng = np.random.default_rng(13)
        for _ in range(20):
            t = np.tril(rng.normal(size=(5, 5)), -1) + np.eye(5)
            d = rng.uniform(0.2, 2.0, size=5)
            pair = pc.CholeskyPair(t, d, pc.Permutation.identity(5))
            again = pc.mcd_exact(pc.reconstruct_precision(pair).omega)
            assert np.allclose(again.t, t, atol=1e-10)
            assert np.allclose(again.d, d, atol=1e-10)

    def test_not_positive_definite(self):
        with pytest.raises(pc.NotPositiveDefiniteError):
            pc.mcd_exact(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_not_symmetric(self):
        with pytest.raises(ValueError):
            pc.mcd_exact(np.array([[1.0, 0.5], [0.0, 1.0]]))


class TestTypes:
    def test_cholesky_pair_validation(self):
        ident = pc.Permutation.identity(2)
        with pytest.raises(ValueError):
            pc.CholeskyPair(np.array([[1.0, 0.0], [0.0, 2.0]]), np.ones(2), ident)
        with pytest.raises(ValueError):
            pc.CholeskyPair(np.eye(2), np.array([1.0, VARIANCE_FLOOR / 2]), ident)
        with pytest.raises(ValueError):
            # upper-triangular garbage under the identity order
            pc.CholeskyPair(np.array([[1.0, 0.3], [0.0, 1.0]]), np.ones(2), ident)

    def test_conjugated_factor_keeps_unit_diagonal(self):
        rng = np.random.default_rng(5)
        t = np.tril(rng.normal(size=(6, 6)), -1) + np.eye(6)
        pi = pc.Permutation.random(6, rng)
        out = pc.conjugate_by_permutation(t, pi)
        assert np.all(np.diag(out) == 1.0)

    def test_precision_estimate_requires_exact_symmetry(self):
        bad = np.array([[1.0, 1e-14], [0.0, 1.0]])
        with pytest.raises(ValueError):
            pc.PrecisionEstimate(omega=bad)
        ok = pc.PrecisionEstimate(omega=(bad + bad.T) / 2)
        assert np.array_equal(ok.omega, ok.omega.T)
