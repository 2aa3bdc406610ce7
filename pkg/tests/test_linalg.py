"""Matrix-kernel tests: hand-checkable cases, independent brute-force
oracles, and the algebraic invariants the detectors rely on."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linkanom.linalg import (
    center_rows,
    householder_qr,
    matmul,
    row_variance,
    sym_eig,
)


def naive_matmul(a, b):
    """Triple-loop oracle."""
    rows, inner = a.shape
    cols = b.shape[1]
    out = np.zeros((rows, cols))
    for i in range(rows):
        for j in range(cols):
            acc = 0.0
            for k in range(inner):
                acc += a[i, k] * b[k, j]
            out[i, j] = acc
    return out


def two_pass_variance(row):
    """Independent sample-variance oracle with divisor (n - 1)."""
    mean = sum(row) / len(row)
    return sum((x - mean) ** 2 for x in row) / (len(row) - 1)


class TestMatmul:
    def test_identity(self):
        m = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]])
        np.testing.assert_array_equal(matmul(np.eye(3), m), m)

    def test_hand_checked_2x2(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.array([[0.0], [1.0]])
        np.testing.assert_array_equal(matmul(a, b), [[2.0], [4.0]])

    def test_matches_triple_loop_oracle(self):
        rng = np.random.default_rng(11)
        a = rng.normal(size=(5, 7))
        b = rng.normal(size=(7, 3))
        np.testing.assert_allclose(matmul(a, b), naive_matmul(a, b), rtol=0, atol=1e-13)

    def test_dimension_mismatch_names_both_shapes(self):
        with pytest.raises(ValueError, match=r"\(2, 3\).*\(2, 3\)"):
            matmul(np.ones((2, 3)), np.ones((2, 3)))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_associativity(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(4, 6))
        b = rng.normal(size=(6, 5))
        c = rng.normal(size=(5, 3))
        left = matmul(matmul(a, b), c)
        right = matmul(a, matmul(b, c))
        scale = np.max(np.abs(left))
        np.testing.assert_allclose(left, right, rtol=0, atol=1e-10 * max(scale, 1.0))


class TestHouseholderQr:
    def test_identity(self):
        q, r = householder_qr(np.eye(4))
        np.testing.assert_allclose(q, np.eye(4), atol=1e-15)
        np.testing.assert_allclose(r, np.eye(4), atol=1e-15)

    def test_3_4_5_column(self):
        q, r = householder_qr(np.array([[3.0], [4.0]]))
        np.testing.assert_allclose(q, [[0.6], [0.8]], atol=1e-15)
        np.testing.assert_allclose(r, [[5.0]], atol=1e-15)

    def test_random_120_orthonormal_and_reconstructs(self):
        rng = np.random.default_rng(3)
        b = rng.normal(size=(120, 120))
        q, r = householder_qr(b)
        n = b.shape[1]
        assert np.max(np.abs(q.T @ q - np.eye(n))) <= 1e-12 * n
        assert np.linalg.norm(q @ r - b) <= 1e-12 * np.linalg.norm(b)

    def test_upper_triangular_nonnegative_diagonal(self):
        rng = np.random.default_rng(4)
        b = rng.normal(size=(30, 20))
        q, r = householder_qr(b)
        assert r.shape == (20, 20)
        np.testing.assert_allclose(r, np.triu(r), atol=0)
        assert (np.diag(r) >= 0).all()

    def test_deterministic_across_calls(self):
        rng = np.random.default_rng(5)
        b = rng.normal(size=(40, 40))
        q1, r1 = householder_qr(b)
        q2, r2 = householder_qr(b.copy())
        np.testing.assert_array_equal(q1, q2)
        np.testing.assert_array_equal(r1, r2)

    def test_rank_deficient_allowed(self):
        rng = np.random.default_rng(6)
        low = rng.normal(size=(30, 5)) @ rng.normal(size=(5, 30))
        q, r = householder_qr(low)
        assert np.max(np.abs(q.T @ q - np.eye(30))) <= 1e-12 * 30
        assert np.linalg.norm(q @ r - low) <= 1e-12 * np.linalg.norm(low)
        # trailing diagonal entries collapse to ~0 at rank 5
        assert np.max(np.abs(np.diag(r)[5:])) <= 1e-10 * np.abs(r[0, 0])

    def test_wide_input_rejected(self):
        with pytest.raises(ValueError, match="rows >= cols"):
            householder_qr(np.ones((2, 3)))


class TestSymEig:
    def test_diagonal_input(self):
        eig = sym_eig(np.diag([3.0, 1.0, 2.0]))
        np.testing.assert_allclose(eig.eigenvalues, [3.0, 2.0, 1.0], atol=1e-14)
        expected = np.eye(3)[:, [0, 2, 1]]
        np.testing.assert_allclose(eig.eigenvectors, expected, atol=1e-14)

    def test_classic_2x2(self):
        eig = sym_eig(np.array([[2.0, 1.0], [1.0, 2.0]]))
        np.testing.assert_allclose(eig.eigenvalues, [3.0, 1.0], atol=1e-14)
        s = 1.0 / np.sqrt(2.0)
        np.testing.assert_allclose(eig.eigenvectors[:, 0], [s, s], atol=1e-14)
        np.testing.assert_allclose(eig.eigenvectors[:, 1], [s, -s], atol=1e-14)

    def test_random_psd_reconstruction(self):
        rng = np.random.default_rng(7)
        g = rng.normal(size=(50, 50))
        s = g.T @ g
        s = 0.5 * (s + s.T)
        eig = sym_eig(s)
        w, lam = eig.eigenvectors, eig.eigenvalues
        assert np.linalg.norm(w @ np.diag(lam) @ w.T - s) <= 1e-9 * np.linalg.norm(s)
        assert np.max(np.abs(w.T @ w - np.eye(50))) <= 1e-12 * 50
        assert (np.diff(lam) <= 1e-12).all()

    def test_covariance_eigenvalues_nonnegative_and_trace(self):
        rng = np.random.default_rng(8)
        y = rng.normal(size=(25, 80))
        centered, _ = center_rows(y)
        cov = centered @ centered.T / 79
        eig = sym_eig(cov)
        assert (eig.eigenvalues >= -1e-10).all()
        assert abs(eig.eigenvalues.sum() - np.trace(cov)) <= 1e-9 * abs(np.trace(cov))

    def test_sign_convention_deterministic(self):
        rng = np.random.default_rng(9)
        g = rng.normal(size=(12, 12))
        s = g + g.T
        e1 = sym_eig(s)
        e2 = sym_eig(s.copy())
        np.testing.assert_array_equal(e1.eigenvectors, e2.eigenvectors)
        for j in range(12):
            col = e1.eigenvectors[:, j]
            lead = np.flatnonzero(np.abs(col) > 1e-12 * np.max(np.abs(col)))[0]
            assert col[lead] > 0

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError, match="not symmetric"):
            sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_non_square_rejected(self):
        with pytest.raises(ValueError, match="square"):
            sym_eig(np.ones((2, 3)))


class TestRowVariance:
    def test_textbook(self):
        assert row_variance(np.array([[1.0, 2.0, 3.0]]))[0] == pytest.approx(1.0, abs=1e-15)

    def test_constant_row(self):
        assert row_variance(np.array([[5.0, 5.0, 5.0, 5.0]]))[0] == 0.0

    def test_matches_two_pass_oracle(self):
        rng = np.random.default_rng(10)
        row = rng.normal(2.0, 3.0, size=640)
        got = row_variance(row[None, :])[0]
        want = two_pass_variance(list(row))
        assert abs(got - want) <= 1e-12 * want

    def test_single_column_rejected(self):
        with pytest.raises(ValueError, match="at least 2 columns"):
            row_variance(np.ones((3, 1)))


class TestCenterRows:
    def test_hand_checked(self):
        centered, mu = center_rows(np.array([[1.0, 3.0]]))
        np.testing.assert_array_equal(centered, [[-1.0, 1.0]])
        np.testing.assert_array_equal(mu, [2.0])

    def test_zero_mean_rows_unchanged(self):
        y = np.array([[1.0, -1.0], [2.0, -2.0]])
        centered, mu = center_rows(y)
        np.testing.assert_array_equal(centered, y)
        np.testing.assert_array_equal(mu, [0.0, 0.0])

    def test_idempotent_at_reference_scale(self):
        rng = np.random.default_rng(12)
        y = rng.normal(5.0, 2.0, size=(120, 640))
        centered, _ = center_rows(y)
        assert np.max(np.abs(centered.sum(axis=1))) <= 1e-10 * 640
        again, mu2 = center_rows(centered)
        np.testing.assert_allclose(again, centered, atol=1e-12)
        assert np.max(np.abs(mu2)) <= 1e-12


class TestCrossKernelInvariants:
    def test_variance_identity_projected_traffic(self):
        # row variances of W^T (Y - mu) equal the covariance eigenvalues
        rng = np.random.default_rng(13)
        y = rng.normal(size=(30, 200))
        centered, _ = center_rows(y)
        cov = centered @ centered.T / 199
        eig = sym_eig(0.5 * (cov + cov.T))
        projected_var = row_variance(eig.eigenvectors.T @ centered)
        np.testing.assert_allclose(projected_var, eig.eigenvalues, rtol=1e-8)
