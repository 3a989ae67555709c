import numpy as np
import pytest

from flowsim.linalg import (
    DimensionMismatch,
    NotPositiveDefinite,
    cholesky,
    derive_seed,
    logdet_spd,
    make_rng,
    solve_spd,
    sym_eig,
)


class TestCholesky:
    def test_identity(self):
        f = cholesky(np.eye(3))
        np.testing.assert_array_equal(f.lower, np.eye(3))

    def test_two_by_two_closed_form(self):
        a = np.array([[4.0, 2.0], [2.0, 3.0]])
        f = cholesky(a)
        expected = np.array([[2.0, 0.0], [1.0, np.sqrt(2.0)]])
        np.testing.assert_allclose(f.lower, expected, rtol=0, atol=1e-15)
        np.testing.assert_allclose(f.lower @ f.lower.T, a, rtol=1e-10)

    def test_reconstruction_random(self):
        rng = make_rng(11)
        g = rng.standard_normal((5, 5))
        a = np.eye(5) + g @ g.T
        f = cholesky(a)
        err = np.linalg.norm(f.lower @ f.lower.T - a) / np.linalg.norm(a)
        assert err < 1e-10

    def test_not_positive_definite(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            cholesky(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            cholesky(np.ones((2, 3)))

    def test_never_errors_on_gram_form(self):
        # I + a Z Z^T is SPD for any finite Z and a > 0.
        rng = make_rng(12)
        for _ in range(20):
            d = int(rng.integers(1, 9))
            m = int(rng.integers(1, 9))
            z = rng.standard_normal((d, m)) * 10.0 ** rng.integers(-3, 4)
            alpha = float(10.0 ** rng.uniform(-3, 3))
            cholesky(np.eye(d) + alpha * (z @ z.T))


class TestLogdet:
    def test_identity_zero(self):
        assert logdet_spd(cholesky(np.eye(4))) == 0.0

    def test_scaled_identity(self):
        got = logdet_spd(cholesky(2.0 * np.eye(2)))
        assert abs(got - 2.0 * np.log(2.0)) < 1e-14

    def test_eigen_product_oracle(self):
        rng = make_rng(13)
        g = rng.standard_normal((6, 6))
        a = np.eye(6) + g @ g.T
        got = logdet_spd(cholesky(a))
        oracle = float(np.sum(np.log(np.linalg.eigvalsh(a))))
        assert abs(got - oracle) / abs(oracle) < 1e-9

    def test_dual_form_identity(self):
        # det(I_d + a Z Z^T) = det(I_m + a Z^T Z), both via the same factor path.
        rng = make_rng(14)
        for _ in range(20):
            d = int(rng.integers(1, 10))
            m = int(rng.integers(1, 10))
            z = rng.standard_normal((d, m))
            alpha = float(rng.uniform(0.1, 5.0))
            square = logdet_spd(cholesky(np.eye(d) + alpha * (z @ z.T)))
            gram = logdet_spd(cholesky(np.eye(m) + alpha * (z.T @ z)))
            assert abs(square - gram) <= 1e-8 * max(1.0, abs(square))


class TestSymEig:
    def test_diagonal(self):
        w, v = sym_eig(np.diag([3.0, 1.0, 2.0]))
        np.testing.assert_allclose(w, [3.0, 2.0, 1.0], atol=1e-14)
        np.testing.assert_allclose(np.abs(v), np.eye(3)[:, [0, 2, 1]], atol=1e-14)

    def test_off_diagonal_pair(self):
        w, _ = sym_eig(np.array([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(w, [1.0, -1.0], atol=1e-14)

    def test_reconstruction_random(self):
        rng = make_rng(15)
        g = rng.standard_normal((8, 8))
        a = (g + g.T) / 2.0
        w, v = sym_eig(a)
        assert np.all(np.diff(w) <= 0)
        scale = np.linalg.norm(a)
        assert np.linalg.norm(a @ v - v * w) / scale < 1e-8
        assert np.linalg.norm(v.T @ v - np.eye(8)) < 1e-8

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            sym_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestSolveSpd:
    def test_identity(self):
        rng = make_rng(16)
        b = rng.standard_normal((3, 4))
        np.testing.assert_array_equal(solve_spd(cholesky(np.eye(3)), b), b)

    def test_scaled_identity(self):
        x = solve_spd(cholesky(2.0 * np.eye(2)), np.eye(2))
        np.testing.assert_allclose(x, 0.5 * np.eye(2), atol=1e-15)

    def test_residual_random(self):
        rng = make_rng(17)
        g = rng.standard_normal((6, 6))
        a = np.eye(6) + g @ g.T
        b = rng.standard_normal((6, 3))
        x = solve_spd(cholesky(a), b)
        assert np.linalg.norm(a @ x - b) / np.linalg.norm(b) < 1e-9

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            solve_spd(cholesky(np.eye(3)), np.ones((4, 2)))


class TestRng:
    def test_same_seed_same_stream(self):
        a = make_rng(987654321).standard_normal(10_000)
        b = make_rng(987654321).standard_normal(10_000)
        np.testing.assert_array_equal(a, b)

    def test_different_seeds_differ(self):
        a = make_rng(1).standard_normal(100)
        b = make_rng(2).standard_normal(100)
        assert not np.array_equal(a, b)

    def test_derive_seed_deterministic_and_distinct(self):
        root = 42
        tags = ["init", "eval", "dataset", "client-0", "client-1"]
        seeds = [derive_seed(root, t) for t in tags]
        assert seeds == [derive_seed(root, t) for t in tags]
        assert len(set(seeds)) == len(seeds)
        assert all(0 <= s < 2**64 for s in seeds)

    def test_derive_seed_depends_on_root(self):
        assert derive_seed(1, "x") != derive_seed(2, "x")
