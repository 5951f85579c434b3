import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ltsmio.errors import NotPositiveDefiniteError, SingularUpdateError
from ltsmio.linalg import factor_spd, min_eig_sym, sherman_morrison_inverse, solve_spd


def random_spd(rng, k):
    B = rng.normal(size=(k, k))
    return B @ B.T + k * np.eye(k)


class TestFactorSpd:
    def test_identity(self):
        np.testing.assert_allclose(factor_spd(np.eye(3)).L, np.eye(3))

    def test_diagonal(self):
        np.testing.assert_allclose(factor_spd(np.diag([4.0, 9.0])).L, np.diag([2.0, 3.0]))

    def test_hand_cholesky(self):
        L = factor_spd(np.array([[2.0, 1.0], [1.0, 2.0]])).L
        expected = np.array([[np.sqrt(2), 0.0], [1 / np.sqrt(2), np.sqrt(1.5)]])
        np.testing.assert_allclose(L, expected, atol=1e-14)

    def test_not_pd_reports_pivot(self):
        with pytest.raises(NotPositiveDefiniteError) as err:
            factor_spd(np.diag([1.0, -1.0, 2.0]))
        assert err.value.pivot == 1

    def test_rejects_nonsymmetric(self):
        with pytest.raises(ValueError):
            factor_spd(np.array([[1.0, 2.0], [0.0, 1.0]]))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 40), st.integers(0, 2**31))
    def test_reconstruct(self, k, seed):
        S = random_spd(np.random.default_rng(seed), k)
        f = factor_spd(S)
        assert np.all(np.diag(f.L) > 0)
        assert np.linalg.norm(f.reconstruct() - S) <= 1e-8 * np.linalg.norm(S)


class TestSolveSpd:
    def test_identity(self):
        b = np.array([1.0, -2.0, 3.0])
        np.testing.assert_allclose(solve_spd(factor_spd(np.eye(3)), b), b)

    def test_diagonal(self):
        np.testing.assert_allclose(solve_spd(factor_spd(np.diag([4.0, 9.0])), np.array([4.0, 9.0])), [1, 1])

    def test_residual(self, rng):
        S = random_spd(rng, 5)
        b = rng.normal(size=5)
        x = solve_spd(factor_spd(S), b)
        assert np.linalg.norm(S @ x - b) <= 1e-8 * np.linalg.norm(b)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            solve_spd(factor_spd(np.eye(2)), np.ones(3))


class TestMinEig:
    def test_identity(self):
        lam, v = min_eig_sym(np.eye(3))
        assert lam == pytest.approx(1.0)
        assert np.linalg.norm(v) == pytest.approx(1.0)

    def test_diagonal(self):
        lam, v = min_eig_sym(np.diag([3.0, -2.0]))
        assert lam == pytest.approx(-2.0)
        np.testing.assert_allclose(np.abs(v), [0.0, 1.0], atol=1e-14)

    def test_swap(self):
        lam, v = min_eig_sym(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert lam == pytest.approx(-1.0)
        np.testing.assert_allclose(np.abs(v), np.full(2, 1 / np.sqrt(2)))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 12), st.floats(-50, 50), st.integers(0, 2**31))
    def test_shift_and_residual(self, k, c, seed):
        B = np.random.default_rng(seed).normal(size=(k, k))
        S = B + B.T
        lam, v = min_eig_sym(S)
        nrm = max(np.linalg.norm(S, 2), 1.0)
        assert np.linalg.norm(S @ v - lam * v) <= 1e-8 * nrm
        lam2, _ = min_eig_sym(S + c * np.eye(k))
        assert abs(lam2 - lam - c) <= 1e-8 * max(nrm, abs(c))


class TestShermanMorrison:
    def test_unit_update(self):
        out = sherman_morrison_inverse(np.eye(3), np.array([1.0, 0, 0]))
        np.testing.assert_allclose(out, np.diag([0.5, 1.0, 1.0]))

    def test_zero_vector(self, rng):
        Qi = np.linalg.inv(random_spd(rng, 4))
        np.testing.assert_allclose(sherman_morrison_inverse(Qi, np.zeros(4)), Qi)

    def test_multiply_back(self, rng):
        Q = random_spd(rng, 6)
        a = rng.normal(size=6)
        out = sherman_morrison_inverse(np.linalg.inv(Q), a)
        np.testing.assert_allclose(out @ (Q + np.outer(a, a)), np.eye(6), atol=1e-8)

    def test_downdate(self, rng):
        Q = random_spd(rng, 4)
        a = 0.1 * rng.normal(size=4)
        out = sherman_morrison_inverse(np.linalg.inv(Q), a, sign=-1)
        np.testing.assert_allclose(out @ (Q - np.outer(a, a)), np.eye(4), atol=1e-8)

    def test_singular(self):
        with pytest.raises(SingularUpdateError):
            sherman_morrison_inverse(np.eye(2), np.array([1.0, 0.0]), sign=-1)
