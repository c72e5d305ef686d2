import numpy as np
import pytest

from fwopt.errors import DegenerateInputError, DimensionError, InvalidNormError
from fwopt.tensor import (
    as_point,
    inner,
    norm,
    polar_factor_exact,
    polar_factor_newton_schulz,
    svd_thin,
)


def random_semi_orthogonal(rng, m, n):
    """Independent sampler: QR of a Gaussian matrix (transposed when wide)."""
    if m >= n:
        q, r = np.linalg.qr(rng.standard_normal((m, n)))
        return q * np.sign(np.diag(r))
    q, r = np.linalg.qr(rng.standard_normal((n, m)))
    return (q * np.sign(np.diag(r))).T


class TestInner:
    def test_hand_values(self):
        assert inner(np.array([1.0, 2.0]), np.array([3.0, -1.0])) == 1.0
        x = np.array([3.0, 4.0])
        assert inner(x, x) == 25.0
        eye = np.eye(2)
        assert inner(eye, eye) == 2.0

    def test_symmetry_and_bilinearity(self):
        rng = np.random.default_rng(7)
        a, b, c = rng.standard_normal((3, 6))
        assert inner(a, b) == inner(b, a)
        assert inner(2.0 * a + b, c) == pytest.approx(2.0 * inner(a, c) + inner(b, c), rel=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            inner(np.zeros(3), np.zeros(4))
        with pytest.raises(DimensionError):
            inner(np.zeros(3), np.zeros((3, 1)))

    def test_matches_squared_norm(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            v = rng.standard_normal(rng.integers(1, 20))
            assert inner(v, v) == pytest.approx(norm(v, "l2") ** 2, rel=1e-12)
            a = rng.standard_normal((rng.integers(1, 8), rng.integers(1, 8)))
            assert inner(a, a) == pytest.approx(norm(a, "frobenius") ** 2, rel=1e-12)


class TestNorm:
    def test_hand_values(self):
        assert norm(np.array([3.0, -4.0]), "l2") == 5.0
        assert norm(np.diag([2.0, 1.0]), "spectral") == pytest.approx(2.0, abs=1e-14)
        assert norm(np.array([1.0, -2.0, 3.0]), "l1") == 6.0
        assert norm(np.array([1.0, -2.0, 3.0]), "linf") == 3.0
        assert norm(np.diag([2.0, 1.0]), "nuclear") == pytest.approx(3.0, abs=1e-14)

    def test_kind_tag_mismatch(self):
        with pytest.raises(InvalidNormError):
            norm(np.zeros(3), "spectral")
        with pytest.raises(InvalidNormError):
            norm(np.zeros((2, 2)), "l1")

    def test_zero_iff_zero(self):
        assert norm(np.zeros(4), "l1") == 0.0
        assert norm(np.zeros((3, 2)), "nuclear") == 0.0
        assert norm(np.array([0.0, 1e-300]), "l2") > 0.0


class TestAsPoint:
    def test_rejects_nonfinite_and_bad_rank(self):
        from fwopt.errors import NumericalError

        with pytest.raises(NumericalError):
            as_point([1.0, np.nan])
        with pytest.raises(DimensionError):
            as_point(np.zeros((2, 2, 2)))
        with pytest.raises(DimensionError):
            as_point([1.0, 2.0], rank=2)


class TestSvdThin:
    def test_diagonal(self):
        res = svd_thin(np.diag([3.0, 1.0]))
        assert np.allclose(res.s, [3.0, 1.0])
        assert np.allclose(np.abs(res.u), np.eye(2), atol=1e-14)
        assert np.allclose(np.abs(res.v), np.eye(2), atol=1e-14)

    def test_rank_one(self):
        u = np.array([3.0, 4.0]) / 5.0
        v = np.array([1.0, 0.0, 0.0])
        res = svd_thin(np.outer(u, v))
        assert res.s[0] == pytest.approx(1.0, abs=1e-14)
        assert res.s[1] == pytest.approx(0.0, abs=1e-14)

    def test_invariants_random(self):
        rng = np.random.default_rng(3)
        for m, n in [(6, 6), (7, 4), (3, 8)]:
            for _ in range(100):
                a = rng.standard_normal((m, n))
                res = svd_thin(a)
                k = min(m, n)
                assert np.linalg.norm(res.u.T @ res.u - np.eye(k)) <= 1e-10
                assert np.linalg.norm(res.v.T @ res.v - np.eye(k)) <= 1e-10
                assert np.all(np.diff(res.s) <= 0)
                assert np.all(res.s >= 0)
                residual = np.linalg.norm(res.reconstruct() - a)
                assert residual <= 1e-8 * (1.0 + np.linalg.norm(a))

    def test_residual_on_5x3(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((5, 3))
        res = svd_thin(a)
        assert np.linalg.norm(res.reconstruct() - a) <= 1e-8


class TestPolarExact:
    def test_positive_diagonal(self):
        assert np.allclose(polar_factor_exact(np.diag([3.0, 1.0])), np.eye(2), atol=1e-14)

    def test_signs_preserved(self):
        assert np.allclose(polar_factor_exact(np.diag([-2.0, 5.0])), np.diag([-1.0, 1.0]), atol=1e-14)

    def test_idempotent_on_orthogonal(self):
        rng = np.random.default_rng(17)
        for m, n in [(4, 4), (6, 3), (2, 5)]:
            q = random_semi_orthogonal(rng, m, n)
            assert np.allclose(polar_factor_exact(q), q, atol=1e-12)

    def test_zero_matrix_flags_degenerate(self):
        with pytest.warns(UserWarning):
            out = polar_factor_exact(np.zeros((3, 2)))
        assert np.all(out == 0.0)

    def test_maximizes_alignment(self):
        # Brute-force oracle: the polar factor beats 1e4 random semi-orthogonal
        # matrices on <Q, a>.
        rng = np.random.default_rng(23)
        a = rng.standard_normal((5, 3))
        best = inner(polar_factor_exact(a), a)
        for _ in range(10_000):
            q = random_semi_orthogonal(rng, 5, 3)
            assert best >= inner(q, a) - 1e-9

    def test_semi_orthogonality_full_rank(self):
        rng = np.random.default_rng(29)
        for m, n in [(5, 5), (8, 3), (3, 8)]:
            q = polar_factor_exact(rng.standard_normal((m, n)))
            k = min(m, n)
            gram = q.T @ q if m >= n else q @ q.T
            assert np.linalg.norm(gram - np.eye(k)) <= 1e-12


class TestNewtonSchulz:
    def test_identity_is_near_fixed_point(self):
        # Frobenius prenormalization rescales the identity, so five cubic steps
        # return it only to rounding-level accuracy, not bit-exactly.
        out = polar_factor_newton_schulz(np.eye(2), iters=5)
        assert np.allclose(out, np.eye(2), atol=1e-10)

    def test_diag_converges(self):
        out = polar_factor_newton_schulz(np.diag([3.0, 1.0]), iters=20)
        assert np.linalg.norm(out - polar_factor_exact(np.diag([3.0, 1.0]))) <= 1e-6

    def test_well_conditioned_accuracy(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            a = _random_conditioned(rng, 10, cond=100.0)
            exact = polar_factor_exact(a)
            approx = polar_factor_newton_schulz(a, iters=20)
            rel = np.linalg.norm(approx - exact) / np.linalg.norm(exact)
            assert rel <= 1e-3
            assert np.linalg.norm(approx.T @ approx - np.eye(10)) <= 1e-3

    def test_zero_matrix_errors(self):
        with pytest.raises(DegenerateInputError):
            polar_factor_newton_schulz(np.zeros((2, 2)))


def _random_conditioned(rng, n, cond):
    """Random n x n matrix with singular values log-spaced in [1/cond, 1]."""
    u = random_semi_orthogonal(rng, n, n)
    v = random_semi_orthogonal(rng, n, n)
    s = np.logspace(0.0, -np.log10(cond), n)
    return u @ np.diag(s) @ v.T
