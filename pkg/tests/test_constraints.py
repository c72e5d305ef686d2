import numpy as np
import pytest

from fwopt.constraints import L2Ball, LinfBall, SpectralBall, fw_gap
from fwopt.errors import DimensionError, FeasibilityError
from fwopt.tensor import inner


def feasible_pool_linf(rng, ball, n):
    return rng.uniform(-ball.radius, ball.radius, size=(n, ball.dim))


def feasible_pool_l2(rng, ball, n):
    g = rng.standard_normal((n, ball.dim))
    radii = ball.radius * rng.random(n) ** (1.0 / ball.dim)
    return g * (radii / np.linalg.norm(g, axis=1))[:, None]


def feasible_pool_spectral(rng, ball, n):
    stack = rng.standard_normal((n, ball.rows, ball.cols))
    tops = np.linalg.svd(stack, compute_uv=False)[:, 0]
    scales = ball.radius * rng.random(n) / tops
    return stack * scales[:, None, None]


BALLS = [
    (LinfBall(radius=1.5, dim=8), feasible_pool_linf),
    (L2Ball(radius=2.0, dim=8), feasible_pool_l2),
    (SpectralBall(radius=1.25, rows=5, cols=3), feasible_pool_spectral),
]


def random_grad(rng, ball):
    return rng.standard_normal(ball.shape)


class TestLmo:
    def test_linf_hand_value(self):
        ball = LinfBall(radius=2.0, dim=3)
        assert np.array_equal(ball.lmo(np.array([1.0, -3.0, 0.0])), [-2.0, 2.0, 0.0])

    def test_spectral_hand_value(self):
        ball = SpectralBall(radius=1.0, rows=2, cols=2)
        assert np.allclose(ball.lmo(np.diag([3.0, 1.0])), -np.eye(2), atol=1e-14)

    def test_l2_hand_value(self):
        ball = L2Ball(radius=2.0, dim=2)
        assert np.allclose(ball.lmo(np.array([3.0, 4.0])), [-1.2, -1.6])
        assert np.array_equal(ball.lmo(np.zeros(2)), np.zeros(2))

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            LinfBall(radius=1.0, dim=3).lmo(np.zeros(4))
        with pytest.raises(DimensionError):
            SpectralBall(radius=1.0, rows=2, cols=3).lmo(np.zeros((3, 2)))

    @pytest.mark.parametrize("ball,pool_fn", BALLS, ids=["linf", "l2", "spectral"])
    def test_optimality(self, ball, pool_fn):
        # LMO value matches -radius * dual norm and beats 1e4 random feasible
        # points, for 100 random gradients.
        rng = np.random.default_rng(101)
        pool = pool_fn(rng, ball, 10_000)
        for _ in range(100):
            g = random_grad(rng, ball)
            u = ball.lmo(g)
            assert ball.contains(u, 1e-9)
            value = inner(u, g)
            assert value == pytest.approx(-ball.radius * ball.dual_norm(g), rel=1e-9)
            sampled = pool.reshape(pool.shape[0], -1) @ g.ravel()
            assert value <= sampled.min() + 1e-9

    @pytest.mark.parametrize("ball,pool_fn", BALLS, ids=["linf", "l2", "spectral"])
    def test_scale_invariance(self, ball, pool_fn):
        # argmin over the ball ignores positive rescaling of the gradient.
        rng = np.random.default_rng(103)
        for _ in range(100):
            g = random_grad(rng, ball)
            c = float(rng.uniform(0.01, 100.0))
            assert np.allclose(ball.lmo(c * g), ball.lmo(g), atol=1e-10)


class TestDiameter:
    def test_hand_values(self):
        assert L2Ball(radius=3.0, dim=5).diameter() == 6.0
        assert LinfBall(radius=1.0, dim=4).diameter() == 4.0
        assert SpectralBall(radius=1.0, rows=2, cols=5).diameter() == pytest.approx(2.0 * np.sqrt(2.0))

    def test_spectral_diameter_by_sampling(self):
        # Oracle: no pair of feasible matrices is further apart in Frobenius
        # distance, and +/- radius * semi-orthogonal attains the formula.
        rng = np.random.default_rng(107)
        ball = SpectralBall(radius=1.0, rows=2, cols=5)
        pool = feasible_pool_spectral(rng, ball, 2000)
        diffs = pool[:1000] - pool[1000:]
        dists = np.linalg.norm(diffs.reshape(1000, -1), axis=1)
        assert dists.max() <= ball.diameter() + 1e-9

        q, _ = np.linalg.qr(rng.standard_normal((5, 2)))
        witness = ball.radius * q.T
        attained = np.linalg.norm(witness - (-witness))
        assert attained == pytest.approx(ball.diameter(), rel=1e-12)


class TestDualNorm:
    def test_hand_values(self):
        assert LinfBall(radius=1.0, dim=3).dual_norm(np.array([1.0, -2.0, 3.0])) == 6.0
        assert SpectralBall(radius=1.0, rows=2, cols=2).dual_norm(np.diag([2.0, 1.0])) == pytest.approx(3.0)
        assert L2Ball(radius=1.0, dim=2).dual_norm(np.zeros(2)) == 0.0
        assert LinfBall(radius=1.0, dim=2).dual_norm(np.zeros(2)) == 0.0


class TestContains:
    def test_boundary_and_outside(self):
        assert LinfBall(radius=1.0, dim=2).contains(np.array([1.0, -1.0]), 0.0)
        assert not L2Ball(radius=1.0, dim=2).contains(np.array([1.0, 1.0]), 0.0)
        ball = SpectralBall(radius=2.0, rows=2, cols=2)
        assert ball.contains(np.diag([2.0 + 1e-12, 0.0]), 1e-9)


class TestFwGap:
    def test_quadratic_identity_against_direct_max(self):
        # F(x) = 0.5 ||x||^2, grad = x: closed form r ||x||_1 + ||x||^2,
        # cross-checked against maximizing <v - x, -grad> over random feasible v.
        rng = np.random.default_rng(113)
        ball = LinfBall(radius=1.5, dim=6)
        pool = feasible_pool_linf(rng, ball, 10_000)
        for _ in range(20):
            x = rng.uniform(-ball.radius, ball.radius, size=6)
            grad = x
            report = fw_gap(ball, x, grad)
            expected = ball.radius * np.sum(np.abs(x)) + float(np.dot(x, x))
            assert report.gap == pytest.approx(expected, rel=1e-12)
            direct = ((pool - x) @ (-grad)).max()
            assert direct <= report.gap + 1e-9
            witness = inner(report.lmo_point - x, -grad)
            assert abs(witness - report.gap) <= 1e-10

    def test_zero_point(self):
        ball = L2Ball(radius=2.5, dim=4)
        g = np.array([1.0, -2.0, 0.5, 0.0])
        report = fw_gap(ball, np.zeros(4), g)
        assert report.gap == pytest.approx(ball.radius * ball.dual_norm(g), rel=1e-12)

    def test_zero_gradient(self):
        ball = LinfBall(radius=1.0, dim=3)
        report = fw_gap(ball, np.array([0.5, -0.5, 0.0]), np.zeros(3))
        assert report.gap == 0.0
        assert report.kkt_residual == 0.0

    def test_infeasible_raises(self):
        with pytest.raises(FeasibilityError):
            fw_gap(LinfBall(radius=1.0, dim=2), np.array([2.0, 0.0]), np.ones(2))

    @pytest.mark.parametrize("ball,pool_fn", BALLS, ids=["linf", "l2", "spectral"])
    def test_nonnegative_on_feasible(self, ball, pool_fn):
        rng = np.random.default_rng(127)
        pool = pool_fn(rng, ball, 100)
        for x in pool:
            report = fw_gap(ball, x, rng.standard_normal(ball.shape))
            assert report.gap >= -1e-10

    def test_kkt_iff_zero_gap(self):
        # Linear objective F(x) = <w, x>: the l-inf stationary point is
        # x = -r sign(w); nearby non-stationary points show a positive residual.
        rng = np.random.default_rng(131)
        ball = LinfBall(radius=2.0, dim=5)
        w = rng.standard_normal(5)
        x_star = -ball.radius * np.sign(w)
        report = fw_gap(ball, x_star, w)
        assert abs(report.gap) <= 1e-9
        assert abs(report.kkt_residual) <= 1e-9

        x_off = 0.5 * x_star
        report_off = fw_gap(ball, x_off, w)
        assert report_off.gap > 1e-9
        assert report_off.kkt_residual > 1e-9
        assert report_off.gap == pytest.approx(ball.radius * report_off.kkt_residual, rel=1e-12)

    def test_spectral_gap_single_svd_consistency(self):
        rng = np.random.default_rng(137)
        ball = SpectralBall(radius=1.0, rows=4, cols=3)
        x = feasible_pool_spectral(rng, ball, 1)[0]
        grad = rng.standard_normal((4, 3))
        report = fw_gap(ball, x, grad)
        assert report.gap == pytest.approx(ball.radius * ball.dual_norm(grad) + inner(x, grad), rel=1e-12)
        assert np.allclose(report.lmo_point, ball.lmo(grad), atol=1e-12)
