import numpy as np
import pytest

from fwopt.constraints import L2Ball, LinfBall
from fwopt.metrics import average_gap
from fwopt.optimizers import LionParams, SfwParams
from fwopt.problems import GaussianNoise, GradOracle, IsotropicQuadratic, NoNoise
from fwopt.runner import project_radially, run_lion, run_sfw


class TestProjection:
    def test_infeasible_start_scaled_with_warning(self):
        cset = L2Ball(radius=1.0, dim=3)
        x = np.array([3.0, 0.0, 4.0])
        with pytest.warns(UserWarning, match="scaling"):
            projected = project_radially(cset, x)
        assert cset.defining_norm(projected) == pytest.approx(1.0)
        assert np.allclose(projected, x / 5.0)

    def test_feasible_start_untouched(self):
        cset = LinfBall(radius=1.0, dim=2)
        x = np.array([0.5, -0.5])
        assert project_radially(cset, x) is x

    def test_run_projects_start(self):
        cset = LinfBall(radius=1.0, dim=4)
        oracle = GradOracle(IsotropicQuadratic(dim=4), NoNoise(), seed=0)
        params = SfwParams.constant(eta=0.5, gamma=0.5, beta1=0.0)
        with pytest.warns(UserWarning):
            trace = run_sfw(params, cset, oracle, np.full(4, 7.0), 10)
        assert len(trace) == 10


class TestGapThinning:
    def test_gap_every_records_subset(self):
        cset = LinfBall(radius=1.0, dim=3)
        oracle = GradOracle(IsotropicQuadratic(dim=3), GaussianNoise(0.5), seed=5)
        params = SfwParams.constant(eta=0.1, gamma=0.5, beta1=0.1)
        full = run_sfw(params, cset, oracle, np.full(3, 0.5), 20, gap_every=1)
        thin = run_sfw(params, cset, oracle, np.full(3, 0.5), 20, gap_every=5)
        assert thin.steps == [1, 6, 11, 16]
        picked = [full.fw_gap[t - 1] for t in thin.steps]
        assert thin.fw_gap == picked

    def test_average_uses_recorded_steps_only(self):
        cset = LinfBall(radius=1.0, dim=3)
        oracle = GradOracle(IsotropicQuadratic(dim=3), NoNoise(), seed=0)
        params = SfwParams.constant(eta=0.5, gamma=1.0, beta1=0.0)
        thin = run_sfw(params, cset, oracle, np.full(3, 1.0), 8, gap_every=4)
        assert average_gap(thin) == pytest.approx(np.mean(thin.fw_gap))


class TestLionRunner:
    def test_trace_tags_and_length(self):
        params = LionParams.constant(beta1=0.9, beta2=0.99, eta=0.1, lam=1.0)
        oracle = GradOracle(IsotropicQuadratic(dim=5), GaussianNoise(1.0), seed=9)
        trace = run_lion(params, oracle, np.full(5, 0.5), 30, run_id="r7", seed=9, algo="lion")
        assert trace.run_id == "r7" and trace.algo == "lion"
        assert trace.steps == list(range(1, 31))
        assert all(np.isfinite(trace.fw_gap))
