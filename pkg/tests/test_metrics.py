import numpy as np
import pytest

from fwopt.metrics import (
    CSV_HEADER,
    QuantileBand,
    RunTrace,
    average_gap,
    average_grad_norm,
    band_over_checkpoints,
    fmt17,
    parse_trace_csv,
    quantile_band,
    rate_slope,
    write_trace_csv,
)


def make_trace(gaps, norms=None):
    trace = RunTrace(run_id="0", seed=0, algo="sfw")
    norms = norms if norms is not None else [1.0] * len(gaps)
    for i, (g, n) in enumerate(zip(gaps, norms), start=1):
        trace.record(i, g, n, 0.0, 0.0, 0.0)
    return trace


class TestAverages:
    def test_constant_gap(self):
        assert average_gap(make_trace([2.0] * 10)) == 2.0

    def test_two_values(self):
        assert average_gap(make_trace([4.0, 2.0])) == 3.0

    def test_grad_norm_hand_values(self):
        assert average_grad_norm(make_trace([0.0, 0.0], norms=[1.0, 1.0])) == 1.0
        assert average_grad_norm(make_trace([0.0, 0.0], norms=[0.0, 2.0])) == 1.0

    def test_empty_trace_errors(self):
        with pytest.raises(ValueError):
            average_gap(RunTrace(run_id="0", seed=0, algo="x"))

    def test_chunking_invariance(self):
        # Streaming in two halves agrees with the batch mean to 1e-12.
        rng = np.random.default_rng(0)
        values = rng.uniform(0.1, 5.0, size=1001).tolist()
        full = average_gap(make_trace(values))
        n1 = len(values) // 2
        partial = (sum(values[:n1]) + sum(values[n1:])) / len(values)
        assert full == pytest.approx(partial, rel=1e-12)

    def test_matches_recomputation_from_iterates(self):
        # Oracle: store every iterate of a real 1000-step run, recompute each
        # gap and gradient norm from scratch, and compare the averages.
        from fwopt.constraints import LinfBall, fw_gap
        from fwopt.optimizers import SfwParams, SfwState, sfw_step
        from fwopt.problems import GaussianNoise, GradOracle, IsotropicQuadratic, grad_true
        from fwopt.runner import run_sfw

        cset = LinfBall(radius=1.0, dim=6)
        obj = IsotropicQuadratic(dim=6)
        params = SfwParams.constant(eta=0.05, gamma=0.3, beta1=0.1)
        x1 = np.full(6, 0.5)
        oracle = GradOracle(obj, GaussianNoise(1.0), seed=11)
        trace = run_sfw(params, cset, oracle, x1, 1000, seed=11)

        state = SfwState.initial(x1)
        iterates = []
        for _ in range(1000):
            iterates.append(state.x)
            state, _ = sfw_step(state, params, cset, GradOracle(obj, GaussianNoise(1.0), seed=11))
        gaps = [fw_gap(cset, x, grad_true(obj, x)).gap for x in iterates]
        norms = [float(np.linalg.norm(grad_true(obj, x))) for x in iterates]
        assert average_gap(trace) == pytest.approx(sum(gaps) / 1000, rel=1e-12)
        assert average_grad_norm(trace) == pytest.approx(sum(norms) / 1000, rel=1e-12)


class TestQuantileBand:
    def test_nearest_rank_1_to_100(self):
        values = list(range(1, 101))
        assert quantile_band(values, 0.1) == (10.0, 50.0, 90.0)

    def test_single_run(self):
        assert quantile_band([3.5], 0.01) == (3.5, 3.5, 3.5)

    def test_all_equal(self):
        assert quantile_band([2.0] * 7, 0.25) == (2.0, 2.0, 2.0)

    def test_ordering_invariant(self):
        rng = np.random.default_rng(2)
        values = rng.standard_normal(37)
        base = quantile_band(values, 0.05)
        assert quantile_band(rng.permutation(values), 0.05) == base
        lo, med, hi = base
        assert lo <= med <= hi

    def test_monotone_under_max_append(self):
        rng = np.random.default_rng(3)
        values = rng.standard_normal(50).tolist()
        before = quantile_band(values, 0.1)
        after = quantile_band(values + [max(values) + 1.0], 0.1)
        assert all(a >= b for a, b in zip(after, before))

    def test_rejects_bad_delta(self):
        with pytest.raises(ValueError):
            quantile_band([1.0, 2.0], 0.5)
        with pytest.raises(ValueError):
            quantile_band([], 0.1)

    def test_band_ordering_invariant_holds_per_checkpoint(self):
        rng = np.random.default_rng(5)
        curves = rng.uniform(0.1, 4.0, size=(25, 12))
        band = band_over_checkpoints("x", list(range(1, 13)), curves, 0.05)
        assert all(lo <= med <= hi for lo, med, hi
                   in zip(band.lower, band.median, band.upper))
        assert band.delta == 0.05

    def test_band_rejects_violated_ordering(self):
        with pytest.raises(ValueError):
            QuantileBand(label="x", delta=0.1, checkpoints=[1],
                         lower=[2.0], median=[1.0], upper=[3.0])
        with pytest.raises(ValueError):
            QuantileBand(label="x", delta=0.1, checkpoints=[1, 2],
                         lower=[0.0], median=[0.0], upper=[0.0])


class TestRateSlope:
    def test_exact_inverse_sqrt(self):
        pairs = [(t, t ** -0.5) for t in (10.0, 100.0, 1000.0, 10000.0)]
        assert rate_slope(pairs) == pytest.approx(-0.5, abs=1e-12)

    def test_constant_metric(self):
        assert rate_slope([(10.0, 3.0), (100.0, 3.0), (1000.0, 3.0)]) == pytest.approx(0.0, abs=1e-12)

    def test_exact_power_with_constant(self):
        pairs = [(t, 7.3 * t ** -1.25) for t in (10.0, 50.0, 250.0)]
        assert rate_slope(pairs) == pytest.approx(-1.25, abs=1e-12)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            rate_slope([(10.0, 1.0), (100.0, 0.1)])
        with pytest.raises(ValueError):
            rate_slope([(10.0, 1.0), (100.0, -0.1), (1000.0, 0.01)])


class TestCsvRoundTrip:
    def test_header_and_formatting(self, tmp_path):
        trace = RunTrace(run_id="r1", seed=42, algo="lion")
        trace.record(1, 1.0 / 3.0, 2.0, 3.0, 0.0, 1.5)
        path = tmp_path / "trace.csv"
        write_trace_csv(path, [trace])
        text = path.read_text()
        assert text.splitlines()[0] == CSV_HEADER
        assert fmt17(1.0 / 3.0) in text
        assert float(fmt17(1.0 / 3.0)) == 1.0 / 3.0  # 17 digits round-trips binary64

    def test_parse_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        traces = []
        for rid in range(3):
            trace = RunTrace(run_id=str(rid), seed=rid, algo="muon")
            for t in range(1, 6):
                vals = rng.uniform(0.0, 2.0, size=5)
                trace.record(t, *vals)
            traces.append(trace)
        path = tmp_path / "multi.csv"
        write_trace_csv(path, traces)
        parsed = sorted(parse_trace_csv(path), key=lambda tr: tr.run_id)
        for orig, back in zip(traces, parsed):
            assert back.run_id == orig.run_id and back.seed == orig.seed
            assert back.steps == orig.steps
            assert back.fw_gap == orig.fw_gap  # exact through 17-digit decimal

    def test_parse_errors_carry_line_numbers(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(CSV_HEADER + "\n0,1,sfw,notanint,1,1,1,1,1\n")
        from fwopt.errors import ConfigError

        with pytest.raises(ConfigError, match=":2:"):
            parse_trace_csv(path)

    def test_strictly_increasing_steps_enforced(self):
        trace = RunTrace(run_id="0", seed=0, algo="sfw")
        trace.record(1, 0, 0, 0, 0, 0)
        with pytest.raises(ValueError):
            trace.record(1, 0, 0, 0, 0, 0)
