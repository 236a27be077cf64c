"""
Test suite for trace conditioning
"""
import numpy as np
import pytest
from pydantic import ValidationError

from app.exceptions import DegenerateRangeError, TraceError
from app.models import Scaler, SignalTrace, TraceScale
from tools.preprocess import (
    apply_scaler, downsample_mean, extract_small_scale, fit_minmax, invert_scaler, local_mean,
)


def _trace(values, rate=1000.0, scale=TraceScale.LINEAR):
    return SignalTrace(samples=values, sample_rate_hz=rate, scale=scale)


class TestDownsampleMean:

    def test_block_mean_and_rate(self):
        out = downsample_mean(_trace(np.arange(1.0, 11.0), rate=10000.0), 10)
        assert out.samples.tolist() == [5.5]
        assert out.sample_rate_hz == 1000.0

    def test_factor_one_is_identity(self, ramp_trace):
        assert np.array_equal(downsample_mean(ramp_trace, 1).samples, ramp_trace.samples)

    def test_tail_is_dropped(self):
        assert len(downsample_mean(_trace(np.arange(1.0, 26.0)), 10)) == 2

    def test_composes(self, fading_trace):
        trace = _trace(fading_trace.samples[:3000])
        once = downsample_mean(trace, 6)
        twice = downsample_mean(downsample_mean(trace, 2), 3)
        assert np.allclose(once.samples, twice.samples, rtol=1e-12)

    def test_rejects_bad_factor(self, ramp_trace):
        with pytest.raises(ValueError):
            downsample_mean(ramp_trace, 0)
        with pytest.raises(TraceError):
            downsample_mean(ramp_trace, 500)


class TestLocalMean:

    def test_constant(self):
        out = local_mean(_trace(np.full(120, 3.5)), 50)
        assert np.allclose(out.samples, 3.5)

    def test_truncated_edges(self):
        assert np.allclose(local_mean(_trace([1.0, 2.0, 3.0]), 3).samples, [1.5, 2.0, 2.5])

    def test_window_one_is_identity(self, ramp_trace):
        assert np.array_equal(local_mean(ramp_trace, 1).samples, ramp_trace.samples)

    def test_length_preserved(self, ramp_trace):
        assert len(local_mean(ramp_trace, 50)) == len(ramp_trace)

    def test_window_longer_than_trace(self):
        with pytest.raises(TraceError):
            local_mean(_trace([1.0, 2.0]), 3)


class TestExtractSmallScale:

    def test_constant_gives_ones(self):
        out = extract_small_scale(_trace(np.full(100, 7.0)), 50)
        assert np.allclose(out.samples, 1.0)

    def test_recovers_ripple(self):
        t = np.arange(5000) / 1000.0
        ripple = 1.0 + 0.5 * np.sin(2 * np.pi * 50.0 * t)
        ramp = 1.0 + t
        out = extract_small_scale(_trace(ramp * ripple), 100)
        interior = slice(100, -100)
        assert np.corrcoef(out.samples[interior], ripple[interior])[0, 1] > 0.99

    def test_unit_local_mean_on_periodic_fading(self):
        """With a window of whole ripple periods the local mean is constant, so the output has unit mean"""
        t = np.arange(2000)
        trace = _trace(2.0 * (1.0 + 0.5 * np.sin(2 * np.pi * t / 25.0)))
        out = extract_small_scale(trace, 50)
        check = local_mean(out, 50).samples[50:-50]
        assert np.allclose(check, 1.0, atol=1e-9)

    def test_zero_sample_names_index(self):
        trace = _trace([1.0, 0.0, 2.0], scale=TraceScale.NORMALIZED)
        with pytest.raises(TraceError, match="index 1"):
            extract_small_scale(trace, 1)


class TestMinMax:

    def test_fit_extremes(self):
        scaler = fit_minmax(_trace([-10.0, 0.0, 10.0], scale=TraceScale.NORMALIZED))
        assert (scaler.x_min, scaler.x_max) == (-10.0, 10.0)

    def test_constant_is_degenerate(self):
        with pytest.raises(DegenerateRangeError, match="degenerate range"):
            fit_minmax(_trace([5.0, 5.0, 5.0]))

    def test_identity_scaler(self):
        scaler = fit_minmax(_trace([1e-9, 1.0]), 0.0, 1.0)
        assert apply_scaler(scaler, 0.5) == pytest.approx(0.5, abs=1e-8)

    def test_default_range(self):
        scaler = Scaler(x_min=-10.0, x_max=10.0)
        assert apply_scaler(scaler, 0.0) == 0.0
        assert apply_scaler(scaler, 10.0) == 1.0
        assert apply_scaler(scaler, -10.0) == -1.0

    def test_custom_range(self):
        assert apply_scaler(Scaler(x_min=0.0, x_max=4.0, new_min=0.0, new_max=1.0), 1.0) == 0.25

    def test_scaler_rejects_degenerate_range(self):
        with pytest.raises(ValidationError, match="degenerate range"):
            Scaler(x_min=1.0, x_max=1.0)

    def test_round_trip(self):
        scaler = Scaler(x_min=-10.0, x_max=10.0)
        for v in (-10.0, -3.7, 10.0):
            assert invert_scaler(scaler, apply_scaler(scaler, v)) == pytest.approx(v, rel=1e-12)

    def test_inverse_anchors(self):
        scaler = Scaler(x_min=2.0, x_max=6.0)
        assert invert_scaler(scaler, 1.0) == 6.0
        assert invert_scaler(scaler, 0.0) == 4.0

    def test_monotone(self, rng):
        scaler = Scaler(x_min=-3.0, x_max=8.0)
        values = np.sort(rng.uniform(-10, 10, 100))
        assert np.all(np.diff(apply_scaler(scaler, values)) > 0)

    def test_trace_extrapolation_is_flagged(self):
        scaler = Scaler(x_min=1.0, x_max=2.0)
        out = apply_scaler(scaler, _trace([0.5, 1.5, 3.0]))
        assert out.scale == TraceScale.NORMALIZED
        assert out.metadata["extrapolated"] == 2
        assert out.samples[1] == pytest.approx(0.0)

    def test_trace_round_trip(self, fading_trace):
        scaler = fit_minmax(fading_trace)
        restored = invert_scaler(scaler, apply_scaler(scaler, fading_trace))
        assert np.allclose(restored.samples, fading_trace.samples, rtol=1e-12)
