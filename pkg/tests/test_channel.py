"""Delay profiles and delay lines: boundedness, determinism, causality,
interpolation accuracy, eviction."""

import numpy as np
import pytest

from telesim.channel import DelayLine, DelayProfile, delay_at

PW = DelayProfile(kind="piecewise_uniform", lo=0.3, hi=0.9,
                  update_period=0.096, seed=42)


class TestDelayProfile:
    def test_constant(self):
        p = DelayProfile(kind="constant", T=0.5)
        for t in (0.0, 0.1, 17.3):
            assert delay_at(p, t) == 0.5

    def test_piecewise_bounds_and_update_instants(self):
        t = np.arange(0, 60.0, 1e-3)
        T = delay_at(PW, t)
        assert np.all((T >= 0.3) & (T <= 0.9))
        changes = np.nonzero(np.diff(T) != 0.0)[0] + 1
        # changes occur only at multiples of the update period
        k = t[changes] / 0.096
        assert np.allclose(k, np.round(k), atol=1e-6)

    def test_determinism(self):
        t = np.linspace(0, 30, 5000)
        assert np.array_equal(delay_at(PW, t), delay_at(PW, t))
        other = DelayProfile(kind="piecewise_uniform", lo=0.3, hi=0.9,
                             update_period=0.096, seed=43)
        assert not np.array_equal(delay_at(PW, t), delay_at(other, t))

    def test_boundedness_property(self, rng):
        t = rng.uniform(0, 3600, 1_000_000)
        T = delay_at(PW, t)
        assert T.min() >= 0.3 and T.max() <= 0.9

    def test_sinusoid(self):
        p = DelayProfile(kind="sinusoid", T0=0.5, amplitude=0.2, period=4.0)
        assert delay_at(p, 0.0) == pytest.approx(0.5)
        assert delay_at(p, 1.0) == pytest.approx(0.7)
        with pytest.raises(ValueError):
            DelayProfile(kind="sinusoid", T0=0.1, amplitude=0.2, period=4.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            DelayProfile(kind="warp")
        with pytest.raises(ValueError):
            DelayProfile(kind="piecewise_uniform", lo=0.5, hi=0.3,
                         update_period=0.1)


class TestDelayLine:
    def test_push_and_length(self):
        line = DelayLine(horizon=10.0)
        assert len(line) == 0
        line.push(0.0, [1.0, 2.0])
        assert len(line) == 1
        for k in range(1, 10):
            line.push(k * 0.1, [float(k), 0.0])
        assert len(line) == 10

    def test_eviction_keeps_horizon(self):
        line = DelayLine(horizon=1.0)
        for k in range(5000):
            line.push(k * 1e-3, [float(k)])
        t_last = 4999 * 1e-3
        assert line.timestamps[0] >= t_last - 1.0 - 1e-12
        # the retained window still spans the whole horizon
        assert line.timestamps[-1] - line.timestamps[0] >= 1.0 - 2e-3

    def test_monotone_push_enforced(self):
        line = DelayLine(horizon=1.0)
        line.push(0.5, [0.0])
        with pytest.raises(ValueError):
            line.push(0.5, [1.0])

    def test_linear_signal_exact(self):
        line = DelayLine(horizon=5.0)
        for k in range(3000):
            line.push(k * 1e-3, [k * 1e-3])
        v = line.sample_delayed(2.0, 0.5)
        assert v[0] == pytest.approx(1.5, abs=1e-12)

    def test_prehistory_clamp(self):
        line = DelayLine(horizon=5.0)
        line.push(0.0, [7.0])
        line.push(0.5, [9.0])
        assert line.sample_delayed(0.2, 0.9)[0] == 7.0

    def test_sinusoid_interpolation_error(self):
        line = DelayLine(horizon=2.0)
        ts = np.arange(0, 1.5, 1e-3)
        for t in ts:
            line.push(t, [np.sin(t)])
        for t in np.linspace(0.5, 1.4, 200):
            v = line.sample_delayed(t, 0.3)
            assert abs(v[0] - np.sin(t - 0.3)) < 1e-6

    def test_causality(self, rng):
        line = DelayLine(horizon=3.0)
        for k in range(2000):
            line.push(k * 1e-3, [k * 1e-3])
        for _ in range(200):
            t = rng.uniform(0.0, 1.999)
            T = rng.uniform(0.0, 1.0)
            assert line.sample_delayed(t, T)[0] <= t + 1e-12

    def test_empty_line_rejected(self):
        with pytest.raises(ValueError):
            DelayLine(horizon=1.0).sample(0.0)

    def test_negative_delay_rejected(self):
        line = DelayLine(horizon=1.0)
        line.push(0.0, [0.0])
        with pytest.raises(ValueError):
            line.sample_delayed(1.0, -0.1)
