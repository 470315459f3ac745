"""Bounded time-varying delay emulation between master and slave.

A DelayProfile answers "what is the delay at time t" deterministically; a
DelayLine keeps a timestamped history of a vector signal and answers
"value at t - T" queries by linear interpolation.  The piecewise-uniform
profile reproduces the hardware-experiment style of random delays held
constant between update instants, so discontinuous jumps are expected and
no smoothing is applied.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

# window index robustness: t sitting a few ulp below an update boundary must
# land in the window that starts there
_EDGE_EPS = 1e-9


@dataclass(frozen=True)
class DelayProfile:
    """constant{T} | sinusoid{T0, amplitude, period} | piecewise_uniform{lo, hi, update_period, seed}"""

    kind: str
    T: float = 0.0
    T0: float = 0.0
    amplitude: float = 0.0
    period: float = 1.0
    lo: float = 0.0
    hi: float = 0.0
    update_period: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("constant", "sinusoid", "piecewise_uniform"):
            raise ValueError(f"unknown delay profile kind {self.kind!r}")
        if self.kind == "constant" and self.T < 0:
            raise ValueError("constant delay must be >= 0")
        if self.kind == "sinusoid":
            if self.T0 - abs(self.amplitude) < 0 or self.period <= 0:
                raise ValueError("sinusoid delay must stay >= 0 with period > 0")
        if self.kind == "piecewise_uniform":
            if not (0 <= self.lo <= self.hi) or self.update_period <= 0:
                raise ValueError("require 0 <= lo <= hi and update_period > 0")

    @property
    def max_delay(self) -> float:
        if self.kind == "constant":
            return self.T
        if self.kind == "sinusoid":
            return self.T0 + abs(self.amplitude)
        return self.hi


def delay_at(profile: DelayProfile, t) -> float | np.ndarray:
    """Delay T(t); accepts a scalar or an array of query times.

    Deterministic for a given profile (including seed): the value inside
    each piecewise window depends only on (seed, window index).
    """
    if profile.kind == "constant":
        return profile.T if np.isscalar(t) else np.full(np.shape(t), profile.T)
    if profile.kind == "sinusoid":
        return profile.T0 + profile.amplitude * np.sin(
            2.0 * np.pi * np.asarray(t) / profile.period)
    k = np.floor(np.asarray(t, dtype=float) / profile.update_period + _EDGE_EPS).astype(np.int64)
    if k.ndim == 0:
        return _window_value(profile, int(k))
    uniq = np.unique(k)
    lut = {int(ki): _window_value(profile, int(ki)) for ki in uniq}
    return np.array([lut[int(ki)] for ki in k.ravel()]).reshape(k.shape)


def _window_value(profile: DelayProfile, k: int) -> float:
    rng = np.random.default_rng((profile.seed, k))
    return float(profile.lo + (profile.hi - profile.lo) * rng.random())


class DelayLine:
    """Timestamped history buffer for one vector signal.

    Timestamps must be pushed strictly increasing.  Samples strictly older
    than `horizon` before the newest push are dropped, so the line always
    covers the full horizon and nothing more; callers size the horizon
    with a margin over the largest delay they will query.
    """

    def __init__(self, horizon: float):
        if horizon <= 0:
            raise ValueError("horizon must be > 0")
        self.horizon = float(horizon)
        self._ts: list[float] = []
        self._vals: list[np.ndarray] = []
        self._start = 0  # live window begins here; dead prefix compacted lazily

    def __len__(self) -> int:
        return len(self._ts) - self._start

    @property
    def timestamps(self) -> list[float]:
        return self._ts[self._start:]

    def push(self, t: float, value) -> None:
        if self._ts and t <= self._ts[-1]:
            raise ValueError(f"timestamps must increase: {t} after {self._ts[-1]}")
        self._ts.append(float(t))
        self._vals.append(np.asarray(value, dtype=float).copy())
        cutoff = t - self.horizon
        i = self._start
        while self._ts[i] < cutoff:
            i += 1
        self._start = i
        if self._start > 4096:
            del self._ts[:self._start]
            del self._vals[:self._start]
            self._start = 0

    def sample(self, t_query: float) -> np.ndarray:
        """Linearly interpolated value at t_query, clamped at both ends."""
        if not self._ts:
            raise ValueError("cannot sample an empty delay line")
        ts = self._ts
        if t_query <= ts[self._start]:
            return self._vals[self._start].copy()
        if t_query >= ts[-1]:
            return self._vals[-1].copy()
        i = bisect_right(ts, t_query, lo=self._start) - 1
        t0, t1 = ts[i], ts[i + 1]
        w = (t_query - t0) / (t1 - t0)
        return self._vals[i] + w * (self._vals[i + 1] - self._vals[i])

    def sample_delayed(self, t: float, T: float) -> np.ndarray:
        """Value of the signal at t - T.  Pre-history queries clamp to the
        earliest stored sample; T must be >= 0 so no future value is read."""
        if T < 0:
            raise ValueError("delay must be >= 0")
        return self.sample(t - T)
