"""Rate-adaptive random event discard (the keep-probability filter).

Each event is kept independently with probability ``gamma``. ``gamma``
is adapted toward ``min(1, a / rate_raw)`` with exponential smoothing so
that the post-filter rate settles at or below the configured upper
bound ``a`` whenever the raw rate exceeds it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, OrderingError

_US = 1_000_000.0


@dataclass
class GammaConfig:
    a_evps: float = 5e6            # upper bound on the filtered rate
    beta: float = 0.25             # smoothing gain of the gamma update
    gamma_min: float = 0.01        # floor preventing total starvation
    rate_window_us: int = 10_000   # sliding window of the rate estimator

    def validate(self) -> None:
        if self.a_evps <= 0:
            raise ConfigurationError(
                f"gamma.a must be positive, got {self.a_evps}", key="gamma.a")
        if not 0.0 < self.beta <= 1.0:
            raise ConfigurationError(
                f"gamma.beta must be in (0, 1], got {self.beta}", key="gamma.beta")
        if not 0.0 < self.gamma_min < 1.0:
            raise ConfigurationError(
                f"gamma.min must be in (0, 1), got {self.gamma_min}",
                key="gamma.min")
        if self.rate_window_us <= 0:
            raise ConfigurationError(
                f"gamma.rate_window_us must be positive, got {self.rate_window_us}",
                key="gamma.rate_window_us")


class SlidingRateEstimator:
    """Event rate over a sliding window ending at the newest timestamp.

    The window is inclusive at its tail: events with
    ``t >= newest - window`` are counted. An empty estimator reports 0.
    """

    def __init__(self, window_us: int):
        if window_us <= 0:
            raise ConfigurationError(
                f"rate window must be positive, got {window_us}",
                key="gamma.rate_window_us")
        self.window_us = int(window_us)
        self._tail = np.empty(0, dtype=np.int64)

    def update(self, timestamps: np.ndarray) -> float:
        """Fold a batch of ordered timestamps in; returns the new estimate."""
        t = np.asarray(timestamps, dtype=np.int64)
        if t.size:
            if np.any(np.diff(t) < 0):
                raise OrderingError("rate estimator requires ordered timestamps")
            if self._tail.size and t[0] < self._tail[-1]:
                raise OrderingError(
                    f"timestamp {t[0]} is older than the newest seen {self._tail[-1]}"
                )
            merged = np.concatenate([self._tail, t]) if self._tail.size else t
            cut = merged[-1] - self.window_us
            self._tail = merged[np.searchsorted(merged, cut, side="left"):]
        return self.rate_evps

    @property
    def rate_evps(self) -> float:
        if self._tail.size == 0:
            return 0.0
        return self._tail.size / (self.window_us / _US)


def estimate_rate(estimator: SlidingRateEstimator,
                  timestamps: np.ndarray) -> float:
    """Fold a batch into the estimator and return the events/s estimate."""
    return estimator.update(timestamps)


def target_gamma(rate_raw_evps: float, a_evps: float,
                 gamma_min: float = 0.01) -> float:
    """Keep-probability that holds the filtered rate at the bound ``a``."""
    if a_evps <= 0:
        raise ConfigurationError(
            f"gamma.a must be positive, got {a_evps}", key="gamma.a")
    if rate_raw_evps <= 0:
        return 1.0
    return min(1.0, max(gamma_min, a_evps / rate_raw_evps))


@dataclass
class GammaState:
    """Mutable filter state: keep-probability, rate estimates, and RNG.

    The pseudo-random stream is numpy PCG64; runs with equal seeds
    produce bit-identical keep decisions.
    """

    a_evps: float = 5e6
    beta: float = 0.25
    gamma_min: float = 0.01
    gamma: float = 1.0
    rate_raw_evps: float = 0.0
    rate_filtered_evps: float = 0.0
    rng: np.random.Generator = field(
        default_factory=lambda: np.random.Generator(np.random.PCG64(0)))

    def validate(self) -> None:
        if not 0.0 < self.beta <= 1.0:
            raise ConfigurationError(f"beta must be in (0, 1], got {self.beta}")
        if not 0.0 < self.gamma_min < 1.0:
            raise ConfigurationError(
                f"gamma_min must be in (0, 1), got {self.gamma_min}")
        if not self.gamma_min <= self.gamma <= 1.0:
            raise ConfigurationError(f"gamma out of [gamma_min, 1]: {self.gamma}")


def update_gamma(state: GammaState, rate_raw_evps: float) -> GammaState:
    """Move gamma one smoothing step toward its target for the given rate."""
    state.rate_raw_evps = float(rate_raw_evps)
    tgt = target_gamma(rate_raw_evps, state.a_evps, state.gamma_min)
    g = state.gamma + state.beta * (tgt - state.gamma)
    state.gamma = min(1.0, max(state.gamma_min, g))
    return state


def apply_filter(state: GammaState, events: np.ndarray) -> np.ndarray:
    """Keep each event independently with probability ``state.gamma``.

    Returns the kept subsequence (order and fields untouched); the RNG
    state advances by exactly one draw per input event.
    """
    n = len(events)
    if n == 0:
        return events
    mask = state.rng.random(n) < state.gamma
    return events[mask]


class GammaFilter:
    """Stateful stage: estimate the raw rate, adapt gamma, discard events.

    Owns one :class:`GammaState` plus raw and post-filter rate
    estimators; gamma is adapted once per processed batch using the raw
    rate estimate (steady state is identical to adapting on the
    filtered rate, with a faster transient).
    """

    def __init__(self, config: GammaConfig, seed: int = 0):
        config.validate()
        self.config = config
        self.state = GammaState(
            a_evps=config.a_evps, beta=config.beta, gamma_min=config.gamma_min,
            rng=np.random.Generator(np.random.PCG64(seed)))
        self._raw = SlidingRateEstimator(config.rate_window_us)
        self._filtered = SlidingRateEstimator(config.rate_window_us)

    def process(self, events: np.ndarray) -> tuple[np.ndarray, int]:
        """Filter one batch; returns (kept events, dropped count)."""
        raw_rate = self._raw.update(events["t"])
        update_gamma(self.state, raw_rate)
        kept = apply_filter(self.state, events)
        self.state.rate_filtered_evps = self._filtered.update(kept["t"])
        return kept, len(events) - len(kept)

    @property
    def gamma(self) -> float:
        return self.state.gamma

    @property
    def rate_raw_evps(self) -> float:
        return self.state.rate_raw_evps

    @property
    def rate_filtered_evps(self) -> float:
        return self.state.rate_filtered_evps
