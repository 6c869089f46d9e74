"""Adaptive event packaging with closed-loop size control.

The packager accumulates filtered events and cuts packages of
``target_size`` events; a timeout bounds how long any event can sit in
the buffer at low rates. After each package the consumer reports its
processing time, and the target size is re-solved so that processing
time matches the package's temporal span.

Size control fits an affine cost model ``proc ~= o + c * size`` by
exponential averaging and sets the target to the synchronization fixed
point ``N* = o / (1/R - c)`` (R = filtered event rate), scaled by a
small headroom factor so the realized lag stays negative despite
arrival jitter. Until the model has enough samples, a damped
multiplicative fallback ``target *= (span / proc) ** kappa`` is used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, OrderingError
from .events import EventPackage, empty_events
from .gamma import SlidingRateEstimator

_US = 1_000_000.0

#: Feedback samples required before the affine model drives the target.
MODEL_WARMUP_SAMPLES = 5


@dataclass
class ProcessingFeedback:
    """Consumer's report for one processed package."""

    package_seq: int
    size: int
    span_us: int
    processing_time_us: float

    def validate(self) -> None:
        if self.size < 1:
            raise ValueError("feedback size must be >= 1")
        if self.span_us < 0 or self.processing_time_us < 0:
            raise ValueError("span and processing time must be >= 0")


@dataclass
class PackagerConfig:
    n_min: int = 1
    n_max: int = 1_000_000
    timeout_us: int = 10_000
    kappa: float = 0.5             # damping exponent of the fallback law
    model_smoothing: float = 0.2   # exponential-averaging gain of the cost fit
    headroom: float = 1.05         # target bias above N* keeping lag negative
    initial_size: int = 1000       # target held until the first feedback
    rate_window_us: int = 10_000   # window of the incoming-rate estimate

    def validate(self) -> None:
        if self.n_min < 1:
            raise ConfigurationError(
                f"packager.n_min must be >= 1, got {self.n_min}",
                key="packager.n_min")
        if self.n_max < self.n_min:
            raise ConfigurationError(
                f"packager.n_max must be >= n_min, got {self.n_max}",
                key="packager.n_max")
        if self.timeout_us <= 0:
            raise ConfigurationError(
                f"packager.timeout_us must be positive, got {self.timeout_us}",
                key="packager.timeout_us")
        if not 0.0 < self.kappa <= 1.0:
            raise ConfigurationError(
                f"packager.kappa must be in (0, 1], got {self.kappa}",
                key="packager.kappa")
        if not 0.0 < self.model_smoothing <= 1.0:
            raise ConfigurationError(
                f"packager.model_smoothing must be in (0, 1], got "
                f"{self.model_smoothing}", key="packager.model_smoothing")
        if self.headroom < 1.0:
            raise ConfigurationError(
                f"packager.headroom must be >= 1, got {self.headroom}",
                key="packager.headroom")
        if self.initial_size < 1:
            raise ConfigurationError(
                f"packager.initial_size must be >= 1, got {self.initial_size}",
                key="packager.initial_size")
        if self.rate_window_us <= 0:
            raise ConfigurationError(
                f"packager.rate_window_us must be positive, got "
                f"{self.rate_window_us}", key="packager.rate_window_us")


def predict_size(rate_filtered_evps: float, overhead_s: float,
                 per_event_s: float, n_min: int, n_max: int) -> int:
    """Package size at which processing time equals package span.

    Solves ``o + c*N = N/R`` for N and clamps to the bounds. When the
    per-event cost reaches or exceeds the inter-event period
    (``c >= 1/R``) no size can keep up and ``n_max`` is returned; rate
    reduction upstream must take over.
    """
    if rate_filtered_evps <= 0:
        raise ConfigurationError(
            f"rate must be positive, got {rate_filtered_evps}")
    if overhead_s < 0 or per_event_s < 0:
        raise ConfigurationError("cost parameters must be >= 0")
    period = 1.0 / rate_filtered_evps
    if period <= per_event_s:
        return n_max
    n_star = overhead_s / (period - per_event_s)
    return int(min(n_max, max(n_min, round(n_star))))


class AffineCostModel:
    """Exponentially-averaged least-squares fit of ``proc ~= o + c*size``.

    Keeps running first and second moments of (size, proc) pairs; the
    fit is refreshed only while the size variance is non-degenerate, so
    a long run of identical sizes retains the last valid estimates.
    """

    def __init__(self, smoothing: float = 0.2):
        self.smoothing = float(smoothing)
        self.samples = 0
        self._m_s = 0.0
        self._m_p = 0.0
        self._m_ss = 0.0
        self._m_sp = 0.0
        self.overhead_us = 0.0
        self.per_event_us = 0.0
        self._fitted = False

    def update(self, size: int, processing_time_us: float) -> None:
        a = 1.0 if self.samples == 0 else self.smoothing
        s = float(size)
        p = float(processing_time_us)
        self._m_s += a * (s - self._m_s)
        self._m_p += a * (p - self._m_p)
        self._m_ss += a * (s * s - self._m_ss)
        self._m_sp += a * (s * p - self._m_sp)
        self.samples += 1
        var = self._m_ss - self._m_s * self._m_s
        if var > 1e-9 * max(1.0, self._m_s * self._m_s):
            cov = self._m_sp - self._m_s * self._m_p
            c = max(0.0, cov / var)
            self.per_event_us = c
            self.overhead_us = max(0.0, self._m_p - c * self._m_s)
            self._fitted = True

    @property
    def ready(self) -> bool:
        return self._fitted and self.samples >= MODEL_WARMUP_SAMPLES


@dataclass
class _Emission:
    """A package together with why and when (arrival clock) it was cut."""

    package: EventPackage
    reason: str          # "size" or "timeout"
    trigger_us: int      # arrival-clock time at which the cut fired


class Packager:
    """Accumulates events and emits adaptively sized packages."""

    def __init__(self, config: PackagerConfig):
        config.validate()
        self.config = config
        self._buf = empty_events()
        self._oldest_arrival_us: int | None = None
        self._next_seq = 0
        self._target = float(
            min(config.n_max, max(config.n_min, config.initial_size)))
        self.model = AffineCostModel(config.model_smoothing)
        self._last_feedback_seq = -1
        # rate of events reaching the packager (post-filter), measured on
        # the events' own timestamps and exponentially smoothed
        self._rate_estimator = SlidingRateEstimator(config.rate_window_us)
        self._rate_smooth_evps: float | None = None

    @property
    def target_size(self) -> int:
        return int(min(self.config.n_max,
                       max(self.config.n_min, round(self._target))))

    @property
    def buffered(self) -> int:
        return len(self._buf)

    @property
    def oldest_arrival_us(self) -> int | None:
        return self._oldest_arrival_us

    def take_buffer(self) -> np.ndarray:
        """Remove and return all buffered events (used by overflow guard)."""
        buf = self._buf
        self._buf = empty_events()
        self._oldest_arrival_us = None
        return buf

    def _emit(self, events: np.ndarray, reason: str, trigger_us: int) -> _Emission:
        pkg = EventPackage(events=events, seq=self._next_seq)
        self._next_seq += 1
        return _Emission(pkg, reason, trigger_us)

    def _check_order(self, events: np.ndarray) -> None:
        if len(events) == 0:
            return
        if np.any(np.diff(events["t"]) < 0):
            raise OrderingError("pushed events must be timestamp-ordered")
        if self._buf.size and events["t"][0] < self._buf["t"][-1]:
            raise OrderingError(
                "pushed events must not precede the newest buffered event")

    def push_events(self, events: np.ndarray) -> list[EventPackage]:
        """Append events and emit full packages; no timeout handling.

        Emits a package of exactly ``target_size`` events whenever the
        buffer reaches the target, repeatedly. Remaining events stay
        buffered.
        """
        self.append(events)
        out = []
        target = self.target_size
        while len(self._buf) >= target:
            cut = self._buf[:target]
            self._buf = self._buf[target:]
            out.append(self._emit(cut, "size", int(cut["t"][-1])).package)
            if self._buf.size:
                self._oldest_arrival_us = int(self._buf["t"][0])
            else:
                self._oldest_arrival_us = None
            target = self.target_size
        return out

    def check_timeout(self, now_us: int) -> EventPackage | None:
        """Flush a buffer whose oldest event has waited at least the timeout."""
        if self._buf.size == 0 or self._oldest_arrival_us is None:
            return None
        if now_us - self._oldest_arrival_us < self.config.timeout_us:
            return None
        buf = self.take_buffer()
        return self._emit(buf, "timeout", int(now_us)).package

    def drop_oldest(self, count: int) -> int:
        """Drop up to ``count`` events from the buffer front; returns the
        number dropped (overflow-guard support)."""
        n = min(count, len(self._buf))
        if n > 0:
            self._buf = self._buf[n:]
            self._oldest_arrival_us = (int(self._buf["t"][0])
                                       if self._buf.size else None)
        return n

    def _observe_rate(self, events: np.ndarray) -> None:
        rate = self._rate_estimator.update(events["t"])
        if self._rate_smooth_evps is None:
            self._rate_smooth_evps = rate
        else:
            self._rate_smooth_evps += self.config.model_smoothing * (
                rate - self._rate_smooth_evps)

    def append(self, events: np.ndarray) -> None:
        """Buffer events without cutting packages (see :meth:`next_emission`)."""
        self._check_order(events)
        if len(events) == 0:
            return
        self._observe_rate(events)
        if self._buf.size == 0:
            self._oldest_arrival_us = int(events["t"][0])
            self._buf = events
        else:
            self._buf = np.concatenate([self._buf, events])

    def next_emission(self) -> _Emission | None:
        """Cut at most one package from the buffer.

        Emits a size cut when ``target_size`` events arrived before the
        oldest event's timeout deadline, a timeout flush when a
        buffered event reveals the deadline passed first, and nothing
        otherwise (more events or a later timeout check may still
        complete the package). Events act as their own arrival clock.
        """
        if self._buf.size == 0:
            return None
        t = self._buf["t"]
        deadline = int(t[0]) + self.config.timeout_us
        before_deadline = int(np.searchsorted(t, deadline, side="left"))
        target = self.target_size
        if before_deadline >= target:
            cut = self._buf[:target]
            self._buf = self._buf[target:]
            self._oldest_arrival_us = (int(self._buf["t"][0])
                                       if self._buf.size else None)
            return self._emit(cut, "size", int(cut["t"][-1]))
        if before_deadline < len(t):
            cut = self._buf[:before_deadline]
            self._buf = self._buf[before_deadline:]
            self._oldest_arrival_us = int(self._buf["t"][0])
            return self._emit(cut, "timeout", deadline)
        return None

    def update_target_size(self, feedback: ProcessingFeedback) -> None:
        """Fold one feedback report into the cost model and re-aim the target.

        Out-of-order feedback (seq at or below the newest applied) is
        ignored. A report with ``processing_time == span`` is at the
        setpoint and leaves the target unchanged.
        """
        if feedback.package_seq <= self._last_feedback_seq:
            return
        self._last_feedback_seq = feedback.package_seq
        feedback.validate()
        self.model.update(feedback.size, feedback.processing_time_us)
        if feedback.processing_time_us == feedback.span_us:
            return
        cfg = self.config
        rate_evps = self._rate_smooth_evps or 0.0
        if self.model.ready and rate_evps > 0:
            n_star = predict_size(rate_evps,
                                  self.model.overhead_us / _US,
                                  self.model.per_event_us / _US,
                                  cfg.n_min, cfg.n_max)
            self._target = min(cfg.n_max,
                               max(cfg.n_min, cfg.headroom * n_star))
        elif feedback.span_us > 0 and feedback.processing_time_us > 0:
            ratio = feedback.span_us / feedback.processing_time_us
            self._target = min(cfg.n_max,
                               max(cfg.n_min,
                                   self._target * ratio ** cfg.kappa))
        # span == 0: ratio undefined, the model already consumed the sample
