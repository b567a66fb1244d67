"""Onboard sliding-window bandwidth estimator with Normal/Abnormal states.

The estimator converts event counts to an encoded-payload bitrate over a
sliding window and compares it against a threshold. Transitions to
Abnormal are immediate once the rate exceeds the threshold; returning to
Normal requires the rate to stay below the hysteresis band continuously
for a dwell period, preventing flapping at the boundary. With zero
hysteresis and zero dwell the machine degenerates to the memoryless
comparator rate > threshold.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum

from .errors import ConfigError, OrderingError

#: Encoded payload size of one event on the wire.
BITS_PER_EVENT = 64


class Verdict(str, Enum):
    NORMAL = "normal"
    ABNORMAL = "abnormal"


@dataclass(frozen=True)
class MonitorConfig:
    threshold_bps: float = 100_000.0
    window_us: int = 100_000
    hysteresis: float = 0.2  # fraction of threshold, in [0, 1)
    bits_per_event: int = BITS_PER_EVENT
    dwell_us: int | None = None  # None = one full window; 0 = instant

    def validate(self) -> None:
        if not (self.threshold_bps > 0):
            raise ConfigError("monitor.threshold_bps", "must be > 0")
        if self.window_us <= 0:
            raise ConfigError("monitor.window_us", "must be > 0")
        if not (0.0 <= self.hysteresis < 1.0):
            raise ConfigError("monitor.hysteresis", "must be in [0, 1)")
        if self.dwell_us is not None and self.dwell_us < 0:
            raise ConfigError("monitor.dwell_us", "must be >= 0")

    @property
    def effective_dwell_us(self) -> int:
        return self.window_us if self.dwell_us is None else self.dwell_us


@dataclass
class MonitorState:
    config: MonitorConfig
    state: Verdict = Verdict.NORMAL
    current_rate: float = 0.0
    samples: deque = field(default_factory=deque)  # (t_us, event_count)
    last_t: int | None = None
    below_since: int | None = None


def make_monitor(config: MonitorConfig) -> MonitorState:
    config.validate()
    return MonitorState(config=config)


def observe(m: MonitorState, event_count: int, t: int) -> tuple[Verdict, float]:
    """Record a count at time t; returns the post-transition state and rate.

    Rate = bits_per_event * (events in [t - window, t]) / window seconds.
    """
    if m.last_t is not None and t < m.last_t:
        raise OrderingError(f"observation time {t} before {m.last_t}")
    m.last_t = t
    cfg = m.config
    m.samples.append((t, event_count))
    low = t - cfg.window_us
    while m.samples and m.samples[0][0] < low:
        m.samples.popleft()
    total = sum(n for _, n in m.samples)
    rate = cfg.bits_per_event * total / (cfg.window_us / 1e6)
    m.current_rate = rate

    if m.state == Verdict.NORMAL:
        if rate > cfg.threshold_bps:
            m.state = Verdict.ABNORMAL
            m.below_since = None
    else:
        if rate < cfg.threshold_bps * (1.0 - cfg.hysteresis):
            if m.below_since is None:
                m.below_since = t
            if t - m.below_since >= cfg.effective_dwell_us:
                m.state = Verdict.NORMAL
                m.below_since = None
        else:
            m.below_since = None
    return m.state, rate
