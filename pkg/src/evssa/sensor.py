"""Per-pixel contrast-threshold event sensor and companion frame camera.

The event model keeps one log-intensity reference per pixel. A sample at
time t compares ln(irradiance) against the reference: every full threshold
crossing emits one event, timestamped by linear interpolation between the
previous and current sample time. The reference advances only by emitted
threshold multiples, so sub-threshold residuals carry across samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, OrderingError
from .scene import Frame, Scene, render_irradiance


class Event(NamedTuple):
    x: int
    y: int
    t: int  # microseconds
    p: int  # +1 or -1


def event_sort_key(e: Event) -> tuple[int, int, int]:
    """Canonical stream ordering: (t, y, x)."""
    return (e.t, e.y, e.x)


# Noise rate (events/pixel/second) calibrated so that noise-only traffic at
# 64 bits/event over a 346x260 array is about 20 kb/s.
CALIBRATED_NOISE_RATE = 0.0035
# Datasheet stationary-noise figure for the same device class; exposed as a
# named alternative because it implies ~576 kb/s, far above the calibrated
# static bandwidth.
DATASHEET_NOISE_RATE = 0.1

NOISE_PRESETS = {
    "calibrated": CALIBRATED_NOISE_RATE,
    "tableI_noise": DATASHEET_NOISE_RATE,
}

_FLOOR_EPS = 1e-9


@dataclass(frozen=True)
class DvsConfig:
    width: int = 346
    height: int = 260
    contrast_threshold: float = 0.2  # log-intensity units
    refractory_us: int = 50
    noise_rate: float = CALIBRATED_NOISE_RATE  # events/pixel/second
    max_event_rate: float = 12e6  # events/second
    seed: int = 0

    def validate(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ConfigError("sensor.width/height", "must be >= 1")
        if not (self.contrast_threshold > 0):
            raise ConfigError("sensor.contrast_threshold", "must be > 0")
        if self.refractory_us < 0:
            raise ConfigError("sensor.refractory_us", "must be >= 0")
        if self.noise_rate < 0:
            raise ConfigError("sensor.noise_rate", "must be >= 0")
        if self.max_event_rate <= 0:
            raise ConfigError("sensor.max_event_rate", "must be > 0")


@dataclass
class SensorState:
    config: DvsConfig
    l_ref: np.ndarray  # per-pixel reference log intensity
    l_prev: np.ndarray  # log intensity at the previous sample (for crossing times)
    last_event_t: np.ndarray  # per-pixel time of last emitted event
    last_sample_t: int
    dropped_event_count: int = 0
    # The last frame's pixel array, when it produced no events and no
    # suppressions; lets static scenes skip the per-sample array math.
    _quiet_frame: np.ndarray | None = field(default=None, repr=False)


def init_sensor(config: DvsConfig, initial: Frame) -> SensorState:
    """Memorize the initial frame; no events are emitted."""
    config.validate()
    if initial.width != config.width or initial.height != config.height:
        raise ConfigError(
            "sensor.width/height",
            f"frame is {initial.width}x{initial.height}, "
            f"config is {config.width}x{config.height}",
        )
    l_ref = np.log(initial.pixels.astype(np.float64))
    last_event = np.full((config.height, config.width), np.iinfo(np.int64).min // 2, dtype=np.int64)
    return SensorState(
        config=config,
        l_ref=l_ref,
        l_prev=l_ref.copy(),
        last_event_t=last_event,
        last_sample_t=int(initial.t),
    )


def sample(state: SensorState, frame: Frame, t: int) -> list[Event]:
    """Emit signal events for log-intensity changes between samples.

    Each pixel emits floor(|dL| / C) events whose timestamps are the
    linear-interpolation crossing times of the i*C levels, floored to 1 µs.
    Events inside the per-pixel refractory window are suppressed and do not
    advance the reference. Returned events are sorted by (t, y, x).
    """
    if t <= state.last_sample_t:
        raise OrderingError(f"sample time {t} not after {state.last_sample_t}")
    cfg = state.config
    if frame.width != cfg.width or frame.height != cfg.height:
        raise ConfigError("frame", "dimensions do not match sensor config")

    t0 = state.last_sample_t
    if state._quiet_frame is not None and state._quiet_frame is frame.pixels:
        state.last_sample_t = t
        return []

    c = cfg.contrast_threshold
    l_new = np.log(frame.pixels)
    dl = l_new - state.l_ref
    k = np.floor(np.abs(dl) / c + _FLOOR_EPS).astype(np.int64)
    ys, xs = np.nonzero(k)

    events: list[Event] = []
    suppressed = False
    dt = t - t0
    refr = cfg.refractory_us
    last_event_t = state.last_event_t
    l_ref = state.l_ref
    l_prev = state.l_prev
    for y, x in zip(ys.tolist(), xs.tolist()):
        kk = int(k[y, x])
        sgn = 1 if dl[y, x] > 0 else -1
        ref = float(l_ref[y, x])
        prev = float(l_prev[y, x])
        denom = float(l_new[y, x]) - prev
        last = int(last_event_t[y, x])
        emitted = 0
        for i in range(1, kk + 1):
            # Crossing of the i-th threshold level under linear
            # interpolation of the log signal between the two samples.
            # Levels already passed at t0 (possible after a refractory
            # suppression) re-fire immediately.
            level = ref + sgn * i * c
            frac = (level - prev) / denom if denom != 0.0 else 0.0
            if frac < 0.0:
                frac = 0.0
            elif frac > 1.0:
                frac = 1.0
            ts = t0 + int(dt * frac)
            if ts - last >= refr:
                events.append(Event(x, y, ts, sgn))
                last = ts
                emitted += 1
            else:
                suppressed = True
        last_event_t[y, x] = last
        l_ref[y, x] += sgn * emitted * c
    np.copyto(l_prev, l_new)
    state.last_sample_t = t
    if events or suppressed:
        state._quiet_frame = None
    else:
        state._quiet_frame = frame.pixels
    events.sort(key=event_sort_key)
    return events


def inject_noise(state: SensorState, t0: int, t1: int) -> list[Event]:
    """Background-activity noise over [t0, t1) as a homogeneous Poisson
    process per pixel with random +/-1 polarity.

    Deterministic given (seed, interval): the counter-based generator is
    keyed on the sensor seed and the interval bounds, independent of call
    history. Noise events never modify the log-intensity references.
    """
    if t0 >= t1:
        raise OrderingError(f"noise interval [{t0}, {t1}) is empty")
    cfg = state.config
    rate = cfg.noise_rate
    if rate == 0:
        return []
    rng = np.random.Generator(np.random.Philox(key=cfg.seed, counter=[t0, t1, 0, 0]))
    npix = cfg.width * cfg.height
    mean = rate * npix * (t1 - t0) / 1e6
    n = int(rng.poisson(mean))
    if n == 0:
        return []
    idx = rng.integers(0, npix, size=n)
    ts = rng.integers(t0, t1, size=n)
    pol = rng.integers(0, 2, size=n) * 2 - 1
    w = cfg.width
    events = [
        Event(int(i % w), int(i // w), int(tt), int(pp))
        for i, tt, pp in zip(idx, ts, pol)
    ]
    events.sort(key=event_sort_key)
    return events


class TokenBucket:
    """Continuously refilled token bucket; one token per admitted event."""

    def __init__(self, rate_per_s: float, capacity: float | None = None):
        self.rate = rate_per_s
        # Default capacity: 1 ms worth of events.
        self.capacity = rate_per_s * 1e-3 if capacity is None else capacity
        self.tokens = self.capacity
        self.last_t: int | None = None

    def admit(self, t_us: int) -> bool:
        if self.last_t is not None:
            self.tokens = min(self.capacity, self.tokens + self.rate * (t_us - self.last_t) / 1e6)
        self.last_t = t_us
        if self.tokens >= 1.0:
            self.tokens -= 1.0
            return True
        return False


def apply_bandwidth_cap(
    events: list[Event],
    max_event_rate: float,
    bucket: TokenBucket | None = None,
    state: SensorState | None = None,
) -> tuple[list[Event], int]:
    """Drop events exceeding the readout bandwidth (newest-dropped).

    A fresh full bucket is used unless a persistent one is supplied; the
    drop count is also accumulated into `state` when given.
    """
    if bucket is None:
        bucket = TokenBucket(max_event_rate)
    kept: list[Event] = []
    dropped = 0
    prev_t = None
    for e in events:
        if prev_t is not None and e.t < prev_t:
            raise OrderingError("events must be time-sorted for the bandwidth cap")
        prev_t = e.t
        if bucket.admit(e.t):
            kept.append(e)
        else:
            dropped += 1
    if state is not None:
        state.dropped_event_count += dropped
    return kept, dropped


@dataclass(frozen=True)
class ApsImage:
    width: int
    height: int
    pixels: np.ndarray  # uint8
    exposure_us: int
    t: int


def aps_capture(frame: Frame, exposure_us: int, gain: float) -> ApsImage:
    """8-bit exposure of a single frame; values >= 255 saturate."""
    if exposure_us <= 0:
        raise ConfigError("aps.exposure_us", "must be > 0")
    raw = np.rint(gain * exposure_us * frame.pixels)
    pixels = np.clip(raw, 0, 255).astype(np.uint8)
    return ApsImage(frame.width, frame.height, pixels, exposure_us, frame.t)


def aps_capture_scene(
    scene: Scene, t: int, exposure_us: int, gain: float, n_sub: int | None = None
) -> ApsImage:
    """Exposure integrating the scene over [t, t + exposure_us).

    Averages uniformly spaced sub-renders, so fast targets smear into
    motion blur exactly as a long physical exposure would.
    """
    if exposure_us <= 0:
        raise ConfigError("aps.exposure_us", "must be > 0")
    if n_sub is None:
        n_sub = max(2, exposure_us // 1000)
    acc = None
    for i in range(n_sub):
        sub_t = t + (i + 0.5) * exposure_us / n_sub
        pix = render_irradiance(scene, sub_t).pixels
        acc = pix.copy() if acc is None else acc + pix
    mean = acc / n_sub
    raw = np.rint(gain * exposure_us * mean)
    pixels = np.clip(raw, 0, 255).astype(np.uint8)
    return ApsImage(scene.config.width, scene.config.height, pixels, exposure_us, int(t))


def auto_exposure_gain(body_irradiance: float, exposure_us: int, mid_value: float = 128.0) -> float:
    """Gain mapping the target body to `mid_value` at the given exposure."""
    if body_irradiance <= 0 or exposure_us <= 0:
        raise ConfigError("aps", "body irradiance and exposure must be > 0")
    return mid_value / (exposure_us * body_irradiance)
