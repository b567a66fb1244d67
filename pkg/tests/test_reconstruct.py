import numpy as np
import pytest

from evssa.errors import ConfigError, OrderingError
from evssa.reconstruct import (
    InitMode,
    LogImage,
    ReconstructConfig,
    integrate,
    integrate_columns,
    tonemap,
)
from evssa.scene import Frame
from evssa.sensor import DvsConfig, Event, init_sensor, sample


def zeros_init(w: int, h: int) -> LogImage:
    return LogImage(w, h, np.zeros((h, w)), 0)


def test_each_event_steps_one_threshold():
    cfg = ReconstructConfig(contrast_threshold=0.2)
    events = [Event(0, 0, 10, 1), Event(0, 0, 20, 1), Event(1, 0, 30, -1)]
    img = integrate(events, zeros_init(2, 1), cfg, 100)
    assert img.pixels[0, 0] == pytest.approx(0.4)
    assert img.pixels[0, 1] == pytest.approx(-0.2)


def test_events_after_t_end_ignored():
    cfg = ReconstructConfig(contrast_threshold=0.2)
    events = [Event(0, 0, 10, 1), Event(0, 0, 500, 1)]
    img = integrate(events, zeros_init(1, 1), cfg, 100)
    assert img.pixels[0, 0] == pytest.approx(0.2)


def test_unsorted_events_rejected():
    cfg = ReconstructConfig()
    events = [Event(0, 0, 20, 1), Event(0, 0, 10, 1)]
    with pytest.raises(OrderingError):
        integrate(events, zeros_init(1, 1), cfg, 100)


def test_columns_match_list_path():
    rng = np.random.default_rng(2)
    n = 400
    ts = np.sort(rng.integers(0, 5000, n))
    xs = rng.integers(0, 8, n)
    ys = rng.integers(0, 6, n)
    ps = rng.integers(0, 2, n) * 2 - 1
    events = [Event(int(x), int(y), int(t), int(p)) for x, y, t, p in zip(xs, ys, ts, ps)]
    cfg = ReconstructConfig(contrast_threshold=0.25)
    a = integrate(events, zeros_init(8, 6), cfg, 2500)
    b = integrate_columns(xs, ys, ts, ps, zeros_init(8, 6), cfg, 2500)
    assert np.allclose(a.pixels, b.pixels)


def test_columns_reject_decay():
    cfg = ReconstructConfig(decay_tau_s=1.0)
    with pytest.raises(ConfigError):
        integrate_columns(
            np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, np.int64),
            np.empty(0, np.int64), zeros_init(1, 1), cfg, 100,
        )


def test_decay_relaxes_toward_initial_mean():
    # One positive step, then a long quiet gap: the pixel must have decayed
    # most of the way back toward the (zero) initial mean.
    cfg = ReconstructConfig(contrast_threshold=1.0, decay_tau_s=0.01)
    events = [Event(0, 0, 0, 1)]
    img = integrate(events, zeros_init(1, 1), cfg, 100_000)  # 10 tau later
    assert 0.0 < img.pixels[0, 0] < 1e-3


def test_zero_decay_holds_levels_forever():
    cfg = ReconstructConfig(contrast_threshold=1.0, decay_tau_s=0.0)
    img = integrate([Event(0, 0, 0, 1)], zeros_init(1, 1), cfg, 10_000_000)
    assert img.pixels[0, 0] == pytest.approx(1.0)


def test_tracks_sensor_within_one_threshold():
    # Closed loop: drive the sensor with a changing 1x1 frame and feed its
    # events back into the integrator; at each sample instant the
    # reconstruction must stay within one threshold of the true log value.
    c = 0.2
    scfg = DvsConfig(width=1, height=1, contrast_threshold=c, refractory_us=0, noise_rate=0.0)
    rcfg = ReconstructConfig(contrast_threshold=c)
    rng = np.random.default_rng(5)
    level = 0.0
    state = init_sensor(scfg, Frame(1, 1, np.array([[np.exp(level)]]), 0))
    init = LogImage(1, 1, np.array([[level]]), 0)
    events: list[Event] = []
    for t in range(1000, 50_001, 1000):
        level += float(rng.uniform(-0.8, 0.8))
        events.extend(sample(state, Frame(1, 1, np.array([[np.exp(level)]]), t), t))
        recon = integrate(events, init, rcfg, t)
        assert abs(recon.pixels[0, 0] - level) <= c + 1e-9


def test_tonemap_constant_is_midgray():
    img = LogImage(3, 3, np.full((3, 3), 4.2), 0)
    assert np.all(tonemap(img) == 128)


def test_tonemap_affine_invariance():
    rng = np.random.default_rng(8)
    v = rng.normal(size=(20, 20))
    a = tonemap(LogImage(20, 20, v, 0))
    b = tonemap(LogImage(20, 20, 3.0 * v + 11.0, 0))
    # identical up to one count of float rounding in the percentile math
    assert np.max(np.abs(a.astype(np.int64) - b.astype(np.int64))) <= 1


def test_tonemap_range_and_dtype():
    rng = np.random.default_rng(9)
    u8 = tonemap(LogImage(50, 50, rng.normal(size=(50, 50)), 0))
    assert u8.dtype == np.uint8
    assert u8.min() == 0 and u8.max() == 255


def test_invalid_config_rejected():
    with pytest.raises(ConfigError):
        ReconstructConfig(contrast_threshold=0.0).validate()
    with pytest.raises(ConfigError):
        ReconstructConfig(decay_tau_s=-1.0).validate()


def test_init_modes_exposed():
    assert InitMode("mid_gray") is InitMode.MID_GRAY
    assert InitMode("ground_truth") is InitMode.GROUND_TRUTH
