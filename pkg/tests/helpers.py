"""Shared test utilities: brute-force sensor oracle and signal drivers."""
from __future__ import annotations

import numpy as np

from evssa.scene import Frame
from evssa.sensor import DvsConfig, init_sensor, sample

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is an optional speedup
    def njit(**kwargs):
        def wrap(f):
            return f

        return wrap


@njit(cache=True)
def _scan_crossings(levels: np.ndarray, c: float, out_t: np.ndarray, out_p: np.ndarray) -> int:
    """1 µs brute force: emit whenever |L(t) - L_ref| >= C, stepping L_ref by C."""
    lref = levels[0]
    n = 0
    for t in range(1, len(levels)):
        val = levels[t]
        while val - lref >= c:
            out_t[n] = t
            out_p[n] = 1
            lref += c
            n += 1
        while lref - val >= c:
            out_t[n] = t
            out_p[n] = -1
            lref -= c
            n += 1
    return n


def brute_force_events(knot_ts: np.ndarray, knot_vs: np.ndarray, c: float):
    """Oracle event stream for a piecewise-linear log-intensity signal.

    Steps the signal at 1 µs resolution and emits an event every time the
    distance to the running reference reaches the threshold.
    """
    t_end = int(knot_ts[-1])
    tt = np.arange(0, t_end + 1, dtype=np.float64)
    levels = np.interp(tt, knot_ts, knot_vs)
    bound = int(np.sum(np.abs(np.diff(knot_vs))) / c) + 16
    out_t = np.empty(bound, dtype=np.int64)
    out_p = np.empty(bound, dtype=np.int64)
    n = _scan_crossings(levels, c, out_t, out_p)
    return out_t[:n].copy(), out_p[:n].copy()


def sample_events_for_signal(knot_ts: np.ndarray, knot_vs: np.ndarray, c: float):
    """Run the production sensor over the same signal, sampling at the knots."""
    cfg = DvsConfig(
        width=1, height=1, contrast_threshold=c, refractory_us=0, noise_rate=0.0, seed=0
    )

    def frame_at(v: float, t: int) -> Frame:
        return Frame(1, 1, np.array([[np.exp(v)]], dtype=np.float64), t)

    state = init_sensor(cfg, frame_at(knot_vs[0], int(knot_ts[0])))
    ts_out, ps_out = [], []
    for t, v in zip(knot_ts[1:], knot_vs[1:]):
        for e in sample(state, frame_at(v, int(t)), int(t)):
            ts_out.append(e.t)
            ps_out.append(e.p)
    return np.array(ts_out, dtype=np.int64), np.array(ps_out, dtype=np.int64)


def random_piecewise_signal(rng: np.random.Generator, n_segments: int, step_us: int = 1000):
    """Random piecewise-linear log signal with knots on the sample grid."""
    knot_ts = np.arange(0, (n_segments + 1) * step_us, step_us, dtype=np.float64)
    steps = rng.uniform(-0.9, 0.9, size=n_segments)
    knot_vs = np.concatenate([[0.0], np.cumsum(steps)])
    return knot_ts, knot_vs


def edge_transition_width(profile: np.ndarray, lo_frac: float = 0.1, hi_frac: float = 0.9) -> float:
    """10-90% width (in samples) of the first rising transition in a profile."""
    p = profile.astype(np.float64)
    lo_v, hi_v = p.min(), p.max()
    lo = lo_v + lo_frac * (hi_v - lo_v)
    hi = lo_v + hi_frac * (hi_v - lo_v)
    i_hi = int(np.argmax(p >= hi))
    # last index before i_hi still at or below the low level
    below = np.nonzero(p[:i_hi] <= lo)[0]
    i_lo = int(below[-1]) if len(below) else 0
    return float(i_hi - i_lo)
