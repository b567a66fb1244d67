"""Event accumulator: bins an event stream into 2-D event frames."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OrderingError
from .sensor import Event

#: Default accumulation window, microseconds.
DEFAULT_WINDOW_US = 10_000


@dataclass(frozen=True)
class EventFrame:
    width: int
    height: int
    polarity_sum: np.ndarray  # int32, sum of polarities per pixel
    count: np.ndarray  # int32, number of events per pixel
    t0: int
    t1: int


def accumulate(events: list[Event], width: int, height: int, t0: int, t1: int) -> EventFrame:
    """Superimpose all events with t0 <= t < t1 onto a 2-D frame.

    Half-open windows make partitions disjoint: accumulating [t0,t1) and
    [t1,t2) and summing the fields equals accumulating [t0,t2) directly.
    """
    if t0 >= t1:
        raise OrderingError(f"window [{t0}, {t1}) is empty")
    pol = np.zeros((height, width), dtype=np.int32)
    cnt = np.zeros((height, width), dtype=np.int32)
    if events:
        xs = np.fromiter((e.x for e in events), dtype=np.int64, count=len(events))
        ys = np.fromiter((e.y for e in events), dtype=np.int64, count=len(events))
        ts = np.fromiter((e.t for e in events), dtype=np.int64, count=len(events))
        ps = np.fromiter((e.p for e in events), dtype=np.int64, count=len(events))
        mask = (ts >= t0) & (ts < t1)
        np.add.at(pol, (ys[mask], xs[mask]), ps[mask].astype(np.int32))
        np.add.at(cnt, (ys[mask], xs[mask]), 1)
    return EventFrame(width, height, pol, cnt, t0, t1)


def accumulate_columns(
    xs: np.ndarray,
    ys: np.ndarray,
    ts: np.ndarray,
    ps: np.ndarray,
    width: int,
    height: int,
    t0: int,
    t1: int,
) -> EventFrame:
    """Column-array variant of `accumulate` for large buffered streams."""
    if t0 >= t1:
        raise OrderingError(f"window [{t0}, {t1}) is empty")
    pol = np.zeros((height, width), dtype=np.int32)
    cnt = np.zeros((height, width), dtype=np.int32)
    if len(ts):
        mask = (ts >= t0) & (ts < t1)
        np.add.at(pol, (ys[mask], xs[mask]), ps[mask].astype(np.int32))
        np.add.at(cnt, (ys[mask], xs[mask]), 1)
    return EventFrame(width, height, pol, cnt, t0, t1)


def to_u8(frame: EventFrame) -> np.ndarray:
    """Render to 8-bit gray: 128 = no events, bright positive, dark negative."""
    return (128 + np.clip(32 * frame.polarity_sum, -128, 127)).astype(np.uint8)
