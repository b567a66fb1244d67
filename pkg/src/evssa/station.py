"""Ground-station endpoint: ingest downlink bytes, build images, log metrics.

The station never crashes on bad input: every decode failure lands in a
per-category counter. Snapshots are a pure function of the ingested byte
sequence and configuration, so replaying a capture file through a fresh
station reproduces a live run's outputs exactly.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from . import link
from .accumulate import DEFAULT_WINDOW_US, EventFrame, accumulate_columns, to_u8
from .errors import (
    BadMagicError,
    CrcMismatchError,
    DecodeError,
    FormatError,
    OrderingError,
    TruncatedError,
    UnknownTypeError,
)
from .monitor import BITS_PER_EVENT
from .reconstruct import (
    LogImage,
    ReconstructConfig,
    integrate,
    integrate_columns,
    tonemap,
)
from .sensor import Event

METRICS_COLUMNS = ["t_us", "events", "rate_bps", "crc_errors", "gaps", "duplicates"]


@dataclass
class Snapshot:
    t: int
    event_frame: EventFrame
    event_frame_u8: np.ndarray
    recon: LogImage
    recon_u8: np.ndarray
    metrics: dict


class StationState:
    def __init__(
        self,
        width: int,
        height: int,
        recon_cfg: ReconstructConfig,
        recon_init_value: float = 0.0,
        window_us: int = DEFAULT_WINDOW_US,
    ):
        recon_cfg.validate()
        self.width = width
        self.height = height
        self.recon_cfg = recon_cfg
        self.window_us = window_us
        self.recon_init = LogImage(
            width, height, np.full((height, width), recon_init_value, dtype=np.float64), 0
        )
        self.last_heartbeat: link.Heartbeat | None = None
        self.error_counts = {
            "bad_magic": 0,
            "truncated": 0,
            "crc_mismatch": 0,
            "unknown_type": 0,
            "format": 0,
        }
        # Event buffer kept columnar (one block per packet) for speed.
        self._blocks: list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = []
        self._last_ts: int | None = None
        self._sorted = True
        self._cols: tuple[np.ndarray, ...] | None = None  # concat cache
        self.next_seq = 0
        self.gap_seqs: set[int] = set()
        self.duplicates = 0
        self.last_snapshot_t: int | None = None

    @property
    def crc_errors(self) -> int:
        return self.error_counts["crc_mismatch"]

    @property
    def event_count(self) -> int:
        return sum(len(b[2]) for b in self._blocks)

    def buffered_events(self) -> list[Event]:
        xs, ys, ts, ps = self._columns()
        return [
            Event(int(x), int(y), int(t), int(p))
            for x, y, t, p in zip(xs, ys, ts, ps)
        ]

    def _columns(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        if self._cols is None:
            if self._blocks:
                xs = np.concatenate([b[0] for b in self._blocks])
                ys = np.concatenate([b[1] for b in self._blocks])
                ts = np.concatenate([b[2] for b in self._blocks])
                ps = np.concatenate([b[3] for b in self._blocks])
            else:
                xs = ys = ts = ps = np.empty(0, dtype=np.int64)
            if not self._sorted:
                order = np.lexsort((xs, ys, ts))
                xs, ys, ts, ps = xs[order], ys[order], ts[order], ps[order]
                self._blocks = [(xs, ys, ts, ps)]
                self._sorted = True
            self._cols = (xs, ys, ts, ps)
        return self._cols


def ingest(s: StationState, raw: bytes, t_arrive: int = 0) -> None:
    """Apply one received message; all failures become counters."""
    try:
        msg = link.decode(raw)
    except CrcMismatchError:
        s.error_counts["crc_mismatch"] += 1
        return
    except BadMagicError:
        s.error_counts["bad_magic"] += 1
        return
    except TruncatedError:
        s.error_counts["truncated"] += 1
        return
    except UnknownTypeError:
        s.error_counts["unknown_type"] += 1
        return
    except (FormatError, DecodeError):
        s.error_counts["format"] += 1
        return

    seq = msg.seq
    if seq in s.gap_seqs:
        s.gap_seqs.discard(seq)  # late arrival fills a recorded gap
    elif seq < s.next_seq:
        s.duplicates += 1
        return
    else:
        if seq > s.next_seq:
            s.gap_seqs.update(range(s.next_seq, seq))
        s.next_seq = seq + 1

    if isinstance(msg, link.Heartbeat):
        s.last_heartbeat = msg
        return
    ev = msg.events
    xs = np.fromiter((e.x for e in ev), dtype=np.int64, count=len(ev))
    ys = np.fromiter((e.y for e in ev), dtype=np.int64, count=len(ev))
    ts = np.fromiter((e.t for e in ev), dtype=np.int64, count=len(ev))
    ps = np.fromiter((e.p for e in ev), dtype=np.int64, count=len(ev))
    if len(ts):
        if s._last_ts is not None and ts[0] < s._last_ts:
            s._sorted = False
        if np.any(np.diff(ts) < 0):
            s._sorted = False
        s._last_ts = max(int(ts[-1]), s._last_ts or 0)
        s._blocks.append((xs, ys, ts, ps))
        s._cols = None


def snapshot(s: StationState, t: int) -> Snapshot:
    """Event frame over [t - window, t), reconstruction of all events <= t."""
    if s.last_snapshot_t is not None and t < s.last_snapshot_t:
        raise OrderingError(f"snapshot time {t} before {s.last_snapshot_t}")
    s.last_snapshot_t = t
    xs, ys, ts, ps = s._columns()
    frame = accumulate_columns(xs, ys, ts, ps, s.width, s.height, t - s.window_us, t)
    if s.recon_cfg.decay_tau_s == 0.0:
        recon = integrate_columns(xs, ys, ts, ps, s.recon_init, s.recon_cfg, t)
    else:
        recon = integrate(s.buffered_events(), s.recon_init, s.recon_cfg, t)
    window_events = int(frame.count.sum())
    rate_bps = BITS_PER_EVENT * window_events / (s.window_us / 1e6)
    metrics = {
        "t_us": t,
        "events": window_events,
        "rate_bps": f"{rate_bps:.3f}",
        "crc_errors": s.crc_errors,
        "gaps": len(s.gap_seqs),
        "duplicates": s.duplicates,
    }
    return Snapshot(
        t=t,
        event_frame=frame,
        event_frame_u8=to_u8(frame),
        recon=recon,
        recon_u8=tonemap(recon),
        metrics=metrics,
    )


def write_snapshot(out_dir: str | os.PathLike, snap: Snapshot) -> None:
    """Persist one snapshot: two PGM images plus a station_metrics.csv row."""
    from .imgio import write_pgm

    out_dir = str(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    write_pgm(os.path.join(out_dir, f"event_frame_{snap.t}.pgm"), snap.event_frame_u8)
    write_pgm(os.path.join(out_dir, f"recon_{snap.t}.pgm"), snap.recon_u8)
    csv_path = os.path.join(out_dir, "station_metrics.csv")
    new = not os.path.exists(csv_path)
    with open(csv_path, "a", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=METRICS_COLUMNS)
        if new:
            writer.writeheader()
        writer.writerow(snap.metrics)
