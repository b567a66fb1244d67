import numpy as np
import pytest

from evssa.errors import OrderingError
from evssa.link import EventPacket, Heartbeat, encode, packetize
from evssa.monitor import Verdict
from evssa.reconstruct import ReconstructConfig
from evssa.sensor import Event
from evssa.station import METRICS_COLUMNS, StationState, ingest, snapshot, write_snapshot


def make_station(width=16, height=12, window_us=10_000):
    return StationState(
        width=width,
        height=height,
        recon_cfg=ReconstructConfig(contrast_threshold=0.2),
        recon_init_value=0.0,
        window_us=window_us,
    )


def packet(seq, base_t, events):
    return encode(EventPacket(base_t=base_t, events=tuple(events), seq=seq))


def test_ingest_accumulates_events():
    s = make_station()
    ingest(s, packet(0, 100, [Event(1, 2, 100, 1), Event(3, 4, 150, -1)]))
    assert s.event_count == 2
    assert s.buffered_events() == [Event(1, 2, 100, 1), Event(3, 4, 150, -1)]


def test_heartbeat_updates_latest():
    s = make_station()
    ingest(s, encode(Heartbeat(state=Verdict.ABNORMAL, rate_bps=5000, t=777, seq=0)))
    assert s.last_heartbeat is not None
    assert s.last_heartbeat.state is Verdict.ABNORMAL
    assert s.last_heartbeat.rate_bps == 5000


def test_decode_errors_become_counters_never_exceptions():
    s = make_station()
    good = packet(0, 0, [Event(0, 0, 0, 1)])
    corrupted = bytearray(good)
    corrupted[25] ^= 0xFF  # body flip -> crc mismatch
    ingest(s, bytes(corrupted))
    ingest(s, b"XXXX" + good[4:])
    ingest(s, good[:-3])
    ingest(s, good[:4] + b"\x66" + good[5:])
    assert s.error_counts["crc_mismatch"] == 1
    assert s.error_counts["bad_magic"] == 1
    assert s.error_counts["truncated"] == 1
    assert s.error_counts["unknown_type"] == 1
    assert s.event_count == 0


def test_format_error_counter():
    import struct
    import zlib

    from evssa.link import MAGIC

    good = packet(0, 0, [Event(0, 0, 0, 1)])
    payload = bytearray(good[4:-4])
    payload[21] = 0x07  # polarity byte out of domain, crc recomputed
    raw = MAGIC + bytes(payload) + struct.pack("<I", zlib.crc32(bytes(payload)))
    s = make_station()
    ingest(s, raw)
    assert s.error_counts["format"] == 1


def test_sequence_gap_then_late_fill():
    s = make_station()
    ingest(s, packet(0, 0, [Event(0, 0, 0, 1)]))
    ingest(s, packet(3, 300, [Event(0, 0, 300, 1)]))
    assert s.gap_seqs == {1, 2}
    ingest(s, packet(1, 100, [Event(0, 0, 100, 1)]))  # late arrival
    assert s.gap_seqs == {2}
    assert s.duplicates == 0


def test_duplicate_detection():
    s = make_station()
    raw = packet(0, 0, [Event(0, 0, 0, 1)])
    ingest(s, raw)
    ingest(s, raw)
    assert s.duplicates == 1
    assert s.event_count == 1  # replayed payload not double-counted


def test_out_of_order_packets_are_resorted():
    s = make_station()
    ingest(s, packet(1, 500, [Event(5, 5, 500, 1)]))
    ingest(s, packet(0, 100, [Event(1, 1, 100, 1)]))
    ts = [e.t for e in s.buffered_events()]
    assert ts == sorted(ts)


def test_snapshot_window_and_reconstruction():
    s = make_station(window_us=100)
    ingest(s, packet(0, 0, [Event(2, 3, 50, 1), Event(2, 3, 150, 1)]))
    snap = snapshot(s, 200)
    # event frame covers [100, 200): only the second event
    assert snap.event_frame.count.sum() == 1
    # reconstruction integrates everything up to t=200
    assert snap.recon.pixels[3, 2] == pytest.approx(0.4)
    assert snap.metrics["events"] == 1
    assert float(snap.metrics["rate_bps"]) == pytest.approx(64 * 1 / (100 / 1e6))


def test_snapshot_metrics_keys_match_csv_columns():
    s = make_station()
    snap = snapshot(s, 10_000)
    assert list(snap.metrics.keys()) == METRICS_COLUMNS


def test_snapshot_times_must_not_go_backwards():
    s = make_station()
    snapshot(s, 20_000)
    with pytest.raises(OrderingError):
        snapshot(s, 10_000)


def test_snapshots_pure_function_of_ingested_bytes():
    events = [Event(i % 16, i % 12, i * 20, 1 if i % 3 else -1) for i in range(200)]
    raws = [encode(p) for p in packetize(events, 0)]

    def run(order):
        s = make_station()
        for r in order:
            ingest(s, r)
        snap = snapshot(s, 5000)
        return snap.event_frame_u8, snap.recon_u8

    a_frame, a_recon = run(raws)
    b_frame, b_recon = run(list(reversed(raws)))
    assert np.array_equal(a_frame, b_frame)
    assert np.array_equal(a_recon, b_recon)


def test_write_snapshot_outputs(tmp_path):
    from evssa.imgio import read_pgm

    s = make_station()
    ingest(s, packet(0, 0, [Event(4, 6, 5000, 1)]))
    snap = snapshot(s, 10_000)
    write_snapshot(tmp_path, snap)
    ef = read_pgm(tmp_path / "event_frame_10000.pgm")
    assert ef.shape == (12, 16)
    assert ef[6, 4] == 160 and ef[0, 0] == 128
    assert (tmp_path / "recon_10000.pgm").exists()
    text = (tmp_path / "station_metrics.csv").read_text().splitlines()
    assert text[0] == ",".join(METRICS_COLUMNS)
    assert text[1].startswith("10000,1,")
