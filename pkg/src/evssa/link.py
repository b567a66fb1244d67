"""Bit-exact binary downlink protocol and a capacity/latency channel model.

Wire layout, little-endian throughout:

* common header: magic ``EVS1`` (4 B) | msg_type u8 | seq u32
* heartbeat body (type 0x01): state u8 | rate_bps u32 | t u64
* event packet body (type 0x02): base_t u64 | count u16 | count records of
  {dt u16 | x u16 | y u16 | p u8 (0x00 = -1, 0x01 = +1) | reserved u8}
* trailer: CRC-32 (IEEE, reflected) over everything after the magic

Messages may be concatenated into an ``.evl`` capture file; the framing is
self-delimiting because each header determines the total message length.
"""
from __future__ import annotations

import math
import random
import struct
import zlib
from dataclasses import dataclass, field
from typing import Iterator, Union

from .errors import (
    BadMagicError,
    CrcMismatchError,
    EncodeError,
    FormatError,
    OrderingError,
    TruncatedError,
    UnknownTypeError,
)
from .monitor import Verdict
from .sensor import Event

MAGIC = b"EVS1"
MSG_HEARTBEAT = 0x01
MSG_EVENT_PACKET = 0x02

HEARTBEAT_LEN = 26  # 4 magic + 1 type + 4 seq + 1 state + 4 rate + 8 t + 4 crc
_PACKET_FIXED_LEN = 23  # everything except the event records
EVENT_RECORD_LEN = 8
MAX_EVENTS_PER_PACKET = 65535
MAX_PACKET_SPAN_US = 65535

_HB_BODY = struct.Struct("<BIQ")
_PKT_HEAD = struct.Struct("<QH")
_RECORD = struct.Struct("<HHHBB")


@dataclass(frozen=True)
class Heartbeat:
    state: Verdict
    rate_bps: int
    t: int
    seq: int


@dataclass(frozen=True)
class EventPacket:
    base_t: int
    events: tuple[Event, ...]
    seq: int


Message = Union[Heartbeat, EventPacket]


def encode(msg: Message) -> bytes:
    """Serialize a message to its exact wire layout."""
    if isinstance(msg, Heartbeat):
        if not (0 <= msg.rate_bps <= 0xFFFFFFFF):
            raise EncodeError(f"rate_bps {msg.rate_bps} does not fit u32")
        state_byte = 0x00 if msg.state == Verdict.NORMAL else 0x01
        body = _HB_BODY.pack(state_byte, msg.rate_bps, msg.t)
        payload = struct.pack("<BI", MSG_HEARTBEAT, msg.seq & 0xFFFFFFFF) + body
    elif isinstance(msg, EventPacket):
        n = len(msg.events)
        if not (1 <= n <= MAX_EVENTS_PER_PACKET):
            raise EncodeError(f"event packet must hold 1..{MAX_EVENTS_PER_PACKET} events, got {n}")
        parts = [struct.pack("<BI", MSG_EVENT_PACKET, msg.seq & 0xFFFFFFFF),
                 _PKT_HEAD.pack(msg.base_t, n)]
        for e in msg.events:
            dt = e.t - msg.base_t
            if not (0 <= dt <= MAX_PACKET_SPAN_US):
                raise EncodeError(f"event dt {dt} does not fit u16; split the packet")
            parts.append(_RECORD.pack(dt, e.x, e.y, 0x01 if e.p > 0 else 0x00, 0x00))
        payload = b"".join(parts)
    else:
        raise EncodeError(f"unknown message type {type(msg).__name__}")
    crc = zlib.crc32(payload)
    return MAGIC + payload + struct.pack("<I", crc)


def expected_length(buf: bytes) -> int:
    """Total message length implied by the header of `buf`."""
    if len(buf) < 4:
        raise TruncatedError("buffer shorter than magic")
    if buf[:4] != MAGIC:
        raise BadMagicError(f"bad magic {buf[:4]!r}")
    if len(buf) < 13:
        raise TruncatedError("buffer shorter than minimal message")
    msg_type = buf[4]
    if msg_type == MSG_HEARTBEAT:
        return HEARTBEAT_LEN
    if msg_type == MSG_EVENT_PACKET:
        if len(buf) < 19:
            raise TruncatedError("event packet header incomplete")
        (count,) = struct.unpack_from("<H", buf, 17)
        return _PACKET_FIXED_LEN + EVENT_RECORD_LEN * count
    raise UnknownTypeError(f"unknown msg_type 0x{msg_type:02x}")


def decode(buf: bytes) -> Message:
    """Inverse of encode; raises a categorized DecodeError on bad input."""
    length = expected_length(buf)
    if len(buf) < length:
        raise TruncatedError(f"need {length} bytes, have {len(buf)}")
    if len(buf) > length:
        raise TruncatedError(f"expected {length} bytes, have {len(buf)}")
    payload = buf[4:-4]
    (crc,) = struct.unpack_from("<I", buf, length - 4)
    if zlib.crc32(payload) != crc:
        raise CrcMismatchError("crc32 mismatch")
    msg_type = buf[4]
    (seq,) = struct.unpack_from("<I", buf, 5)
    if msg_type == MSG_HEARTBEAT:
        state_byte, rate_bps, t = _HB_BODY.unpack_from(buf, 9)
        if state_byte not in (0x00, 0x01):
            raise FormatError(f"invalid state byte 0x{state_byte:02x}")
        state = Verdict.NORMAL if state_byte == 0x00 else Verdict.ABNORMAL
        return Heartbeat(state=state, rate_bps=rate_bps, t=t, seq=seq)
    base_t, count = _PKT_HEAD.unpack_from(buf, 9)
    events = []
    off = 19
    for _ in range(count):
        dt, x, y, pb, _reserved = _RECORD.unpack_from(buf, off)
        off += EVENT_RECORD_LEN
        if pb not in (0x00, 0x01):
            raise FormatError(f"invalid polarity byte 0x{pb:02x}")
        events.append(Event(x, y, base_t + dt, 1 if pb == 0x01 else -1))
    return EventPacket(base_t=base_t, events=tuple(events), seq=seq)


def iter_messages(data: bytes) -> Iterator[bytes]:
    """Split a capture stream into raw message byte strings."""
    off = 0
    while off < len(data):
        length = expected_length(data[off:off + _PACKET_FIXED_LEN])
        if off + length > len(data):
            raise TruncatedError("capture ends mid-message")
        yield data[off:off + length]
        off += length


def packetize(events: list[Event], seq_start: int) -> list[EventPacket]:
    """Split a time-sorted event list into valid packets.

    Splits whenever the record count or the u16 timestamp span would
    overflow; sequence numbers count up from `seq_start`.
    """
    packets: list[EventPacket] = []
    seq = seq_start
    start = 0
    while start < len(events):
        base_t = events[start].t
        end = start
        while (
            end < len(events)
            and end - start < MAX_EVENTS_PER_PACKET
            and events[end].t - base_t <= MAX_PACKET_SPAN_US
        ):
            end += 1
        packets.append(EventPacket(base_t=base_t, events=tuple(events[start:end]), seq=seq))
        seq += 1
        start = end
    return packets


@dataclass
class Channel:
    """FIFO link with finite capacity, fixed latency and optional loss.

    Lost messages still occupy their serialization time (they were
    transmitted, just never heard).
    """

    capacity_bps: float
    latency_us: int = 0
    loss_probability: float = 0.0
    seed: int = 0
    busy_until_us: int = 0
    last_send_us: int | None = None
    _rng: random.Random = field(default=None, repr=False)

    def __post_init__(self):
        if self.capacity_bps <= 0:
            raise FormatError("channel capacity must be > 0")
        if self.latency_us < 0:
            raise FormatError("channel latency must be >= 0")
        self._rng = random.Random(self.seed)


def transmit(ch: Channel, payload: bytes, t_send: int) -> int | None:
    """Queue `payload` at t_send; returns arrival time (µs) or None if lost."""
    if ch.last_send_us is not None and t_send < ch.last_send_us:
        raise OrderingError(f"send time {t_send} before {ch.last_send_us}")
    ch.last_send_us = t_send
    serialization_us = math.ceil(8 * len(payload) * 1e6 / ch.capacity_bps)
    start = max(t_send, ch.busy_until_us)
    ch.busy_until_us = start + serialization_us
    arrival = ch.busy_until_us + ch.latency_us
    if ch.loss_probability > 0.0 and ch._rng.random() < ch.loss_probability:
        return None
    return arrival
