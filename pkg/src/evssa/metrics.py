"""Bandwidth and power accounting for the event/frame sensor comparison."""
from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError
from .monitor import BITS_PER_EVENT

# Frame-camera rate back-solved so a 346x260 8-bit stream totals 760 kb/s.
APS_REFERENCE_FPS = 760_000 / (346 * 260 * 8)


@dataclass(frozen=True)
class PowerModel:
    dvs_active_w: float = 0.02
    aps_active_w: float = 0.14

    def validate(self) -> None:
        if self.dvs_active_w < 0 or self.aps_active_w < 0:
            raise ConfigError("power", "wattages must be >= 0")


def dvs_bandwidth(event_count: int, window_s: float, bits_per_event: int = BITS_PER_EVENT) -> float:
    """Event-stream bitrate over a window, bits/second."""
    if window_s <= 0:
        raise ConfigError("window_s", "must be > 0")
    return event_count * bits_per_event / window_s


def aps_bandwidth(width: int, height: int, bits_per_pixel: int, fps: float) -> float:
    """Uncompressed frame-stream bitrate, bits/second."""
    if width <= 0 or height <= 0 or bits_per_pixel <= 0 or fps <= 0:
        raise ConfigError("aps_bandwidth", "all arguments must be > 0")
    return width * height * bits_per_pixel * fps


def energy_report(
    model: PowerModel, duration_s: float, dvs_duty: float = 1.0, aps_duty: float = 1.0
) -> dict:
    """Per-sensor energy over a run, plus the APS-to-DVS power ratio."""
    for name, duty in (("dvs_duty", dvs_duty), ("aps_duty", aps_duty)):
        if not (0.0 <= duty <= 1.0):
            raise ConfigError(name, "must be in [0, 1]")
    model.validate()
    dvs_j = model.dvs_active_w * dvs_duty * duration_s
    aps_j = model.aps_active_w * aps_duty * duration_s
    if model.dvs_active_w > 0:
        # rounded so decimal wattages (0.14 / 0.02) give an exact 7.0
        ratio = round(model.aps_active_w / model.dvs_active_w, 12)
    else:
        ratio = float("inf")
    return {"dvs_j": dvs_j, "aps_j": aps_j, "power_ratio": ratio}
