"""Synthetic 2-D orbital scene renderer.

Renders time-parameterized linear-irradiance frames of a simplified
satellite target (axis-aligned body plus reflective panels) over a uniform
background, with optional sun disk. Rendering is a pure function of
(config, t): moving edges use analytic box-coverage blending so edge
pixels take intermediate values instead of hard aliasing steps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError


class IlluminancePreset(str, Enum):
    HDR = "hdr"
    EXTREME_HDR = "extreme_hdr"
    FAST_MOTION = "fast_motion"


#: Ambient illuminance (lux) per lighting preset.
PRESET_ILLUMINANCE = {
    IlluminancePreset.HDR: 5.1,
    IlluminancePreset.EXTREME_HDR: 2370.0,
    IlluminancePreset.FAST_MOTION: 0.9,
}

# Sun-disk irradiance as a multiple of the background level. Must exceed
# 10**6 so a sun-bearing frame's max/min ratio lands strictly above 120 dB.
SUN_TO_BACKGROUND_RATIO = 1e7

# Specular panels reflect this many times brighter than the body, enough
# to clip an 8-bit exposure tuned for the body.
PANEL_GLARE_MULTIPLIER = 50.0


class MotionKind(str, Enum):
    STATIC = "static"
    LINEAR = "linear"
    SINUSOIDAL = "sinusoidal"


@dataclass(frozen=True)
class MotionProfile:
    kind: MotionKind = MotionKind.STATIC
    velocity: tuple[float, float] = (0.0, 0.0)  # pixels/second
    amplitude: tuple[float, float] = (0.0, 0.0)  # pixels, sinusoidal only
    period_s: float = 1.0

    def validate(self) -> None:
        if self.kind == MotionKind.STATIC and self.velocity != (0.0, 0.0):
            raise ConfigError("motion.velocity", "static motion requires zero velocity")
        if self.kind == MotionKind.SINUSOIDAL and self.period_s <= 0:
            raise ConfigError("motion.period_s", "period must be > 0")

    def offset(self, t_us: float) -> tuple[float, float]:
        t = t_us / 1e6
        if self.kind == MotionKind.LINEAR:
            return (self.velocity[0] * t, self.velocity[1] * t)
        if self.kind == MotionKind.SINUSOIDAL:
            phase = math.sin(2.0 * math.pi * t / self.period_s)
            return (self.amplitude[0] * phase, self.amplitude[1] * phase)
        return (0.0, 0.0)


@dataclass(frozen=True)
class RectPart:
    """Axis-aligned rectangle: center and half-extents in pixels."""

    center: tuple[float, float]
    half_extents: tuple[float, float]
    reflectance: float = 1.0

    def validate(self, name: str) -> None:
        if self.half_extents[0] <= 0 or self.half_extents[1] <= 0:
            raise ConfigError(f"{name}.half_extents", "extents must be positive")
        if not math.isfinite(self.reflectance) or self.reflectance < 0:
            raise ConfigError(f"{name}.reflectance", "must be finite and >= 0")


@dataclass(frozen=True)
class TargetModel:
    body: RectPart
    # Panel reflectances are multipliers on the body reflectance.
    panels: tuple[RectPart, ...] = ()

    def validate(self) -> None:
        self.body.validate("target.body")
        for i, p in enumerate(self.panels):
            p.validate(f"target.panels[{i}]")


@dataclass(frozen=True)
class SunModel:
    center: tuple[float, float]
    radius: float = 25.0

    def validate(self) -> None:
        if self.radius <= 0:
            raise ConfigError("sun.radius", "radius must be > 0")


@dataclass(frozen=True)
class SceneConfig:
    width: int
    height: int
    background_irradiance: float = 1.0
    target: TargetModel | None = None
    motion: MotionProfile = field(default_factory=MotionProfile)
    sun: SunModel | None = None
    illuminance_preset: IlluminancePreset = IlluminancePreset.HDR
    seed: int = 0

    def validate(self) -> None:
        if self.width < 1:
            raise ConfigError("scene.width", "must be >= 1")
        if self.height < 1:
            raise ConfigError("scene.height", "must be >= 1")
        if not (self.background_irradiance > 0):
            raise ConfigError("scene.background_irradiance", "must be > 0")
        self.motion.validate()
        if self.target is not None:
            self.target.validate()
        if self.sun is not None:
            self.sun.validate()


@dataclass(frozen=True)
class Frame:
    """Dense linear-irradiance map; all pixel values strictly positive."""

    width: int
    height: int
    pixels: np.ndarray  # float64, shape (height, width)
    t: int  # microseconds


@dataclass(frozen=True)
class Scene:
    config: SceneConfig
    ambient: float  # preset illuminance, lux

    @property
    def is_static(self) -> bool:
        return self.config.motion.kind == MotionKind.STATIC

    @property
    def background_level(self) -> float:
        return self.ambient * self.config.background_irradiance


def build_scene(config: SceneConfig) -> Scene:
    config.validate()
    return Scene(config=config, ambient=PRESET_ILLUMINANCE[config.illuminance_preset])


def _rect_coverage(w: int, h: int, part: RectPart, dx: float, dy: float) -> np.ndarray:
    """Fraction of each pixel's unit square covered by the offset rectangle."""
    cx = part.center[0] + dx
    cy = part.center[1] + dy
    x0, x1 = cx - part.half_extents[0], cx + part.half_extents[0]
    y0, y1 = cy - part.half_extents[1], cy + part.half_extents[1]
    cols = np.arange(w, dtype=np.float64)
    rows = np.arange(h, dtype=np.float64)
    ox = np.clip(np.minimum(x1, cols + 1.0) - np.maximum(x0, cols), 0.0, 1.0)
    oy = np.clip(np.minimum(y1, rows + 1.0) - np.maximum(y0, rows), 0.0, 1.0)
    return np.outer(oy, ox)


def _disk_coverage(w: int, h: int, sun: SunModel) -> np.ndarray:
    cols = np.arange(w, dtype=np.float64) + 0.5
    rows = np.arange(h, dtype=np.float64) + 0.5
    dist = np.hypot(cols[None, :] - sun.center[0], rows[:, None] - sun.center[1])
    return np.clip(sun.radius + 0.5 - dist, 0.0, 1.0)


def render_irradiance(scene: Scene, t: float) -> Frame:
    """Frame at time t (µs). Pure: identical inputs give identical pixels."""
    if t < 0:
        raise ConfigError("t", "render time must be >= 0")
    cfg = scene.config
    w, h = cfg.width, cfg.height
    dx, dy = cfg.motion.offset(t)

    # Reflectance field relative to the background (= 1.0).
    refl = np.ones((h, w), dtype=np.float64)
    if cfg.target is not None:
        body = cfg.target.body
        cov = _rect_coverage(w, h, body, dx, dy)
        refl = refl * (1.0 - cov) + cov * body.reflectance
        for panel in cfg.target.panels:
            cov = _rect_coverage(w, h, panel, dx, dy)
            refl = refl * (1.0 - cov) + cov * body.reflectance * panel.reflectance
    if cfg.sun is not None:
        cov = _disk_coverage(w, h, cfg.sun)
        refl = refl * (1.0 - cov) + cov * SUN_TO_BACKGROUND_RATIO

    pixels = scene.background_level * refl
    pixels.setflags(write=False)
    return Frame(width=w, height=h, pixels=pixels, t=int(t))


def dynamic_range_db(frame: Frame) -> float:
    """20*log10(max/min) over the frame's strictly positive pixels."""
    return 20.0 * math.log10(float(frame.pixels.max()) / float(frame.pixels.min()))
