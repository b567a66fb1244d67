"""Scenario runner: spacecraft side (scene -> sensor -> monitor -> link)
and ground side (station) on one deterministic virtual clock.

While the monitor reports Normal only heartbeats leave the spacecraft; on
Abnormal every surviving sensor event is packetized and transmitted. The
station reports with one snapshot interval of lag so in-flight telemetry
has landed before its window is rendered, which keeps live runs and
capture-file replays byte-identical.
"""
from __future__ import annotations

import csv
import math
import os
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Any

from . import link, metrics, station
from .accumulate import DEFAULT_WINDOW_US
from .errors import ConfigError
from .monitor import MonitorConfig, Verdict, make_monitor, observe
from .reconstruct import InitMode, ReconstructConfig
from .scene import (
    IlluminancePreset,
    MotionKind,
    MotionProfile,
    PANEL_GLARE_MULTIPLIER,
    PRESET_ILLUMINANCE,
    RectPart,
    SceneConfig,
    SunModel,
    TargetModel,
    build_scene,
    render_irradiance,
)
from .sensor import (
    DvsConfig,
    TokenBucket,
    aps_capture_scene,
    apply_bandwidth_cap,
    auto_exposure_gain,
    event_sort_key,
    init_sensor,
    inject_noise,
    sample,
)

PRESET_NAMES = ("hdr", "extreme_hdr", "fast_motion")

_U32_MAX = 0xFFFFFFFF


@dataclass(frozen=True)
class ChannelConfig:
    capacity_bps: float = 50e6
    latency_us: int = 5000
    loss_probability: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if self.capacity_bps <= 0:
            raise ConfigError("channel.capacity_bps", "must be > 0")
        if self.latency_us < 0:
            raise ConfigError("channel.latency_us", "must be >= 0")
        if not (0.0 <= self.loss_probability <= 1.0):
            raise ConfigError("channel.loss_probability", "must be in [0, 1]")

    def build(self) -> link.Channel:
        return link.Channel(
            capacity_bps=self.capacity_bps,
            latency_us=self.latency_us,
            loss_probability=self.loss_probability,
            seed=self.seed,
        )


@dataclass(frozen=True)
class ApsConfig:
    exposure_us: int = 10_000
    gain: float | None = None  # None = auto-expose for the target body
    fps: float = metrics.APS_REFERENCE_FPS
    bits_per_pixel: int = 8

    def validate(self) -> None:
        if self.exposure_us <= 0:
            raise ConfigError("aps.exposure_us", "must be > 0")
        if self.fps <= 0:
            raise ConfigError("aps.fps", "must be > 0")


@dataclass(frozen=True)
class ScenarioConfig:
    scene: SceneConfig
    sensor: DvsConfig = field(default_factory=DvsConfig)
    monitor: MonitorConfig = field(default_factory=MonitorConfig)
    reconstruct: ReconstructConfig = field(default_factory=ReconstructConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    aps: ApsConfig = field(default_factory=ApsConfig)
    power: metrics.PowerModel = field(default_factory=metrics.PowerModel)
    duration_us: int = 2_000_000
    sensor_sample_interval_us: int = 1000
    snapshot_interval_us: int = 100_000
    event_frame_window_us: int = DEFAULT_WINDOW_US
    heartbeat_interval_us: int = 1_000_000
    output_dir: str = "out"

    def validate(self) -> None:
        self.scene.validate()
        self.sensor.validate()
        self.monitor.validate()
        self.reconstruct.validate()
        self.channel.validate()
        self.aps.validate()
        if self.scene.width != self.sensor.width or self.scene.height != self.sensor.height:
            raise ConfigError("sensor.width/height", "must match scene dimensions")
        if self.sensor_sample_interval_us < 1:
            raise ConfigError("sensor_sample_interval_us", "must be >= 1 µs")
        if self.duration_us < self.sensor_sample_interval_us:
            raise ConfigError("duration_us", "must cover at least one sample interval")
        if self.duration_us % self.sensor_sample_interval_us != 0:
            raise ConfigError("duration_us", "must be a multiple of the sample interval")
        if self.snapshot_interval_us % self.sensor_sample_interval_us != 0:
            raise ConfigError("snapshot_interval_us", "must be a multiple of the sample interval")
        if self.duration_us % self.snapshot_interval_us != 0:
            raise ConfigError("duration_us", "must be a multiple of the snapshot interval")
        if self.reconstruct.contrast_threshold != self.sensor.contrast_threshold:
            raise ConfigError(
                "reconstruct.contrast_threshold", "must equal sensor.contrast_threshold"
            )

    def aps_gain(self) -> float:
        if self.aps.gain is not None:
            return self.aps.gain
        target = self.scene.target
        ambient = PRESET_ILLUMINANCE[self.scene.illuminance_preset]
        body_refl = target.body.reflectance if target is not None else 1.0
        body_irr = ambient * self.scene.background_irradiance * body_refl
        return auto_exposure_gain(body_irr, self.aps.exposure_us)


def preset_config(name: str, seed: int = 0, output_dir: str = "out") -> ScenarioConfig:
    """Built-in scenario for one of the three lighting/motion presets."""
    if name not in PRESET_NAMES:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    body = RectPart(center=(150.0, 130.0), half_extents=(55.0, 35.0), reflectance=5.0)
    panels = (
        RectPart(center=(70.0, 130.0), half_extents=(20.0, 10.0), reflectance=PANEL_GLARE_MULTIPLIER),
        RectPart(center=(230.0, 130.0), half_extents=(20.0, 10.0), reflectance=PANEL_GLARE_MULTIPLIER),
    )
    if name == "hdr":
        scene = SceneConfig(
            width=346,
            height=260,
            target=TargetModel(body=body, panels=panels),
            motion=MotionProfile(kind=MotionKind.LINEAR, velocity=(20.0, 0.0)),
            illuminance_preset=IlluminancePreset.HDR,
            seed=seed,
        )
        aps = ApsConfig(exposure_us=10_000)
    elif name == "extreme_hdr":
        scene = SceneConfig(
            width=346,
            height=260,
            target=TargetModel(body=body, panels=panels),
            motion=MotionProfile(kind=MotionKind.LINEAR, velocity=(80.0, 0.0)),
            sun=SunModel(center=(60.0, 55.0), radius=28.0),
            illuminance_preset=IlluminancePreset.EXTREME_HDR,
            seed=seed,
        )
        aps = ApsConfig(exposure_us=1000)
    else:  # fast_motion: dim scene, bare body, long blurring exposure
        scene = SceneConfig(
            width=346,
            height=260,
            target=TargetModel(
                body=RectPart(center=(100.0, 130.0), half_extents=(40.0, 25.0), reflectance=5.0)
            ),
            motion=MotionProfile(kind=MotionKind.LINEAR, velocity=(60.0, 0.0)),
            illuminance_preset=IlluminancePreset.FAST_MOTION,
            seed=seed,
        )
        aps = ApsConfig(exposure_us=500_000)
    return ScenarioConfig(
        scene=scene,
        sensor=DvsConfig(seed=seed),
        channel=ChannelConfig(seed=seed),
        aps=aps,
        output_dir=output_dir,
    )


# --- strict config (de)serialization -------------------------------------

def _take(section: str, d: dict, allowed: set[str]) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(section, f"unknown keys: {sorted(unknown)}")


def _pair(v: Any) -> tuple[float, float]:
    return (float(v[0]), float(v[1]))


def _rect_from_dict(section: str, d: dict) -> RectPart:
    _take(section, d, {"center", "half_extents", "reflectance"})
    return RectPart(
        center=_pair(d["center"]),
        half_extents=_pair(d["half_extents"]),
        reflectance=float(d.get("reflectance", 1.0)),
    )


def scenario_from_dict(d: dict) -> ScenarioConfig:
    _take(
        "config",
        d,
        {
            "scene",
            "sensor",
            "monitor",
            "reconstruct",
            "channel",
            "aps",
            "power",
            "duration_us",
            "sensor_sample_interval_us",
            "snapshot_interval_us",
            "event_frame_window_us",
            "heartbeat_interval_us",
            "output_dir",
        },
    )
    sd = dict(d["scene"])
    _take(
        "scene",
        sd,
        {
            "width",
            "height",
            "background_irradiance",
            "target",
            "motion",
            "sun",
            "illuminance_preset",
            "seed",
        },
    )
    target = None
    if sd.get("target") is not None:
        td = dict(sd["target"])
        _take("scene.target", td, {"body", "panels"})
        target = TargetModel(
            body=_rect_from_dict("scene.target.body", dict(td["body"])),
            panels=tuple(
                _rect_from_dict(f"scene.target.panels[{i}]", dict(p))
                for i, p in enumerate(td.get("panels", []))
            ),
        )
    md = dict(sd.get("motion", {}))
    _take("scene.motion", md, {"kind", "velocity", "amplitude", "period_s"})
    motion = MotionProfile(
        kind=MotionKind(md.get("kind", "static")),
        velocity=_pair(md.get("velocity", (0.0, 0.0))),
        amplitude=_pair(md.get("amplitude", (0.0, 0.0))),
        period_s=float(md.get("period_s", 1.0)),
    )
    sun = None
    if sd.get("sun") is not None:
        und = dict(sd["sun"])
        _take("scene.sun", und, {"center", "radius"})
        sun = SunModel(center=_pair(und["center"]), radius=float(und.get("radius", 25.0)))
    scene = SceneConfig(
        width=int(sd["width"]),
        height=int(sd["height"]),
        background_irradiance=float(sd.get("background_irradiance", 1.0)),
        target=target,
        motion=motion,
        sun=sun,
        illuminance_preset=IlluminancePreset(sd.get("illuminance_preset", "hdr")),
        seed=int(sd.get("seed", 0)),
    )

    nd = dict(d.get("sensor", {}))
    _take(
        "sensor",
        nd,
        {
            "width",
            "height",
            "contrast_threshold",
            "refractory_us",
            "noise_rate",
            "max_event_rate",
            "seed",
        },
    )
    sensor = DvsConfig(
        width=int(nd.get("width", scene.width)),
        height=int(nd.get("height", scene.height)),
        contrast_threshold=float(nd.get("contrast_threshold", 0.2)),
        refractory_us=int(nd.get("refractory_us", 50)),
        noise_rate=float(nd.get("noise_rate", DvsConfig.noise_rate)),
        max_event_rate=float(nd.get("max_event_rate", 12e6)),
        seed=int(nd.get("seed", 0)),
    )

    mo = dict(d.get("monitor", {}))
    _take("monitor", mo, {"threshold_bps", "window_us", "hysteresis", "bits_per_event", "dwell_us"})
    mon = MonitorConfig(
        threshold_bps=float(mo.get("threshold_bps", 100_000.0)),
        window_us=int(mo.get("window_us", 100_000)),
        hysteresis=float(mo.get("hysteresis", 0.2)),
        bits_per_event=int(mo.get("bits_per_event", 64)),
        dwell_us=None if mo.get("dwell_us") is None else int(mo["dwell_us"]),
    )

    rd = dict(d.get("reconstruct", {}))
    _take("reconstruct", rd, {"contrast_threshold", "decay_tau_s", "init"})
    recon = ReconstructConfig(
        contrast_threshold=float(rd.get("contrast_threshold", sensor.contrast_threshold)),
        decay_tau_s=float(rd.get("decay_tau_s", 0.0)),
        init=InitMode(rd.get("init", "mid_gray")),
    )

    cd = dict(d.get("channel", {}))
    _take("channel", cd, {"capacity_bps", "latency_us", "loss_probability", "seed"})
    channel = ChannelConfig(
        capacity_bps=float(cd.get("capacity_bps", 50e6)),
        latency_us=int(cd.get("latency_us", 5000)),
        loss_probability=float(cd.get("loss_probability", 0.0)),
        seed=int(cd.get("seed", 0)),
    )

    ad = dict(d.get("aps", {}))
    _take("aps", ad, {"exposure_us", "gain", "fps", "bits_per_pixel"})
    aps = ApsConfig(
        exposure_us=int(ad.get("exposure_us", 10_000)),
        gain=None if ad.get("gain") is None else float(ad["gain"]),
        fps=float(ad.get("fps", metrics.APS_REFERENCE_FPS)),
        bits_per_pixel=int(ad.get("bits_per_pixel", 8)),
    )

    pd = dict(d.get("power", {}))
    _take("power", pd, {"dvs_active_w", "aps_active_w"})
    power = metrics.PowerModel(
        dvs_active_w=float(pd.get("dvs_active_w", 0.02)),
        aps_active_w=float(pd.get("aps_active_w", 0.14)),
    )

    cfg = ScenarioConfig(
        scene=scene,
        sensor=sensor,
        monitor=mon,
        reconstruct=recon,
        channel=channel,
        aps=aps,
        power=power,
        duration_us=int(d.get("duration_us", 2_000_000)),
        sensor_sample_interval_us=int(d.get("sensor_sample_interval_us", 1000)),
        snapshot_interval_us=int(d.get("snapshot_interval_us", 100_000)),
        event_frame_window_us=int(d.get("event_frame_window_us", DEFAULT_WINDOW_US)),
        heartbeat_interval_us=int(d.get("heartbeat_interval_us", 1_000_000)),
        output_dir=str(d.get("output_dir", "out")),
    )
    cfg.validate()
    return cfg


def with_seed(cfg: ScenarioConfig, seed: int) -> ScenarioConfig:
    """Re-seed every stochastic component of a scenario."""
    return replace(
        cfg,
        scene=replace(cfg.scene, seed=seed),
        sensor=replace(cfg.sensor, seed=seed),
        channel=replace(cfg.channel, seed=seed),
    )


def _make_station(cfg: ScenarioConfig) -> station.StationState:
    scn = build_scene(cfg.scene)
    return station.StationState(
        width=cfg.scene.width,
        height=cfg.scene.height,
        recon_cfg=cfg.reconstruct,
        recon_init_value=math.log(scn.background_level),
        window_us=cfg.event_frame_window_us,
    )


RUN_METRICS_COLUMNS = [
    "t_us",
    "events",
    "dvs_bandwidth_bps",
    "aps_bandwidth_bps",
    "dvs_energy_j",
    "aps_energy_j",
    "dropped_events",
]


def run_scenario(cfg: ScenarioConfig, out_dir: str | None = None) -> dict:
    """Execute one end-to-end scenario; returns a summary of the run.

    Artifacts written to the output directory: capture.evl, monitor_log.csv,
    run_metrics.csv, station_metrics.csv, per-snapshot PGM images and one
    mid-run frame-camera exposure (aps_<t>.pgm).
    """
    cfg.validate()
    out = out_dir if out_dir is not None else cfg.output_dir
    os.makedirs(out, exist_ok=True)

    scn = build_scene(cfg.scene)
    frame0 = render_irradiance(scn, 0)
    sensor_state = init_sensor(cfg.sensor, frame0)
    bucket = TokenBucket(cfg.sensor.max_event_rate)
    mon = make_monitor(cfg.monitor)
    channel = cfg.channel.build()
    ground = _make_station(cfg)

    step = cfg.sensor_sample_interval_us
    snap_int = cfg.snapshot_interval_us
    duration = cfg.duration_us

    capture = bytearray()
    pending: deque[tuple[int, bytes]] = deque()  # (t_arrive, raw), FIFO
    monitor_rows: list[tuple[int, str, float]] = [(0, Verdict.NORMAL.value, 0.0)]
    run_rows: list[dict] = []
    seq = 0
    last_hb_t: int | None = None
    prev_state = Verdict.NORMAL
    total_events = 0
    sent_packets = 0
    sent_heartbeats = 0
    interval_events = 0
    peak_window_bps = 0.0
    frame = frame0

    def deliver_up_to(t_limit: int | None) -> None:
        while pending and (t_limit is None or pending[0][0] <= t_limit):
            _, raw = pending.popleft()
            station.ingest(ground, raw)

    def send(raw: bytes, t: int) -> None:
        arrival = link.transmit(channel, raw, t)
        capture.extend(raw)
        if arrival is not None:
            pending.append((arrival, raw))

    for t in range(step, duration + 1, step):
        if not scn.is_static:
            frame = render_irradiance(scn, t)
        signal = sample(sensor_state, frame, t)
        noise = inject_noise(sensor_state, t - step, t)
        if noise:
            merged = sorted(signal + noise, key=event_sort_key)
        else:
            merged = signal
        kept, _ = apply_bandwidth_cap(merged, cfg.sensor.max_event_rate, bucket, sensor_state)
        state, rate = observe(mon, len(kept), t)
        if state != prev_state:
            monitor_rows.append((t, state.value, rate))
            prev_state = state
        if state == Verdict.ABNORMAL:
            if kept:
                for pkt in link.packetize(kept, seq):
                    send(link.encode(pkt), t)
                    seq += 1
                    sent_packets += 1
        else:
            if last_hb_t is None or t - last_hb_t >= cfg.heartbeat_interval_us:
                hb = link.Heartbeat(
                    state=state, rate_bps=min(int(rate), _U32_MAX), t=t, seq=seq
                )
                send(link.encode(hb), t)
                seq += 1
                sent_heartbeats += 1
                last_hb_t = t

        total_events += len(kept)
        interval_events += len(kept)

        if t % snap_int == 0:
            deliver_up_to(t)
            snap = station.snapshot(ground, t - snap_int)
            station.write_snapshot(out, snap)
            window_s = snap_int / 1e6
            dvs_bps = metrics.dvs_bandwidth(interval_events, window_s)
            peak_window_bps = max(peak_window_bps, dvs_bps)
            energy = metrics.energy_report(cfg.power, t / 1e6)
            run_rows.append(
                {
                    "t_us": t,
                    "events": interval_events,
                    "dvs_bandwidth_bps": f"{dvs_bps:.3f}",
                    "aps_bandwidth_bps": f"{metrics.aps_bandwidth(cfg.scene.width, cfg.scene.height, cfg.aps.bits_per_pixel, cfg.aps.fps):.3f}",
                    "dvs_energy_j": f"{energy['dvs_j']:.6f}",
                    "aps_energy_j": f"{energy['aps_j']:.6f}",
                    "dropped_events": sensor_state.dropped_event_count,
                }
            )
            interval_events = 0

    deliver_up_to(None)
    final_snap = station.snapshot(ground, duration)
    station.write_snapshot(out, final_snap)

    aps_t = duration // 2
    aps_img = aps_capture_scene(scn, aps_t, cfg.aps.exposure_us, cfg.aps_gain())
    from .imgio import write_pgm

    write_pgm(os.path.join(out, f"aps_{aps_t}.pgm"), aps_img.pixels)

    with open(os.path.join(out, "capture.evl"), "wb") as f:
        f.write(bytes(capture))
    with open(os.path.join(out, "monitor_log.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t_us", "state", "rate_bps"])
        for row in monitor_rows:
            w.writerow([row[0], row[1], f"{row[2]:.3f}"])
    with open(os.path.join(out, "run_metrics.csv"), "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=RUN_METRICS_COLUMNS)
        w.writeheader()
        for row in run_rows:
            w.writerow(row)

    threshold = cfg.monitor.threshold_bps
    return {
        "out_dir": out,
        "total_events": total_events,
        "dropped_events": sensor_state.dropped_event_count,
        "sent_packets": sent_packets,
        "sent_heartbeats": sent_heartbeats,
        "final_state": prev_state.value,
        "peak_window_bps": peak_window_bps,
        "mean_bps": metrics.dvs_bandwidth(total_events, duration / 1e6),
        "threshold_bps": threshold,
        "monitor_transitions": monitor_rows[1:],
    }


def decode_capture(capture: bytes, cfg: ScenarioConfig, out_dir: str) -> dict:
    """Offline station replay of a capture stream.

    Ingests every message in file order, then renders the same snapshot
    schedule as a live run of `cfg`; outputs are byte-identical to the live
    station's when the channel delivered everything within one snapshot
    interval.
    """
    cfg.validate()
    os.makedirs(out_dir, exist_ok=True)
    ground = _make_station(cfg)
    n_messages = 0
    for raw in link.iter_messages(capture):
        station.ingest(ground, raw)
        n_messages += 1
    for t in range(0, cfg.duration_us + 1, cfg.snapshot_interval_us):
        snap = station.snapshot(ground, t)
        station.write_snapshot(out_dir, snap)
    return {
        "out_dir": out_dir,
        "messages": n_messages,
        "events": ground.event_count,
        "errors": dict(ground.error_counts),
        "gaps": len(ground.gap_seqs),
        "duplicates": ground.duplicates,
    }
