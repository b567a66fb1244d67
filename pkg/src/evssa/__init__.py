"""Event-camera space-situational-awareness downlink simulator."""

__version__ = "0.1.0"

from .accumulate import EventFrame, accumulate, to_u8
from .metrics import PowerModel, aps_bandwidth, dvs_bandwidth, energy_report
from .monitor import MonitorConfig, MonitorState, Verdict, make_monitor, observe
from .reconstruct import LogImage, ReconstructConfig, integrate, tonemap
from .runner import ScenarioConfig, decode_capture, preset_config, run_scenario
from .scene import (
    Frame,
    IlluminancePreset,
    MotionKind,
    MotionProfile,
    RectPart,
    Scene,
    SceneConfig,
    SunModel,
    TargetModel,
    build_scene,
    dynamic_range_db,
    render_irradiance,
)
from .sensor import (
    ApsImage,
    DvsConfig,
    Event,
    SensorState,
    aps_capture,
    aps_capture_scene,
    apply_bandwidth_cap,
    init_sensor,
    inject_noise,
    sample,
)

__all__ = [
    "__version__",
    "ApsImage",
    "DvsConfig",
    "Event",
    "EventFrame",
    "Frame",
    "IlluminancePreset",
    "LogImage",
    "MonitorConfig",
    "MonitorState",
    "MotionKind",
    "MotionProfile",
    "PowerModel",
    "RectPart",
    "ReconstructConfig",
    "Scene",
    "SceneConfig",
    "ScenarioConfig",
    "SensorState",
    "SunModel",
    "TargetModel",
    "Verdict",
    "accumulate",
    "aps_bandwidth",
    "aps_capture",
    "aps_capture_scene",
    "apply_bandwidth_cap",
    "build_scene",
    "decode_capture",
    "dvs_bandwidth",
    "dynamic_range_db",
    "energy_report",
    "init_sensor",
    "inject_noise",
    "integrate",
    "make_monitor",
    "observe",
    "preset_config",
    "render_irradiance",
    "run_scenario",
    "sample",
    "to_u8",
    "tonemap",
]
