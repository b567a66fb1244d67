"""Command-line entry point: run scenarios, replay captures, render reports."""
from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .errors import ConfigError, EvssaError
from .runner import (
    PRESET_NAMES,
    ScenarioConfig,
    decode_capture,
    preset_config,
    run_scenario,
    scenario_from_dict,
    with_seed,
)


def _load_config(args: argparse.Namespace) -> ScenarioConfig:
    if args.config is None and args.preset is None:
        raise ConfigError("config", "either --config or --preset is required")
    if args.config is not None and args.preset is not None:
        raise ConfigError("config", "--config and --preset are mutually exclusive")
    if args.preset is not None:
        cfg = preset_config(args.preset)
    else:
        with open(args.config) as f:
            cfg = scenario_from_dict(json.load(f))
    if getattr(args, "seed", None) is not None:
        cfg = with_seed(cfg, args.seed)
    return cfg


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    summary = run_scenario(cfg, out_dir=args.out)
    print(json.dumps(summary, indent=2, default=str))
    return 0


def _cmd_decode(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    with open(args.infile, "rb") as f:
        data = f.read()
    summary = decode_capture(data, cfg, args.out)
    print(json.dumps(summary, indent=2, default=str))
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    from .report import render_report

    for path in render_report(args.run, out_dir=args.out):
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evssa",
        description="Event-camera space-situational-awareness downlink simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario end to end")
    run.add_argument("--config", help="scenario config JSON")
    run.add_argument("--preset", choices=PRESET_NAMES, help="built-in scenario")
    run.add_argument("--out", default=None, help="output directory (overrides config)")
    run.add_argument("--seed", type=int, default=None, help="re-seed all components")
    run.set_defaults(func=_cmd_run)

    dec = sub.add_parser("decode", help="replay a capture file through a fresh station")
    dec.add_argument("--in", dest="infile", required=True, help="capture .evl file")
    dec.add_argument("--out", required=True, help="output directory")
    dec.add_argument("--config", help="scenario config JSON the capture was made with")
    dec.add_argument("--preset", choices=PRESET_NAMES, help="built-in scenario")
    dec.add_argument("--seed", type=int, default=None)
    dec.set_defaults(func=_cmd_decode)

    rep = sub.add_parser("report", help="render figures from a run directory")
    rep.add_argument("--run", required=True, help="directory written by `run`")
    rep.add_argument("--out", default=None, help="figure directory (default: run dir)")
    rep.set_defaults(func=_cmd_report)

    ver = sub.add_parser("version", help="print the version")
    ver.set_defaults(func=lambda args: (print(__version__), 0)[1])

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except EvssaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
