"""Render matplotlib figures from a run's delimited output files."""
from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _read_csv(path: str) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def render_report(run_dir: str, out_dir: str | None = None) -> list[str]:
    """Read the CSVs in `run_dir` and write summary figures next to them.

    Returns the list of figure paths written.
    """
    out = out_dir if out_dir is not None else run_dir
    os.makedirs(out, exist_ok=True)
    written: list[str] = []

    run_rows = _read_csv(os.path.join(run_dir, "run_metrics.csv"))
    mon_rows = _read_csv(os.path.join(run_dir, "monitor_log.csv"))

    t_s = [int(r["t_us"]) / 1e6 for r in run_rows]
    dvs_kbps = [float(r["dvs_bandwidth_bps"]) / 1e3 for r in run_rows]
    aps_kbps = [float(r["aps_bandwidth_bps"]) / 1e3 for r in run_rows]

    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(t_s, dvs_kbps, label="DVS event stream", color="tab:blue")
    ax.plot(t_s, aps_kbps, label="APS frame stream", color="tab:orange", linestyle="--")
    for r in mon_rows:
        if r["state"] == "abnormal":
            ax.axvline(int(r["t_us"]) / 1e6, color="tab:red", alpha=0.5, linestyle=":")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("bandwidth (kb/s)")
    ax.set_yscale("log")
    ax.legend()
    ax.set_title("Downlink bandwidth per snapshot interval")
    fig.tight_layout()
    path = os.path.join(out, "bandwidth_timeline.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    if run_rows:
        last = run_rows[-1]
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.bar(
            ["DVS", "APS"],
            [float(last["dvs_energy_j"]), float(last["aps_energy_j"])],
            color=["tab:blue", "tab:orange"],
        )
        ax.set_ylabel("energy (J)")
        ax.set_title("Sensor energy over the run")
        fig.tight_layout()
        path = os.path.join(out, "energy_comparison.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    station_path = os.path.join(run_dir, "station_metrics.csv")
    if os.path.exists(station_path):
        st_rows = _read_csv(station_path)
        fig, ax = plt.subplots(figsize=(8, 4.5))
        ax.step(
            [int(r["t_us"]) / 1e6 for r in st_rows],
            [float(r["rate_bps"]) / 1e3 for r in st_rows],
            where="post",
            color="tab:green",
        )
        ax.set_xlabel("time (s)")
        ax.set_ylabel("received event rate (kb/s)")
        ax.set_title("Ground-station event rate per reporting window")
        fig.tight_layout()
        path = os.path.join(out, "station_rate.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    return written
