"""Matplotlib figure rendering for the CLI report paths.

All figures are saved as SVG with a fixed hash salt and no date metadata
so that reruns produce byte-identical files.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .camera import camera_for_view, image_direction, project_curve  # noqa: E402
from .catalog import scenario_spec  # noqa: E402

VELOCITY_COLOR = "green"
FORCE_COLOR = "magenta"
CURVE_COLOR = "orange"
GLYPH_LENGTH = 0.02  # image units

matplotlib.rcParams["svg.hashsalt"] = "newtonbank"
_SVG_KW = dict(format="svg", metadata={"Date": None})


def save_trajectory_figure(data, entry_id: int, out_path: str) -> None:
    """Projected trajectory with velocity (green) and force (magenta) glyphs."""
    entry = data.bank.catalog[entry_id - 1]
    states = data.trajectories[entry_id - 1]
    cam = camera_for_view(entry.viewpoint)
    points = project_curve(cam, states)
    us = np.array([p.u for p in points])
    vs = np.array([p.v for p in points])

    fig, ax = plt.subplots(figsize=(6, 6))
    line, = ax.plot(us, vs, color=CURVE_COLOR, marker="o", markersize=3)
    line.set_gid("trajectory-curve")

    vel = np.array([image_direction(cam, s.velocity_dir) for s in states])
    frc = np.array([image_direction(cam, s.force_dir) for s in states])
    q_vel = ax.quiver(us, vs, GLYPH_LENGTH * vel[:, 0], GLYPH_LENGTH * vel[:, 1],
                      color=VELOCITY_COLOR, angles="xy", scale_units="xy", scale=1.0,
                      width=0.004)
    q_vel.set_gid("velocity-glyphs")
    q_frc = ax.quiver(us, vs, GLYPH_LENGTH * frc[:, 0], GLYPH_LENGTH * frc[:, 1],
                      color=FORCE_COLOR, angles="xy", scale_units="xy", scale=1.0,
                      width=0.004)
    q_frc.set_gid("force-glyphs")

    spec = scenario_spec(entry.scenario_id)
    ax.set_title(
        f"entry {entry_id}: scenario {spec.id} ({spec.name}), "
        f"az {entry.viewpoint.azimuth:.0f} el {entry.viewpoint.elevation:.0f}"
    )
    ax.set_xlabel("u")
    ax.set_ylabel("v")
    ax.set_aspect("equal", adjustable="datalim")
    fig.savefig(out_path, **_SVG_KW)
    plt.close(fig)


def save_query_figure(points, out_path: str, query_id: str) -> None:
    """Projected predicted curve for one query."""
    us = [p.u for p in points]
    vs = [p.v for p in points]
    fig, ax = plt.subplots(figsize=(5, 5))
    line, = ax.plot(us, vs, color=CURVE_COLOR, marker="o", markersize=3)
    line.set_gid(f"query-curve-{query_id}")
    ax.set_title(f"predicted motion for {query_id}")
    ax.set_xlabel("u")
    ax.set_ylabel("v")
    ax.set_aspect("equal", adjustable="datalim")
    fig.savefig(out_path, **_SVG_KW)
    plt.close(fig)


def save_loss_figure(losses, out_path: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(np.arange(len(losses)), losses, color="tab:blue", linewidth=0.8)
    ax.set_xlabel("iteration")
    ax.set_ylabel("training loss")
    ax.set_title("loss per iteration")
    fig.savefig(out_path, **_SVG_KW)
    plt.close(fig)


def save_report_figure(metric: str, per_scenario: dict[int, float], average: float,
                       out_path: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    xs = np.arange(1, 13)
    values = [per_scenario.get(i, np.nan) for i in xs]
    ax.bar(xs, values, color="tab:blue")
    ax.axhline(average, color="tab:red", linestyle="--", label=f"avg {average:.3g}")
    ax.set_xticks(xs)
    ax.set_xlabel("scenario")
    ax.set_ylabel(metric)
    ax.set_title(f"{metric} per scenario")
    ax.legend()
    fig.savefig(out_path, **_SVG_KW)
    plt.close(fig)
