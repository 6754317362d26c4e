"""Figure rendering for the CLI report paths.

Each experiment writes its CSV first; these helpers draw the matching
figure next to it. Rendering is best-effort presentation, the CSV stays
the deterministic artifact.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "save_pattern_plot",
    "save_curves_plot",
    "save_trajectory_plot",
]


def save_pattern_plot(patterns, path, title=""):
    """Overlay beam patterns; ``patterns`` is a list of (label, BeamPattern)."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, bp in patterns:
        ax.plot(bp.angle_grid, np.maximum(bp.gain_db, -40.0), label=label, lw=1.2)
    ax.set_xlabel("normalized spatial angle")
    ax.set_ylabel("beam gain (dB)")
    ax.set_xlim(-1, 1)
    ax.grid(alpha=0.3)
    if title:
        ax.set_title(title)
    if len(patterns) > 1:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_curves_plot(x, series, path, xlabel="", ylabel="", title="", logy=False):
    """Line plot of one or more (label, values) series over a shared x grid."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, values in series:
        ax.plot(x, values, marker="o", ms=3, lw=1.2, label=label)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(alpha=0.3)
    if title:
        ax.set_title(title)
    if len(series) > 1:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_trajectory_plot(scene, trajectory, path, title=""):
    """Top-down view of users, discovery range circles, and the UAV path."""
    fig, ax = plt.subplots(figsize=(6, 6))
    for uid, pos in scene.users:
        ax.plot(pos[0], pos[1], "s", color="tab:green", ms=8)
        ax.annotate(f"MS {uid}", (pos[0], pos[1]), textcoords="offset points", xytext=(6, 6))
    xs = [p.position[0] for p in trajectory]
    ys = [p.position[1] for p in trajectory]
    ax.plot(xs, ys, "o-", color="tab:blue", lw=1.5)
    for i, p in enumerate(trajectory):
        ax.annotate(chr(ord("A") + i), (p.position[0], p.position[1]),
                    textcoords="offset points", xytext=(-12, -4), fontsize=11)
        circle = plt.Circle((p.position[0], p.position[1]), scene.discovery_range_m,
                            fill=False, ls=":", color="tab:blue", alpha=0.4)
        ax.add_patch(circle)
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_aspect("equal")
    ax.grid(alpha=0.3)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
