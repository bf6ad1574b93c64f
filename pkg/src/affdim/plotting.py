"""Static figures for CLI reports, rendered off-screen with the Agg backend."""

from __future__ import annotations

import math

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure


def _figure(width=6.0, height=None):
    height = height or width * (math.sqrt(5) - 1) / 2
    fig = Figure(figsize=(width, height))
    FigureCanvasAgg(fig)
    return fig, fig.add_subplot(111)


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    return str(path)


def pressure_curve_figure(rows, path, root=None):
    """``rows``: iterable of ``(s, phi_rate, psi_rate)``."""
    rows = np.asarray(rows, dtype=float)
    fig, ax = _figure()
    ax.plot(rows[:, 0], rows[:, 1], marker="o", ms=3, label="phi-sum rate")
    if rows.shape[1] > 2:
        ax.plot(rows[:, 0], rows[:, 2], ls="--", label="psi-sum rate")
    ax.axhline(0.0, color="0.5", lw=0.8)
    if root is not None:
        ax.axvline(root, color="C3", lw=0.8, label=f"root {root:.5f}")
    ax.set_xlabel("s")
    ax.set_ylabel("pressure estimate")
    ax.legend()
    return _save(fig, path)


def histogram_figure(edges, counts, path, xlabel, marks=()):
    edges = np.asarray(edges, dtype=float)
    fig, ax = _figure()
    ax.bar(edges[:-1], counts, width=np.diff(edges), align="edge", color="C0", edgecolor="white")
    for x in marks:
        ax.axvline(x, color="C3", lw=0.8)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("count")
    return _save(fig, path)


def box_count_figure(scales, counts, path, slope=None):
    x = np.log(1 / np.asarray(scales, dtype=float))
    y = np.log(np.asarray(counts, dtype=float))
    fig, ax = _figure()
    ax.plot(x, y, "o")
    if slope is not None:
        icpt = float(np.mean(y - slope * x))
        ax.plot(x, slope * x + icpt, "-", label=f"slope {slope:.4f}")
        ax.legend()
    ax.set_xlabel("log(1/eps)")
    ax.set_ylabel("log N(eps)")
    return _save(fig, path)


def cloud_figure(points, path, max_points=200_000):
    pts = np.asarray(points, dtype=float)[:max_points]
    fig, ax = _figure(5.0, 5.0)
    if pts.shape[1] == 1:
        ax.plot(pts[:, 0], np.zeros(len(pts)), "|", ms=8, alpha=0.1)
        ax.set_yticks([])
    else:
        ax.plot(pts[:, 0], pts[:, 1], ",", alpha=0.5)
        ax.set_aspect("equal")
    return _save(fig, path)
