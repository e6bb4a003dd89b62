"""Matplotlib figures written straight to SVG.

Figures are built on bare ``Figure`` objects (no pyplot state) and saved
without timestamps and with a fixed hash salt, so identical data gives
byte-identical files.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure

matplotlib.rcParams["svg.hashsalt"] = "latent-steer"
matplotlib.rcParams["svg.fonttype"] = "path"

PANEL_TITLES = {
    "score": "assessor score",
    "brightness": "brightness",
    "simplicity": "simplicity",
    "redness": "redness",
    "colorfulness": "colorfulness",
    "object_size": "object size",
    "centeredness": "centeredness",
    "squareness": "squareness",
    "entropy_bits": "entropy (bits)",
    "object_size_delta": "object size change",
}


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    return path


def _new(width=4.0, height=3.0):
    fig = Figure(figsize=(width, height))
    return fig, fig.add_subplot(1, 1, 1)


def alpha_panel(path, series: dict[str, tuple[np.ndarray, np.ndarray]], metric: str) -> Path:
    """One line per label; x ticks sit exactly on the alpha grid."""
    fig, ax = _new()
    grid = None
    for label, (x, y) in series.items():
        ax.plot(x, y, marker="o", ms=3, lw=1.2, label=label)
        grid = x if grid is None else grid
    ax.set_xticks(grid)
    ax.set_xticklabels([f"{a:g}" for a in grid], fontsize=7)
    ax.set_xlabel("alpha")
    ax.set_ylabel("mean")
    ax.set_title(PANEL_TITLES.get(metric, metric))
    if len(series) > 1:
        ax.legend(fontsize=7, frameon=False)
    fig.tight_layout()
    return _save(fig, path)


def sweep_panels(out_dir, tables: dict, metrics=None, prefix: str = "sweep") -> list[Path]:
    """Write ``<prefix>_<metric>.svg`` for each metric; ``tables`` maps label -> MetricTable."""
    out_dir = Path(out_dir)
    first = next(iter(tables.values()))
    names = metrics or first.metrics()
    paths = []
    for m in names:
        series = {label: t.series(m) for label, t in tables.items() if m in t.metrics()}
        paths.append(alpha_panel(out_dir / f"{prefix}_{m}.svg", series, m))
    return paths


def loss_curve(path, losses, smoothed=None) -> Path:
    fig, ax = _new(5.0, 3.0)
    it = np.arange(1, len(losses) + 1)
    ax.plot(it, losses, lw=0.4, alpha=0.4, label="batch loss")
    if smoothed is not None:
        ax.plot(it, smoothed, lw=1.4, label="moving average")
    ax.set_xlabel("iteration")
    ax.set_ylabel("loss")
    ax.set_yscale("log")
    ax.legend(fontsize=7, frameon=False)
    fig.tight_layout()
    return _save(fig, path)


def embedding_scatter(path, xy, users, title: str = "latent embedding") -> Path:
    """Scatter with one colour per user, in sorted user order."""
    fig, ax = _new(5.5, 5.0)
    xy = np.asarray(xy)
    users = np.asarray(users)
    uniq = sorted(set(users.tolist()))
    cmap = matplotlib.colormaps["tab20"]
    for i, u in enumerate(uniq):
        sel = users == u
        ax.scatter(xy[sel, 0], xy[sel, 1], s=8, color=cmap(i % 20), label=str(u))
    ax.set_xticks([])
    ax.set_yticks([])
    ax.set_title(title)
    if len(uniq) <= 20:
        ax.legend(fontsize=6, frameon=False, markerscale=1.5, loc="best")
    fig.tight_layout()
    return _save(fig, path)


def kl_curve(path, kl) -> Path:
    fig, ax = _new()
    ax.plot(np.arange(1, len(kl) + 1), kl, lw=1.0)
    ax.set_xlabel("iteration")
    ax.set_ylabel("KL(P || Q)")
    fig.tight_layout()
    return _save(fig, path)
