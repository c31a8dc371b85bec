"""Figures written next to the report and sweep CSVs."""
from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.family": "serif",
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "svg.hashsalt": "swarmlearn",
}


def figsize(scale: float = 1.0, ratio: float = (np.sqrt(5.0) - 1.0) / 2.0) -> tuple[float, float]:
    width = 6.0 * scale
    return width, width * ratio


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.savefig(path, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def plot_pn_trend(series: Mapping[str, Sequence[float | None]], epoch: int, path: str | Path) -> Path:
    """Median normalised p-n difference per epoch, one line per experiment."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        for label, ys in series.items():
            y = np.array([np.nan if v is None else v for v in ys], dtype=float)
            x = (np.arange(len(y)) + 1) * epoch
            ax.plot(x, y, lw=1.0, label=label)
        ax.axhline(0.0, color="0.5", lw=0.6, ls=":")
        ax.set_xlabel("iteration")
        ax.set_ylabel("(p - n) / (p + n)")
        ax.set_ylim(-1.05, 1.05)
        if len(series) <= 12:
            ax.legend(frameon=False, ncol=2)
        return _save(fig, path)


def plot_end_boxplots(groups: Mapping[str, Sequence[float]], path: str | Path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize(max(1.0, len(groups) / 8)))
        labels = list(groups)
        ax.boxplot([list(groups[k]) for k in labels], showfliers=True)
        ax.set_xticks(range(1, len(labels) + 1), labels, rotation=60, ha="right")
        ax.axhline(0.5, color="0.5", lw=0.6, ls=":")
        ax.set_ylabel("totalTokenRatio (end value)")
        return _save(fig, path)


def plot_surface(rows: Sequence[tuple[int, float, float, bool]], path: str | Path) -> Path:
    """Heat map of median energy balance over (count, value); the neutral band is outlined."""
    counts = sorted({r[0] for r in rows})
    values = sorted({r[1] for r in rows})
    grid = np.full((len(counts), len(values)), np.nan)
    flags = np.zeros_like(grid, dtype=bool)
    for c, v, m, f in rows:
        grid[counts.index(c), values.index(v)] = m
        flags[counts.index(c), values.index(v)] = f
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize(1.0, 0.75))
        lim = float(np.nanmax(np.abs(grid))) or 1.0
        im = ax.imshow(grid, origin="lower", cmap="RdBu", vmin=-lim, vmax=lim, aspect="auto")
        for i, j in zip(*np.nonzero(flags)):
            ax.add_patch(plt.Rectangle((j - 0.5, i - 0.5), 1, 1, fill=False, lw=1.2, ec="k"))
        ax.set_xticks(range(len(values)), [f"{v:g}" for v in values])
        ax.set_yticks(range(len(counts)), [str(c) for c in counts])
        ax.set_xlabel("token value")
        ax.set_ylabel("tokens per type")
        fig.colorbar(im, ax=ax, label="median energy balance")
        return _save(fig, path)
