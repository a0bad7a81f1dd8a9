"""Offline figure rendering for run outputs.

Figures are always produced from the delimited files a command has already
written, never from live state, so a run directory can be re-rendered at any
time with ``polywalk report``.  PNGs land next to the CSVs they illustrate.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def _read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader]
    return header, np.array(rows)


def render_series_figures(csv_path, out_dir=None) -> list[Path]:
    """Trace plot with running mean, plus a histogram, per observable column."""
    csv_path = Path(csv_path)
    out_dir = Path(out_dir) if out_dir else csv_path.parent
    header, data = _read_csv(csv_path)
    if data.size == 0:
        return []
    steps = data[:, 0]
    written = []
    for j, name in enumerate(header[1:], start=1):
        series = data[:, j]
        safe = name.replace(":", "_")

        fig, ax = plt.subplots(figsize=(7, 3.2))
        ax.plot(steps, series, lw=0.4, alpha=0.6, label=name)
        running = np.cumsum(series) / np.arange(1, series.size + 1)
        ax.plot(steps, running, lw=1.5, label="running mean")
        ax.set_xlabel("step")
        ax.set_ylabel(name)
        ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        path = out_dir / f"{csv_path.stem}_{safe}_trace.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        ax.hist(series, bins=80, density=True, color="#4878cf")
        ax.set_xlabel(name)
        ax.set_ylabel("density")
        fig.tight_layout()
        path = out_dir / f"{csv_path.stem}_{safe}_hist.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written


def render_table_figure(csv_path, out_dir=None) -> list[Path]:
    """Line plot of a reference table: first column on x, remaining numeric columns on y."""
    csv_path = Path(csv_path)
    out_dir = Path(out_dir) if out_dir else csv_path.parent
    header, data = _read_csv(csv_path)
    if data.size == 0:
        return []
    fig, ax = plt.subplots(figsize=(6, 4))
    x = data[:, 0]
    for j, name in enumerate(header[1:], start=1):
        ax.plot(x, data[:, j], marker="o", ms=3, lw=1, label=name)
    ax.set_xlabel(header[0])
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    path = out_dir / f"{csv_path.stem}.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


def render_run_dir(run_dir) -> list[Path]:
    """Render every CSV in a run directory; series files get traces, tables get line plots."""
    run_dir = Path(run_dir)
    written = []
    for csv_path in sorted(run_dir.glob("*.csv")):
        with open(csv_path, "r", encoding="utf-8") as fh:
            first = fh.readline().strip().split(",")
        if first and first[0] in ("step", "sample_index"):
            written.extend(render_series_figures(csv_path))
        else:
            written.extend(render_table_figure(csv_path))
    return written
