"""File reports for runs and fits: delimited tables plus rendered figures.

Everything here consumes the engine/calibration wire formats and writes
plain artifacts next to each other in an output directory: a CSV a
spreadsheet can open and a PNG a report can embed. No numbers are
computed here.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Optional, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .calibration import FitResult, ObservationSeries
from .engine import TimeSeries

__all__ = [
    "write_timeseries_csv",
    "plot_timeseries",
    "write_fit_csv",
    "plot_fit_trace",
    "write_run_report",
    "write_fit_report",
]


def write_timeseries_csv(ts: TimeSeries, path: Union[str, Path]) -> Path:
    """Wide table: one time column, one column per entity."""
    path = Path(path)
    entities = list(ts.series)
    with path.open("w", newline="", encoding="utf-8") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["time", *entities])
        for i, t in enumerate(ts.times):
            writer.writerow([format(t, "g"), *(format(ts.series[e][i], "g") for e in entities)])
    return path


def plot_timeseries(
    ts: TimeSeries,
    path: Union[str, Path],
    observations: Optional[ObservationSeries] = None,
    title: Optional[str] = None,
) -> Path:
    """Per-entity trajectories, with observation points overlaid when given."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(8, 5))
    for entity_id, values in ts.series.items():
        (line,) = ax.plot(ts.times, values, label=entity_id)
        if observations is not None and entity_id in observations.series:
            ax.scatter(
                observations.times,
                observations.series[entity_id],
                color=line.get_color(),
                marker="o",
                s=18,
                zorder=3,
                label=f"{entity_id} (observed)",
            )
    ax.set_xlabel("time")
    ax.set_ylabel("population")
    engine = ts.meta.engine
    seed = f", seed {ts.meta.seed}" if ts.meta.seed is not None else ""
    ax.set_title(title or f"{engine} run (dt={ts.meta.dt:g}{seed})")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def write_fit_csv(result: FitResult, path: Union[str, Path]) -> Path:
    """Long table of the search trace: evaluation, discrepancy, parameters."""
    path = Path(path)
    params = list(result.best_params)
    with path.open("w", newline="", encoding="utf-8") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["evaluation", "discrepancy", *params])
        for i, point in enumerate(result.trace, start=1):
            score = "" if not math.isfinite(point.discrepancy) else format(point.discrepancy, "g")
            writer.writerow(
                [i, score, *(format(point.params[p], "g") for p in params)]
            )
    return path


def plot_fit_trace(result: FitResult, path: Union[str, Path]) -> Path:
    """Discrepancy per evaluation and the running best."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(8, 5))
    scores = [p.discrepancy for p in result.trace]
    finite = [(i + 1, s) for i, s in enumerate(scores) if math.isfinite(s)]
    if finite:
        xs, ys = zip(*finite)
        ax.scatter(xs, ys, s=12, alpha=0.5, label="probe")
    running = []
    best = math.inf
    for s in scores:
        best = min(best, s)
        running.append(best)
    ax.plot(range(1, len(running) + 1), running, color="C3", label="running best")
    ax.set_xlabel("evaluation")
    ax.set_ylabel("discrepancy (RMSE)")
    ax.set_title(
        f"fit: {result.initial_discrepancy:.4g} -> {result.best_discrepancy:.4g} "
        f"({result.evaluations} evaluations)"
    )
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def write_run_report(
    ts: TimeSeries,
    outdir: Union[str, Path],
    observations: Optional[ObservationSeries] = None,
    stem: str = "timeseries",
) -> list[Path]:
    """CSV + figure for one run, side by side under ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    return [
        write_timeseries_csv(ts, outdir / f"{stem}.csv"),
        plot_timeseries(ts, outdir / f"{stem}.png", observations=observations),
    ]


def write_fit_report(result: FitResult, outdir: Union[str, Path], stem: str = "fit") -> list[Path]:
    """CSV + figure for one fit, side by side under ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    return [
        write_fit_csv(result, outdir / f"{stem}.csv"),
        plot_fit_trace(result, outdir / f"{stem}.png"),
    ]
