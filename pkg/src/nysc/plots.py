"""Figure rendering for benchmark and verification reports.

Each function takes the already-computed rows and writes one PNG; the
command line layer calls these when a figure directory is requested, so
plotting stays strictly downstream of the delimited outputs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_COLORS = {"exact": "k", "proposed": "C0", "fowlkes": "C1", "li": "C2"}


def _ensure_dir(directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _by_method(aggregates):
    grouped = {}
    for row in aggregates:
        grouped.setdefault(row.method, []).append(row)
    for rows in grouped.values():
        rows.sort(key=lambda r: r.m or 0)
    return grouped


def save_metric_figure(aggregates, metric: str, directory) -> Path:
    """Mean +/- stddev of one metric against the landmark count."""
    directory = _ensure_dir(directory)
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for method, rows in _by_method(aggregates).items():
        pts = [(r.m, getattr(r, f"{metric}_mean"), getattr(r, f"{metric}_std") or 0.0)
               for r in rows if r.m is not None and getattr(r, f"{metric}_mean") is not None]
        if pts:
            ms, means, stds = zip(*pts)
            ax.errorbar(ms, means, yerr=stds, marker="o", capsize=3,
                        label=method, color=_COLORS.get(method))
        elif any(getattr(r, f"{metric}_mean") is not None for r in rows):
            value = next(getattr(r, f"{metric}_mean") for r in rows
                         if getattr(r, f"{metric}_mean") is not None)
            ax.axhline(value, linestyle="--", color=_COLORS.get(method), label=method)
    ax.set_xlabel("number of landmarks m")
    ax.set_ylabel(metric.replace("_", " "))
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    path = directory / f"{metric}_vs_m.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_time_figure(aggregates, directory) -> Path:
    """Mean embedding wall time against the landmark count, log scale."""
    directory = _ensure_dir(directory)
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for method, rows in _by_method(aggregates).items():
        pts = [(r.m, r.embed_mean) for r in rows
               if r.m is not None and r.embed_mean is not None]
        if pts:
            ms, means = zip(*pts)
            ax.plot(ms, means, marker="o", label=method, color=_COLORS.get(method))
    ax.set_xlabel("number of landmarks m")
    ax.set_ylabel("embedding wall time (s)")
    ax.set_yscale("log")
    ax.grid(alpha=0.3, which="both")
    ax.legend()
    fig.tight_layout()
    path = directory / "time_vs_m.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_truncation_figure(reports, directory) -> Path:
    """Normalized truncation error against the rank l, one kernel instance."""
    directory = _ensure_dir(directory)
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ls = [r.l for r in reports]
    ax.plot(ls, [r.normalized_error for r in reports], marker="o", color="C0",
            label="normalized error")
    ax.axhline(1.0, linestyle="--", color="k", label="bound")
    ax.set_xlabel("truncation rank l")
    ax.set_ylabel("error relative to the kernel norm")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    path = directory / "truncation_error_vs_l.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_gamma_figure(rows, directory) -> Path:
    """Rank and error statistics of the threshold sweep, log-log."""
    directory = _ensure_dir(directory)
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 4))
    gammas = [r.gamma for r in rows]
    ax0.errorbar(gammas, [r.mean_rank for r in rows],
                 yerr=[r.std_rank for r in rows], marker="o", capsize=3, color="C0")
    ax0.set_xscale("log")
    ax0.set_xlabel("threshold gamma")
    ax0.set_ylabel("retained rank l")
    ax0.grid(alpha=0.3)
    ax1.errorbar(gammas, [r.mean_error for r in rows],
                 yerr=[r.std_error for r in rows], marker="o", capsize=3, color="C1")
    ax1.set_xscale("log")
    ax1.set_yscale("log")
    ax1.set_xlabel("threshold gamma")
    ax1.set_ylabel("normalized truncation error")
    ax1.grid(alpha=0.3, which="both")
    fig.tight_layout()
    path = directory / "gamma_sweep.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_perturbation_figure(points, directory) -> Path:
    """Degree error eta and normalized kernel error against m.

    points: iterable of (m, mean_eta, mean_normalized_err) tuples.
    """
    directory = _ensure_dir(directory)
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ms = [p[0] for p in points]
    ax.plot(ms, [p[1] for p in points], marker="o", color="C0", label="eta")
    errs = [(m, e) for m, _, e in points if e is not None]
    if errs:
        ax.plot([m for m, _ in errs], [e for _, e in errs], marker="s",
                color="C1", label="normalized kernel error")
    ax.set_xlabel("number of landmarks m")
    ax.set_ylabel("error")
    ax.set_yscale("log")
    ax.grid(alpha=0.3, which="both")
    ax.legend()
    fig.tight_layout()
    path = directory / "perturbation_vs_m.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
