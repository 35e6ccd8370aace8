"""Figure rendering for study reports.

Every renderer takes ExperimentReport rows, draws with the Agg backend,
and writes a PNG next to the study's NDJSON output.  Figures are a
visual companion to the delimited rows, never a data source: nothing
downstream parses them.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_error_params_bars", "render_shift_lines"]


def _algorithm_order(rows):
    seen = []
    for r in rows:
        if r.algorithm not in seen:
            seen.append(r.algorithm)
    return seen


def render_error_params_bars(rows, group_labels, path, title) -> str:
    """Grouped bars: relative error (log scale) and parameter count.

    ``group_labels`` pairs each row with its group (one label per row,
    e.g. the function kind or the true bond size); within a group the
    bars are the algorithms, in first-appearance order.
    """
    rows = list(rows)
    group_labels = [str(g) for g in group_labels]
    if len(rows) != len(group_labels):
        raise ValueError(f"{len(rows)} rows but {len(group_labels)} group labels")
    if not rows:
        raise ValueError("nothing to plot")
    groups = []
    for g in group_labels:
        if g not in groups:
            groups.append(g)
    algs = _algorithm_order(rows)
    width = 0.8 / len(algs)
    fig, (ax_eps, ax_np) = plt.subplots(1, 2, figsize=(11, 4.2))
    for j, alg in enumerate(algs):
        xs, eps_vals, np_vals = [], [], []
        for row, g in zip(rows, group_labels):
            if row.algorithm != alg:
                continue
            xs.append(groups.index(g) + (j - (len(algs) - 1) / 2) * width)
            eps_vals.append(max(row.eps, 1e-16))
            np_vals.append(row.n_params)
        ax_eps.bar(xs, eps_vals, width=width, label=alg)
        ax_np.bar(xs, np_vals, width=width, label=alg)
    for ax, ylabel in ((ax_eps, "relative error"), (ax_np, "parameters")):
        ax.set_xticks(range(len(groups)))
        ax.set_xticklabels(groups)
        ax.set_ylabel(ylabel)
    ax_eps.set_yscale("log")
    ax_eps.legend(fontsize=8)
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return str(path)


def render_shift_lines(matrix, shifts, path, title) -> str:
    """Parameter count and error against mode shift, one line per algorithm."""
    matrix = [list(row) for row in matrix]
    shifts = [int(k) for k in shifts]
    if len(matrix) != len(shifts):
        raise ValueError(f"{len(matrix)} report rows but {len(shifts)} shifts")
    if not matrix:
        raise ValueError("nothing to plot")
    algs = _algorithm_order([r for row in matrix for r in row])
    fig, (ax_np, ax_eps) = plt.subplots(1, 2, figsize=(11, 4.2))
    for alg in algs:
        np_vals = []
        eps_vals = []
        for row in matrix:
            match = [r for r in row if r.algorithm == alg]
            if len(match) != 1:
                raise ValueError(f"expected one {alg!r} report per shift")
            np_vals.append(match[0].n_params)
            eps_vals.append(max(match[0].eps, 1e-16))
        ax_np.plot(shifts, np_vals, marker="o", label=alg)
        ax_eps.plot(shifts, eps_vals, marker="o", label=alg)
    ax_np.set_ylabel("parameters")
    ax_np.set_ylim(bottom=0)
    ax_eps.set_yscale("log")
    ax_eps.set_ylabel("relative error")
    for ax in (ax_np, ax_eps):
        ax.set_xlabel("mode shift")
        ax.set_xticks(shifts)
        ax.legend(fontsize=8)
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return str(path)
