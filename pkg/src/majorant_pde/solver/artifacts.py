"""CSV and structured-text artifacts of solver runs."""
from __future__ import annotations

import csv
import os

import numpy as np

from ..spectral import tensor_norm


def _fmt(v):
    return f"{float(v):.12e}"


def _header(fh, timestamp):
    if timestamp is not None:
        fh.write(f"# generated: {timestamp}\n")


def snapshot_nodes(run, count=8):
    """Up to ``count`` node indices spread log-uniformly, always including the last."""
    M = len(run.times)
    if count >= M:
        return list(range(M))
    picks = np.unique(np.round(np.geomspace(1, M, count)).astype(int) - 1)
    return sorted(set(picks.tolist()) | {M - 1})


def write_snapshots(run, out_dir, nodes=None, count=8, timestamp=None):
    """One CSV per selected node with columns ``x[,y],u,du,...``.

    For ``N = 2`` the derivative columns hold pointwise tensor norms.
    """
    os.makedirs(out_dir, exist_ok=True)
    nodes = snapshot_nodes(run, count) if nodes is None else list(nodes)
    x = run.nodes()
    names = ["u"] + [f"d{j}u" if j > 1 else "du" for j in range(1, run.m + 1)]
    paths = []
    for i in nodes:
        path = os.path.join(out_dir, f"snapshot_{i:04d}.csv")
        cols = [tensor_norm(run.states[j][i], run.dim, j) if (run.dim > 1 and j > 0) else run.states[j][i]
                for j in range(run.m + 1)]
        with open(path, "w", newline="") as fh:
            _header(fh, timestamp)
            fh.write(f"# t: {_fmt(run.times[i])}\n")
            w = csv.writer(fh, lineterminator="\n")
            if run.dim == 1:
                w.writerow(["x"] + names)
                for k in range(run.n_grid):
                    w.writerow([_fmt(x[k])] + [_fmt(c[k]) for c in cols])
            else:
                w.writerow(["x", "y"] + names)
                for a in range(run.n_grid):
                    for b in range(run.n_grid):
                        w.writerow([_fmt(x[a]), _fmt(x[b])] + [_fmt(c[a, b]) for c in cols])
        paths.append(path)
    return paths


def write_run_summary(run, path, decay=None, bound=None, supersolution=None, timestamp=None):
    """Structured ``key: value`` summary of a run."""
    lines = []
    if timestamp is not None:
        lines.append(f"# generated: {timestamp}")
    lines += [f"status: {run.status}", f"iterations: {run.iterations}", f"tolerance: {run.tol:.6g}",
              f"horizon: {_fmt(run.times[-1])}", f"time_nodes: {len(run.times)}", f"grid_points: {run.n_grid}",
              f"box_halfwidth: {run.box_halfwidth:.12g}", f"order: {run.order:.12g}",
              f"reference_order: {run.reference_order}", f"eps_inverse: {_fmt(run.eps_inv)}",
              f"guard_cap: {_fmt(run.guard_cap)}", f"final_sup: {_fmt(run.final_sup)}"]
    if run.offending_node is not None:
        lines.append(f"offending_node: {run.offending_node}")
        lines.append(f"offending_time: {_fmt(run.times[run.offending_node])}")
    lines.append("residuals: " + " ".join(_fmt(r) for r in run.residual_norms))
    lines.append("contraction_ratios: " + " ".join(_fmt(r) for r in run.ratios))
    if run.bound_flags is not None:
        lines.append(f"bound_flags_all: {bool(np.all(run.bound_flags))}")
        lines.append(f"bound_worst_margin: {_fmt(np.max(run.margins))}")
    if bound is not None:
        lines.append(f"apriori_all: {bound.all_true}")
        lines.append(f"apriori_worst_margin: {_fmt(bound.worst_margin)}")
    if supersolution is not None:
        lines += ["[supersolution]", supersolution.report_text()]
    if decay is not None:
        lines += ["[decay]", decay.to_text(), f"decay_passed: {decay.passed}"]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_sweep_csv(records, path, timestamp=None):
    """``gamma,status,iters,final_sup`` per sweep evaluation."""
    with open(path, "w", newline="") as fh:
        _header(fh, timestamp)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["gamma", "status", "iters", "final_sup"])
        for r in records:
            w.writerow([_fmt(r.gamma), r.status, r.iters, _fmt(r.final_sup)])
    return path
