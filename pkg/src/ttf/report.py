"""Report rendering: a delimited threshold sweep plus matplotlib figures.

Given one input clip, the report runs the matcher once (matching is
independent of the threshold), sweeps the gate over a threshold grid, and
writes:

    report.csv          threshold,kept,P,rho rows
    sim_histogram.png   32-bin histogram of best-match similarities
    rho_vs_threshold.png
    cost_vs_radius.png  local-window flops for r=0..3 vs the global matrix
"""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import engine
from .formats import SIM_HIST_BINS, sim_histogram
from .model import FusionConfig, TokenGrid
from .oracle import GLOBAL_MATRIX, LOCAL_WINDOW, estimate_cost

DEFAULT_THRESHOLDS = (0.5, 0.6, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0)


def render_report(grid: TokenGrid, config: FusionConfig, out_dir: str,
                  thresholds=DEFAULT_THRESHOLDS) -> dict:
    """Write report.csv and figures into ``out_dir``; returns the sweep rows."""
    os.makedirs(out_dir, exist_ok=True)
    s = grid.shape
    a = engine.select_anchor(grid, config.anchor)
    match = engine.match_local(grid, a, config.radius)

    rows = []
    for t in thresholds:
        keep = engine.gate(match, t)
        p = int(keep.sum()) - s.N
        rows.append({
            "threshold": t,
            "kept": s.N + p,
            "P": p,
            "rho": 1.0 - (s.N + p) / (s.F * s.N),
        })

    csv_path = os.path.join(out_dir, "report.csv")
    with open(csv_path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=["threshold", "kept", "P", "rho"])
        w.writeheader()
        w.writerows(rows)

    hist = sim_histogram(match)
    edges = np.linspace(-1.0, 1.0, SIM_HIST_BINS + 1)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(edges[:-1], hist, width=np.diff(edges), align="edge",
           edgecolor="black", linewidth=0.3)
    ax.set_xlabel("best-match cosine similarity")
    ax.set_ylabel("source tokens")
    ax.set_title(f"similarity distribution (anchor={a}, r={config.radius})")
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "sim_histogram.png"), dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot([r["threshold"] for r in rows], [r["rho"] for r in rows],
            marker="o")
    ax.set_xlabel("threshold t")
    ax.set_ylabel("reduction ratio rho")
    ax.set_ylim(-0.02, 1.0)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "rho_vs_threshold.png"), dpi=120)
    plt.close(fig)

    radii = [0, 1, 2, 3]
    local = [estimate_cost(s, LOCAL_WINDOW, r).flops for r in radii]
    glob = estimate_cost(s, GLOBAL_MATRIX).flops
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar([str(r) for r in radii], local, label="local window")
    ax.axhline(glob, color="crimson", linestyle="--",
               label="global matrix")
    ax.set_xlabel("search radius r")
    ax.set_ylabel("matching flops")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "cost_vs_radius.png"), dpi=120)
    plt.close(fig)

    return {"anchor": a, "rows": rows, "csv": csv_path}
