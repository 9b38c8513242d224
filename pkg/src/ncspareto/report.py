"""Delimited output and figure rendering for fronts, trajectories, and reports.

CSV carries anything plottable, JSON carries structured artifacts, and
every CSV written by the CLI report path gets a matplotlib rendering
saved next to it.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import ConfigError
from .moga import ParetoArchive
from .netsim import Trajectory
from .stability import LyapunovCertificate


def front_header(M_drop: int, n: int, m: int = 1) -> list:
    cols = [
        f"k{q + 1}{m * i + l + 1}"
        for q in range(M_drop)
        for i in range(m)
        for l in range(n)
    ]
    return cols + ["J_a", "J_b", "feasible"]


def write_front_csv(archive: ParetoArchive, M_drop: int, n: int, path, m: int = 1):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(front_header(M_drop, n, m))
        for ind in archive.members:
            row = [repr(float(g)) for g in ind.genes]
            row += [repr(float(v)) for v in ind.objectives.values]
            row.append(int(ind.objectives.feasible))
            w.writerow(row)


def read_front_csv(path) -> list:
    """Rows of (genes, (J_a, J_b), feasible) from a front CSV."""
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[-3:] != ["J_a", "J_b", "feasible"]:
            raise ConfigError(f"{path} is not a front CSV")
        for rec in reader:
            genes = np.array([float(v) for v in rec[:-3]])
            objs = (float(rec[-3]), float(rec[-2]))
            rows.append((genes, objs, bool(int(rec[-1]))))
    return rows


def write_front_json(archive: ParetoArchive, trade_off: str, path):
    doc = {
        "trade_off": trade_off,
        "generation": archive.generation,
        "members": [
            {
                "genes": [float(g) for g in ind.genes],
                "objectives": list(ind.objectives.values),
                "feasible": ind.objectives.feasible,
                "rank": ind.rank,
                "crowding": None if ind.crowding is None else float(ind.crowding),
            }
            for ind in archive.members
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def write_trajectory_csv(traj: Trajectory, Ts: float, path):
    path = Path(path)
    n = traj.states.shape[1]
    m = traj.controls.shape[1]
    header = (
        ["t"]
        + [f"x{i + 1}" for i in range(n)]
        + [f"u{i + 1}" for i in range(m)]
        + ["sigma"]
    )
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        N = traj.controls.shape[0]
        for k in range(N + 1):
            row = [repr(k * Ts)]
            row += [repr(float(v)) for v in traj.states[k]]
            if k < N:  # the terminal sample has no control attached
                row += [repr(float(v)) for v in traj.controls[k]]
                row.append(int(traj.modes[k]))
            else:
                row += [""] * m + [""]
            w.writerow(row)


def write_certificate_json(cert: LyapunovCertificate, path):
    Path(path).write_text(json.dumps(cert.to_json_dict(), indent=2) + "\n")


def save_front_plot(archive: ParetoArchive, trade_off: str, path):
    labels = {"J1J2": ("J1", "J2"), "J3J2": ("J3", "J2"), "J4J5": ("J4", "J5")}
    xl, yl = labels.get(trade_off, ("J_a", "J_b"))
    pts = np.array([ind.objectives.values for ind in archive.members])
    fig, ax = plt.subplots(figsize=(5, 4))
    if pts.size:
        order = np.argsort(pts[:, 0])
        ax.plot(pts[order, 0], pts[order, 1], "o-", ms=4)
    ax.set_xlabel(xl)
    ax.set_ylabel(yl)
    ax.set_title(f"Pareto front: {xl} vs {yl}")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_trajectory_plot(traj: Trajectory, Ts: float, path, title: str | None = None):
    n = traj.states.shape[1]
    m = traj.controls.shape[1]
    t_states = np.arange(traj.states.shape[0]) * Ts
    t_ctrl = np.arange(traj.controls.shape[0]) * Ts
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    for i in range(n):
        ax1.plot(t_states, traj.states[:, i], label=f"x{i + 1}")
    ax1.set_ylabel("states")
    ax1.legend(loc="best", fontsize=8)
    ax1.grid(True, alpha=0.3)
    if title:
        ax1.set_title(title)
    for i in range(m):
        ax2.step(t_ctrl, traj.controls[:, i], where="post", label=f"u{i + 1}")
    ax2.set_ylabel("control")
    ax2.set_xlabel("time [s]")
    ax2.legend(loc="best", fontsize=8)
    ax2.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_reproduction_plot(report: dict, path):
    """Bar chart of the simulated mean objectives per trade-off group."""
    groups = report["trade_offs"]
    fig, axes = plt.subplots(1, len(groups), figsize=(4 * len(groups), 3.5))
    if len(groups) == 1:
        axes = [axes]
    for ax, (pair, entry) in zip(axes, groups.items()):
        labels = entry["solutions"]
        a = [entry["mean_objectives"][lab][0] for lab in labels]
        b = [entry["mean_objectives"][lab][1] for lab in labels]
        x = np.arange(len(labels))
        ax.bar(x - 0.18, a, width=0.36, label=pair[:2])
        ax.bar(x + 0.18, b, width=0.36, label=pair[2:])
        ax.set_xticks(x, labels)
        ax.set_yscale("log")
        ax.set_title(pair)
        ax.legend(fontsize=8)
    fig.suptitle(f"Simulated mean objectives: {report['plant']}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
