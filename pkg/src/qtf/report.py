"""Figure rendering for run outputs: decay and energy plots next to the CSV."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["load_diagnostics", "plot_decay", "plot_energy", "render_run_report"]


def load_diagnostics(csv_path):
    """Read a diagnostics CSV into a dict of named columns."""
    data = np.genfromtxt(csv_path, delimiter=",", names=True)
    data = np.atleast_1d(data)
    return {name: np.asarray(data[name]) for name in data.dtype.names}


def plot_decay(csv_path, out_png) -> None:
    cols = load_diagnostics(csv_path)
    fig, ax = plt.subplots(figsize=(6, 4))
    for key, label in (("q_l2", r"$\|Q\|_{L^2}$"), ("q_l4", r"$\|Q\|_{L^4}$"),
                       ("q_l6", r"$\|Q\|_{L^6}$")):
        vals = cols[key]
        if np.all(vals > 0):
            ax.semilogy(cols["t"], vals, label=label)
        else:
            ax.plot(cols["t"], vals, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("order-parameter norms")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)


def plot_energy(csv_path, out_png) -> None:
    cols = load_diagnostics(csv_path)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(cols["t"], cols["kinetic"], label="kinetic")
    ax.plot(cols["t"], cols["lg_energy"], label="Landau-de Gennes")
    ax.plot(cols["t"], cols["kinetic"] + cols["lg_energy"], "k--", label="total")
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)


def render_run_report(run_dir) -> list[Path]:
    """Render the standard figures for a run directory; returns the paths."""
    run_dir = Path(run_dir)
    csv_path = run_dir / "diagnostics.csv"
    if not csv_path.exists():
        return []
    outputs = [run_dir / "decay.png", run_dir / "energy.png"]
    plot_decay(csv_path, outputs[0])
    plot_energy(csv_path, outputs[1])
    return outputs
