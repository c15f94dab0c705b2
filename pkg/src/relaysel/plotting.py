"""Render sweep summaries as figures next to the CSV output."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiment import ResultTable

_LABELS = {
    "none": "no selection",
    "lmmsec_g": "greedy (standalone scores)",
    "smmsec_g": "greedy (backward elimination)",
    "exhaustive": "exhaustive",
}
_XLABELS = {"snr_db": "SNR (dB)", "m": "number of relays"}


def _plot_metric(table: ResultTable, attr: str, ylabel: str, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    methods = sorted({s.method for s in table.summary})
    for method in methods:
        pts = sorted(
            (s for s in table.summary if s.method == method),
            key=lambda s: s.sweep_value,
        )
        x = [s.sweep_value for s in pts]
        y = [getattr(s, attr) for s in pts]
        ax.plot(x, y, marker="o", label=_LABELS.get(method, method))
    ax.set_xlabel(_XLABELS.get(table.sweep_param, table.sweep_param))
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_figures(table: ResultTable, out_dir: str) -> list[str]:
    """Write mean-SINR and mean-MMSE figures for the sweep; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    tag = "snr" if table.sweep_param == "snr_db" else "m"
    paths = []
    for attr, ylabel, stem in (
        ("mean_sinr_db", "mean output SINR (dB)", f"sinr_vs_{tag}"),
        ("mean_mmse", "mean network MMSE", f"mmse_vs_{tag}"),
    ):
        path = os.path.join(out_dir, f"{stem}.png")
        _plot_metric(table, attr, ylabel, path)
        paths.append(path)
    return paths
