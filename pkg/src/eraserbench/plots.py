"""Matplotlib rendering of scan tables for the report path.

File output only: the Agg backend is forced so reports work headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import FringeFit, fringe_model

__all__ = ["render_scan_figure"]


def render_scan_figure(
    positions,
    n_ab,
    n_apb,
    out_path,
    *,
    fit_ab: FringeFit | None = None,
    fit_apb: FringeFit | None = None,
    title: str | None = None,
) -> None:
    """Plot both coincidence channels versus actuator position to a file."""
    pos = np.asarray(positions, dtype=float)
    fig, ax = plt.subplots(figsize=(6.4, 3.8))
    ax.plot(pos, np.asarray(n_ab), "s", ms=4, color="tab:blue", label="N_AB")
    ax.plot(pos, np.asarray(n_apb), "o", ms=4, color="tab:red", label="N_A'B")
    if pos.size > 1:
        dense = np.linspace(pos.min(), pos.max(), 400)
        if fit_ab is not None:
            ax.plot(dense, fringe_model(fit_ab, dense), "-", lw=1, color="tab:blue", alpha=0.7)
        if fit_apb is not None:
            ax.plot(dense, fringe_model(fit_apb, dense), "-", lw=1, color="tab:red", alpha=0.7)
    ax.set_xlabel("actuator position (um)")
    ax.set_ylabel("coincidences per dwell")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False, loc="best")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
