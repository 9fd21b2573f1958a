"""Render convergence traces to figure files next to the CSV output."""

from __future__ import annotations

from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["save_convergence_figure"]

# epsilon can hit exact zero on tiny games; keep the log axis happy
_EPS_FLOOR = 1e-16


def save_convergence_figure(
    curves: Sequence[tuple[str, np.ndarray, np.ndarray]],
    path: str,
    title: Optional[str] = None,
) -> None:
    """Save a log-scale exploitability-vs-iteration plot.

    ``curves`` is a sequence of (label, iterations, epsilons) triples; one
    line is drawn per curve.
    """
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for label, its, eps in curves:
        eps = np.maximum(np.asarray(eps, dtype=np.float64), _EPS_FLOOR)
        ax.semilogy(np.asarray(its), eps, label=label, linewidth=1.3)
    ax.set_xlabel("iteration")
    ax.set_ylabel("exploitability")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    if curves:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
