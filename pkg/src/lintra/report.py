"""Figure rendering for the report commands.

Each report command writes its delimited data plus one PNG rendered here.
Figures are deliberately plain: enough to eyeball a spectrum slope, a
distance scatter, or a metric distribution without further tooling.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import EvalReport


def spectrum_figure(rows: list[tuple[int, float, float]], path: str | Path) -> None:
    """Log-log eigenvalue decay with the captured-variance curve alongside."""
    index = np.array([r[0] for r in rows]) + 1
    eigenvalues = np.array([r[1] for r in rows])
    cumulative = np.array([r[2] for r in rows])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    positive = eigenvalues > 0
    ax1.loglog(index[positive], eigenvalues[positive], marker=".", lw=1)
    ax1.set_xlabel("component")
    ax1.set_ylabel("eigenvalue")
    ax1.grid(True, which="both", alpha=0.3)
    ax2.plot(index, cumulative, lw=1.5)
    ax2.set_xlabel("component")
    ax2.set_ylabel("cumulative variance fraction")
    ax2.set_ylim(0, 1.02)
    ax2.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def scatter_figure(distances: np.ndarray, path: str | Path) -> None:
    """Domain-A vs domain-B pairwise distances, with the isometry diagonal."""
    fig, ax = plt.subplots(figsize=(4.2, 4))
    ax.scatter(distances[:, 0], distances[:, 1], s=6, alpha=0.4, edgecolors="none")
    top = float(distances.max()) * 1.05 if distances.size else 1.0
    ax.plot([0, top], [0, top], color="gray", lw=1, ls="--")
    ax.set_xlim(0, top)
    ax.set_ylim(0, top)
    ax.set_xlabel("distance in A")
    ax.set_ylabel("distance in B")
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def eval_figure(report: EvalReport, path: str | Path) -> None:
    """Histograms of per-image MSE and SSIM with their means marked."""
    mse_values = [row[1] for row in report.per_image]
    ssim_values = [row[2] for row in report.per_image]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.hist(mse_values, bins=30, color="tab:blue", alpha=0.8)
    ax1.axvline(report.mean_mse, color="black", lw=1, ls="--",
                label=f"mean {report.mean_mse:.4g}")
    ax1.set_xlabel("MSE")
    ax1.legend()
    ax2.hist(ssim_values, bins=30, color="tab:orange", alpha=0.8)
    ax2.axvline(report.mean_ssim, color="black", lw=1, ls="--",
                label=f"mean {report.mean_ssim:.4g}")
    ax2.set_xlabel("SSIM")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
