"""Image-pair quality metrics and the distance-preservation diagnostic.

MSE and SSIM both assume intensities in [0, 1] and refuse to re-match
images: ids of the two sets must already line up, so a silent misalignment
can never corrupt an evaluation.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from pathlib import Path

import numpy as np

from .align import Correspondence
from .dataset import ImageSet
from .errors import DataMismatchError

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2


def _check_aligned(pred: ImageSet, target: ImageSet) -> None:
    if pred.shape != target.shape:
        raise DataMismatchError(f"shapes differ: {pred.shape} vs {target.shape}")
    if pred.ids != target.ids:
        raise DataMismatchError("image ids are not aligned between the two sets")


def mse(pred: ImageSet, target: ImageSet) -> np.ndarray:
    """Per-image mean squared error over all d entries."""
    _check_aligned(pred, target)
    return ((pred.data - target.data) ** 2).mean(axis=1)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(offsets**2) / (2.0 * sigma**2))
    return g / g.sum()


def _filter_valid(frames: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Separable valid-mode correlation along the two spatial axes."""
    for axis in (1, 2):
        # Windowing appends the tap axis last; contracting it restores the
        # original axis order with the filtered axis shortened in place.
        windows = np.lib.stride_tricks.sliding_window_view(frames, len(taps), axis=axis)
        frames = windows @ taps
    return frames


def ssim(pred: ImageSet, target: ImageSet) -> np.ndarray:
    """Per-image single-scale structural similarity.

    Gaussian 11x11 window with sigma 1.5, stabilizers C1=0.01^2 and
    C2=0.03^2 for unit dynamic range, averaged over all valid window
    positions and over channels.
    """
    _check_aligned(pred, target)
    shape = pred.shape
    if shape.height < SSIM_WINDOW or shape.width < SSIM_WINDOW:
        raise ValueError(
            f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW} for SSIM, "
            f"got {shape.height}x{shape.width}"
        )
    taps = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)
    x = pred.images()
    y = target.images()
    mu_x = _filter_valid(x, taps)
    mu_y = _filter_valid(y, taps)
    var_x = _filter_valid(x * x, taps) - mu_x**2
    var_y = _filter_valid(y * y, taps) - mu_y**2
    cov = _filter_valid(x * y, taps) - mu_x * mu_y
    ssim_map = ((2.0 * mu_x * mu_y + SSIM_C1) * (2.0 * cov + SSIM_C2)) / (
        (mu_x**2 + mu_y**2 + SSIM_C1) * (var_x + var_y + SSIM_C2)
    )
    return ssim_map.reshape(len(pred), -1).mean(axis=1)


def distance_scatter(
    set_a: ImageSet,
    set_b: ImageSet,
    pairing: Correspondence,
    n_pairs: int = 1000,
    seed: int = 0,
) -> np.ndarray:
    """(n_pairs, 2) rows of cross-domain L2 distances for random sample pairs.

    For each random (i, j) drawn from the paired samples, the row holds the
    distance between images i and j in domain A and the distance between
    their counterparts in domain B. Equal columns mean the domain relation
    preserves distances, i.e. looks orthogonal.
    """
    if len(pairing) < 2:
        raise ValueError("need at least 2 paired samples")
    a_idx = pairing.a_indices
    b_idx = pairing.b_indices
    if a_idx.max() >= len(set_a) or b_idx.max() >= len(set_b):
        raise DataMismatchError("pairing indexes past the end of a set")
    rng = np.random.default_rng(seed)
    first = rng.integers(0, len(pairing), size=n_pairs)
    shift = rng.integers(1, len(pairing), size=n_pairs)
    second = (first + shift) % len(pairing)
    d_a = np.linalg.norm(set_a.data[a_idx[first]] - set_a.data[a_idx[second]], axis=1)
    d_b = np.linalg.norm(set_b.data[b_idx[first]] - set_b.data[b_idx[second]], axis=1)
    return np.column_stack([d_a, d_b])


@dataclasses.dataclass(frozen=True)
class EvalReport:
    """Per-image metric rows plus their arithmetic means."""

    per_image: tuple[tuple[str, float, float], ...]
    mean_mse: float
    mean_ssim: float

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "mse", "ssim"])
            for image_id, m, s in self.per_image:
                writer.writerow([image_id, repr(m), repr(s)])
            writer.writerow(["mean", repr(self.mean_mse), repr(self.mean_ssim)])

    def write_json(self, path: str | Path) -> None:
        payload = {
            "per_image": [
                {"id": image_id, "mse": m, "ssim": s} for image_id, m, s in self.per_image
            ],
            "mean_mse": self.mean_mse,
            "mean_ssim": self.mean_ssim,
        }
        Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def evaluate(pred: ImageSet, target: ImageSet) -> EvalReport:
    """MSE and SSIM of every aligned image pair, bundled with means."""
    mse_values = mse(pred, target)
    ssim_values = ssim(pred, target)
    rows = tuple(
        (image_id, float(m), float(s))
        for image_id, m, s in zip(pred.ids, mse_values, ssim_values)
    )
    return EvalReport(rows, float(mse_values.mean()), float(ssim_values.mean()))
