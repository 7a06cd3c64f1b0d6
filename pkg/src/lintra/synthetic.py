"""Synthetic image corpora with a controlled covariance spectrum.

Samples are linear combinations of a fixed random orthonormal pixel basis
with component variances following a power law, which reproduces the
spectral decay of natural-image datasets closely enough for pipeline
experiments without shipping any real data.
"""

from __future__ import annotations

import numpy as np

from .dataset import ImageSet, ImageShape


def power_law_images(
    n: int,
    shape: ImageShape,
    exponent: float = 3.0,
    seed: int = 0,
    latent: str = "normal",
    pixel_std: float = 0.12,
    base: float = 0.5,
    clip: bool = True,
) -> ImageSet:
    """Draw ``n`` images whose covariance eigenvalues decay like k**-exponent.

    ``latent`` selects the per-component factor law: ``normal`` for symmetric
    data, ``exponential`` for positively skewed factors (standardized
    Exp(1)). ``pixel_std`` sets the average per-pixel standard deviation
    around the constant ``base`` image. With ``clip`` the output is clamped
    to [0, 1]; disable it when the exact linear spectrum matters more than
    valid pixel range.
    """
    if n < 1:
        raise ValueError("need n >= 1 samples")
    d = shape.dim
    rng = np.random.default_rng(seed)
    basis, _ = np.linalg.qr(rng.standard_normal((d, d)))
    sigma = np.arange(1, d + 1, dtype=np.float64) ** (-exponent / 2.0)
    # Average per-pixel variance is sum(sigma^2)/d; rescale to pixel_std.
    sigma *= pixel_std * np.sqrt(d / np.sum(sigma**2))
    if latent == "normal":
        z = rng.standard_normal((n, d))
    elif latent == "exponential":
        z = rng.exponential(1.0, size=(n, d)) - 1.0
    else:
        raise ValueError(f"unknown latent law {latent!r}")
    data = base + (z * sigma) @ basis.T
    if clip:
        np.clip(data, 0.0, 1.0, out=data)
    elif data.min() < 0.0 or data.max() > 1.0:
        raise ValueError("samples left [0, 1]; lower pixel_std or enable clip")
    ids = tuple(f"synth{i:05d}.png" for i in range(n))
    return ImageSet(data, shape, ids)
