"""Shared builders and independent reference implementations for the tests."""

from __future__ import annotations

import numpy as np
import pytest

from lintra import ImageSet, ImageShape


def random_orthogonal(size: int, seed: int) -> np.ndarray:
    """Haar-ish orthogonal matrix via QR of a Gaussian draw."""
    q, r = np.linalg.qr(np.random.default_rng(seed).standard_normal((size, size)))
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def image_set(data: np.ndarray, height: int, width: int, channels: int = 1) -> ImageSet:
    data = np.asarray(data, dtype=np.float64)
    ids = tuple(f"img{i:04d}.png" for i in range(data.shape[0]))
    return ImageSet(data, ImageShape(height, width, channels), ids)


def random_images(n: int, height: int, width: int, channels: int = 1, seed: int = 0) -> ImageSet:
    rng = np.random.default_rng(seed)
    data = rng.uniform(0.0, 1.0, size=(n, height * width * channels))
    return image_set(data, height, width, channels)


def skewed_rotated_pair(
    n: int, shape: ImageShape, seed: int, exponent: float = 2.5
) -> tuple[ImageSet, ImageSet, np.ndarray]:
    """Two image sets holding the same samples, related by a random pixel rotation.

    Latent factors are standardized exponentials, so every principal
    direction of the data has positively skewed projections. Both domains
    are rescaled about 0.5 by one shared factor to stay inside [0, 1]
    without clipping, which keeps the orthogonal relation exact. Returns
    (A, B, T) with row convention B = 0.5 + (A - 0.5) @ T.
    """
    d = shape.dim
    rng = np.random.default_rng(seed)
    basis, _ = np.linalg.qr(rng.standard_normal((d, d)))
    sigma = np.arange(1, d + 1, dtype=np.float64) ** (-exponent / 2.0)
    sigma *= 0.08 * np.sqrt(d / np.sum(sigma**2))
    z = rng.exponential(1.0, size=(n, d)) - 1.0
    dev = (z * sigma) @ basis.T
    rotation, _ = np.linalg.qr(rng.standard_normal((d, d)))
    dev_b = dev @ rotation
    scale = 0.499 / max(np.abs(dev).max(), np.abs(dev_b).max())
    ids = tuple(f"img{i:04d}.png" for i in range(n))
    return (
        ImageSet(0.5 + scale * dev, shape, ids),
        ImageSet(0.5 + scale * dev_b, shape, ids),
        rotation,
    )


# --- independent metric references (straight loops, no shared code paths) ---

def reference_mse(x: np.ndarray, y: np.ndarray) -> float:
    total = 0.0
    for a, b in zip(x.ravel().tolist(), y.ravel().tolist()):
        total += (a - b) ** 2
    return total / x.size


def reference_ssim(x: np.ndarray, y: np.ndarray) -> float:
    """Windowed SSIM evaluated one 11x11 position at a time on (h, w, c) arrays."""
    taps = np.exp(-((np.arange(11) - 5.0) ** 2) / (2.0 * 1.5**2))
    taps /= taps.sum()
    window = np.outer(taps, taps)
    c1, c2 = 0.01**2, 0.03**2
    values = []
    for c in range(x.shape[2]):
        for i in range(x.shape[0] - 10):
            for j in range(x.shape[1] - 10):
                px = x[i:i + 11, j:j + 11, c]
                py = y[i:i + 11, j:j + 11, c]
                mx = float((window * px).sum())
                my = float((window * py).sum())
                vx = float((window * px * px).sum()) - mx * mx
                vy = float((window * py * py).sum()) - my * my
                cxy = float((window * px * py).sum()) - mx * my
                values.append(
                    ((2 * mx * my + c1) * (2 * cxy + c2))
                    / ((mx * mx + my * my + c1) * (vx + vy + c2))
                )
    return float(np.mean(values))


@pytest.fixture
def tmp_image_dir(tmp_path):
    """Factory writing an ImageSet to a fresh directory under tmp_path."""
    from lintra import save_directory

    counter = {"n": 0}

    def write(images: ImageSet) -> str:
        counter["n"] += 1
        out = tmp_path / f"imgs{counter['n']}"
        save_directory(images, out)
        return str(out)

    return write
