"""Image datasets as flat row-matrices.

Images live in memory as an n x d matrix of intensities in [0, 1], one
flattened image per row, together with the pixel geometry needed to fold a
row back into height x width x channels. Grayscale stays single-channel;
nothing here ever promotes it to RGB.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataMismatchError

_EXTENSIONS = {".png", ".ppm", ".pgm"}


@dataclasses.dataclass(frozen=True)
class ImageShape:
    """Pixel geometry of every image in a set."""

    height: int
    width: int
    channels: int

    def __post_init__(self) -> None:
        if self.height < 1 or self.width < 1:
            raise ValueError(f"height and width must be >= 1, got {self.height}x{self.width}")
        if self.channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")

    @property
    def dim(self) -> int:
        """Row length d = height * width * channels."""
        return self.height * self.width * self.channels


@dataclasses.dataclass(frozen=True)
class ImageSet:
    """An immutable n x d matrix of flattened images plus stable per-row ids."""

    data: np.ndarray
    shape: ImageShape
    ids: tuple[str, ...]

    def __post_init__(self) -> None:
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] < 1:
            raise ValueError(f"data must be a nonempty 2-D matrix, got shape {data.shape}")
        if data.shape[1] != self.shape.dim:
            raise ValueError(
                f"row length {data.shape[1]} does not match shape dim {self.shape.dim}"
            )
        ids = tuple(str(i) for i in self.ids)
        if len(ids) != data.shape[0]:
            raise ValueError(f"{len(ids)} ids for {data.shape[0]} rows")
        if len(set(ids)) != len(ids):
            raise ValueError("ids must be unique within a set")
        if data.size and (data.min() < 0.0 or data.max() > 1.0):
            raise ValueError("pixel intensities must lie in [0, 1]")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "ids", ids)

    def __len__(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.shape.dim

    def images(self) -> np.ndarray:
        """Read-only view folded to (n, height, width, channels)."""
        s = self.shape
        return self.data.reshape(len(self), s.height, s.width, s.channels)

    def take(self, indices: np.ndarray) -> "ImageSet":
        """New set holding the given rows, in the given order."""
        idx = np.asarray(indices, dtype=np.intp)
        return ImageSet(self.data[idx], self.shape, tuple(self.ids[i] for i in idx))


def _decode(path: Path) -> tuple[np.ndarray, ImageShape]:
    try:
        with Image.open(path) as img:
            img.load()
            mode = img.mode
            if mode not in ("L", "RGB"):
                raise ValueError(
                    f"{path.name}: unsupported image mode {mode!r} (need 8-bit L or RGB)"
                )
            arr = np.asarray(img, dtype=np.uint8)
    except ValueError:
        raise
    except Exception as exc:
        raise ValueError(f"unreadable image file {path}: {exc}") from exc
    if arr.ndim == 2:
        arr = arr[:, :, None]
    shape = ImageShape(arr.shape[0], arr.shape[1], arr.shape[2])
    return arr.reshape(-1).astype(np.float64) / 255.0, shape


def load_directory(path: str | Path, expected_shape: ImageShape | None = None) -> ImageSet:
    """Load every PNG/PPM/PGM in a directory into one ImageSet.

    Rows are ordered lexicographically by filename so repeated loads are
    reproducible across filesystems; ids are the filenames. All images must
    share one geometry (and match ``expected_shape`` when given).
    """
    root = Path(path)
    if not root.is_dir():
        raise ValueError(f"not a directory: {root}")
    names = sorted(p.name for p in root.iterdir() if p.suffix.lower() in _EXTENSIONS)
    if not names:
        raise ValueError(f"no supported images (png/ppm/pgm) in {root}")
    rows = []
    shape: ImageShape | None = None
    for name in names:
        row, img_shape = _decode(root / name)
        if shape is None:
            shape = img_shape
        elif img_shape != shape:
            raise ValueError(
                f"mixed image dimensions in {root}: {name} is {img_shape}, expected {shape}"
            )
        rows.append(row)
    assert shape is not None
    if expected_shape is not None and shape != expected_shape:
        raise DataMismatchError(f"images in {root} are {shape}, expected {expected_shape}")
    return ImageSet(np.vstack(rows), shape, tuple(names))


def quantize(data: np.ndarray) -> np.ndarray:
    """Map [0,1] intensities to 8-bit codes, round-half-to-even."""
    return np.clip(np.rint(np.asarray(data) * 255.0), 0, 255).astype(np.uint8)


def save_directory(images: ImageSet, path: str | Path) -> None:
    """Write one 8-bit file per row, named by its id.

    Ids that carry a known suffix keep it (netpbm picks P5/P6 from the
    channel count); anything else gets ``.png`` appended.
    """
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    s = images.shape
    codes = quantize(images.data).reshape(len(images), s.height, s.width, s.channels)
    for i, image_id in enumerate(images.ids):
        name = image_id if Path(image_id).suffix.lower() in _EXTENSIONS else image_id + ".png"
        arr = codes[i, :, :, 0] if s.channels == 1 else codes[i]
        Image.fromarray(arr, mode="L" if s.channels == 1 else "RGB").save(root / name)


def split_shuffle(images: ImageSet, fraction: float, seed: int) -> tuple[ImageSet, ImageSet]:
    """Randomly partition a set in two; the first part gets ``fraction`` of rows."""
    n = len(images)
    if n < 2:
        raise ValueError("need at least 2 images to split")
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    n_first = int(round(fraction * n))
    if n_first == 0 or n_first == n:
        raise ValueError(f"fraction {fraction} yields an empty side for n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    return images.take(perm[:n_first]), images.take(perm[n_first:])


def permute(images: ImageSet, seed: int) -> ImageSet:
    """Return the same rows in a seeded uniform random order."""
    perm = np.random.default_rng(seed).permutation(len(images))
    return images.take(perm)
