"""Synthetic two-domain translation tasks built from a single image set.

Each task manufactures domain A by degrading or permuting the source
(domain B): vertical flip, left rotation, grayscale, masked inpainting
source, Sobel edge maps, or block-averaged downsampling. Pairs come in two
protocols: paired-shuffled (correspondence exists but is hidden by a
permutation) and nonmatching (disjoint halves, no true pairs).
"""

from __future__ import annotations

import dataclasses
from typing import Any

import numpy as np

from .dataset import ImageSet, ImageShape, permute, split_shuffle

TASK_NAMES = ("vflip", "rotate", "colorize", "inpaint", "edges-to-real", "super-res")
PROTOCOLS = ("paired-shuffled", "nonmatching")

# ITU-R BT.601 luma weights.
_LUMA = np.array([0.299, 0.587, 0.114])

_SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])


@dataclasses.dataclass(frozen=True)
class TaskSpec:
    """A named transformation plus the protocol and seed that realize a pair.

    ``params`` is task-specific and JSON-serializable: ``mask`` as
    [top, left, height, width] pixels for inpaint, integer ``factor`` for
    super-res, nothing for the rest.
    """

    name: str
    protocol: str = "paired-shuffled"
    seed: int = 0
    params: dict[str, Any] = dataclasses.field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.name not in TASK_NAMES:
            raise ValueError(f"unknown task {self.name!r}, expected one of {TASK_NAMES}")
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}, expected one of {PROTOCOLS}")

    def mask_for(self, shape: ImageShape) -> tuple[int, int, int, int]:
        """Inpaint rectangle, defaulting to a centered block of 25% area."""
        if "mask" in self.params:
            top, left, height, width = (int(v) for v in self.params["mask"])
        else:
            height, width = shape.height // 2, shape.width // 2
            top, left = (shape.height - height) // 2, (shape.width - width) // 2
        if height < 1 or width < 1:
            raise ValueError("inpaint mask must have nonzero area")
        if top < 0 or left < 0 or top + height > shape.height or left + width > shape.width:
            raise ValueError(f"inpaint mask {(top, left, height, width)} exceeds image bounds")
        return top, left, height, width

    def factor(self) -> int:
        f = int(self.params.get("factor", 8))
        if f < 2:
            raise ValueError(f"super-res factor must be >= 2, got {f}")
        return f


def _sobel_magnitude(frames: np.ndarray) -> np.ndarray:
    """Per-channel Sobel gradient magnitude with replicate borders."""
    padded = np.pad(frames, ((0, 0), (1, 1), (1, 1), (0, 0)), mode="edge")
    gx = np.zeros_like(frames)
    gy = np.zeros_like(frames)
    for di in range(3):
        for dj in range(3):
            tap = padded[:, di:di + frames.shape[1], dj:dj + frames.shape[2], :]
            if _SOBEL_X[di, dj] != 0.0:
                gx += _SOBEL_X[di, dj] * tap
            if _SOBEL_X[dj, di] != 0.0:
                gy += _SOBEL_X[dj, di] * tap
    return np.sqrt(gx**2 + gy**2)


def apply_task(spec: TaskSpec, images: ImageSet) -> ImageSet:
    """Apply the named transformation to every image, producing domain A."""
    shape = images.shape
    frames = images.images()
    if spec.name == "vflip":
        out, out_shape = frames[:, ::-1, :, :], shape
    elif spec.name == "rotate":
        out = np.rot90(frames, k=1, axes=(1, 2))
        out_shape = ImageShape(shape.width, shape.height, shape.channels)
    elif spec.name == "colorize":
        if shape.channels != 3:
            raise ValueError("colorize source requires RGB input")
        out = (frames @ _LUMA)[..., None]
        out_shape = ImageShape(shape.height, shape.width, 1)
    elif spec.name == "inpaint":
        top, left, height, width = spec.mask_for(shape)
        out = frames.copy()
        out[:, top:top + height, left:left + width, :] = 0.0
        out_shape = shape
    elif spec.name == "edges-to-real":
        mag = _sobel_magnitude(frames)
        peak = mag.reshape(len(images), -1).max(axis=1)
        scale = np.where(peak < 1e-8, 0.0, 1.0 / np.maximum(peak, 1e-8))
        out = mag * scale[:, None, None, None]
        out_shape = shape
    elif spec.name == "super-res":
        f = spec.factor()
        if shape.height % f or shape.width % f:
            raise ValueError(f"factor {f} must divide image size "
                             f"{shape.height}x{shape.width}")
        out = frames.reshape(len(images), shape.height // f, f,
                             shape.width // f, f, shape.channels).mean(axis=(2, 4))
        out_shape = ImageShape(shape.height // f, shape.width // f, shape.channels)
    else:  # unreachable: TaskSpec validates the name
        raise ValueError(f"unknown task {spec.name!r}")
    data = np.clip(out.reshape(len(images), -1), 0.0, 1.0)
    return ImageSet(data, out_shape, images.ids)


def make_domain_pair(spec: TaskSpec, source: ImageSet) -> tuple[ImageSet, ImageSet]:
    """Build (A, B) from a source set under the spec's protocol.

    paired-shuffled: B is the source, A is the transformed source in a
    seeded random order (ids still name the underlying samples, so the
    hidden pairing is recoverable by id). nonmatching: the source is split
    in half and only the first half is transformed into A.
    """
    if spec.protocol == "paired-shuffled":
        return permute(apply_task(spec, source), spec.seed), source
    first, second = split_shuffle(source, 0.5, spec.seed)
    return apply_task(spec, first), second
