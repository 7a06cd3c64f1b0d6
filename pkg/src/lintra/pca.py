"""Truncated PCA bases per image domain.

The basis doubles as a linear encoder/decoder: ``project`` maps images to
length-r codes, ``reconstruct`` maps codes back. Component signs are first
canonicalized deterministically, then optionally re-oriented so each
component's projected distribution has nonnegative skewness, which is what
lets two independently fitted domains agree on orientation.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .dataset import ImageSet, ImageShape

_GRAM_MAX_SAMPLES = 4096  # exact Gram eigendecomposition up to this n
_OVERSAMPLING = 10
_POWER_ITERATIONS = 2


@dataclasses.dataclass(frozen=True)
class PcaBasis:
    """Mean, top-r principal directions, and their variances for one domain.

    ``components`` is d x r with orthonormal columns; ``eigenvalues`` are the
    matching sample variances (1/n normalization), nonincreasing.
    ``total_variance`` is the full trace of the sample covariance, which the
    spectrum report needs to express captured-variance fractions.
    """

    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    shape: ImageShape
    total_variance: float
    skew_aligned: bool = False

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean)
        comp = np.asarray(self.components)
        eig = np.asarray(self.eigenvalues)
        if comp.ndim != 2 or mean.shape != (comp.shape[0],):
            raise ValueError("components must be d x r with a length-d mean")
        if eig.shape != (comp.shape[1],):
            raise ValueError("need one eigenvalue per component")
        if np.any(eig < 0) or np.any(np.diff(eig) > 0):
            raise ValueError("eigenvalues must be nonnegative and nonincreasing")
        if comp.shape[0] != self.shape.dim:
            raise ValueError(
                f"component length {comp.shape[0]} does not match shape dim {self.shape.dim}"
            )
        for arr in (mean, comp, eig):
            arr.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "components", comp)
        object.__setattr__(self, "eigenvalues", eig)

    @property
    def rank(self) -> int:
        return self.components.shape[1]

    @property
    def dim(self) -> int:
        return self.components.shape[0]

    def orthonormality_error(self) -> float:
        """Frobenius distance of W^T W from the identity."""
        w = self.components.astype(np.float64, copy=False)
        gram = w.T @ w
        return float(np.linalg.norm(gram - np.eye(self.rank)))


@dataclasses.dataclass(frozen=True)
class LatentSet:
    """n x r code matrix plus a reference to the basis that produced it."""

    codes: np.ndarray
    basis: PcaBasis | None = None
    ids: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        codes = np.ascontiguousarray(self.codes, dtype=np.float64)
        if codes.ndim != 2:
            raise ValueError(f"codes must be 2-D, got shape {codes.shape}")
        if self.basis is not None and codes.shape[1] != self.basis.rank:
            raise ValueError(
                f"code width {codes.shape[1]} does not match basis rank {self.basis.rank}"
            )
        if self.ids is not None and len(self.ids) != codes.shape[0]:
            raise ValueError("ids and codes disagree on n")
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)

    def __len__(self) -> int:
        return self.codes.shape[0]

    @property
    def rank(self) -> int:
        return self.codes.shape[1]

    @property
    def skew_aligned(self) -> bool:
        return self.basis is not None and self.basis.skew_aligned


def _canonical_signs(components: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-|entry| pixel is positive (first index on ties)."""
    peak = np.argmax(np.abs(components), axis=0)
    signs = np.sign(components[peak, np.arange(components.shape[1])])
    signs[signs == 0] = 1.0
    return components * signs


def _gram_solver(centered: np.ndarray, rank: int, rng: np.random.Generator):
    n = centered.shape[0]
    gram = centered @ centered.T
    gamma, u = np.linalg.eigh(gram)
    gamma = np.clip(gamma[::-1], 0.0, None)
    u = u[:, ::-1]
    total_variance = float(gamma.sum()) / n
    gamma_r = gamma[:rank]
    u_r = u[:, :rank]
    # Lift Gram eigenvectors to pixel space; back-fill directions whose
    # singular value underflows with random vectors, then re-orthonormalize.
    good = gamma_r > gamma[0] * 1e-12
    v = np.empty((centered.shape[1], rank))
    v[:, good] = centered.T @ (u_r[:, good] / np.sqrt(gamma_r[good]))
    if not good.all():
        v[:, ~good] = rng.standard_normal((centered.shape[1], int((~good).sum())))
    w, r_factor = np.linalg.qr(v)
    w = w * np.where(np.diag(r_factor) < 0, -1.0, 1.0)
    return w, gamma_r / n, total_variance


def _randomized_solver(centered: np.ndarray, rank: int, rng: np.random.Generator):
    n, d = centered.shape
    n_probe = min(rank + _OVERSAMPLING, min(n, d))
    sketch = centered @ rng.standard_normal((d, n_probe))
    q, _ = np.linalg.qr(sketch)
    for _ in range(_POWER_ITERATIONS):
        z, _ = np.linalg.qr(centered.T @ q)
        q, _ = np.linalg.qr(centered @ z)
    _, singular, vt = np.linalg.svd(q.T @ centered, full_matrices=False)
    total_variance = float(np.sum(centered**2)) / n
    return vt[:rank].T, singular[:rank] ** 2 / n, total_variance


def fit_pca(images: ImageSet, rank: int, seed: int = 0, solver: str = "auto") -> PcaBasis:
    """Fit a rank-r PCA basis to an image set.

    Up to ``_GRAM_MAX_SAMPLES`` rows this uses the exact n x n Gram
    eigendecomposition (the d x d covariance is never formed); above that a
    seeded randomized range finder with oversampling and power iterations
    takes over. ``solver`` can force ``"gram"`` or ``"randomized"``.
    Component signs are canonicalized; results are deterministic per seed.
    """
    n, d = images.data.shape
    max_rank = min(n - 1, d)
    if not 1 <= rank <= max_rank:
        raise ValueError(f"rank must lie in [1, {max_rank}] for n={n}, d={d}, got {rank}")
    rng = np.random.default_rng(seed)
    mean = images.data.mean(axis=0)
    centered = images.data - mean
    if solver == "auto":
        solver = "gram" if n <= _GRAM_MAX_SAMPLES else "randomized"
    if solver == "gram":
        w, eig, total_variance = _gram_solver(centered, rank, rng)
    elif solver == "randomized":
        w, eig, total_variance = _randomized_solver(centered, rank, rng)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    if total_variance <= 0.0:
        raise ValueError("degenerate data: all rows are identical, no principal directions")
    return PcaBasis(
        mean=mean,
        components=_canonical_signs(w),
        eigenvalues=eig,
        shape=images.shape,
        total_variance=total_variance,
    )


def projection_skewness(basis: PcaBasis, images: ImageSet) -> np.ndarray:
    """Per-component sum of cubed centered projections."""
    if images.dim != basis.dim:
        raise ValueError(f"image dim {images.dim} does not match basis dim {basis.dim}")
    codes = (images.data - basis.mean) @ basis.components
    return (codes**3).sum(axis=0)


def align_skew(basis: PcaBasis, images: ImageSet) -> PcaBasis:
    """Re-sign components so decisively skewed projections skew positive.

    A component is flipped only when its skewness clears a scale-aware
    threshold of 1e-3 * n * eigenvalue^(3/2); borderline components keep
    their canonical sign, which makes the operation idempotent.
    """
    skew = projection_skewness(basis, images)
    threshold = 1e-3 * len(images) * basis.eigenvalues**1.5
    signs = np.where(skew < -threshold, -1.0, 1.0)
    return PcaBasis(
        mean=basis.mean,
        components=basis.components * signs,
        eigenvalues=basis.eigenvalues,
        shape=basis.shape,
        total_variance=basis.total_variance,
        skew_aligned=True,
    )


def project(basis: PcaBasis, images: ImageSet) -> LatentSet:
    """Encode images as centered coordinates in the basis."""
    if images.dim != basis.dim:
        raise ValueError(f"image dim {images.dim} does not match basis dim {basis.dim}")
    return LatentSet((images.data - basis.mean) @ basis.components, basis, images.ids)


def reconstruct(basis: PcaBasis, codes: LatentSet) -> ImageSet:
    """Decode latent codes back to images, clamped to [0, 1]."""
    if codes.rank != basis.rank:
        raise ValueError(f"code width {codes.rank} does not match basis rank {basis.rank}")
    data = np.clip(codes.codes @ basis.components.T + basis.mean, 0.0, 1.0)
    ids = codes.ids if codes.ids is not None else tuple(f"code{i:05d}" for i in range(len(codes)))
    return ImageSet(data, basis.shape, ids)


def spectrum_report(basis: PcaBasis) -> list[tuple[int, float, float]]:
    """Rows of (index, eigenvalue, cumulative fraction of total variance)."""
    cumulative = np.cumsum(basis.eigenvalues) / basis.total_variance
    return [
        (k, float(basis.eigenvalues[k]), float(cumulative[k]))
        for k in range(basis.rank)
    ]
