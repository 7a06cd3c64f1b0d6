"""The end-to-end domain translator: encode, map, decode.

A translator bundles the two domain bases with the latent map and applies
x_B = mu_B + ((x_A - mu_A) @ W_A @ Q) @ W_B^T row by row. Arrays are held
in 32-bit floats, the exact representation the model store writes, so a
save/load round trip is bit-exact.
"""

from __future__ import annotations

import dataclasses
import datetime
from typing import Any

import numpy as np

from .align import ORTHOGONAL, LatentMap
from .dataset import ImageSet
from .errors import DataMismatchError
from .pca import PcaBasis

# Fresh float64 fits satisfy ||Q^T Q - I||_F <= 1e-6; rounding every entry
# to float32 inflates that by about eps32 per Gram entry, hence the
# rank-scaled bound used when validating stored matrices.
_STORED_ORTHO_TOL = 1e-5


def stored_orthogonality_tolerance(rank: int) -> float:
    return max(1e-6, _STORED_ORTHO_TOL * rank)


def _as_f32_basis(basis: PcaBasis) -> PcaBasis:
    return PcaBasis(
        mean=basis.mean.astype(np.float32),
        components=basis.components.astype(np.float32),
        eigenvalues=np.maximum(basis.eigenvalues.astype(np.float32), 0.0),
        shape=basis.shape,
        total_variance=basis.total_variance,
        skew_aligned=basis.skew_aligned,
    )


@dataclasses.dataclass(frozen=True)
class Translator:
    """Two PCA bases plus the latent map realizing one translation direction."""

    basis_a: PcaBasis
    basis_b: PcaBasis
    map: LatentMap
    created: str
    config_snapshot: dict[str, Any] = dataclasses.field(default_factory=dict)

    def __post_init__(self) -> None:
        ranks = {self.basis_a.rank, self.basis_b.rank, self.map.rank}
        if len(ranks) > 1:
            raise ValueError(f"basis and map ranks disagree: {sorted(ranks)}")
        if self.map.mode == ORTHOGONAL:
            err = self.map.orthogonality_error()
            if err > stored_orthogonality_tolerance(self.map.rank):
                raise ValueError(f"orthogonal-mode map is not orthogonal (error {err:.3e})")

    @property
    def rank(self) -> int:
        return self.map.rank

    @classmethod
    def bundle(
        cls,
        basis_a: PcaBasis,
        basis_b: PcaBasis,
        lmap: LatentMap,
        config_snapshot: dict[str, Any] | None = None,
    ) -> "Translator":
        """Freeze fitted pieces into a storable translator (arrays go float32)."""
        if lmap.mode == ORTHOGONAL and lmap.orthogonality_error() > 1e-6:
            raise ValueError("map failed the fresh-fit orthogonality check")
        return cls(
            basis_a=_as_f32_basis(basis_a),
            basis_b=_as_f32_basis(basis_b),
            map=LatentMap(lmap.matrix.astype(np.float32), lmap.mode,
                          lmap.iterations_run, lmap.buddy_counts, lmap.deltas),
            created=datetime.datetime.now(datetime.timezone.utc).isoformat(),
            config_snapshot=dict(config_snapshot or {}),
        )

    def translate(self, images: ImageSet) -> ImageSet:
        """Map every image from domain A into domain B, ids preserved."""
        if images.shape != self.basis_a.shape:
            raise DataMismatchError(
                f"input images are {images.shape}, model expects {self.basis_a.shape}"
            )
        centered = images.data - self.basis_a.mean.astype(np.float64)
        codes = centered @ self.basis_a.components.astype(np.float64)
        mapped = codes @ self.map.matrix.astype(np.float64)
        out = mapped @ self.basis_b.components.astype(np.float64).T
        out += self.basis_b.mean.astype(np.float64)
        np.clip(out, 0.0, 1.0, out=out)
        return ImageSet(out, self.basis_b.shape, images.ids)
