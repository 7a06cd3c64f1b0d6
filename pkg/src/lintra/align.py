"""Fitting the square map between two latent coordinate systems.

Latent codes are rows; the map sends a domain-A code z to z @ Q. The
unsupervised path alternates mutual-nearest-neighbor correspondence with an
orthogonal Procrustes solve, starting from the identity. The supervised
path skips correspondence search and solves once, either orthogonally or as
an unrestricted ridge least-squares problem.
"""

from __future__ import annotations

import dataclasses
import logging
import warnings

import numpy as np

from .errors import AlignmentError
from .pca import LatentSet

log = logging.getLogger(__name__)

_NN_BLOCK = 2048

ORTHOGONAL = "orthogonal"
UNRESTRICTED = "unrestricted-linear"


@dataclasses.dataclass(frozen=True)
class LatentMap:
    """Square map between latent coordinate systems, plus fit diagnostics."""

    matrix: np.ndarray
    mode: str
    iterations_run: int = 1
    buddy_counts: tuple[int, ...] = ()
    deltas: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        matrix = np.ascontiguousarray(self.matrix)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"map must be square, got shape {matrix.shape}")
        if self.mode not in (ORTHOGONAL, UNRESTRICTED):
            raise ValueError(f"unknown mode {self.mode!r}")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def rank(self) -> int:
        return self.matrix.shape[0]

    def orthogonality_error(self) -> float:
        """Frobenius distance of Q^T Q from the identity."""
        q = self.matrix.astype(np.float64, copy=False)
        return float(np.linalg.norm(q.T @ q - np.eye(self.rank)))

    def transposed(self) -> "LatentMap":
        """The reverse-direction map (exact inverse in orthogonal mode)."""
        return LatentMap(self.matrix.T.copy(), self.mode, self.iterations_run,
                         self.buddy_counts, self.deltas)


@dataclasses.dataclass(frozen=True)
class Correspondence:
    """One-to-one index pairs (into A, into B)."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        pairs = tuple((int(a), int(b)) for a, b in self.pairs)
        a_side = [a for a, _ in pairs]
        b_side = [b for _, b in pairs]
        if len(set(a_side)) != len(a_side) or len(set(b_side)) != len(b_side):
            raise ValueError("correspondence must be one-to-one on both sides")
        if any(a < 0 or b < 0 for a, b in pairs):
            raise ValueError("indices must be nonnegative")
        object.__setattr__(self, "pairs", pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def a_indices(self) -> np.ndarray:
        return np.array([a for a, _ in self.pairs], dtype=np.intp)

    @property
    def b_indices(self) -> np.ndarray:
        return np.array([b for _, b in self.pairs], dtype=np.intp)

    @classmethod
    def identity(cls, n: int) -> "Correspondence":
        return cls(tuple((i, i) for i in range(n)))

    @classmethod
    def from_ids(cls, ids_a, ids_b) -> "Correspondence":
        """Pair rows that share an id (the hidden ground truth of shuffled tasks)."""
        pos_b = {image_id: j for j, image_id in enumerate(ids_b)}
        pairs = tuple((i, pos_b[image_id]) for i, image_id in enumerate(ids_a)
                      if image_id in pos_b)
        return cls(pairs)


@dataclasses.dataclass(frozen=True)
class IcpConfig:
    """Knobs for map fitting; every field is surfaced as a CLI flag."""

    rank: int | None = None
    max_iters: int = 100
    tol: float = 1e-5
    min_buddies: int | None = None
    whiten: bool = False
    mode: str = ORTHOGONAL
    ridge: float = 0.0


def nearest_neighbors(queries: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Index of the Euclidean-nearest target per query, lowest index on ties.

    Blocked brute force through the |q|^2 + |t|^2 - 2 q.t expansion; a
    spatial tree would lose to one matrix product at these widths.
    """
    queries = np.asarray(queries, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if targets.ndim != 2 or targets.shape[0] == 0:
        raise ValueError("targets must be a nonempty 2-D matrix")
    if queries.ndim != 2 or queries.shape[1] != targets.shape[1]:
        raise ValueError("queries and targets must share the coordinate width")
    target_sq = (targets**2).sum(axis=1)
    out = np.empty(queries.shape[0], dtype=np.intp)
    for start in range(0, queries.shape[0], _NN_BLOCK):
        block = queries[start:start + _NN_BLOCK]
        d2 = (block**2).sum(axis=1)[:, None] + target_sq[None, :] - 2.0 * (block @ targets.T)
        out[start:start + _NN_BLOCK] = np.argmin(d2, axis=1)
    return out


def _mutual_pairs(za: np.ndarray, zb: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    forward = nearest_neighbors(za @ q, zb)
    backward = nearest_neighbors(zb @ q.T, za)
    a_idx = np.arange(za.shape[0])
    keep = backward[forward] == a_idx
    return a_idx[keep], forward[keep]


def best_buddies(za: LatentSet, zb: LatentSet, lmap: LatentMap) -> Correspondence:
    """Mutual nearest neighbors of the two code sets under the current map."""
    if za.rank != zb.rank or za.rank != lmap.rank:
        raise ValueError("latent sets and map must share one rank")
    a_idx, b_idx = _mutual_pairs(za.codes, zb.codes, lmap.matrix)
    return Correspondence(tuple(zip(a_idx.tolist(), b_idx.tolist())))


def procrustes(a: np.ndarray, b: np.ndarray) -> LatentMap:
    """Orthogonal Q minimizing ||a @ Q - b||_F for paired rows, via SVD of a^T b."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or a.shape != b.shape or a.shape[0] < 1:
        raise ValueError(f"paired matrices must match in shape, got {a.shape} vs {b.shape}")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("non-finite values in procrustes inputs")
    u, _, vt = np.linalg.svd(a.T @ b)
    return LatentMap(u @ vt, ORTHOGONAL)


def fit_icp(za: LatentSet, zb: LatentSet, config: IcpConfig = IcpConfig()) -> LatentMap:
    """Alternate best-buddy correspondence and Procrustes until the map settles.

    Starts from the identity; converged when the Frobenius change of the map
    falls below ``config.tol``. Aborts with a diagnostic when the accepted
    pair count drops below ``config.min_buddies`` (default max(r/10, 3)),
    where a Procrustes solve would still be defined but meaningless.
    Contains no randomness: results are a pure function of the inputs.
    """
    if config.mode != ORTHOGONAL:
        raise ValueError("unsupervised fitting is orthogonal-only; use fit_paired for "
                         f"mode {config.mode!r}")
    if za.rank != zb.rank:
        raise ValueError(f"latent ranks differ: {za.rank} vs {zb.rank}")
    if not (za.skew_aligned and zb.skew_aligned):
        warnings.warn("latent sets were not produced by skew-aligned bases; "
                      "ICP may start far from the identity", stacklevel=2)
    r = za.rank
    min_buddies = config.min_buddies if config.min_buddies is not None else max(r / 10, 3)
    codes_a, codes_b = za.codes, zb.codes
    if config.whiten:
        # Whitened coordinates steer pair selection only; the solve uses raw codes.
        nn_a = codes_a / np.maximum(codes_a.std(axis=0), 1e-12)
        nn_b = codes_b / np.maximum(codes_b.std(axis=0), 1e-12)
    else:
        nn_a, nn_b = codes_a, codes_b

    q = np.eye(r)
    buddy_counts: list[int] = []
    deltas: list[float] = []
    for iteration in range(1, config.max_iters + 1):
        a_idx, b_idx = _mutual_pairs(nn_a, nn_b, q)
        buddy_counts.append(len(a_idx))
        if len(a_idx) < min_buddies:
            raise AlignmentError(
                f"iteration {iteration}: only {len(a_idx)} mutual pairs "
                f"(minimum {min_buddies}); domains may be unrelated or the rank too high"
            )
        q_next = procrustes(codes_a[a_idx], codes_b[b_idx]).matrix
        delta = float(np.linalg.norm(q_next - q))
        mean_dist = float(np.linalg.norm(codes_a[a_idx] @ q_next - codes_b[b_idx], axis=1).mean())
        log.info("icp iter=%d buddies=%d dq=%.3e mean_dist=%.4e",
                 iteration, len(a_idx), delta, mean_dist)
        q = q_next
        deltas.append(delta)
        if delta < config.tol:
            break
    return LatentMap(q, ORTHOGONAL, iterations_run=len(deltas),
                     buddy_counts=tuple(buddy_counts), deltas=tuple(deltas))


def fit_paired(
    za: LatentSet,
    zb: LatentSet,
    pairing: Correspondence,
    mode: str = ORTHOGONAL,
    ridge: float = 0.0,
) -> LatentMap:
    """Solve for the map directly from known correspondences.

    Orthogonal mode is a single Procrustes solve. Unrestricted mode solves
    the ridge least-squares problem (A^T A + ridge I) Q = A^T B in closed
    form; with ridge 0 the normal matrix must be full rank.
    """
    if len(pairing) == 0:
        raise ValueError("pairing must be nonempty")
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    a = za.codes[pairing.a_indices]
    b = zb.codes[pairing.b_indices]
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"latent ranks differ: {a.shape[1]} vs {b.shape[1]}")
    if mode == ORTHOGONAL:
        fit = procrustes(a, b)
        return LatentMap(fit.matrix, ORTHOGONAL, buddy_counts=(len(pairing),))
    if mode != UNRESTRICTED:
        raise ValueError(f"unknown mode {mode!r}")
    normal = a.T @ a
    if ridge == 0.0:
        if np.linalg.matrix_rank(normal) < normal.shape[0]:
            raise ValueError("A^T A is rank-deficient with ridge=0; increase ridge")
    else:
        normal = normal + ridge * np.eye(normal.shape[0])
    q = np.linalg.solve(normal, a.T @ b)
    return LatentMap(q, UNRESTRICTED, buddy_counts=(len(pairing),))
