"""Linear orthogonal image-to-image translation in a truncated PCA subspace."""

import os as _os

# Cap BLAS parallelism before numpy loads; numpy reads these at import time.
_threads = _os.environ.get("LINTRA_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .align import (
    ORTHOGONAL,
    UNRESTRICTED,
    Correspondence,
    IcpConfig,
    LatentMap,
    best_buddies,
    fit_icp,
    fit_paired,
    nearest_neighbors,
    procrustes,
)
from .dataset import (
    ImageSet,
    ImageShape,
    load_directory,
    permute,
    save_directory,
    split_shuffle,
)
from .errors import AlignmentError, DataMismatchError, LintraError, ModelFormatError
from .metrics import EvalReport, distance_scatter, evaluate, mse, ssim
from .model_store import load as load_model
from .model_store import save as save_model
from .pca import (
    LatentSet,
    PcaBasis,
    align_skew,
    fit_pca,
    project,
    projection_skewness,
    reconstruct,
    spectrum_report,
)
from .synthetic import power_law_images
from .tasks import TaskSpec, apply_task, make_domain_pair
from .translator import Translator

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "Correspondence",
    "DataMismatchError",
    "EvalReport",
    "IcpConfig",
    "ImageSet",
    "ImageShape",
    "LatentMap",
    "LatentSet",
    "LintraError",
    "ModelFormatError",
    "ORTHOGONAL",
    "PcaBasis",
    "TaskSpec",
    "Translator",
    "UNRESTRICTED",
    "align_skew",
    "apply_task",
    "best_buddies",
    "distance_scatter",
    "evaluate",
    "fit_icp",
    "fit_paired",
    "fit_pca",
    "load_directory",
    "load_model",
    "make_domain_pair",
    "mse",
    "nearest_neighbors",
    "permute",
    "power_law_images",
    "procrustes",
    "project",
    "projection_skewness",
    "reconstruct",
    "save_directory",
    "save_model",
    "spectrum_report",
    "split_shuffle",
    "ssim",
]
