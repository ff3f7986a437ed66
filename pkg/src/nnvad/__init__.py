"""Frame-level anomaly detection for surveillance video.

Pipeline: per-patch CNN feature stores -> feature normalization ->
incremental PCA -> approximate 1-NN distance scoring against the training
set -> frame-level ROC / AUC / EER evaluation.
"""

from nnvad.manifest import (
    ClipEntry,
    DatasetManifest,
    ManifestError,
    ManifestParseError,
    ManifestValidationError,
    load_manifest,
    save_manifest,
)
from nnvad.patches import Frame, PatchGrid, crop_patch, enumerate_patches, resize_frame
from nnvad.featstore import (
    EXTRACTOR_DIMS,
    FeatureStore,
    StoreDataError,
    StoreError,
    StoreFormatError,
    StoreHeader,
    read_store,
    validate_against_manifest,
    write_store,
)
from nnvad.normalize import Normalizer, fit_normalizer, load_normalizer, save_normalizer
from nnvad.ipca import IncrementalPCA
from nnvad.ann import AnnIndex, QueryResult
from nnvad.metrics import FrameScore, RocReport, eer_from_roc, frame_scores, roc_auc
from nnvad.pipeline import ExperimentConfig, RunRecord, StageError, run_experiment, run_grid

__version__ = "0.1.0"

__all__ = [
    "AnnIndex",
    "ClipEntry",
    "DatasetManifest",
    "EXTRACTOR_DIMS",
    "ExperimentConfig",
    "FeatureStore",
    "Frame",
    "FrameScore",
    "IncrementalPCA",
    "ManifestError",
    "ManifestParseError",
    "ManifestValidationError",
    "Normalizer",
    "PatchGrid",
    "QueryResult",
    "RocReport",
    "RunRecord",
    "StageError",
    "StoreDataError",
    "StoreError",
    "StoreFormatError",
    "StoreHeader",
    "crop_patch",
    "eer_from_roc",
    "enumerate_patches",
    "fit_normalizer",
    "frame_scores",
    "load_manifest",
    "load_normalizer",
    "read_store",
    "resize_frame",
    "roc_auc",
    "run_experiment",
    "run_grid",
    "save_manifest",
    "save_normalizer",
    "validate_against_manifest",
    "write_store",
]
