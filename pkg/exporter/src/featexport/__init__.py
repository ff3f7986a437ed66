"""Per-patch CNN feature export for the PFV1 feature-store pipeline.

This package runs the convolutional part of a pretrained ImageNet backbone
over every 32x32 patch of every frame in a dataset manifest and writes the
result as a PFV1 feature store, which the scoring pipeline consumes.  It is
deliberately independent of that pipeline's code: the two sides share only
the file formats.
"""

from featexport.export import export_features, export_reference_vectors
from featexport.frames import (
    CANVAS_HEIGHT,
    CANVAS_WIDTH,
    PATCH_SIZE,
    STRIDE,
    frame_patches,
    list_frame_files,
    load_grayscale,
    patch_rects,
    resize_to_canvas,
)
from featexport.manifest import Clip, Manifest, load_manifest
from featexport.models import MODELS, ExtractorSpec, FeatureModel
from featexport.store_writer import StoreWriter, store_header

__all__ = [
    "CANVAS_HEIGHT",
    "CANVAS_WIDTH",
    "Clip",
    "ExtractorSpec",
    "FeatureModel",
    "MODELS",
    "Manifest",
    "PATCH_SIZE",
    "STRIDE",
    "StoreWriter",
    "export_features",
    "export_reference_vectors",
    "frame_patches",
    "list_frame_files",
    "load_grayscale",
    "load_manifest",
    "patch_rects",
    "resize_to_canvas",
    "store_header",
]
