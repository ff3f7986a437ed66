"""Walk a manifest split, run the backbone, stream rows into a store."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from featexport.frames import (
    CANVAS_HEIGHT,
    CANVAS_WIDTH,
    PATCH_SIZE,
    STRIDE,
    frame_patches,
    list_frame_files,
    load_grayscale,
)
from featexport.manifest import load_manifest
from featexport.models import MODELS, FeatureModel
from featexport.store_writer import StoreWriter, store_header

# Geometry of the reference-vector fixture: one tiny 80x48 frame whose
# patch grid has exactly 8 cells, so 8 input patches make a complete,
# well-formed store.
REFERENCE_WIDTH = 80
REFERENCE_HEIGHT = 48
REFERENCE_PATCHES = 8


def _clip_frames(manifest_path: Path, clip, frames_root: Path | None) -> list[Path]:
    frame_dir = Path(clip.frame_dir)
    if not frame_dir.is_absolute():
        root = frames_root if frames_root is not None else manifest_path.parent
        frame_dir = root / frame_dir
    files = list_frame_files(frame_dir)
    if len(files) != clip.frame_count:
        raise ValueError(
            f"clip {clip.clip_id}: manifest says {clip.frame_count} frames, "
            f"{frame_dir} holds {len(files)}"
        )
    return files


def export_features(
    manifest_path: str | Path,
    split: str,
    model_name: str,
    out_path: str | Path,
    *,
    weights: str = "imagenet",
    seed: int = 0,
    frames_root: str | Path | None = None,
    model: FeatureModel | None = None,
    verbose: bool = False,
) -> int:
    """Export one split of one manifest through one backbone.

    Returns the number of frames written.  The complete frame inventory is
    resolved and checked against the manifest before any inference runs, so
    a count mismatch fails fast instead of after minutes of forward passes.
    A prebuilt ``model`` can be passed to reuse loaded weights.
    """
    manifest_path = Path(manifest_path)
    frames_root = Path(frames_root) if frames_root is not None else None
    manifest = load_manifest(manifest_path)
    clips = manifest.split_clips(split)
    if not clips:
        raise ValueError(f"manifest has no {split!r} clips")

    inventory = [(clip, _clip_frames(manifest_path, clip, frames_root)) for clip in clips]
    frames = [
        (clip.clip_id, i + 1)
        for clip, files in inventory
        for i in range(len(files))
    ]

    if model is None:
        model = FeatureModel(model_name, weights=weights, seed=seed)
    elif model.name != model_name:
        raise ValueError(f"model is {model.name!r}, requested {model_name!r}")

    header = store_header(
        model_name,
        MODELS[model_name].output_dim,
        frames,
        frame_width=CANVAS_WIDTH,
        frame_height=CANVAS_HEIGHT,
        patch_size=PATCH_SIZE,
        stride=STRIDE,
    )
    with StoreWriter(out_path, header) as writer:
        for clip, files in inventory:
            if verbose:
                print(
                    f"{clip.clip_id}: {len(files)} frames", file=sys.stderr, flush=True
                )
            for path in files:
                patches = frame_patches(load_grayscale(path))
                writer.write_rows(model.features(patches))
    return len(frames)


def export_reference_vectors(
    model_name: str,
    patches: np.ndarray,
    out_path: str | Path,
    *,
    weights: str = "none",
    seed: int = 0,
) -> np.ndarray:
    """Write a minimal single-frame store from 8 fixed patches.

    This produces the golden fixture used to pin down the file contract
    between exporter and scorer: same patches in, identical bytes out.
    Defaults to seeded random weights so the fixture does not depend on a
    weight download.  Returns the feature rows that were written.
    """
    patches = np.asarray(patches)
    if patches.shape != (REFERENCE_PATCHES, PATCH_SIZE, PATCH_SIZE, 3):
        raise ValueError(
            f"reference fixture takes shape "
            f"({REFERENCE_PATCHES}, {PATCH_SIZE}, {PATCH_SIZE}, 3), "
            f"got {patches.shape}"
        )
    model = FeatureModel(model_name, weights=weights, seed=seed)
    rows = model.features(patches)
    header = store_header(
        model_name,
        MODELS[model_name].output_dim,
        [("fixture", 1)],
        frame_width=REFERENCE_WIDTH,
        frame_height=REFERENCE_HEIGHT,
        patch_size=PATCH_SIZE,
        stride=STRIDE,
    )
    with StoreWriter(out_path, header) as writer:
        writer.write_rows(rows)
    return rows
