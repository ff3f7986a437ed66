"""Shared synthetic fixtures: in-memory datasets, PFV1 stores, manifests."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from nnvad import featstore
from nnvad.manifest import ClipEntry, DatasetManifest, save_manifest

# Small grid used by most synthetic stores: 64x64 frame, 32px patches,
# stride 16 -> 3x3 = 9 patches per frame.
SYN_FRAME = 64
SYN_PATCH = 32
SYN_STRIDE = 16
SYN_PATCHES_PER_FRAME = 9
SYN_DIM = 128


def synthetic_header(frames, dim=SYN_DIM, extractor="synthetic"):
    return featstore.StoreHeader(
        extractor_name=extractor,
        dim=dim,
        patch_size=SYN_PATCH,
        stride=SYN_STRIDE,
        frame_width=SYN_FRAME,
        frame_height=SYN_FRAME,
        frames=tuple(frames),
    )


def write_synthetic_store(path, frames, row_fn, dim=SYN_DIM, extractor="synthetic"):
    """Write a PFV1 store; row_fn(clip_id, frame_index) -> (patches, dim) block."""
    header = synthetic_header(frames, dim=dim, extractor=extractor)

    def blocks():
        for clip_id, frame_index in frames:
            yield np.asarray(row_fn(clip_id, frame_index), dtype=np.float32)

    featstore.write_store(header, blocks(), path)
    return path


@pytest.fixture
def planted_dataset(tmp_path: Path):
    """Train/test stores + manifest with 10-sigma planted anomalous patches.

    The anomaly direction is a zero-sum +-1 pattern so it survives row-wise
    L1/L2 normalization (a pure radial offset would not).
    """
    rng = np.random.default_rng(20240817)
    d = SYN_DIM
    mu = 8.0 * np.ones(d)
    pattern = np.ones(d)
    pattern[d // 2 :] = -1.0

    train_frames = [("tr01", i + 1) for i in range(120)] + [
        ("tr02", i + 1) for i in range(120)
    ]
    test_frames = [("te01", i + 1) for i in range(40)] + [
        ("te02", i + 1) for i in range(40)
    ]
    anomalous = {("te01", i) for i in range(21, 31)} | {
        ("te02", i) for i in range(5, 15)
    }

    def normal_block():
        return mu + rng.normal(size=(SYN_PATCHES_PER_FRAME, d))

    def train_row(cid, fi):
        return normal_block()

    def test_row(cid, fi):
        block = normal_block()
        if (cid, fi) in anomalous:
            block[3] = mu + 10.0 * pattern + rng.normal(size=d)
        return block

    train_path = write_synthetic_store(tmp_path / "train.pfv", train_frames, train_row)
    test_path = write_synthetic_store(tmp_path / "test.pfv", test_frames, test_row)

    manifest = DatasetManifest(
        name="planted",
        frame_width=SYN_FRAME,
        frame_height=SYN_FRAME,
        fps=10.0,
        clips=(
            ClipEntry("te01", "test", "te01", 40, ((21, 30),)),
            ClipEntry("te02", "test", "te02", 40, ((5, 14),)),
            ClipEntry("tr01", "train", "tr01", 120, ()),
            ClipEntry("tr02", "train", "tr02", 120, ()),
        ),
    )
    manifest_path = tmp_path / "manifest.yaml"
    save_manifest(manifest, manifest_path)
    return {
        "manifest": manifest,
        "manifest_path": str(manifest_path),
        "train_store": str(train_path),
        "test_store": str(test_path),
        "out_dir": str(tmp_path / "runs"),
        "anomalous": anomalous,
    }
