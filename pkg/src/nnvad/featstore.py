"""On-disk per-patch feature matrices (PFV1 format).

Layout (all integers and floats little-endian):

    bytes 0-3   magic ``PFV1``
    u32         version (currently 1)
    u32         header_len
    header_len  JSON header: extractor_name, dim, patch_size, stride,
                frame_width, frame_height, frames: [{clip_id, frame_index}, ...]
    payload     rows of ``dim`` float32 values, frame-major then
                patch-row-major (grid enumeration order)

One store holds one dataset split for one extractor; every frame
contributes exactly ``patch_count`` consecutive rows.  Frame indices are
1-based, matching the manifest convention.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from nnvad.manifest import DatasetManifest
from nnvad.patches import PatchGrid

MAGIC = b"PFV1"
VERSION = 1

# dims required of the named extractors; anything else is treated as custom
EXTRACTOR_DIMS = {
    "vgg16": 512,
    "resnet50": 2048,
    "xception": 2048,
    "densenet121": 1024,
}

DEFAULT_BATCH_ROWS = 2048


class StoreError(Exception):
    """Problem with a feature store file."""


class StoreFormatError(StoreError):
    """Bad magic, version, header, or truncated payload."""


class StoreDataError(StoreError):
    """Payload or metadata violates a store invariant."""


@dataclass(frozen=True)
class StoreHeader:
    extractor_name: str
    dim: int
    patch_size: int
    stride: int
    frame_width: int
    frame_height: int
    frames: tuple[tuple[str, int], ...]  # (clip_id, 1-based frame_index)

    def validate(self) -> None:
        if self.dim <= 0:
            raise StoreDataError(f"dim must be positive, got {self.dim}")
        expected = EXTRACTOR_DIMS.get(self.extractor_name)
        if expected is not None and self.dim != expected:
            raise StoreDataError(
                f"extractor {self.extractor_name!r} produces {expected} features, "
                f"header says {self.dim}"
            )
        if not self.frames:
            raise StoreDataError("a store must contain at least one frame")
        self.grid  # noqa: B018 -- raises if the geometry does not tile

    @property
    def grid(self) -> PatchGrid:
        return PatchGrid(
            frame_width=self.frame_width,
            frame_height=self.frame_height,
            patch_size=self.patch_size,
            stride=self.stride,
        )

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    @property
    def patch_count(self) -> int:
        return self.grid.patch_count

    @property
    def n_rows(self) -> int:
        return self.n_frames * self.patch_count

    def to_json(self) -> bytes:
        doc = {
            "extractor_name": self.extractor_name,
            "dim": self.dim,
            "patch_size": self.patch_size,
            "stride": self.stride,
            "frame_width": self.frame_width,
            "frame_height": self.frame_height,
            "frames": [
                {"clip_id": c, "frame_index": i} for c, i in self.frames
            ],
        }
        return json.dumps(doc, separators=(",", ":"), sort_keys=True).encode("utf-8")

    @classmethod
    def from_json(cls, raw: bytes) -> "StoreHeader":
        try:
            doc = json.loads(raw.decode("utf-8"))
            header = cls(
                extractor_name=str(doc["extractor_name"]),
                dim=int(doc["dim"]),
                patch_size=int(doc["patch_size"]),
                stride=int(doc["stride"]),
                frame_width=int(doc["frame_width"]),
                frame_height=int(doc["frame_height"]),
                frames=tuple(
                    (str(f["clip_id"]), int(f["frame_index"])) for f in doc["frames"]
                ),
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise StoreFormatError(f"malformed store header: {exc}") from exc
        return header


def write_store(
    header: StoreHeader,
    row_batches: Iterable[np.ndarray],
    path: str | Path,
) -> None:
    """Write a store from a stream of row batches (2-D float arrays).

    Rows must arrive in frame-major, patch-row-major order and total
    exactly ``header.n_rows``.  The partial file is removed on any error.
    """
    header.validate()
    path = Path(path)
    header_bytes = header.to_json()
    rows_written = 0
    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<II", VERSION, len(header_bytes)))
            fh.write(header_bytes)
            for batch in row_batches:
                batch = np.asarray(batch)
                if batch.ndim == 1:
                    batch = batch[None, :]
                if batch.ndim != 2 or batch.shape[1] != header.dim:
                    raise StoreDataError(
                        f"row batch has width {batch.shape[-1] if batch.ndim else 0}, "
                        f"store dim is {header.dim}"
                    )
                if batch.shape[0] == 0:
                    continue
                if not np.isfinite(batch).all():
                    raise StoreDataError("non-finite value in row batch")
                fh.write(np.ascontiguousarray(batch, dtype="<f4").tobytes())
                rows_written += batch.shape[0]
        if rows_written != header.n_rows:
            raise StoreDataError(
                f"wrote {rows_written} rows, header implies {header.n_rows} "
                f"({header.n_frames} frames x {header.patch_count} patches)"
            )
    except Exception:
        path.unlink(missing_ok=True)
        raise


class FeatureStore:
    """Streaming reader over a PFV1 file.

    Opening parses only the header; payload rows are read on demand in
    bounded batches, so memory use is O(batch), not O(file).
    """

    def __init__(self, path: str | Path, header: StoreHeader, payload_offset: int):
        self.path = Path(path)
        self.header = header
        self._payload_offset = payload_offset

    @property
    def dim(self) -> int:
        return self.header.dim

    @property
    def n_rows(self) -> int:
        return self.header.n_rows

    @property
    def patch_count(self) -> int:
        return self.header.patch_count

    @property
    def grid(self) -> PatchGrid:
        return self.header.grid

    def iter_batches(self, batch_rows: int = DEFAULT_BATCH_ROWS) -> Iterator[np.ndarray]:
        """Yield float32 row batches of at most ``batch_rows`` rows."""
        if batch_rows <= 0:
            raise ValueError("batch_rows must be positive")
        dim = self.header.dim
        row_bytes = dim * 4
        with open(self.path, "rb") as fh:
            fh.seek(self._payload_offset)
            remaining = self.header.n_rows
            while remaining > 0:
                take = min(batch_rows, remaining)
                raw = fh.read(take * row_bytes)
                if len(raw) != take * row_bytes:
                    offset = self._payload_offset + (self.header.n_rows - remaining) * row_bytes
                    raise StoreFormatError(
                        f"{self.path}: truncated payload at byte {offset + len(raw)}"
                    )
                batch = np.frombuffer(raw, dtype="<f4").reshape(take, dim)
                if not np.isfinite(batch).all():
                    bad = int(np.where(~np.isfinite(batch).all(axis=1))[0][0])
                    row = self.header.n_rows - remaining + bad
                    raise StoreDataError(f"{self.path}: non-finite value in row {row}")
                yield batch
                remaining -= take

    def iter_frame_batches(
        self, frames_per_batch: int = 8
    ) -> Iterator[tuple[list[tuple[str, int]], np.ndarray]]:
        """Yield ``(frame_list, rows)`` with rows aligned to whole frames."""
        if frames_per_batch <= 0:
            raise ValueError("frames_per_batch must be positive")
        pc = self.header.patch_count
        frames = self.header.frames
        start = 0
        for batch in self.iter_batches(batch_rows=frames_per_batch * pc):
            count = batch.shape[0] // pc
            yield list(frames[start : start + count]), batch
            start += count

    def read_all(self) -> np.ndarray:
        """Whole payload as one float32 matrix (small stores / tests only)."""
        return np.concatenate(list(self.iter_batches()), axis=0)


def read_store(path: str | Path) -> FeatureStore:
    """Open a store, validating magic, version, header, and payload size."""
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise StoreFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        fixed = fh.read(8)
        if len(fixed) != 8:
            raise StoreFormatError(f"{path}: truncated fixed header")
        version, header_len = struct.unpack("<II", fixed)
        if version != VERSION:
            raise StoreFormatError(f"{path}: unsupported version {version}")
        header_raw = fh.read(header_len)
        if len(header_raw) != header_len:
            raise StoreFormatError(f"{path}: truncated header")
        header = StoreHeader.from_json(header_raw)
        header.validate()
        payload_offset = 4 + 8 + header_len
        fh.seek(0, 2)
        size = fh.tell()
    expected = payload_offset + header.n_rows * header.dim * 4
    if size != expected:
        raise StoreFormatError(
            f"{path}: payload ends at byte {size}, expected {expected} "
            f"({header.n_rows} rows x {header.dim} floats)"
        )
    return FeatureStore(path, header, payload_offset)


def validate_against_manifest(
    store: FeatureStore, manifest: DatasetManifest, split: str
) -> None:
    """Check the store covers every frame of the manifest split exactly once."""
    expected: set[tuple[str, int]] = set()
    for clip in manifest.split_clips(split):
        expected.update((clip.clip_id, i) for i in range(1, clip.frame_count + 1))
    seen: set[tuple[str, int]] = set()
    for frame in store.header.frames:
        if frame in seen:
            raise StoreDataError(f"duplicate frame {frame} in store")
        seen.add(frame)
        if frame not in expected:
            raise StoreDataError(
                f"store frame {frame} not in manifest split {split!r}"
            )
    missing = expected - seen
    if missing:
        raise StoreDataError(
            f"store missing {len(missing)} frame(s) of split {split!r}, "
            f"first: {min(missing)}"
        )
