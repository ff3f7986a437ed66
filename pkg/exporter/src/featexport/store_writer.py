"""Writes PFV1 feature stores.

Byte layout (integers and floats little-endian):

    bytes 0-3   magic ``PFV1``
    u32         version = 1
    u32         header_len
    header_len  JSON: extractor_name, dim, patch_size, stride,
                frame_width, frame_height, frames: [{clip_id, frame_index}]
    payload     rows of ``dim`` float32, frame-major then patch-row-major

This is a from-scratch implementation: the exporter shares only the file
format with the scoring side, not its code.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"PFV1"
VERSION = 1


def store_header(
    extractor_name: str,
    dim: int,
    frames: list[tuple[str, int]],
    *,
    frame_width: int,
    frame_height: int,
    patch_size: int,
    stride: int,
) -> dict:
    """Build the header document for a store.

    ``frames`` lists (clip_id, 1-based frame_index) pairs in payload order.
    """
    if dim <= 0:
        raise ValueError(f"dim must be positive, got {dim}")
    if not frames:
        raise ValueError("a store must contain at least one frame")
    if patch_size <= 0 or stride <= 0:
        raise ValueError("patch_size and stride must be positive")
    if (frame_width - patch_size) % stride or (frame_height - patch_size) % stride:
        raise ValueError(
            f"{patch_size}px patches at stride {stride} do not tile "
            f"{frame_width}x{frame_height}"
        )
    for clip_id, frame_index in frames:
        if frame_index < 1:
            raise ValueError(
                f"frame indices are 1-based, got {clip_id}:{frame_index}"
            )
    return {
        "extractor_name": extractor_name,
        "dim": int(dim),
        "patch_size": int(patch_size),
        "stride": int(stride),
        "frame_width": int(frame_width),
        "frame_height": int(frame_height),
        "frames": [
            {"clip_id": str(c), "frame_index": int(i)} for c, i in frames
        ],
    }


def patches_per_frame(header: dict) -> int:
    cols = (header["frame_width"] - header["patch_size"]) // header["stride"] + 1
    rows = (header["frame_height"] - header["patch_size"]) // header["stride"] + 1
    return cols * rows


class StoreWriter:
    """Streams feature rows into a PFV1 file.

    The header (including the full frame list) is written up front, so the
    caller must know the frame inventory before inference starts -- which it
    does, because the manifest lists it.  Rows then arrive in any batch
    granularity as long as the total comes out to
    ``n_frames * patches_per_frame``.  A file that errors out or is closed
    short is deleted rather than left truncated.
    """

    def __init__(self, path: str | Path, header: dict):
        self.path = Path(path)
        self.header = header
        self.dim = header["dim"]
        self.rows_expected = len(header["frames"]) * patches_per_frame(header)
        self.rows_written = 0
        header_bytes = json.dumps(
            header, separators=(",", ":"), sort_keys=True
        ).encode("utf-8")
        self._fh = open(self.path, "wb")
        try:
            self._fh.write(MAGIC)
            self._fh.write(struct.pack("<II", VERSION, len(header_bytes)))
            self._fh.write(header_bytes)
        except Exception:
            self._abort()
            raise

    def write_rows(self, block: np.ndarray) -> None:
        if self._fh is None:
            raise ValueError("writer is closed")
        block = np.asarray(block)
        if block.ndim != 2 or block.shape[1] != self.dim:
            self._abort()
            raise ValueError(
                f"expected rows of width {self.dim}, got shape {block.shape}"
            )
        if self.rows_written + block.shape[0] > self.rows_expected:
            self._abort()
            raise ValueError(
                f"store takes {self.rows_expected} rows, writing "
                f"{self.rows_written + block.shape[0]}"
            )
        if not np.isfinite(block).all():
            self._abort()
            raise ValueError("non-finite feature value")
        self._fh.write(np.ascontiguousarray(block, dtype="<f4").tobytes())
        self.rows_written += block.shape[0]

    def close(self) -> None:
        if self._fh is None:
            return
        if self.rows_written != self.rows_expected:
            self._abort()
            raise ValueError(
                f"wrote {self.rows_written} of {self.rows_expected} rows"
            )
        self._fh.close()
        self._fh = None

    def _abort(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None
        self.path.unlink(missing_ok=True)

    def __enter__(self) -> "StoreWriter":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if exc_type is not None:
            self._abort()
        else:
            self.close()
