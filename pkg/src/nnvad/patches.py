"""Frame handling and the fixed overlapping patch grid.

Frames are resized to a common working resolution (default 384x256) and
covered by 32x32 patches on a 16px stride, row-major.  The grid must tile
exactly: the last patch in each direction ends flush with the frame edge.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import cv2
import numpy as np

from nnvad.manifest import ClipEntry

FRAME_WIDTH = 384
FRAME_HEIGHT = 256
PATCH_SIZE = 32
STRIDE = 16

# file extensions accepted as frame images
_IMAGE_EXTS = {".tif", ".tiff", ".png", ".jpg", ".jpeg", ".bmp"}


@dataclass(frozen=True)
class PatchGrid:
    """Geometry of the patch lattice over a fixed frame size."""

    frame_width: int = FRAME_WIDTH
    frame_height: int = FRAME_HEIGHT
    patch_size: int = PATCH_SIZE
    stride: int = STRIDE

    def __post_init__(self) -> None:
        if self.patch_size <= 0 or self.stride <= 0:
            raise ValueError("patch_size and stride must be positive")
        if self.frame_width < self.patch_size or self.frame_height < self.patch_size:
            raise ValueError(
                f"frame {self.frame_width}x{self.frame_height} smaller than "
                f"patch size {self.patch_size}"
            )
        if (self.frame_width - self.patch_size) % self.stride != 0 or (
            self.frame_height - self.patch_size
        ) % self.stride != 0:
            raise ValueError(
                f"grid does not tile: ({self.frame_width}-{self.patch_size}) and "
                f"({self.frame_height}-{self.patch_size}) must be multiples of "
                f"stride {self.stride}"
            )

    @property
    def cols(self) -> int:
        return (self.frame_width - self.patch_size) // self.stride + 1

    @property
    def rows(self) -> int:
        return (self.frame_height - self.patch_size) // self.stride + 1

    @property
    def patch_count(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class Frame:
    """One video frame: 8-bit grayscale (2-D) or color (3-D) pixel array."""

    pixels: np.ndarray
    clip_id: str
    frame_index: int  # 1-based, matching manifest convention


def enumerate_patches(grid: PatchGrid) -> list[tuple[int, int, int, int]]:
    """All patch rectangles ``(x, y, w, h)`` in row-major order.

    Patch i corresponds to (row, col) = divmod(i, grid.cols).
    """
    p = grid.patch_size
    return [
        (c * grid.stride, r * grid.stride, p, p)
        for r in range(grid.rows)
        for c in range(grid.cols)
    ]


def crop_patch(pixels: np.ndarray, rect: tuple[int, int, int, int]) -> np.ndarray:
    """Exact pixel copy of ``rect = (x, y, w, h)``; no interpolation."""
    x, y, w, h = rect
    fh, fw = pixels.shape[:2]
    if x < 0 or y < 0 or w <= 0 or h <= 0 or x + w > fw or y + h > fh:
        raise ValueError(f"patch rect {rect} outside frame {fw}x{fh}")
    return pixels[y : y + h, x : x + w].copy()


def resize_frame(
    pixels: np.ndarray, width: int = FRAME_WIDTH, height: int = FRAME_HEIGHT
) -> np.ndarray:
    """Resize to exactly ``width x height`` (bilinear, aspect not preserved)."""
    if pixels is None or pixels.size == 0:
        raise ValueError("empty frame")
    fh, fw = pixels.shape[:2]
    if (fw, fh) == (width, height):
        return pixels.copy()
    return cv2.resize(pixels, (width, height), interpolation=cv2.INTER_LINEAR)


def list_frame_files(frame_dir: str | Path) -> list[Path]:
    """Frame image files in lexicographic filename order."""
    frame_dir = Path(frame_dir)
    if not frame_dir.is_dir():
        raise FileNotFoundError(f"frame directory {frame_dir} does not exist")
    return sorted(
        (p for p in frame_dir.iterdir() if p.suffix.lower() in _IMAGE_EXTS),
        key=lambda p: p.name,
    )


def load_frame_image(path: str | Path) -> np.ndarray:
    """Read one 8-bit frame image; grayscale sources stay single-channel."""
    pixels = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if pixels is None or pixels.size == 0:
        raise ValueError(f"cannot decode frame image {path}")
    if pixels.dtype != np.uint8:
        # 16-bit TIFFs occasionally appear; scale down to 8-bit
        pixels = (pixels.astype(np.float64) * (255.0 / pixels.max())).astype(np.uint8)
    return pixels


def iter_clip_frames(clip: ClipEntry, root: str | Path = ".") -> Iterator[Frame]:
    """Yield a clip's frames in order, 1-based indices, unresized.

    ``clip.frame_dir`` is resolved against ``root`` (normally the manifest's
    directory) unless absolute.
    """
    frame_dir = Path(clip.frame_dir)
    if not frame_dir.is_absolute():
        frame_dir = Path(root) / frame_dir
    files = list_frame_files(frame_dir)
    if len(files) != clip.frame_count:
        raise ValueError(
            f"clip {clip.clip_id!r}: found {len(files)} frame files in "
            f"{frame_dir}, manifest says {clip.frame_count}"
        )
    for i, path in enumerate(files, start=1):
        yield Frame(pixels=load_frame_image(path), clip_id=clip.clip_id, frame_index=i)
