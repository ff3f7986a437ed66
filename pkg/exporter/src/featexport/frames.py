"""Frame loading, canvas resize, and 32x32 patch enumeration.

Every frame, whatever its native resolution, is resized to a 384x256
canvas and tiled with 32x32 patches at stride 16 in row-major order:
23 columns x 15 rows = 345 patches.
"""

from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np

CANVAS_WIDTH = 384
CANVAS_HEIGHT = 256
PATCH_SIZE = 32
STRIDE = 16

FRAME_EXTENSIONS = (".tif", ".tiff", ".png", ".jpg", ".jpeg", ".bmp")


def patch_rects(
    width: int = CANVAS_WIDTH,
    height: int = CANVAS_HEIGHT,
    patch: int = PATCH_SIZE,
    stride: int = STRIDE,
) -> list[tuple[int, int]]:
    """Top-left corners of the patch tiling, row-major."""
    if (width - patch) % stride or (height - patch) % stride:
        raise ValueError(
            f"{patch}px patches at stride {stride} do not tile {width}x{height}"
        )
    xs = range(0, width - patch + 1, stride)
    ys = range(0, height - patch + 1, stride)
    return [(x, y) for y in ys for x in xs]


def list_frame_files(frame_dir: str | Path) -> list[Path]:
    frame_dir = Path(frame_dir)
    if not frame_dir.is_dir():
        raise FileNotFoundError(f"frame directory not found: {frame_dir}")
    files = sorted(
        p for p in frame_dir.iterdir() if p.suffix.lower() in FRAME_EXTENSIONS
    )
    if not files:
        raise FileNotFoundError(f"no frame images under {frame_dir}")
    return files


def load_grayscale(path: str | Path) -> np.ndarray:
    img = cv2.imread(str(path), cv2.IMREAD_GRAYSCALE)
    if img is None:
        raise IOError(f"cannot decode image: {path}")
    return img


def resize_to_canvas(img: np.ndarray) -> np.ndarray:
    if img.shape == (CANVAS_HEIGHT, CANVAS_WIDTH):
        return img
    return cv2.resize(img, (CANVAS_WIDTH, CANVAS_HEIGHT), interpolation=cv2.INTER_LINEAR)


def frame_patches(img: np.ndarray) -> np.ndarray:
    """All 345 patches of one grayscale frame as (345, 32, 32, 3) uint8.

    The single gray channel is replicated to three; ImageNet backbones
    expect RGB input.
    """
    canvas = resize_to_canvas(img)
    rects = patch_rects()
    out = np.empty((len(rects), PATCH_SIZE, PATCH_SIZE, 3), dtype=canvas.dtype)
    for i, (x, y) in enumerate(rects):
        out[i] = canvas[y : y + PATCH_SIZE, x : x + PATCH_SIZE, None]
    return out
