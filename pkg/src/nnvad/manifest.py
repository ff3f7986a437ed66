"""Dataset manifests: clips, train/test split, ground-truth anomaly ranges.

A manifest is a single YAML (or JSON) document describing one dataset:
source frame resolution, fps, and a list of clips.  Each clip names the
directory holding its frame images, its frame count, and -- for test clips
only -- the 1-based inclusive frame intervals that are anomalous.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

import yaml

TRAIN = "train"
TEST = "test"
SPLITS = (TRAIN, TEST)


class ManifestError(ValueError):
    """Problem with a dataset manifest."""


class ManifestParseError(ManifestError):
    """File could not be read as a manifest document."""


class ManifestValidationError(ManifestError):
    """Document parsed but violates a manifest invariant."""


@dataclass(frozen=True)
class ClipEntry:
    """One video clip: frame source plus ground truth.

    ``anomaly_ranges`` are inclusive ``[lo, hi]`` intervals over 1-based
    frame indices; train clips must have none.
    """

    clip_id: str
    split: str
    frame_dir: str
    frame_count: int
    anomaly_ranges: tuple[tuple[int, int], ...] = ()

    def validate(self) -> None:
        if not self.clip_id:
            raise ManifestValidationError("clip_id must be non-empty")
        if self.split not in SPLITS:
            raise ManifestValidationError(
                f"clip {self.clip_id!r}: split must be one of {SPLITS}, got {self.split!r}"
            )
        if self.frame_count <= 0:
            raise ManifestValidationError(
                f"clip {self.clip_id!r}: frame_count must be positive, got {self.frame_count}"
            )
        if self.split == TRAIN and self.anomaly_ranges:
            raise ManifestValidationError(
                f"train clip {self.clip_id!r} has anomaly ranges; only test clips may"
            )
        for lo, hi in self.anomaly_ranges:
            if not (1 <= lo <= hi <= self.frame_count):
                raise ManifestValidationError(
                    f"clip {self.clip_id!r}: anomaly range [{lo}, {hi}] outside "
                    f"[1, {self.frame_count}] or inverted"
                )
        ordered = sorted(self.anomaly_ranges)
        for (_, prev_hi), (lo, _) in zip(ordered, ordered[1:]):
            if lo <= prev_hi:
                raise ManifestValidationError(
                    f"clip {self.clip_id!r}: overlapping anomaly ranges after sorting"
                )

    def is_anomalous(self, frame_index: int) -> bool:
        """True if the 1-based ``frame_index`` falls in any anomaly range."""
        return any(lo <= frame_index <= hi for lo, hi in self.anomaly_ranges)


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    frame_width: int
    frame_height: int
    fps: int
    clips: tuple[ClipEntry, ...]

    def validate(self) -> None:
        if not self.name:
            raise ManifestValidationError("dataset name must be non-empty")
        if self.frame_width <= 0 or self.frame_height <= 0:
            raise ManifestValidationError("frame resolution must be positive")
        if self.fps <= 0:
            raise ManifestValidationError("fps must be positive")
        seen: set[str] = set()
        for clip in self.clips:
            if clip.clip_id in seen:
                raise ManifestValidationError(f"duplicate clip_id {clip.clip_id!r}")
            seen.add(clip.clip_id)
            clip.validate()

    def split_clips(self, split: str) -> list[ClipEntry]:
        if split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {split!r}")
        return [c for c in self.clips if c.split == split]

    def clip(self, clip_id: str) -> ClipEntry:
        for c in self.clips:
            if c.clip_id == clip_id:
                return c
        raise KeyError(clip_id)


def _clip_from_dict(raw: dict) -> ClipEntry:
    try:
        ranges = tuple(
            (int(lo), int(hi)) for lo, hi in (raw.get("anomaly_ranges") or [])
        )
        return ClipEntry(
            clip_id=str(raw["clip_id"]),
            split=str(raw["split"]),
            frame_dir=str(raw["frame_dir"]),
            frame_count=int(raw["frame_count"]),
            anomaly_ranges=ranges,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestParseError(f"malformed clip entry: {raw!r}") from exc


def load_manifest(path: str | Path) -> DatasetManifest:
    """Load and validate a manifest file.  Clips come back sorted by clip_id."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ManifestParseError(f"cannot read manifest {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ManifestParseError(f"cannot parse manifest {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ManifestParseError(f"manifest {path} is not a mapping")
    try:
        clips = tuple(
            sorted((_clip_from_dict(c) for c in doc["clips"]), key=lambda c: c.clip_id)
        )
        manifest = DatasetManifest(
            name=str(doc["name"]),
            frame_width=int(doc["frame_width"]),
            frame_height=int(doc["frame_height"]),
            fps=int(doc["fps"]),
            clips=clips,
        )
    except (KeyError, TypeError) as exc:
        raise ManifestParseError(f"manifest {path} missing or malformed field: {exc}") from exc
    manifest.validate()
    return manifest


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    manifest.validate()
    doc = {
        "name": manifest.name,
        "frame_width": manifest.frame_width,
        "frame_height": manifest.frame_height,
        "fps": manifest.fps,
        "clips": [
            {
                "clip_id": c.clip_id,
                "split": c.split,
                "frame_dir": c.frame_dir,
                "frame_count": c.frame_count,
                "anomaly_ranges": [[lo, hi] for lo, hi in c.anomaly_ranges],
            }
            for c in manifest.clips
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
