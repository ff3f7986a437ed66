"""Minimal reader for the dataset manifest schema shared with the scorer."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import yaml

SPLITS = ("train", "test")


@dataclass(frozen=True)
class Clip:
    clip_id: str
    split: str
    frame_dir: str
    frame_count: int


@dataclass(frozen=True)
class Manifest:
    name: str
    frame_width: int
    frame_height: int
    fps: float
    clips: tuple[Clip, ...]

    def split_clips(self, split: str) -> list[Clip]:
        if split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {split!r}")
        return [c for c in self.clips if c.split == split]


def load_manifest(path: str | Path) -> Manifest:
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: manifest must be a mapping")
    try:
        clips = tuple(
            sorted(
                (
                    Clip(
                        clip_id=str(c["clip_id"]),
                        split=str(c["split"]),
                        frame_dir=str(c["frame_dir"]),
                        frame_count=int(c["frame_count"]),
                    )
                    for c in doc["clips"]
                ),
                key=lambda c: c.clip_id,
            )
        )
        manifest = Manifest(
            name=str(doc["name"]),
            frame_width=int(doc["frame_width"]),
            frame_height=int(doc["frame_height"]),
            fps=float(doc["fps"]),
            clips=clips,
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed manifest: {exc}") from exc
    for clip in manifest.clips:
        if clip.split not in SPLITS:
            raise ValueError(f"{path}: clip {clip.clip_id}: bad split {clip.split!r}")
        if clip.frame_count < 1:
            raise ValueError(f"{path}: clip {clip.clip_id}: frame_count must be >= 1")
    return manifest
