import numpy as np
import pytest

FIXTURES = __import__("pathlib").Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixture_patches() -> np.ndarray:
    with np.load(FIXTURES / "patches.npz") as data:
        return data["patches"]


def write_frames(frame_dir, count, seed, width=120, height=80):
    """Drop ``count`` synthetic grayscale .tif frames into ``frame_dir``."""
    import cv2

    frame_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    for i in range(count):
        img = 60.0 + 40.0 * np.sin(xx / 9.0 + i) + 30.0 * np.cos(yy / 7.0)
        img += rng.normal(0.0, 8.0, size=(height, width))
        path = frame_dir / f"{i + 1:03d}.tif"
        if not cv2.imwrite(str(path), np.clip(img, 0, 255).astype(np.uint8)):
            raise IOError(f"could not write {path}")


@pytest.fixture(scope="session")
def frame_dataset(tmp_path_factory):
    """A tiny two-split dataset on disk plus its manifest.

    The manifest carries anomaly_ranges on the test clip; this exporter
    ignores them, the scoring side reads them -- one file serves both.
    """
    root = tmp_path_factory.mktemp("frames")
    layout = {
        "tr01": ("train", 2),
        "tr02": ("train", 3),
        "te01": ("test", 2),
    }
    clips = []
    for seed, (clip_id, (split, count)) in enumerate(sorted(layout.items())):
        write_frames(root / split / clip_id, count, seed=seed)
        entry = {
            "clip_id": clip_id,
            "split": split,
            "frame_dir": f"{split}/{clip_id}",
            "frame_count": count,
        }
        if split == "test":
            entry["anomaly_ranges"] = [[2, 2]]
        clips.append(entry)
    doc = {
        "name": "synthetic-mini",
        "frame_width": 120,
        "frame_height": 80,
        "fps": 10,
        "clips": clips,
    }
    manifest_path = root / "manifest.yaml"
    import yaml

    manifest_path.write_text(yaml.safe_dump(doc))
    return {"root": root, "manifest": manifest_path, "layout": layout}


@pytest.fixture(scope="session")
def vgg_model():
    pytest.importorskip("tensorflow")
    from featexport.models import FeatureModel

    return FeatureModel("vgg16", weights="none", seed=0)
