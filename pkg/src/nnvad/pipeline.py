"""End-to-end experiment orchestration.

One experiment = fit normalizer on the train store, fit incremental PCA on
the normalized train rows, index the projected train rows, score every test
frame by its max patch 1-NN distance, and evaluate frame-level AUC/EER.
All heavy passes stream the stores batch-wise, so peak memory is
O(batch x dim + n_train x ipca_dims) regardless of store size.

``run_grid`` sweeps the cartesian product of stores x dims x normalizations,
appending one CSV row per cell; a failing cell records its error and the
grid moves on.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from nnvad import featstore, manifest as manifest_mod, normalize
from nnvad.ann import DEFAULT_BUDGET, DEFAULT_TREES, AnnIndex
from nnvad.featstore import FeatureStore
from nnvad.ipca import IncrementalPCA
from nnvad.manifest import TEST, TRAIN, DatasetManifest
from nnvad.metrics import FrameScore, frame_scores, roc_auc
from nnvad.normalize import Normalizer

RESULTS_COLUMNS = (
    "dataset",
    "extractor",
    "ipca_dims",
    "normalization",
    "auc",
    "eer",
    "n_frames",
    "seed",
    "error",
)
FRAME_COLUMNS = ("clip_id", "frame_index", "score", "label")

DEFAULT_BATCH_ROWS = 4096
SCORE_FRAMES_PER_BATCH = 16


class StageError(RuntimeError):
    """An experiment stage failed; carries the stage name for diagnosis."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class ExperimentConfig:
    manifest_path: str
    train_store: str
    test_store: str
    norm: str = "zscore"
    ipca_dims: int = 100
    ann_mode: str = "approx"
    ann_trees: int = DEFAULT_TREES
    ann_budget: int = DEFAULT_BUDGET
    seed: int = 0
    out_dir: str = "runs"
    batch_rows: int = DEFAULT_BATCH_ROWS
    save_index: bool = False
    tag: str = ""  # artifact-directory prefix, e.g. the store pair name

    def validate(self) -> None:
        if self.norm not in normalize.KINDS:
            raise ValueError(f"norm must be one of {normalize.KINDS}, got {self.norm!r}")
        if self.ipca_dims < 1:
            raise ValueError(f"ipca_dims must be positive, got {self.ipca_dims}")
        if self.ann_mode not in ("exact", "approx"):
            raise ValueError(f"ann_mode must be exact|approx, got {self.ann_mode!r}")
        if self.batch_rows < 1:
            raise ValueError("batch_rows must be positive")

    def cell_name(self) -> str:
        prefix = f"{self.tag}-" if self.tag else ""
        return f"{prefix}k{self.ipca_dims}-{self.norm}-{self.ann_mode}-seed{self.seed}"


@dataclass
class RunRecord:
    config: dict
    dataset: str
    extractor: str
    auc: float | None
    eer: float | None
    n_frames: int
    stage_seconds: dict[str, float] = field(default_factory=dict)
    artifacts: dict[str, str] = field(default_factory=dict)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_csv_row(self) -> dict[str, str]:
        cfg = self.config
        return {
            "dataset": self.dataset,
            "extractor": self.extractor,
            "ipca_dims": str(cfg["ipca_dims"]),
            "normalization": cfg["norm"],
            "auc": "" if self.auc is None else repr(self.auc),
            "eer": "" if self.eer is None else repr(self.eer),
            "n_frames": str(self.n_frames),
            "seed": str(cfg["seed"]),
            "error": self.error or "",
        }


class _StageTimer:
    def __init__(self):
        self.seconds: dict[str, float] = {}

    def run(self, stage: str, fn, *args, **kwargs):
        t0 = time.perf_counter()
        try:
            result = fn(*args, **kwargs)
        except StageError:
            raise
        except Exception as exc:
            raise StageError(stage, exc) from exc
        self.seconds[stage] = time.perf_counter() - t0
        return result


def _check_store_pair(train: FeatureStore, test: FeatureStore) -> None:
    th, sh = train.header, test.header
    for attr in ("extractor_name", "dim", "patch_size", "stride", "frame_width", "frame_height"):
        tv, sv = getattr(th, attr), getattr(sh, attr)
        if tv != sv:
            raise featstore.StoreDataError(
                f"train/test stores disagree on {attr}: {tv!r} vs {sv!r}"
            )


def fit_store_normalizer(config: ExperimentConfig, store: FeatureStore) -> Normalizer:
    return normalize.fit_normalizer(
        config.norm, store.iter_batches(batch_rows=config.batch_rows)
    )


def fit_store_ipca(config: ExperimentConfig, store: FeatureStore, norm: Normalizer) -> IncrementalPCA:
    # The first batch must carry at least ipca_dims rows to seed the basis.
    batch_rows = max(config.batch_rows, config.ipca_dims)
    model = IncrementalPCA(config.ipca_dims)
    for batch in norm.transform_batches(store.iter_batches(batch_rows=batch_rows)):
        model.partial_fit(batch)
    return model


def project_store(
    store: FeatureStore, norm: Normalizer, model: IncrementalPCA, batch_rows: int
) -> np.ndarray:
    parts = [
        model.transform(batch)
        for batch in norm.transform_batches(store.iter_batches(batch_rows=batch_rows))
    ]
    return np.concatenate(parts, axis=0)


def score_test_store(
    config: ExperimentConfig,
    store: FeatureStore,
    norm: Normalizer,
    model: IncrementalPCA,
    index: AnnIndex,
    mani: DatasetManifest,
) -> list[FrameScore]:
    pc = store.patch_count

    def per_frame() -> Iterator[tuple[str, int, np.ndarray]]:
        for frames, rows in store.iter_frame_batches(SCORE_FRAMES_PER_BATCH):
            projected = model.transform(norm.transform(rows))
            distances, _ = index.query_batch(projected)
            per = distances.reshape(len(frames), pc)
            for (clip_id, frame_index), row in zip(frames, per):
                yield clip_id, frame_index, row

    return frame_scores(per_frame(), mani, pc)


def write_frame_csv(path: Path, scores: Sequence[FrameScore]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FRAME_COLUMNS)
        for s in scores:
            writer.writerow([s.clip_id, str(s.frame_index), repr(s.score), str(s.label)])


def append_results_row(path: str | Path, record: RunRecord) -> None:
    """Append one experiment row, writing the header on first use."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fresh = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULTS_COLUMNS)
        if fresh:
            writer.writeheader()
        writer.writerow(record.to_csv_row())


def run_experiment(config: ExperimentConfig) -> RunRecord:
    """Execute one full pipeline cell and write its artifacts.

    Raises :class:`StageError` naming the failing stage; on success returns
    a :class:`RunRecord` with AUC/EER, per-stage timings, and artifact paths.
    """
    config.validate()
    timer = _StageTimer()

    mani = timer.run("manifest", manifest_mod.load_manifest, config.manifest_path)

    def open_and_validate() -> tuple[FeatureStore, FeatureStore]:
        train = featstore.read_store(config.train_store)
        test = featstore.read_store(config.test_store)
        _check_store_pair(train, test)
        featstore.validate_against_manifest(train, mani, TRAIN)
        featstore.validate_against_manifest(test, mani, TEST)
        return train, test

    train_store, test_store = timer.run("validate", open_and_validate)

    norm = timer.run("normalize", fit_store_normalizer, config, train_store)
    model = timer.run("ipca", fit_store_ipca, config, train_store, norm)

    def build_index() -> AnnIndex:
        projected = project_store(train_store, norm, model, config.batch_rows)
        return AnnIndex.build(
            projected,
            mode=config.ann_mode,
            trees=config.ann_trees,
            search_budget=config.ann_budget,
            seed=config.seed,
        )

    index = timer.run("index", build_index)
    scores = timer.run(
        "score", score_test_store, config, test_store, norm, model, index, mani
    )
    report = timer.run("eval", roc_auc, scores)

    cell_dir = Path(config.out_dir) / config.cell_name()
    record = RunRecord(
        config=_config_snapshot(config),
        dataset=mani.name,
        extractor=train_store.header.extractor_name,
        auc=report.auc,
        eer=report.eer,
        n_frames=len(scores),
        stage_seconds=timer.seconds,
    )

    def write_artifacts() -> None:
        cell_dir.mkdir(parents=True, exist_ok=True)
        normalizer_path = cell_dir / "normalizer.json"
        ipca_path = cell_dir / "ipca.bin"
        frames_path = cell_dir / "frame_scores.csv"
        normalize.save_normalizer(norm, normalizer_path)
        model.save(ipca_path)
        write_frame_csv(frames_path, scores)
        record.artifacts = {
            "normalizer": str(normalizer_path),
            "ipca": str(ipca_path),
            "frame_scores": str(frames_path),
        }
        if config.save_index:
            index_path = cell_dir / "index.ann"
            index.save(index_path)
            record.artifacts["index"] = str(index_path)
        with open(cell_dir / "run_record.json", "w") as fh:
            json.dump(_record_document(record), fh, indent=2, sort_keys=True)
            fh.write("\n")

    timer.run("report", write_artifacts)
    append_results_row(Path(config.out_dir) / "results.csv", record)
    return record


def run_grid(
    manifest_path: str,
    store_pairs: Sequence[tuple[str, str]],
    dims: Sequence[int],
    norms: Sequence[str],
    out_dir: str,
    ann_mode: str = "approx",
    ann_trees: int = DEFAULT_TREES,
    ann_budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    batch_rows: int = DEFAULT_BATCH_ROWS,
) -> list[RunRecord]:
    """Sweep stores x dims x norms; failures become error rows, not aborts.

    All cells share ``out_dir`` and its results.csv; successful cells append
    their own row inside :func:`run_experiment`.
    """
    if not store_pairs or not dims or not norms:
        raise ValueError("grid needs at least one store pair, one dims value, one norm")
    records: list[RunRecord] = []
    for train_path, test_path in store_pairs:
        for k in dims:
            for norm in norms:
                config = ExperimentConfig(
                    manifest_path=manifest_path,
                    train_store=train_path,
                    test_store=test_path,
                    norm=norm,
                    ipca_dims=k,
                    ann_mode=ann_mode,
                    ann_trees=ann_trees,
                    ann_budget=ann_budget,
                    seed=seed,
                    out_dir=out_dir,
                    batch_rows=batch_rows,
                    tag=_pair_tag(train_path),
                )
                try:
                    record = run_experiment(config)
                except Exception as exc:
                    record = _error_record(config, exc)
                    append_results_row(Path(out_dir) / "results.csv", record)
                records.append(record)
    return records


def _pair_tag(train_path: str) -> str:
    return Path(train_path).stem


def _error_record(config: ExperimentConfig, exc: Exception) -> RunRecord:
    dataset = extractor = ""
    try:
        dataset = manifest_mod.load_manifest(config.manifest_path).name
    except Exception:
        pass
    try:
        extractor = featstore.read_store(config.train_store).header.extractor_name
    except Exception:
        pass
    return RunRecord(
        config=_config_snapshot(config),
        dataset=dataset,
        extractor=extractor,
        auc=None,
        eer=None,
        n_frames=0,
        error=str(exc),
    )


def _config_snapshot(config: ExperimentConfig) -> dict:
    return {
        "manifest_path": config.manifest_path,
        "train_store": config.train_store,
        "test_store": config.test_store,
        "norm": config.norm,
        "ipca_dims": config.ipca_dims,
        "ann_mode": config.ann_mode,
        "ann_trees": config.ann_trees,
        "ann_budget": config.ann_budget,
        "seed": config.seed,
        "out_dir": config.out_dir,
        "batch_rows": config.batch_rows,
        "save_index": config.save_index,
    }


def _record_document(record: RunRecord) -> dict:
    return {
        "config": record.config,
        "dataset": record.dataset,
        "extractor": record.extractor,
        "auc": record.auc,
        "eer": record.eer,
        "n_frames": record.n_frames,
        "stage_seconds": record.stage_seconds,
        "artifacts": record.artifacts,
        "error": record.error,
    }
