from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from nnvad import pipeline
from nnvad.ann import AnnIndex
from nnvad.ipca import IncrementalPCA
from nnvad.normalize import load_normalizer
from nnvad.pipeline import ExperimentConfig, StageError, run_experiment, run_grid


def _config(data, **kw):
    base = dict(
        manifest_path=data["manifest_path"],
        train_store=data["train_store"],
        test_store=data["test_store"],
        norm="zscore",
        ipca_dims=50,
        ann_mode="exact",
        seed=0,
        out_dir=data["out_dir"],
    )
    base.update(kw)
    return ExperimentConfig(**base)


class TestRunExperiment:
    def test_planted_outliers_detected(self, planted_dataset):
        record = run_experiment(_config(planted_dataset))
        assert record.ok
        assert record.auc >= 0.99
        assert record.n_frames == 80
        assert record.dataset == "planted"
        assert record.extractor == "synthetic"

    def test_artifacts_written_and_loadable(self, planted_dataset):
        record = run_experiment(_config(planted_dataset, save_index=True))
        art = record.artifacts
        norm = load_normalizer(art["normalizer"])
        assert norm.kind == "zscore"
        model = IncrementalPCA.load(art["ipca"])
        assert model.k == 50
        index = AnnIndex.load(art["index"])
        assert index.mode == "exact"
        # frame scores CSV has header + one row per test frame
        lines = Path(art["frame_scores"]).read_text().strip().splitlines()
        assert lines[0] == "clip_id,frame_index,score,label"
        assert len(lines) == 1 + record.n_frames

    def test_run_record_json_round_trips(self, planted_dataset):
        record = run_experiment(_config(planted_dataset))
        cell_dir = Path(record.artifacts["normalizer"]).parent
        doc = json.loads((cell_dir / "run_record.json").read_text())
        assert doc["auc"] == record.auc
        assert doc["eer"] == record.eer
        assert set(doc["stage_seconds"]) >= {
            "manifest", "validate", "normalize", "ipca", "index", "score", "eval",
        }

    def test_normalizer_fit_on_train_only(self, planted_dataset):
        """Anomalous test patches must not contaminate the fitted statistics."""
        record = run_experiment(_config(planted_dataset, norm="zeroone"))
        norm = load_normalizer(record.artifacts["normalizer"])
        # planted outliers sit ~10 sigma outside the training range; a max
        # that saw them would be far above the train max of mu + ~4 sigma
        assert norm.max.max() < 8.0 + 8.0

    def test_stage_error_names_failing_stage(self, planted_dataset):
        config = _config(planted_dataset, train_store=planted_dataset["test_store"])
        # test store used as train: manifest cross-check fails in "validate"
        with pytest.raises(StageError) as err:
            run_experiment(config)
        assert err.value.stage == "validate"

    def test_missing_store_fails_in_validate(self, planted_dataset):
        config = _config(planted_dataset, train_store="/nonexistent/t.pfv")
        with pytest.raises(StageError) as err:
            run_experiment(config)
        assert err.value.stage == "validate"

    def test_bad_norm_rejected_before_compute(self, planted_dataset):
        with pytest.raises(ValueError):
            run_experiment(_config(planted_dataset, norm="sigmoid"))

    def test_results_row_appended(self, planted_dataset):
        config = _config(planted_dataset)
        run_experiment(config)
        run_experiment(config)
        lines = (Path(planted_dataset["out_dir"]) / "results.csv").read_text().splitlines()
        assert lines[0].startswith("dataset,extractor,ipca_dims,normalization,auc,eer")
        assert len(lines) == 3  # header + two identical runs
        assert lines[1] == lines[2]


class TestDeterminism:
    @pytest.mark.parametrize("mode", ["exact", "approx"])
    def test_same_seed_same_bytes(self, planted_dataset, tmp_path, mode):
        outs = []
        for run in ("a", "b"):
            out_dir = str(tmp_path / f"run_{run}")
            config = _config(planted_dataset, out_dir=out_dir, ann_mode=mode, seed=7)
            run_experiment(config)
            outs.append(Path(out_dir))
        assert (outs[0] / "results.csv").read_bytes() == (outs[1] / "results.csv").read_bytes()
        cell = f"k50-zscore-{mode}-seed7"
        assert (outs[0] / cell / "frame_scores.csv").read_bytes() == (
            outs[1] / cell / "frame_scores.csv"
        ).read_bytes()


class TestRunGrid:
    def test_full_grid_shape(self, planted_dataset, tmp_path):
        out = str(tmp_path / "grid")
        records = run_grid(
            manifest_path=planted_dataset["manifest_path"],
            store_pairs=[(planted_dataset["train_store"], planted_dataset["test_store"])],
            dims=[20, 50],
            norms=["zscore", "l2"],
            out_dir=out,
            ann_mode="exact",
        )
        assert len(records) == 4
        assert all(r.ok for r in records)
        lines = (Path(out) / "results.csv").read_text().splitlines()
        assert len(lines) == 5

    def test_failed_cell_isolated(self, planted_dataset, tmp_path):
        out = str(tmp_path / "grid")
        records = run_grid(
            manifest_path=planted_dataset["manifest_path"],
            store_pairs=[
                (planted_dataset["train_store"], planted_dataset["test_store"]),
                ("/missing/train.pfv", "/missing/test.pfv"),
            ],
            dims=[20],
            norms=["zscore"],
            out_dir=out,
            ann_mode="exact",
        )
        assert len(records) == 2
        ok = [r for r in records if r.ok]
        bad = [r for r in records if not r.ok]
        assert len(ok) == 1 and len(bad) == 1
        assert "validate" in bad[0].error
        lines = (Path(out) / "results.csv").read_text().splitlines()
        assert len(lines) == 3
        assert lines[2].split(",")[4] == ""  # empty auc on the error row

    def test_empty_axis_rejected(self, planted_dataset, tmp_path):
        with pytest.raises(ValueError):
            run_grid(
                manifest_path=planted_dataset["manifest_path"],
                store_pairs=[],
                dims=[10],
                norms=["zscore"],
                out_dir=str(tmp_path),
            )


class TestExactVsApprox:
    def test_auc_gap_is_small(self, planted_dataset, tmp_path):
        aucs = {}
        for mode in ("exact", "approx"):
            config = _config(
                planted_dataset, ann_mode=mode, out_dir=str(tmp_path / mode)
            )
            aucs[mode] = run_experiment(config).auc
        assert abs(aucs["exact"] - aucs["approx"]) < 0.02
