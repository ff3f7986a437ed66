"""Command-line front end.

Every flag has a config-file equivalent (YAML, same key with underscores);
explicit flags override the file, the file overrides built-in defaults.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import yaml

from nnvad import featstore, normalize, pipeline
from nnvad.ann import DEFAULT_BUDGET, DEFAULT_TREES, AnnIndex
from nnvad.ipca import IncrementalPCA
from nnvad.manifest import TEST, TRAIN, load_manifest
from nnvad.metrics import FrameScore, roc_auc
from nnvad.normalize import load_normalizer

_GRID_NORMS = list(normalize.KINDS)
_GRID_DIMS = [50, 100]


def _add_common(sub: argparse.ArgumentParser, *names: str) -> None:
    spec = {
        "config": dict(type=str, help="YAML config file; flags override it"),
        "manifest": dict(type=str, help="dataset manifest (YAML/JSON)"),
        "train-store": dict(type=str, help="training feature store (PFV1)"),
        "test-store": dict(type=str, help="test feature store (PFV1)"),
        "norm": dict(choices=normalize.KINDS, help="normalization kind"),
        "dims": dict(type=int, help="IPCA output dimensionality"),
        "ann-mode": dict(choices=("exact", "approx"), help="1-NN search mode"),
        "ann-trees": dict(type=int, help="trees in the approximate index"),
        "ann-budget": dict(type=int, help="leaf-visit budget per query"),
        "seed": dict(type=int, help="RNG seed (index construction)"),
        "out": dict(type=str, help="output directory"),
        "scores": dict(type=str, help="per-frame scores CSV"),
    }
    for name in names:
        sub.add_argument(f"--{name}", default=None, **spec[name])


def _resolve(args: argparse.Namespace, key: str, default=None):
    cli_val = getattr(args, key.replace("-", "_"), None)
    if cli_val is not None:
        return cli_val
    if args.config:
        doc = _load_config(args.config)
        if key.replace("-", "_") in doc:
            return doc[key.replace("-", "_")]
        if key in doc:
            return doc[key]
    return default


def _load_config(path: str) -> dict:
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise SystemExit(f"config {path}: expected a mapping at top level")
    return doc


def _require(args: argparse.Namespace, key: str):
    val = _resolve(args, key)
    if val is None:
        raise SystemExit(f"missing required option --{key} (or config key)")
    return val


def cmd_validate(args: argparse.Namespace) -> int:
    mani = load_manifest(_require(args, "manifest"))
    print(f"manifest ok: {mani.name}, {len(mani.clips)} clips")
    for key, split in (("train-store", TRAIN), ("test-store", TEST)):
        path = _resolve(args, key)
        if path is None:
            continue
        store = featstore.read_store(path)
        featstore.validate_against_manifest(store, mani, split)
        print(
            f"{key} ok: {store.header.extractor_name}, dim {store.dim}, "
            f"{store.header.n_frames} frames x {store.patch_count} patches"
        )
    return 0


def _experiment_config(args: argparse.Namespace) -> pipeline.ExperimentConfig:
    return pipeline.ExperimentConfig(
        manifest_path=_require(args, "manifest"),
        train_store=_require(args, "train-store"),
        test_store=_require(args, "test-store"),
        norm=_resolve(args, "norm", "zscore"),
        ipca_dims=int(_resolve(args, "dims", 100)),
        ann_mode=_resolve(args, "ann-mode", "approx"),
        ann_trees=int(_resolve(args, "ann-trees", DEFAULT_TREES)),
        ann_budget=int(_resolve(args, "ann-budget", DEFAULT_BUDGET)),
        seed=int(_resolve(args, "seed", 0)),
        out_dir=_resolve(args, "out", "runs"),
    )


def cmd_fit(args: argparse.Namespace) -> int:
    """Fit normalizer + IPCA + index on the train store; save to --out."""
    config = _experiment_config_fit(args)
    out = Path(_require(args, "out"))
    out.mkdir(parents=True, exist_ok=True)
    store = featstore.read_store(config.train_store)
    norm = pipeline.fit_store_normalizer(config, store)
    model = pipeline.fit_store_ipca(config, store, norm)
    projected = pipeline.project_store(store, norm, model, config.batch_rows)
    index = AnnIndex.build(
        projected,
        mode=config.ann_mode,
        trees=config.ann_trees,
        search_budget=config.ann_budget,
        seed=config.seed,
    )
    normalize.save_normalizer(norm, out / "normalizer.json")
    model.save(out / "ipca.bin")
    index.save(out / "index.ann")
    print(f"fitted {config.norm} + ipca k={config.ipca_dims} on {store.n_rows} rows -> {out}")
    return 0


def _experiment_config_fit(args: argparse.Namespace) -> pipeline.ExperimentConfig:
    # fit/score don't need both stores; reuse the config shape with stubs.
    return pipeline.ExperimentConfig(
        manifest_path=_resolve(args, "manifest", ""),
        train_store=_resolve(args, "train-store", ""),
        test_store=_resolve(args, "test-store", ""),
        norm=_resolve(args, "norm", "zscore"),
        ipca_dims=int(_resolve(args, "dims", 100)),
        ann_mode=_resolve(args, "ann-mode", "approx"),
        ann_trees=int(_resolve(args, "ann-trees", DEFAULT_TREES)),
        ann_budget=int(_resolve(args, "ann-budget", DEFAULT_BUDGET)),
        seed=int(_resolve(args, "seed", 0)),
        out_dir=_resolve(args, "out", "runs"),
    )


def cmd_score(args: argparse.Namespace) -> int:
    """Score a test store with artifacts produced by `fit`."""
    mani = load_manifest(_require(args, "manifest"))
    out = Path(_require(args, "out"))
    store = featstore.read_store(_require(args, "test-store"))
    featstore.validate_against_manifest(store, mani, TEST)
    norm = load_normalizer(out / "normalizer.json")
    model = IncrementalPCA.load(out / "ipca.bin")
    index = AnnIndex.load(out / "index.ann")
    config = _experiment_config_fit(args)
    scores = pipeline.score_test_store(config, store, norm, model, index, mani)
    pipeline.write_frame_csv(out / "frame_scores.csv", scores)
    print(f"scored {len(scores)} frames -> {out / 'frame_scores.csv'}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    """Compute AUC/EER from a per-frame scores CSV."""
    path = _require(args, "scores")
    scores: list[FrameScore] = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            scores.append(
                FrameScore(
                    clip_id=row["clip_id"],
                    frame_index=int(row["frame_index"]),
                    score=float(row["score"]),
                    label=int(row["label"]),
                )
            )
    report = roc_auc(scores)
    print(
        json.dumps(
            {
                "auc": report.auc,
                "eer": report.eer,
                "n_frames": report.n_pos + report.n_neg,
                "n_anomalous": report.n_pos,
            },
            indent=2,
        )
    )
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    record = pipeline.run_experiment(_experiment_config(args))
    print(
        f"{record.dataset} {record.extractor} k={record.config['ipca_dims']} "
        f"{record.config['norm']}: auc={record.auc:.4f} eer={record.eer:.4f} "
        f"({record.n_frames} frames)"
    )
    return 0


def cmd_grid(args: argparse.Namespace) -> int:
    if not args.config:
        raise SystemExit("grid requires --config with a `stores` list")
    doc = _load_config(args.config)
    raw_stores = doc.get("stores")
    if not raw_stores:
        raise SystemExit("grid config must define stores: [{train: .., test: ..}, ...]")
    store_pairs = [(s["train"], s["test"]) for s in raw_stores]
    # --dims / --norm restrict the sweep to a single value; otherwise the
    # config lists (or the full default grid) apply.
    dims = [args.dims] if args.dims is not None else doc.get("dims", _GRID_DIMS)
    norms = [args.norm] if args.norm is not None else doc.get("norms", _GRID_NORMS)
    records = pipeline.run_grid(
        manifest_path=_require(args, "manifest"),
        store_pairs=store_pairs,
        dims=[int(d) for d in dims],
        norms=list(norms),
        out_dir=_require(args, "out"),
        ann_mode=_resolve(args, "ann-mode", "approx"),
        ann_trees=int(_resolve(args, "ann-trees", DEFAULT_TREES)),
        ann_budget=int(_resolve(args, "ann-budget", DEFAULT_BUDGET)),
        seed=int(_resolve(args, "seed", 0)),
    )
    ok = sum(1 for r in records if r.ok)
    for r in records:
        if r.ok:
            print(
                f"ok   {r.extractor} k={r.config['ipca_dims']} {r.config['norm']}: "
                f"auc={r.auc:.4f} eer={r.eer:.4f}"
            )
        else:
            print(f"FAIL k={r.config['ipca_dims']} {r.config['norm']}: {r.error}")
    print(f"{ok}/{len(records)} cells ok -> {_require(args, 'out')}/results.csv")
    return 0 if ok == len(records) else 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="nnvad",
        description="Patch-feature anomaly scoring: normalize, project, 1-NN, evaluate.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("validate", help="check manifest and stores against each other")
    _add_common(p, "config", "manifest", "train-store", "test-store")
    p.set_defaults(fn=cmd_validate)

    p = subs.add_parser("fit", help="fit normalizer, IPCA, and index on a train store")
    _add_common(
        p, "config", "manifest", "train-store", "norm", "dims",
        "ann-mode", "ann-trees", "ann-budget", "seed", "out",
    )
    p.set_defaults(fn=cmd_fit)

    p = subs.add_parser("score", help="score a test store with fitted artifacts")
    _add_common(p, "config", "manifest", "test-store", "out")
    p.set_defaults(fn=cmd_score)

    p = subs.add_parser("eval", help="AUC/EER from a frame-scores CSV")
    _add_common(p, "config", "scores")
    p.set_defaults(fn=cmd_eval)

    p = subs.add_parser("run", help="run one experiment end to end")
    _add_common(
        p, "config", "manifest", "train-store", "test-store", "norm", "dims",
        "ann-mode", "ann-trees", "ann-budget", "seed", "out",
    )
    p.set_defaults(fn=cmd_run)

    p = subs.add_parser("grid", help="sweep stores x dims x norms from a config file")
    _add_common(
        p, "config", "manifest", "norm", "dims",
        "ann-mode", "ann-trees", "ann-budget", "seed", "out",
    )
    p.set_defaults(fn=cmd_grid)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (OSError, ValueError, featstore.StoreError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
