"""Frame-level scoring and ROC/AUC/EER evaluation.

A frame's anomaly score is the max over its patch distances; frames are
labeled from the manifest's anomaly ranges, pooled across all test clips
into a single ROC per experiment.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from nnvad.manifest import DatasetManifest


@dataclass(frozen=True)
class FrameScore:
    clip_id: str
    frame_index: int  # 1-based
    score: float
    label: int  # 0 normal, 1 anomalous


@dataclass(frozen=True)
class RocReport:
    """ROC curve with summary statistics.

    ``thresholds[i]`` is the score cutoff producing ``(fpr[i], tpr[i])``
    under the rule "positive iff score >= threshold"; the leading +inf
    threshold yields the (0, 0) vertex.  ``auc`` is the Mann-Whitney rank
    statistic with ties counted half, which equals the trapezoidal area
    under this curve.  ``eer`` is the rate at the FPR = FNR crossing.
    """

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float
    eer: float
    n_pos: int
    n_neg: int


def frame_scores(
    per_frame: Iterable[tuple[str, int, np.ndarray]],
    manifest: DatasetManifest,
    patch_count: int,
) -> list[FrameScore]:
    """Reduce per-patch distances to labeled frame scores.

    ``per_frame`` yields ``(clip_id, frame_index, distances)`` with one
    distance per patch of the frame; every frame must supply exactly
    ``patch_count`` of them.  Labels come from the manifest's anomaly
    ranges for the owning clip.
    """
    out: list[FrameScore] = []
    for clip_id, frame_index, distances in per_frame:
        d = np.asarray(distances, dtype=np.float64).ravel()
        if d.shape[0] != patch_count:
            raise ValueError(
                f"frame {clip_id}/{frame_index}: expected {patch_count} patch "
                f"distances, got {d.shape[0]}"
            )
        clip = manifest.clip(clip_id)
        out.append(
            FrameScore(
                clip_id=clip_id,
                frame_index=frame_index,
                score=float(d.max()),
                label=int(clip.is_anomalous(frame_index)),
            )
        )
    return out


def roc_auc(scores: Sequence[FrameScore]) -> RocReport:
    """Pooled frame-level ROC with rank-statistic AUC and interpolated EER.

    Requires at least one frame of each class.
    """
    y = np.array([s.label for s in scores], dtype=np.int64)
    x = np.array([s.score for s in scores], dtype=np.float64)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError(
            f"ROC needs both classes; got {n_pos} positive / {n_neg} negative frames"
        )

    # Mann-Whitney with half credit for ties, via average ranks.
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.shape[0], dtype=np.float64)
    sorted_x = x[order]
    i = 0
    while i < sorted_x.shape[0]:
        j = i
        while j + 1 < sorted_x.shape[0] and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # average of ranks i+1..j+1
        i = j + 1
    auc = (ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)

    # Curve over all distinct thresholds, descending; predict positive at
    # score >= threshold.  Cumulative class counts give the vertex rates.
    desc = np.argsort(-x, kind="stable")
    y_desc = y[desc]
    x_desc = x[desc]
    distinct = np.nonzero(np.diff(x_desc))[0]
    last = np.concatenate([distinct, [x.shape[0] - 1]])
    tp = np.cumsum(y_desc)[last]
    fp = np.cumsum(1 - y_desc)[last]
    tpr = np.concatenate([[0.0], tp / n_pos])
    fpr = np.concatenate([[0.0], fp / n_neg])
    thresholds = np.concatenate([[np.inf], x_desc[last]])

    return RocReport(
        thresholds=thresholds,
        fpr=fpr,
        tpr=tpr,
        auc=float(auc),
        eer=eer_from_roc(fpr, tpr),
        n_pos=n_pos,
        n_neg=n_neg,
    )


def eer_from_roc(fpr: np.ndarray, tpr: np.ndarray) -> float:
    """Equal error rate: the FPR = FNR point on the ROC.

    An exact vertex wins; otherwise the crossing is found by linear
    interpolation between the adjacent vertices where FPR - FNR changes
    sign.  Rejects curves too degenerate to bracket a crossing.
    """
    fpr = np.asarray(fpr, dtype=np.float64)
    tpr = np.asarray(tpr, dtype=np.float64)
    if fpr.shape != tpr.shape or fpr.ndim != 1:
        raise ValueError("fpr and tpr must be 1-D arrays of equal length")
    if fpr.shape[0] < 2:
        raise ValueError("degenerate ROC: need at least two points to locate EER")
    if (np.diff(fpr) < 0).any() or (np.diff(tpr) < 0).any():
        raise ValueError("fpr and tpr must be non-decreasing along the curve")

    diff = fpr + tpr - 1.0  # FPR - FNR
    exact = np.nonzero(diff == 0.0)[0]
    if exact.size:
        return float(fpr[exact[0]])
    for i in range(diff.shape[0] - 1):
        if diff[i] < 0.0 < diff[i + 1]:
            t = -diff[i] / (diff[i + 1] - diff[i])
            return float(fpr[i] + t * (fpr[i + 1] - fpr[i]))
    raise ValueError("ROC does not bracket an FPR = FNR crossing")
