"""Feature normalization: z-score, 0-1 range, L1 and L2 row scaling.

Stateful kinds (``zscore``, ``zeroone``) are fitted on the training set
only and then applied everywhere; ``l1``/``l2`` are per-row and stateless.
Degenerate cases never divide by zero: constant features map to 0, and
zero-norm rows pass through unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

KINDS = ("zscore", "zeroone", "l1", "l2")
STATEFUL_KINDS = ("zscore", "zeroone")


@dataclass
class Normalizer:
    """Fitted parameters for one normalization scheme.

    ``mean``/``std`` are set for zscore, ``min``/``max`` for zeroone;
    l1/l2 carry no state.  Parameters are float64.
    """

    kind: str
    mean: np.ndarray | None = None
    std: np.ndarray | None = None
    min: np.ndarray | None = None
    max: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")

    @property
    def fitted(self) -> bool:
        if self.kind == "zscore":
            return self.mean is not None and self.std is not None
        if self.kind == "zeroone":
            return self.min is not None and self.max is not None
        return True

    @property
    def dim(self) -> int | None:
        for arr in (self.mean, self.min):
            if arr is not None:
                return int(arr.shape[0])
        return None

    def transform(self, rows: np.ndarray) -> np.ndarray:
        """Normalize one batch; output dtype matches the input."""
        rows = np.asarray(rows)
        if rows.ndim != 2:
            raise ValueError(f"expected 2-D batch, got shape {rows.shape}")
        if not self.fitted:
            raise ValueError(f"{self.kind} normalizer is not fitted")
        d = self.dim
        if d is not None and rows.shape[1] != d:
            raise ValueError(f"batch width {rows.shape[1]} != fitted width {d}")
        dtype = rows.dtype
        x = rows.astype(np.float64, copy=False)
        if self.kind == "zscore":
            scale = np.where(self.std > 0.0, self.std, 1.0)
            out = (x - self.mean) / scale
            out[:, self.std == 0.0] = 0.0
        elif self.kind == "zeroone":
            span = self.max - self.min
            scale = np.where(span > 0.0, span, 1.0)
            out = (x - self.min) / scale
            out[:, span == 0.0] = 0.0
        elif self.kind == "l1":
            norms = np.abs(x).sum(axis=1, keepdims=True)
            out = x / np.where(norms > 0.0, norms, 1.0)
        else:  # l2
            norms = np.sqrt((x * x).sum(axis=1, keepdims=True))
            out = x / np.where(norms > 0.0, norms, 1.0)
        return out.astype(dtype, copy=False)

    def transform_batches(self, batches: Iterable[np.ndarray]) -> Iterator[np.ndarray]:
        for batch in batches:
            yield self.transform(batch)


def fit_normalizer(kind: str, train_batches: Iterable[np.ndarray]) -> Normalizer:
    """Fit from a stream of training row batches in one pass.

    zscore uses population std (divide by n) with a numerically stable
    batch-merge accumulation; zeroone tracks per-feature min/max; l1/l2
    only verify the stream is non-empty.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    n = 0
    width: int | None = None
    mean: np.ndarray | None = None
    m2: np.ndarray | None = None
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    for batch in train_batches:
        batch = np.asarray(batch)
        if batch.ndim != 2:
            raise ValueError(f"expected 2-D batch, got shape {batch.shape}")
        if batch.shape[0] == 0:
            continue
        if width is None:
            width = batch.shape[1]
        elif batch.shape[1] != width:
            raise ValueError(f"batch width {batch.shape[1]} != previous width {width}")
        x = batch.astype(np.float64, copy=False)
        if kind == "zscore":
            bn = x.shape[0]
            bmean = x.mean(axis=0)
            bm2 = ((x - bmean) ** 2).sum(axis=0)
            if mean is None:
                n, mean, m2 = bn, bmean, bm2
            else:
                delta = bmean - mean
                total = n + bn
                mean = mean + delta * (bn / total)
                m2 = m2 + bm2 + delta * delta * (n * bn / total)
                n = total
        elif kind == "zeroone":
            bmin = x.min(axis=0)
            bmax = x.max(axis=0)
            lo = bmin if lo is None else np.minimum(lo, bmin)
            hi = bmax if hi is None else np.maximum(hi, bmax)
            n += x.shape[0]
        else:
            n += x.shape[0]
    if n == 0:
        raise ValueError("cannot fit a normalizer on an empty stream")
    if kind == "zscore":
        return Normalizer(kind, mean=mean, std=np.sqrt(m2 / n))
    if kind == "zeroone":
        return Normalizer(kind, min=lo, max=hi)
    return Normalizer(kind)


def save_normalizer(norm: Normalizer, path: str | Path) -> None:
    """Serialize to JSON; float64 decimal repr round-trips exactly."""
    doc: dict = {"kind": norm.kind}
    for name in ("mean", "std", "min", "max"):
        arr = getattr(norm, name)
        if arr is not None:
            doc[name] = [float(v) for v in arr]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_normalizer(path: str | Path) -> Normalizer:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    kwargs = {
        name: np.asarray(doc[name], dtype=np.float64)
        for name in ("mean", "std", "min", "max")
        if name in doc
    }
    return Normalizer(doc["kind"], **kwargs)
