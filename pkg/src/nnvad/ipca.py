"""Incremental PCA: streaming rank-k subspace tracking over row batches.

Each ``partial_fit`` merges the running mean with the batch mean, stacks
the previous components (scaled by their singular values) on top of the
centered batch plus a mean-correction row, and takes the top-k singular
triplets of that augmented matrix as the new basis.  Only O(batch + k*d)
memory is ever held, so arbitrarily large datasets can be reduced.

All state is float64.  Component rows are sign-canonicalized (largest-
magnitude coordinate positive) so refits and serialization round-trips
reproduce transforms exactly.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"IPC1"
VERSION = 1


class IncrementalPCA:
    """Reduce d-dimensional rows to k dimensions, fitted batch by batch."""

    def __init__(self, k: int):
        if k <= 0:
            raise ValueError(f"k must be positive, got {k}")
        self.k = k
        self.d: int | None = None
        self.n_seen = 0
        self.mean: np.ndarray | None = None
        self.components: np.ndarray | None = None  # (k, d) orthonormal rows
        self.singular_values: np.ndarray | None = None  # (k,) non-increasing

    @property
    def fitted(self) -> bool:
        return self.n_seen >= self.k and self.components is not None

    @property
    def explained_variance(self) -> np.ndarray:
        """Per-component variance estimate over the rows seen so far."""
        if self.singular_values is None or self.n_seen == 0:
            raise ValueError("model is not fitted")
        return self.singular_values**2 / self.n_seen

    def _check_batch(self, batch: np.ndarray) -> np.ndarray:
        x = np.asarray(batch, dtype=np.float64)
        if x.ndim != 2:
            raise ValueError(f"expected 2-D batch, got shape {x.shape}")
        if x.shape[0] < 1:
            raise ValueError("batch must contain at least one row")
        if not np.isfinite(x).all():
            raise ValueError("batch contains non-finite values")
        if self.d is None:
            if x.shape[1] < self.k:
                raise ValueError(
                    f"input dim {x.shape[1]} smaller than target k={self.k}"
                )
        elif x.shape[1] != self.d:
            raise ValueError(f"batch width {x.shape[1]} != model width {self.d}")
        return x

    def partial_fit(self, batch: np.ndarray) -> "IncrementalPCA":
        x = self._check_batch(batch)
        n_new = x.shape[0]
        if self.n_seen == 0:
            if n_new < self.k:
                raise ValueError(
                    f"first batch has {n_new} rows; need at least k={self.k} "
                    f"for a rank-k basis"
                )
            self.d = x.shape[1]
            self.mean = x.mean(axis=0)
            _, s, vt = np.linalg.svd(x - self.mean, full_matrices=False)
        else:
            batch_mean = x.mean(axis=0)
            total = self.n_seen + n_new
            merged_mean = (self.n_seen * self.mean + n_new * batch_mean) / total
            # rank-one correction accounting for the mean shift between blocks
            correction = np.sqrt(self.n_seen * n_new / total) * (self.mean - batch_mean)
            augmented = np.vstack(
                [
                    self.singular_values[:, None] * self.components,
                    x - batch_mean,
                    correction[None, :],
                ]
            )
            _, s, vt = np.linalg.svd(augmented, full_matrices=False)
            self.mean = merged_mean
        self.components = _canonical_signs(vt[: self.k])
        self.singular_values = s[: self.k]
        self.n_seen += n_new
        return self

    def transform(self, batch: np.ndarray) -> np.ndarray:
        """Project rows onto the basis: y = components . (x - mean)."""
        if not self.fitted:
            raise ValueError(
                f"model not fitted: has seen {self.n_seen} rows, needs >= {self.k}"
            )
        x = np.asarray(batch, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.d:
            raise ValueError(f"expected shape (*, {self.d}), got {x.shape}")
        return (x - self.mean) @ self.components.T

    def save(self, path: str | Path) -> None:
        if self.components is None:
            raise ValueError("cannot serialize an unfitted model")
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<IIIQ", VERSION, self.k, self.d, self.n_seen))
            fh.write(self.mean.astype("<f8").tobytes())
            fh.write(self.singular_values.astype("<f8").tobytes())
            fh.write(np.ascontiguousarray(self.components, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "IncrementalPCA":
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != MAGIC:
                raise ValueError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
            version, k, d, n_seen = struct.unpack("<IIIQ", fh.read(20))
            if version != VERSION:
                raise ValueError(f"{path}: unsupported version {version}")
            payload = fh.read()
        expected = (d + k + k * d) * 8
        if len(payload) != expected:
            raise ValueError(f"{path}: payload is {len(payload)} bytes, expected {expected}")
        model = cls(k)
        model.d = d
        model.n_seen = n_seen
        model.mean = np.frombuffer(payload[: d * 8], dtype="<f8").copy()
        model.singular_values = np.frombuffer(
            payload[d * 8 : (d + k) * 8], dtype="<f8"
        ).copy()
        model.components = (
            np.frombuffer(payload[(d + k) * 8 :], dtype="<f8").reshape(k, d).copy()
        )
        return model


def _canonical_signs(components: np.ndarray) -> np.ndarray:
    """Flip each row so its largest-magnitude coordinate is positive."""
    idx = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(components.shape[0]), idx])
    signs[signs == 0] = 1.0
    return components * signs[:, None]
