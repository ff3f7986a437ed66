"""Exact and approximate Euclidean 1-NN over a fixed training matrix.

Exact mode is a linear scan.  Approximate mode builds a forest of
randomized coordinate-split trees (split dimension drawn among the node's
top-variance dimensions, split value at the node mean) and answers queries
best-first across all trees under a shared leaf-visit budget.  The reported
distance is always the true Euclidean distance to the returned candidate,
so an approximate answer can never be closer than the exact one.

Construction is deterministic given the seed; queries are read-only and
safe to fan out across workers.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from nnvad import _kernels

MAGIC = b"ANN1"
VERSION = 1

DEFAULT_TREES = 4
DEFAULT_BUDGET = 64
LEAF_SIZE = 256  # sized so the default budget reaches recall@1 >= 0.95 at d ~ 100
_VARIANCE_SAMPLE = 256  # points sampled per node for the variance estimate
_TOP_DIMS = 5  # split dimension drawn among this many top-variance dims

MODES = ("exact", "approx")


@dataclass(frozen=True)
class QueryResult:
    distance: float
    neighbor_id: int


class AnnIndex:
    """Immutable 1-NN index; use :meth:`build` or :meth:`load`."""

    def __init__(
        self,
        points: np.ndarray,
        mode: str,
        trees: int,
        search_budget: int,
        seed: int,
        forest: dict[str, np.ndarray] | None,
    ):
        self.points = points
        self.mode = mode
        self.trees = trees
        self.search_budget = search_budget
        self.seed = seed
        self._forest = forest

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @classmethod
    def build(
        cls,
        points: np.ndarray,
        mode: str = "approx",
        trees: int = DEFAULT_TREES,
        search_budget: int = DEFAULT_BUDGET,
        seed: int = 0,
        leaf_size: int = LEAF_SIZE,
    ) -> "AnnIndex":
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        pts = np.ascontiguousarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError(f"points must be a non-empty 2-D matrix, got {pts.shape}")
        if not np.isfinite(pts).all():
            raise ValueError("points contain non-finite values")
        if trees < 1 or search_budget < 1 or leaf_size < 1:
            raise ValueError("trees, search_budget and leaf_size must be >= 1")
        forest = None
        if mode == "approx":
            forest = _build_forest(pts, trees, seed, leaf_size)
        return cls(pts, mode, trees, search_budget, seed, forest)

    def _check_queries(self, queries: np.ndarray) -> np.ndarray:
        q = np.ascontiguousarray(queries, dtype=np.float64)
        if q.ndim == 1:
            q = q[None, :]
        if q.ndim != 2 or q.shape[1] != self.dim:
            raise ValueError(f"queries must have width {self.dim}, got shape {q.shape}")
        if q.size and not np.isfinite(q).all():
            raise ValueError("queries contain non-finite values")
        return q

    def query_batch(self, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Nearest-neighbor (distances, row ids) for a batch of queries."""
        q = self._check_queries(queries)
        if q.shape[0] == 0:
            return np.empty(0, dtype=np.float64), np.empty(0, dtype=np.int64)
        if self.mode == "exact":
            d2, ids = _kernels.brute_force_nn(self.points, q)
        else:
            f = self._forest
            d2, ids = _kernels.forest_nn(
                self.points,
                f["split_dim"],
                f["split_val"],
                f["left"],
                f["right"],
                f["leaf_start"],
                f["leaf_end"],
                f["leaf_points"],
                f["roots"],
                q,
                self.search_budget,
            )
        return np.sqrt(d2), ids

    def nn_distance(self, query: np.ndarray) -> QueryResult:
        dist, ids = self.query_batch(np.asarray(query))
        return QueryResult(distance=float(dist[0]), neighbor_id=int(ids[0]))

    def batch_nn_distances(
        self, query_batches: Iterable[np.ndarray]
    ) -> Iterator[QueryResult]:
        """Stream results over batches, preserving input order."""
        for batch in query_batches:
            dist, ids = self.query_batch(batch)
            for d, i in zip(dist, ids):
                yield QueryResult(distance=float(d), neighbor_id=int(i))

    def save(self, path: str | Path) -> None:
        header = {
            "mode": self.mode,
            "trees": self.trees,
            "search_budget": self.search_budget,
            "seed": self.seed,
            "n": self.n,
            "dim": self.dim,
            "has_forest": self._forest is not None,
        }
        if self._forest is not None:
            header["forest_sizes"] = {
                k: int(v.shape[0]) for k, v in self._forest.items()
            }
        raw = json.dumps(header, sort_keys=True).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<II", VERSION, len(raw)))
            fh.write(raw)
            fh.write(np.ascontiguousarray(self.points, dtype="<f8").tobytes())
            if self._forest is not None:
                for name in _FOREST_FIELDS:
                    arr = self._forest[name]
                    dt = "<f8" if arr.dtype.kind == "f" else "<i8"
                    fh.write(np.ascontiguousarray(arr, dtype=dt).tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "AnnIndex":
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != MAGIC:
                raise ValueError(f"{path}: bad magic {magic!r}")
            version, header_len = struct.unpack("<II", fh.read(8))
            if version != VERSION:
                raise ValueError(f"{path}: unsupported version {version}")
            header = json.loads(fh.read(header_len).decode("utf-8"))
            n, dim = header["n"], header["dim"]
            points = np.frombuffer(fh.read(n * dim * 8), dtype="<f8").reshape(n, dim).copy()
            forest = None
            if header["has_forest"]:
                forest = {}
                sizes = header["forest_sizes"]
                for name in _FOREST_FIELDS:
                    count = sizes[name]
                    dt = "<f8" if name == "split_val" else "<i8"
                    forest[name] = np.frombuffer(fh.read(count * 8), dtype=dt).copy()
        return cls(
            points,
            header["mode"],
            header["trees"],
            header["search_budget"],
            header["seed"],
            forest,
        )


_FOREST_FIELDS = (
    "split_dim",
    "split_val",
    "left",
    "right",
    "leaf_start",
    "leaf_end",
    "leaf_points",
    "roots",
)


def _build_forest(
    points: np.ndarray, trees: int, seed: int, leaf_size: int
) -> dict[str, np.ndarray]:
    """Flatten ``trees`` randomized trees into one shared node arena."""
    rng = np.random.default_rng(seed)
    split_dim: list[int] = []
    split_val: list[float] = []
    left: list[int] = []
    right: list[int] = []
    leaf_start: list[int] = []
    leaf_end: list[int] = []
    leaf_points: list[np.ndarray] = []
    leaf_total = 0

    def new_node() -> int:
        split_dim.append(-1)
        split_val.append(0.0)
        left.append(-1)
        right.append(-1)
        leaf_start.append(-1)
        leaf_end.append(-1)
        return len(split_dim) - 1

    def make_leaf(node: int, idx: np.ndarray) -> None:
        nonlocal leaf_total
        leaf_start[node] = leaf_total
        leaf_end[node] = leaf_total + idx.shape[0]
        leaf_points.append(idx)
        leaf_total += idx.shape[0]

    def build(root_idx: np.ndarray) -> int:
        # Explicit work stack; recursion depth is unbounded on skewed data.
        root = new_node()
        stack: list[tuple[int, np.ndarray]] = [(root, root_idx)]
        while stack:
            node, idx = stack.pop()
            if idx.shape[0] <= leaf_size:
                make_leaf(node, idx)
                continue
            if idx.shape[0] <= _VARIANCE_SAMPLE:
                sample = idx
            else:
                sample = rng.choice(idx, size=_VARIANCE_SAMPLE, replace=False)
            var = points[sample].var(axis=0)
            top = np.argsort(-var, kind="stable")[:_TOP_DIMS]
            dim = int(top[rng.integers(top.shape[0])])
            col = points[idx, dim]
            val = float(col.mean())
            mask = col < val
            if not mask.any() or mask.all():
                # degenerate along the sampled dim: fall back to max variance
                dim = int(top[0])
                col = points[idx, dim]
                val = float(col.mean())
                mask = col < val
                if not mask.any() or mask.all():
                    make_leaf(node, idx)  # node is constant on its top dims
                    continue
            split_dim[node] = dim
            split_val[node] = val
            left[node] = new_node()
            right[node] = new_node()
            stack.append((right[node], idx[~mask]))
            stack.append((left[node], idx[mask]))
        return root

    all_idx = np.arange(points.shape[0], dtype=np.int64)
    roots = np.array([build(all_idx.copy()) for _ in range(trees)], dtype=np.int64)
    return {
        "split_dim": np.asarray(split_dim, dtype=np.int64),
        "split_val": np.asarray(split_val, dtype=np.float64),
        "left": np.asarray(left, dtype=np.int64),
        "right": np.asarray(right, dtype=np.int64),
        "leaf_start": np.asarray(leaf_start, dtype=np.int64),
        "leaf_end": np.asarray(leaf_end, dtype=np.int64),
        "leaf_points": np.concatenate(leaf_points).astype(np.int64)
        if leaf_points
        else np.empty(0, dtype=np.int64),
        "roots": roots,
    }
