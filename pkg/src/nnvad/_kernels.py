"""Hot 1-NN search kernels: numba-compiled with a pure-numpy fallback.

Both paths implement identical semantics (squared Euclidean distances,
lowest-index tie-breaking, best-first forest traversal ordered by
(margin^2, node id)).  The active path is chosen at import time: numba
when importable, unless ``NNVAD_DISABLE_NUMBA=1`` forces the numpy path.
``benchmarks/bench_kernels.py`` times one against the other.

Tree arrays describe a forest flattened into one node arena:
``split_dim[i] < 0`` marks leaf ``i`` whose points are
``leaf_points[leaf_start[i]:leaf_end[i]]``; internal nodes carry
``split_val`` and ``left``/``right`` children.  ``roots`` holds one arena
index per tree.
"""

from __future__ import annotations

import heapq
import os

import numpy as np


def _env_flag() -> bool:
    return os.environ.get("NNVAD_DISABLE_NUMBA", "").strip().lower() in (
        "1",
        "true",
        "yes",
        "on",
    )


NUMBA_ENABLED = False
if not _env_flag():
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False


def brute_force_nn_numpy(points: np.ndarray, queries: np.ndarray):
    """Linear scan: nearest training row per query, ties to lowest index."""
    n_q = queries.shape[0]
    out_d2 = np.empty(n_q, dtype=np.float64)
    out_id = np.empty(n_q, dtype=np.int64)
    for qi in range(n_q):
        diff = points - queries[qi]
        d2 = np.einsum("ij,ij->i", diff, diff)
        j = int(d2.argmin())  # argmin returns the first (lowest) index on ties
        out_d2[qi] = d2[j]
        out_id[qi] = j
    return out_d2, out_id


def forest_nn_numpy(
    points,
    split_dim,
    split_val,
    left,
    right,
    leaf_start,
    leaf_end,
    leaf_points,
    roots,
    queries,
    budget,
):
    """Best-first forest search visiting at most ``budget`` leaves per query."""
    n_q = queries.shape[0]
    out_d2 = np.empty(n_q, dtype=np.float64)
    out_id = np.empty(n_q, dtype=np.int64)
    for qi in range(n_q):
        q = queries[qi]
        heap = [(0.0, int(r)) for r in roots]
        heapq.heapify(heap)
        best_d2 = np.inf
        best_id = -1
        leaves = 0
        while heap and leaves < budget:
            prio, node = heapq.heappop(heap)
            if prio >= best_d2:
                break
            while split_dim[node] >= 0:
                dim = split_dim[node]
                diff = float(q[dim] - split_val[node])
                if diff < 0.0:
                    near, far = left[node], right[node]
                else:
                    near, far = right[node], left[node]
                heapq.heappush(heap, (diff * diff, int(far)))
                node = int(near)
            idxs = leaf_points[leaf_start[node] : leaf_end[node]]
            diff = points[idxs] - q
            d2 = np.einsum("ij,ij->i", diff, diff)
            m = float(d2.min())
            cand = int(idxs[d2 == m].min())
            if m < best_d2 or (m == best_d2 and cand < best_id):
                best_d2 = m
                best_id = cand
            leaves += 1
        out_d2[qi] = best_d2
        out_id[qi] = best_id
    return out_d2, out_id


brute_force_nn_numba = None
forest_nn_numba = None

if NUMBA_ENABLED:

    @njit(cache=False)
    def _heap_push(hp, hn, size, prio, node):
        i = size
        hp[i] = prio
        hn[i] = node
        while i > 0:
            parent = (i - 1) >> 1
            if hp[i] < hp[parent] or (hp[i] == hp[parent] and hn[i] < hn[parent]):
                hp[i], hp[parent] = hp[parent], hp[i]
                hn[i], hn[parent] = hn[parent], hn[i]
                i = parent
            else:
                break
        return size + 1

    @njit(cache=False)
    def _heap_pop(hp, hn, size):
        size -= 1
        hp[0] = hp[size]
        hn[0] = hn[size]
        i = 0
        while True:
            l = 2 * i + 1
            r = l + 1
            smallest = i
            if l < size and (
                hp[l] < hp[smallest] or (hp[l] == hp[smallest] and hn[l] < hn[smallest])
            ):
                smallest = l
            if r < size and (
                hp[r] < hp[smallest] or (hp[r] == hp[smallest] and hn[r] < hn[smallest])
            ):
                smallest = r
            if smallest == i:
                break
            hp[i], hp[smallest] = hp[smallest], hp[i]
            hn[i], hn[smallest] = hn[smallest], hn[i]
            i = smallest
        return size

    @njit(cache=False)
    def _brute_force_nn_numba(points, queries):
        n, k = points.shape
        n_q = queries.shape[0]
        out_d2 = np.empty(n_q, dtype=np.float64)
        out_id = np.empty(n_q, dtype=np.int64)
        for qi in range(n_q):
            best = np.inf
            best_id = -1
            for i in range(n):
                d2 = 0.0
                for c in range(k):
                    dd = points[i, c] - queries[qi, c]
                    d2 += dd * dd
                    if d2 > best:
                        break
                if d2 < best:  # strict: ties keep the lowest index
                    best = d2
                    best_id = i
            out_d2[qi] = best
            out_id[qi] = best_id
        return out_d2, out_id

    @njit(cache=False)
    def _forest_nn_numba(
        points,
        split_dim,
        split_val,
        left,
        right,
        leaf_start,
        leaf_end,
        leaf_points,
        roots,
        queries,
        budget,
    ):
        n_q = queries.shape[0]
        k = points.shape[1]
        out_d2 = np.empty(n_q, dtype=np.float64)
        out_id = np.empty(n_q, dtype=np.int64)
        # every node enters the heap at most once per query
        cap = split_dim.shape[0] + 8
        hp = np.empty(cap, dtype=np.float64)
        hn = np.empty(cap, dtype=np.int64)
        for qi in range(n_q):
            q = queries[qi]
            size = 0
            for t in range(roots.shape[0]):
                size = _heap_push(hp, hn, size, 0.0, roots[t])
            best_d2 = np.inf
            best_id = -1
            leaves = 0
            while size > 0 and leaves < budget:
                prio = hp[0]
                node = hn[0]
                size = _heap_pop(hp, hn, size)
                if prio >= best_d2:
                    break
                while split_dim[node] >= 0:
                    dim = split_dim[node]
                    diff = q[dim] - split_val[node]
                    if diff < 0.0:
                        near = left[node]
                        far = right[node]
                    else:
                        near = right[node]
                        far = left[node]
                    size = _heap_push(hp, hn, size, diff * diff, far)
                    node = near
                for j in range(leaf_start[node], leaf_end[node]):
                    idx = leaf_points[j]
                    d2 = 0.0
                    for c in range(k):
                        dd = points[idx, c] - q[c]
                        d2 += dd * dd
                    if d2 < best_d2 or (d2 == best_d2 and idx < best_id):
                        best_d2 = d2
                        best_id = idx
                leaves += 1
            out_d2[qi] = best_d2
            out_id[qi] = best_id
        return out_d2, out_id

    brute_force_nn_numba = _brute_force_nn_numba
    forest_nn_numba = _forest_nn_numba


if NUMBA_ENABLED:
    brute_force_nn = brute_force_nn_numba
    forest_nn = forest_nn_numba
else:
    brute_force_nn = brute_force_nn_numpy
    forest_nn = forest_nn_numpy
