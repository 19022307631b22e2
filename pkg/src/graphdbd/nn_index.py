"""Removable nearest-neighbour index over a point set.

A kd-tree with bounding boxes and per-node open counts. Removal only flips a
bit in ``closed`` and decrements the counts up the leaf's ancestor chain, so a
fully closed subtree is skipped without any restructuring. Ties are always
broken toward the lowest point index.

The numba kernels work on *powered* distances (sum |x_i - y_i|**p); the root is
taken only when a distance is handed back to the caller.
"""

from __future__ import annotations

from typing import NamedTuple

import numba
import numpy as np

from .metric import InvalidInput, PointSet, _check_p, as_pointset

LEAF_SIZE = 16
BRUTE_FORCE_MAX_N = 256
BRUTE_FORCE_MIN_D = 33


class Tree(NamedTuple):
    data: np.ndarray  # (n, d) float64, caller order
    sdata: np.ndarray  # data[perm]: leaves are contiguous row ranges
    perm: np.ndarray  # tree position -> point id
    start: np.ndarray
    end: np.ndarray
    left: np.ndarray  # -1 for leaves
    right: np.ndarray
    parent: np.ndarray
    lo: np.ndarray  # (m, d) bounding boxes of all points
    hi: np.ndarray
    olo: np.ndarray  # (m, d) bounding boxes of the open points
    ohi: np.ndarray
    open_count: np.ndarray
    leaf_of: np.ndarray  # point id -> leaf node
    pos_of: np.ndarray  # point id -> tree position
    closed: np.ndarray  # (n,) bool by point id
    sclosed: np.ndarray  # (n,) bool by tree position
    brute: bool
    p: float
    stats: np.ndarray  # [queries, points examined, nodes visited]


STACK_SIZE = 160


@numba.njit(cache=True)
def _root(s, p):
    if p == 1.0:
        return s
    if p == 2.0:
        return np.sqrt(s)
    return s ** (1.0 / p)


@numba.njit(cache=True)
def _row_powdist(rows, t, y, p, bound):
    """Powered l_p distance between rows[t] and y; may stop early (returning
    some value > bound) once the partial sum exceeds ``bound``."""
    acc = 0.0
    d = y.shape[0]
    if p == 2.0:
        # check the bound every 4 dims: cheaper than branching on each one
        k = 0
        while k + 4 <= d:
            d0 = rows[t, k] - y[k]
            d1 = rows[t, k + 1] - y[k + 1]
            d2 = rows[t, k + 2] - y[k + 2]
            d3 = rows[t, k + 3] - y[k + 3]
            # sequential adds keep the sum bit-identical to a plain loop
            acc += d0 * d0
            acc += d1 * d1
            acc += d2 * d2
            acc += d3 * d3
            if acc > bound:
                return acc
            k += 4
        while k < d:
            diff = rows[t, k] - y[k]
            acc += diff * diff
            k += 1
    elif p == 1.0:
        for k in range(d):
            acc += abs(rows[t, k] - y[k])
            if acc > bound:
                return acc
    else:
        for k in range(d):
            acc += abs(rows[t, k] - y[k]) ** p
            if acc > bound:
                return acc
    return acc


@numba.njit(cache=True)
def _box_powdist(lo, hi, node, y, p, bound):
    acc = 0.0
    d = y.shape[0]
    if p == 2.0:
        for k in range(d):
            v = y[k]
            diff = max(lo[node, k] - v, 0.0, v - hi[node, k])
            acc += diff * diff
        return acc
    if p == 1.0:
        for k in range(d):
            v = y[k]
            acc += max(lo[node, k] - v, 0.0, v - hi[node, k])
        return acc
    for k in range(d):
        v = y[k]
        if v < lo[node, k]:
            diff = lo[node, k] - v
        elif v > hi[node, k]:
            diff = v - hi[node, k]
        else:
            continue
        acc += diff**p
        if acc > bound:
            return acc
    return acc


@numba.njit(cache=True)
def _build_arrays(data, leaf_size):
    n, d = data.shape
    max_nodes = 2 * (n // max(leaf_size // 2, 1) + 1) + 1
    perm = np.arange(n)
    start = np.empty(max_nodes, np.int64)
    end = np.empty(max_nodes, np.int64)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    parent = np.full(max_nodes, -1, np.int64)
    lo = np.empty((max_nodes, d))
    hi = np.empty((max_nodes, d))
    open_count = np.empty(max_nodes, np.int64)
    leaf_of = np.empty(n, np.int64)

    start[0] = 0
    end[0] = n
    m = 1
    stack = np.empty(max_nodes, np.int64)
    stack[0] = 0
    top = 1
    while top > 0:
        top -= 1
        node = stack[top]
        s, e = start[node], end[node]
        open_count[node] = e - s
        for k in range(d):
            mn = np.inf
            mx = -np.inf
            for t in range(s, e):
                v = data[perm[t], k]
                if v < mn:
                    mn = v
                if v > mx:
                    mx = v
            lo[node, k] = mn
            hi[node, k] = mx
        if e - s <= leaf_size:
            for t in range(s, e):
                leaf_of[perm[t]] = node
            continue
        best_k = 0
        best_spread = -1.0
        for k in range(d):
            spread = hi[node, k] - lo[node, k]
            if spread > best_spread:
                best_spread = spread
                best_k = k
        if best_spread <= 0.0:
            # all points identical: keep as an oversized leaf
            for t in range(s, e):
                leaf_of[perm[t]] = node
            continue
        seg = perm[s:e].copy()
        order = np.argsort(data[seg, best_k], kind="mergesort")
        perm[s:e] = seg[order]
        mid = s + (e - s) // 2
        lc, rc = m, m + 1
        m += 2
        start[lc], end[lc], parent[lc] = s, mid, node
        start[rc], end[rc], parent[rc] = mid, e, node
        left[node], right[node] = lc, rc
        stack[top] = rc
        stack[top + 1] = lc
        top += 2
    pos_of = np.empty(n, np.int64)
    pos_of[perm] = np.arange(n)
    sdata = np.empty_like(data)
    for t in range(n):
        sdata[t] = data[perm[t]]
    return (sdata, perm, start[:m], end[:m], left[:m], right[:m], parent[:m],
            lo[:m].copy(), hi[:m].copy(), lo[:m].copy(), hi[:m].copy(),
            open_count[:m].copy(), leaf_of, pos_of)


@numba.njit(cache=True)
def _remove(tree, i):
    """Close point ``i`` and shrink the open-point boxes on its leaf path."""
    tree.closed[i] = True
    tree.sclosed[tree.pos_of[i]] = True
    olo, ohi, sdata, sclosed = tree.olo, tree.ohi, tree.sdata, tree.sclosed
    d = sdata.shape[1]
    node = tree.leaf_of[i]
    tree.open_count[node] -= 1
    if tree.open_count[node] > 0:
        olo[node, :] = np.inf
        ohi[node, :] = -np.inf
        for t in range(tree.start[node], tree.end[node]):
            if sclosed[t]:
                continue
            for k in range(d):
                v = sdata[t, k]
                if v < olo[node, k]:
                    olo[node, k] = v
                if v > ohi[node, k]:
                    ohi[node, k] = v
    node = tree.parent[node]
    while node >= 0:
        tree.open_count[node] -= 1
        a, b = tree.left[node], tree.right[node]
        if tree.open_count[a] == 0:
            a = b
        elif tree.open_count[b] == 0:
            b = a
        if tree.open_count[node] > 0:
            for k in range(d):
                olo[node, k] = min(olo[a, k], olo[b, k])
                ohi[node, k] = max(ohi[a, k], ohi[b, k])
        node = tree.parent[node]


@numba.njit(cache=True)
def _heap_sift_down(hd, hi_, size):
    # max-heap on (dist, index)
    pos = 0
    while True:
        c = 2 * pos + 1
        if c >= size:
            break
        if c + 1 < size and (hd[c + 1] > hd[c] or (hd[c + 1] == hd[c] and hi_[c + 1] > hi_[c])):
            c += 1
        if hd[c] > hd[pos] or (hd[c] == hd[pos] and hi_[c] > hi_[pos]):
            hd[c], hd[pos] = hd[pos], hd[c]
            hi_[c], hi_[pos] = hi_[pos], hi_[c]
            pos = c
        else:
            break


@numba.njit(cache=True)
def _heap_sift_up(hd, hi_, pos):
    while pos > 0:
        par = (pos - 1) // 2
        if hd[pos] > hd[par] or (hd[pos] == hd[par] and hi_[pos] > hi_[par]):
            hd[pos], hd[par] = hd[par], hd[pos]
            hi_[pos], hi_[par] = hi_[par], hi_[pos]
            pos = par
        else:
            break


@numba.njit(cache=True)
def _offer(hd, hi_, size, k, s, j):
    if size < k:
        hd[size] = s
        hi_[size] = j
        _heap_sift_up(hd, hi_, size)
        return size + 1
    if s < hd[0] or (s == hd[0] and j < hi_[0]):
        hd[0] = s
        hi_[0] = j
        _heap_sift_down(hd, hi_, size)
    return size


@numba.njit(cache=True)
def _knn_search(tree, q, y, k, masked, hd, hi_):
    """Fills the max-heap (hd, hi_) with the k best (powered distance, id)
    pairs, point ``q`` excluded; with ``masked`` only open points count.

    Returns the fill size. Subtrees whose bound equals the current k-th best
    are still visited so that ties resolve to the lowest id.
    """
    p, sdata, perm, sclosed = tree.p, tree.sdata, tree.perm, tree.sclosed
    n = sdata.shape[0]
    size = 0
    if tree.brute:
        for t in range(n):
            if masked and sclosed[t]:
                continue
            j = perm[t]
            if j == q:
                continue
            bound = hd[0] if size == k else np.inf
            size = _offer(hd, hi_, size, k, _row_powdist(sdata, t, y, p, bound), j)
        tree.stats[1] += n
        return size
    if masked:
        lo, hi = tree.olo, tree.ohi
    else:
        lo, hi = tree.lo, tree.hi
    left, right = tree.left, tree.right
    open_count = tree.open_count
    if masked and open_count[0] == 0:
        return 0
    nodes = np.empty(STACK_SIZE, np.int64)
    bounds = np.empty(STACK_SIZE)
    nodes[0] = 0
    bounds[0] = 0.0
    top = 1
    examined = 0
    visited = 0
    while top > 0:
        top -= 1
        node = nodes[top]
        best = hd[0] if size == k else np.inf
        if bounds[top] > best:
            continue
        visited += 1
        if left[node] < 0:
            for t in range(tree.start[node], tree.end[node]):
                if masked and sclosed[t]:
                    continue
                j = perm[t]
                if j == q:
                    continue
                examined += 1
                s = _row_powdist(sdata, t, y, p, best)
                if s <= best:
                    size = _offer(hd, hi_, size, k, s, j)
                    best = hd[0] if size == k else np.inf
            continue
        a, b = left[node], right[node]
        ba = np.inf
        bb = np.inf
        if not masked or open_count[a] > 0:
            ba = _box_powdist(lo, hi, a, y, p, best)
        if not masked or open_count[b] > 0:
            bb = _box_powdist(lo, hi, b, y, p, best)
        # push the farther child first so the nearer one is expanded next
        if ba > bb:
            a, b = b, a
            ba, bb = bb, ba
        if bb <= best:
            nodes[top] = b
            bounds[top] = bb
            top += 1
        if ba <= best:
            nodes[top] = a
            bounds[top] = ba
            top += 1
    tree.stats[1] += examined
    tree.stats[2] += visited
    return size


@numba.njit(cache=True)
def _nearest_open(tree, q, y):
    """Open point (other than ``q``) minimising the powered distance to ``y``.

    Depth-first, nearer child first, over the open-point boxes. Returns (id, powered distance); id
    is -1 when nothing is open.
    """
    tree.stats[0] += 1
    p, sdata, perm, sclosed = tree.p, tree.sdata, tree.perm, tree.sclosed
    best = np.inf
    best_i = -1
    if tree.brute:
        n = sdata.shape[0]
        for t in range(n):
            if sclosed[t]:
                continue
            j = perm[t]
            if j == q:
                continue
            s = _row_powdist(sdata, t, y, p, best)
            if s < best or (s == best and j < best_i):
                best = s
                best_i = j
        tree.stats[1] += n
        return best_i, best
    olo, ohi, left, right, open_count = tree.olo, tree.ohi, tree.left, tree.right, tree.open_count
    if open_count[0] == 0:
        return -1, np.inf
    nodes = np.empty(STACK_SIZE, np.int64)
    bounds = np.empty(STACK_SIZE)
    nodes[0] = 0
    bounds[0] = 0.0
    top = 1
    examined = 0
    visited = 0
    while top > 0:
        top -= 1
        if bounds[top] > best:
            continue
        node = nodes[top]
        visited += 1
        if left[node] < 0:
            for t in range(tree.start[node], tree.end[node]):
                if sclosed[t]:
                    continue
                j = perm[t]
                if j == q:
                    continue
                examined += 1
                s = _row_powdist(sdata, t, y, p, best)
                if s < best or (s == best and j < best_i):
                    best = s
                    best_i = j
            continue
        a, b = left[node], right[node]
        ba = _box_powdist(olo, ohi, a, y, p, best) if open_count[a] > 0 else np.inf
        bb = _box_powdist(olo, ohi, b, y, p, best) if open_count[b] > 0 else np.inf
        # push the farther child first so the nearer one is expanded next
        if ba > bb:
            a, b = b, a
            ba, bb = bb, ba
        if bb <= best:
            nodes[top] = b
            bounds[top] = bb
            top += 1
        if ba <= best:
            nodes[top] = a
            bounds[top] = ba
            top += 1
    tree.stats[1] += examined
    tree.stats[2] += visited
    return best_i, best


@numba.njit(cache=True)
def _drain_sorted(hd, hi_, size, out_idx, out_dist):
    # max-heap -> ascending (dist, id)
    for t in range(size - 1, -1, -1):
        out_dist[t] = hd[0]
        out_idx[t] = hi_[0]
        hd[0] = hd[t]
        hi_[0] = hi_[t]
        _heap_sift_down(hd, hi_, t)


@numba.njit(cache=True)
def _knn_one(tree, q, k, out_idx, out_dist):
    """k nearest points to point ``q`` over the full (un-removed) set."""
    hd = np.empty(k)
    hi_ = np.empty(k, np.int64)
    size = _knn_search(tree, q, tree.data[q], k, False, hd, hi_)
    _drain_sorted(hd, hi_, size, out_idx, out_dist)
    for t in range(size):
        out_dist[t] = _root(out_dist[t], tree.p)


@numba.njit(cache=True)
def _knn_all(tree, queries, k, out_idx, out_dist):
    for r in range(queries.shape[0]):
        _knn_one(tree, queries[r], k, out_idx[r], out_dist[r])


@numba.njit(cache=True)
def new_buffers(n, m):
    """Per-point cache of the m nearest open neighbours found at refill time."""
    return np.empty((n, m), np.int64), np.empty((n, m)), np.zeros(n, np.int64), np.zeros(n, np.int64)


@numba.njit(cache=True)
def nearest_open_buffered(tree, bufs, u):
    """Same answer as ``_nearest_open(tree, u, data[u])``.

    Points only ever close, so a refill holding the m best open candidates
    stays exact: the first still-open entry beats every point outside it.
    """
    b_idx, b_dist, b_len, b_pos = bufs
    closed = tree.closed
    m = b_idx.shape[1]
    if m == 1:
        if b_len[u] == 1 and not closed[b_idx[u, 0]]:
            return b_idx[u, 0], b_dist[u, 0]
        j, s = _nearest_open(tree, u, tree.data[u])
        b_len[u] = 0 if j < 0 else 1
        b_idx[u, 0] = j
        b_dist[u, 0] = s
        return j, s
    pos = b_pos[u]
    while pos < b_len[u]:
        j = b_idx[u, pos]
        if not closed[j]:
            b_pos[u] = pos
            return j, b_dist[u, pos]
        pos += 1
    tree.stats[0] += 1
    hd = np.empty(m)
    hi_ = np.empty(m, np.int64)
    size = _knn_search(tree, u, tree.data[u], m, True, hd, hi_)
    b_len[u] = size
    b_pos[u] = 0
    if size == 0:
        return -1, np.inf
    _drain_sorted(hd, hi_, size, b_idx[u], b_dist[u])
    return b_idx[u, 0], b_dist[u, 0]


class NnIndex:
    """Nearest-open-neighbour index with monotone removals.

    >>> idx = NnIndex.build(PointSet([[0.0], [1.0], [2.0]]), p=2)
    >>> idx.nearest(1)
    (0, 1.0)
    """

    def __init__(self, points: PointSet, tree: Tree):
        self.points = points
        self.tree = tree

    @classmethod
    def build(cls, points, p: float = 2.0, leaf_size: int = LEAF_SIZE, brute: bool | None = None) -> "NnIndex":
        points = as_pointset(points)
        _check_p(p)
        n, d = points.n, points.d
        if n == 0:
            raise InvalidInput("cannot index an empty point set")
        if brute is None:
            brute = n < BRUTE_FORCE_MAX_N or d >= BRUTE_FORCE_MIN_D
        data = np.ascontiguousarray(points.points)
        arrays = _build_arrays(data, leaf_size)
        tree = Tree(
            data, *arrays,
            closed=np.zeros(n, dtype=np.bool_),
            sclosed=np.zeros(n, dtype=np.bool_),
            brute=bool(brute),
            p=float(p),
            stats=np.zeros(3, dtype=np.int64),
        )
        return cls(points, tree)

    @property
    def p(self) -> float:
        return self.tree.p

    @property
    def n(self) -> int:
        return self.points.n

    @property
    def closed(self) -> np.ndarray:
        return self.tree.closed

    @property
    def open_count(self) -> int:
        return int(self.n - self.tree.closed.sum())

    @property
    def stats(self) -> dict:
        q, e, v = (int(x) for x in self.tree.stats)
        return {"queries": q, "points_examined": e, "nodes_visited": v}

    def _check_idx(self, i):
        if not (0 <= i < self.n):
            raise IndexError(f"point index {i} out of range [0, {self.n})")
        return int(i)

    def is_closed(self, i: int) -> bool:
        return bool(self.tree.closed[self._check_idx(i)])

    def remove(self, i: int) -> None:
        i = self._check_idx(i)
        if self.tree.closed[i]:
            raise RuntimeError(f"point {i} removed twice")
        _remove(self.tree, i)

    def nearest(self, query_idx: int):
        """Closest open point to point ``query_idx`` (itself excluded), as
        ``(index, distance)``; ``None`` once nothing else is open."""
        q = self._check_idx(query_idx)
        j, s = _nearest_open(self.tree, q, self.tree.data[q])
        if j < 0:
            return None
        return int(j), float(_root(s, self.tree.p))

    def nearest_to(self, y):
        """Closest open point to an arbitrary coordinate vector."""
        y = np.asarray(y, dtype=np.float64).ravel()
        if y.shape[0] != self.points.d:
            raise InvalidInput(f"dimension mismatch: {y.shape[0]} vs {self.points.d}")
        j, s = _nearest_open(self.tree, -1, y)
        if j < 0:
            return None
        return int(j), float(_root(s, self.tree.p))

    def knn(self, query_idx: int, k: int):
        """k nearest other points over the full set, ascending, ties by index."""
        q = self._check_idx(query_idx)
        idx, dist = self.knn_batch(np.array([q]), k)
        return [(int(i), float(d)) for i, d in zip(idx[0], dist[0])]

    def knn_batch(self, queries, k: int):
        """Arrays ``(indices, distances)`` of shape ``(len(queries), k)``."""
        if not (1 <= k <= self.n - 1):
            raise InvalidInput(f"k must lie in [1, {self.n - 1}], got {k}")
        queries = np.asarray(queries, dtype=np.int64)
        out_idx = np.empty((queries.shape[0], k), dtype=np.int64)
        out_dist = np.empty((queries.shape[0], k))
        _knn_all(self.tree, queries, int(k), out_idx, out_dist)
        return out_idx, out_dist


def knn(points, query_idx: int, k: int, p: float = 2.0):
    """Convenience wrapper building a throwaway index."""
    index = points if isinstance(points, NnIndex) else NnIndex.build(points, p)
    return index.knn(query_idx, k)
