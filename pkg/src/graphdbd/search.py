"""Multi-goal shortest paths for graph density-based distances.

``dijkstra_star`` searches the implicit fully connected graph with edge weights
``||x_i - x_j||_p ** q`` and only ever holds one pending extension per closed
path: popping a path re-extends both the path itself and its prefix with their
nearest still-open neighbours. ``dijkstra_knn`` and ``isomap_distances`` are
classic Dijkstra runs over explicit k-NN graphs.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import NamedTuple

import numba
import numpy as np

from ._heap import heap_pop, heap_push, new_heap
from .metric import InvalidInput, MetricParams, PointSet, as_pointset
from .nn_index import NnIndex, _remove, _root, nearest_open_buffered, new_buffers

BUFFER_SIZE = 1

ENGINES = ("dbd", "dbd-knn", "isomap", "euclid")


class NotReached(LookupError):
    pass


@dataclass(frozen=True)
class GoalSet:
    """Labelled seed points; ``labels`` defaults to the goal position."""

    indices: np.ndarray
    labels: np.ndarray = None

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).ravel()
        if idx.size == 0:
            raise InvalidInput("goal set is empty")
        if np.unique(idx).size != idx.size:
            raise InvalidInput("goal set maps several goals to the same point")
        labels = np.arange(idx.size) if self.labels is None else np.asarray(self.labels).ravel()
        if labels.shape != idx.shape:
            raise InvalidInput("goal labels and indices differ in length")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.indices.size

    def validate(self, n: int) -> None:
        if self.indices.min() < 0 or self.indices.max() >= n:
            raise InvalidInput(f"goal index out of range for {n} points")


def as_goalset(goals) -> GoalSet:
    if isinstance(goals, GoalSet):
        return goals
    if isinstance(goals, (int, np.integer)):
        goals = [goals]
    return GoalSet(goals)


@dataclass
class ShortestPathResult:
    """Per-point cost to the closest goal, predecessor and goal position.

    Unreached points carry ``cost=inf``, ``predecessor=-1``, ``source=-1``.
    ``order`` lists points in the order they were finalised.
    """

    cost: np.ndarray
    predecessor: np.ndarray
    source: np.ndarray
    goals: GoalSet
    order: np.ndarray
    stats: dict = field(default_factory=dict)

    @property
    def unreachable_count(self) -> int:
        return int(np.count_nonzero(self.source < 0))

    @property
    def reached(self) -> np.ndarray:
        return self.source >= 0

    def source_point(self) -> np.ndarray:
        """Point index of each point's decisive goal (-1 when unreached)."""
        out = np.full(self.source.shape, -1, dtype=np.int64)
        ok = self.source >= 0
        out[ok] = self.goals.indices[self.source[ok]]
        return out

    def source_label(self) -> np.ndarray:
        out = np.full(self.source.shape, -1, dtype=self.goals.labels.dtype)
        ok = self.source >= 0
        out[ok] = self.goals.labels[self.source[ok]]
        return out


def _prepare(points, goals):
    points = as_pointset(points)
    goals = as_goalset(goals)
    goals.validate(points.n)
    return points, goals


# ---------------------------------------------------------------------------
# Dijkstra* (numba kernel)


@numba.njit(cache=True)
def _edge(s, p, q):
    dist = _root(s, p)
    if q == 1.0:
        return dist
    return dist**q


@numba.njit(cache=True)
def _push_next(tree, bufs, heap, size, u, cost_u, q):
    j, s = nearest_open_buffered(tree, bufs, u)
    if j >= 0:
        heap, size = heap_push(heap, size, cost_u + _edge(s, tree.p, q), j, u)
    return heap, size


@numba.njit(cache=True)
def _dijkstra_star_kernel(tree, goal_idx, q, buffer_size, cost, pred, source, order, counters):
    n_goals = goal_idx.shape[0]
    bufs = new_buffers(tree.data.shape[0], buffer_size)
    heap = new_heap(2 * n_goals + 16)
    size = 0
    n_closed = 0
    for gi in range(n_goals):
        g = goal_idx[gi]
        _remove(tree, g)
        cost[g] = 0.0
        pred[g] = -1
        source[g] = gi
        order[n_closed] = g
        n_closed += 1
    for gi in range(n_goals):
        heap, size = _push_next(tree, bufs, heap, size, goal_idx[gi], 0.0, q)
    max_size = size
    pops = 0
    stale = 0
    while size > 0:
        c, v, prefix, size = heap_pop(heap, size)
        pops += 1
        if tree.closed[v]:
            # candidate was claimed by a cheaper path; the prefix still needs
            # a pending extension
            stale += 1
            heap, size = _push_next(tree, bufs, heap, size, prefix, cost[prefix], q)
        else:
            _remove(tree, v)
            cost[v] = c
            pred[v] = prefix
            source[v] = source[prefix]
            order[n_closed] = v
            n_closed += 1
            heap, size = _push_next(tree, bufs, heap, size, v, c, q)
            heap, size = _push_next(tree, bufs, heap, size, prefix, cost[prefix], q)
        if size > max_size:
            max_size = size
    counters[0] = pops
    counters[1] = stale
    counters[2] = max_size
    return n_closed


def dijkstra_star(points, goals, params: MetricParams = MetricParams(), index: NnIndex | None = None,
                  buffer_size: int = BUFFER_SIZE) -> ShortestPathResult:
    """Exact multi-goal shortest paths through the full graph on ``points``.

    ``index`` may be supplied pre-built (it is consumed: every point ends up
    removed).
    """
    points, goals = _prepare(points, goals)
    if index is None:
        index = NnIndex.build(points, params.p)
    elif index.p != params.p or index.n != points.n or index.open_count != points.n:
        raise InvalidInput("index must be fresh and built with the same p over the same points")
    n = points.n
    cost = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.int64)
    source = np.full(n, -1, dtype=np.int64)
    order = np.full(n, -1, dtype=np.int64)
    counters = np.zeros(3, dtype=np.int64)
    before = index.tree.stats.copy()
    n_closed = _dijkstra_star_kernel(index.tree, goals.indices, float(params.q), max(int(buffer_size), 1), cost, pred, source, order, counters)
    after = index.tree.stats - before
    stats = {
        "pops": int(counters[0]),
        "stale_pops": int(counters[1]),
        "max_queue": int(counters[2]),
        "nn_queries": int(after[0]),
        "points_examined": int(after[1]),
    }
    return ShortestPathResult(cost, pred, source, goals, order[:n_closed], stats)


# ---------------------------------------------------------------------------
# Dijkstra* step by step (pure Python around the index)


class QueueEntry(NamedTuple):
    cost: float
    candidate: int
    prefix: int  # arena index of the closed path being extended


class ArenaEntry(NamedTuple):
    terminal: int
    parent: int  # arena index, -1 for a goal
    cost: float
    source: int  # goal position


class ClosedPathArena:
    """Every closed path, kept for the lifetime of a search."""

    def __init__(self):
        self.entries: list[ArenaEntry] = []

    def add(self, terminal, parent, cost, source) -> int:
        self.entries.append(ArenaEntry(int(terminal), int(parent), float(cost), int(source)))
        return len(self.entries) - 1

    def __getitem__(self, i) -> ArenaEntry:
        return self.entries[i]

    def __len__(self):
        return len(self.entries)

    def path(self, i) -> list[int]:
        out = []
        while i >= 0:
            e = self.entries[i]
            out.append(e.terminal)
            i = e.parent
        return out[::-1]


class SearchQueue:
    """Min-queue of QueueEntry ordered by (cost, candidate, prefix)."""

    def __init__(self):
        self._heap: list[QueueEntry] = []
        self.max_size = 0

    def push(self, entry: QueueEntry) -> None:
        heapq.heappush(self._heap, entry)
        self.max_size = max(self.max_size, len(self._heap))

    def pop(self) -> QueueEntry:
        return heapq.heappop(self._heap)

    def __len__(self):
        return len(self._heap)

    def entries(self) -> list[QueueEntry]:
        return sorted(self._heap)


def push_next(queue: SearchQueue, arena: ClosedPathArena, index: NnIndex, prefix: int, q: float) -> None:
    """Queue the prefix extended by the nearest open neighbour of its terminal."""
    entry = arena[prefix]
    hit = index.nearest(entry.terminal)
    if hit is None:
        return
    j, dist = hit
    w = dist if q == 1.0 else dist**q
    queue.push(QueueEntry(entry.cost + w, j, prefix))


class DijkstraStar:
    """Stepwise Dijkstra*; slow but inspectable. ``run()`` matches
    :func:`dijkstra_star`."""

    def __init__(self, points, goals, params: MetricParams = MetricParams()):
        self.points, self.goals = _prepare(points, goals)
        self.params = params
        self.index = NnIndex.build(self.points, params.p)
        self.queue = SearchQueue()
        self.arena = ClosedPathArena()
        self.pops = 0
        self.stale_pops = 0
        self.popped_costs: list[float] = []
        self.arena_of = np.full(self.points.n, -1, dtype=np.int64)
        for gi, g in enumerate(self.goals.indices):
            self.index.remove(g)
            self.arena_of[g] = self.arena.add(g, -1, 0.0, gi)
        for a in range(len(self.arena)):
            push_next(self.queue, self.arena, self.index, a, params.q)

    def step(self):
        """Pop one entry; returns the arena index it closed, or None if stale."""
        e = self.queue.pop()
        self.pops += 1
        if self.index.is_closed(e.candidate):
            self.stale_pops += 1
            push_next(self.queue, self.arena, self.index, e.prefix, self.params.q)
            return None
        self.index.remove(e.candidate)
        a = self.arena.add(e.candidate, e.prefix, e.cost, self.arena[e.prefix].source)
        self.arena_of[e.candidate] = a
        self.popped_costs.append(e.cost)
        push_next(self.queue, self.arena, self.index, a, self.params.q)
        push_next(self.queue, self.arena, self.index, e.prefix, self.params.q)
        return a

    def run(self) -> ShortestPathResult:
        while len(self.queue):
            self.step()
        n = self.points.n
        cost = np.full(n, np.inf)
        pred = np.full(n, -1, dtype=np.int64)
        source = np.full(n, -1, dtype=np.int64)
        for e in self.arena.entries:
            cost[e.terminal] = e.cost
            pred[e.terminal] = -1 if e.parent < 0 else self.arena[e.parent].terminal
            source[e.terminal] = e.source
        order = np.array([e.terminal for e in self.arena.entries], dtype=np.int64)
        stats = {
            "pops": self.pops,
            "stale_pops": self.stale_pops,
            "max_queue": self.queue.max_size,
            "nn_queries": self.index.stats["queries"],
        }
        return ShortestPathResult(cost, pred, source, self.goals, order, stats)


# ---------------------------------------------------------------------------
# explicit k-NN graphs


@dataclass(frozen=True)
class KnnGraph:
    """Undirected weighted graph in CSR form (both directions stored).

    Zero-weight edges (duplicate points) are kept explicitly.
    """

    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.indptr.size - 1

    @property
    def edge_count(self) -> int:
        return self.indices.size // 2

    def neighbors(self, i) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def edge_set(self) -> set:
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        return {(int(a), int(b)) for a, b in zip(rows, self.indices) if a < b}

    def to_scipy(self):
        from scipy.sparse import csr_matrix

        return csr_matrix((self.weights, self.indices, self.indptr), shape=(self.n, self.n))


@numba.njit(cache=True)
def _symmetrize(nbr, w):
    n, k = nbr.shape
    deg = np.full(n, k, np.int64)
    for i in range(n):
        for t in range(k):
            deg[nbr[i, t]] += 1
    ptr = np.zeros(n + 1, np.int64)
    for i in range(n):
        ptr[i + 1] = ptr[i] + deg[i]
    fill = ptr[:-1].copy()
    cols = np.empty(ptr[n], np.int64)
    vals = np.empty(ptr[n])
    for i in range(n):
        for t in range(k):
            j = nbr[i, t]
            cols[fill[i]] = j
            vals[fill[i]] = w[i, t]
            fill[i] += 1
            cols[fill[j]] = i
            vals[fill[j]] = w[i, t]
            fill[j] += 1
    # sort each row and drop duplicate columns
    out_ptr = np.zeros(n + 1, np.int64)
    m = 0
    for i in range(n):
        s, e = ptr[i], ptr[i + 1]
        # copy first: compaction writes into this row's own slots
        rc = cols[s:e].copy()
        rv = vals[s:e].copy()
        order = np.argsort(rc, kind="mergesort")
        last = -1
        for t in order:
            c = rc[t]
            if c != last:
                cols[m] = c
                vals[m] = rv[t]
                m += 1
                last = c
        out_ptr[i + 1] = m
    return out_ptr, cols[:m].copy(), vals[:m].copy()


def build_knn_graph(points, k: int, params: MetricParams = MetricParams(), symmetrize: bool = True,
                    index: NnIndex | None = None) -> KnnGraph:
    """k-NN graph with edge weights ``dist**q``; union symmetrisation."""
    points = as_pointset(points)
    if not (1 <= k <= points.n - 1):
        raise InvalidInput(f"k must lie in [1, {points.n - 1}], got {k}")
    if index is None:
        index = NnIndex.build(points, params.p)
    nbr, dist = index.knn_batch(np.arange(points.n), k)
    w = dist if params.q == 1.0 else dist**params.q
    if symmetrize:
        ptr, cols, vals = _symmetrize(nbr, w)
    else:
        ptr = np.arange(0, points.n * k + 1, k, dtype=np.int64)
        cols, vals = nbr.ravel(), w.ravel()
    return KnnGraph(ptr, cols, vals)


@numba.njit(cache=True)
def _dijkstra_csr(ptr, cols, vals, goal_idx, cost, pred, source, order, counters):
    n = ptr.shape[0] - 1
    done = np.zeros(n, np.bool_)
    heap = new_heap(n)
    size = 0
    for gi in range(goal_idx.shape[0]):
        g = goal_idx[gi]
        cost[g] = 0.0
        source[g] = gi
        heap, size = heap_push(heap, size, 0.0, g, -1)
    pops = 0
    max_size = size
    n_done = 0
    while size > 0:
        c, v, u, size = heap_pop(heap, size)
        pops += 1
        if done[v]:
            continue
        done[v] = True
        order[n_done] = v
        n_done += 1
        for t in range(ptr[v], ptr[v + 1]):
            j = cols[t]
            if done[j]:
                continue
            nc = c + vals[t]
            if nc < cost[j]:
                cost[j] = nc
                pred[j] = v
                source[j] = source[v]
                heap, size = heap_push(heap, size, nc, j, v)
        if size > max_size:
            max_size = size
    counters[0] = pops
    counters[1] = max_size
    return n_done


def dijkstra_knn(graph: KnnGraph, goals) -> ShortestPathResult:
    """Classic multi-goal Dijkstra on an explicit graph."""
    goals = as_goalset(goals)
    goals.validate(graph.n)
    n = graph.n
    cost = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.int64)
    source = np.full(n, -1, dtype=np.int64)
    order = np.full(n, -1, dtype=np.int64)
    counters = np.zeros(2, dtype=np.int64)
    n_done = _dijkstra_csr(graph.indptr, graph.indices, graph.weights, goals.indices, cost, pred, source, order, counters)
    stats = {"pops": int(counters[0]), "max_queue": int(counters[1]), "edges": graph.edge_count}
    return ShortestPathResult(cost, pred, source, goals, order[:n_done], stats)


def isomap_distances(points, goals, k: int, p: float = 2.0) -> ShortestPathResult:
    """Geodesic distances on the k-NN graph with plain l_p edge lengths."""
    points, goals = _prepare(points, goals)
    graph = build_knn_graph(points, k, MetricParams(p, 1.0))
    return dijkstra_knn(graph, goals)


def euclid_distances(points, goals, p: float = 2.0) -> ShortestPathResult:
    """Direct l_p distance to the closest goal (ties: lower goal position)."""
    from .metric import pairwise_lp

    points, goals = _prepare(points, goals)
    n = points.n
    cost = np.empty(n)
    source = np.empty(n, dtype=np.int64)
    gpts = points.points[goals.indices]
    for s in range(0, n, 4096):
        block = pairwise_lp(points.points[s:s + 4096], gpts, p)
        source[s:s + 4096] = block.argmin(axis=1)
        cost[s:s + 4096] = block[np.arange(block.shape[0]), source[s:s + 4096]]
    pred = goals.indices[source].copy()
    cost[goals.indices] = 0.0
    source[goals.indices] = np.arange(len(goals))
    pred[goals.indices] = -1
    order = np.argsort(cost, kind="stable")
    return ShortestPathResult(cost, pred, source, goals, order, {})


# ---------------------------------------------------------------------------


def run_engine(points, goals, params: MetricParams = MetricParams(), engine: str = "dbd", k: int | None = None) -> ShortestPathResult:
    """Dispatch on engine name. ``dbd`` with ``k`` unset (or 0) is Dijkstra*."""
    if engine == "dbd" and k:
        engine = "dbd-knn"
    if engine == "dbd":
        return dijkstra_star(points, goals, params)
    if engine == "dbd-knn":
        if not k:
            raise InvalidInput("engine dbd-knn needs k >= 1")
        points, goals = _prepare(points, goals)
        return dijkstra_knn(build_knn_graph(points, k, params), goals)
    if engine == "isomap":
        if not k:
            raise InvalidInput("engine isomap needs k >= 1")
        return isomap_distances(points, goals, k, params.p)
    if engine == "euclid":
        return euclid_distances(points, goals, params.p)
    raise InvalidInput(f"unknown engine {engine!r}; expected one of {ENGINES}")


def reconstruct_path(result: ShortestPathResult, idx: int) -> list[int]:
    """Point indices from the decisive goal to ``idx``."""
    if not (0 <= idx < result.cost.size):
        raise IndexError(idx)
    if result.source[idx] < 0:
        raise NotReached(f"point {idx} is not connected to any goal")
    path = [int(idx)]
    while result.predecessor[path[-1]] >= 0:
        path.append(int(result.predecessor[path[-1]]))
        if len(path) > result.cost.size:
            raise RuntimeError("predecessor cycle")
    return path[::-1]


def path_cost(points, path, params: MetricParams) -> float:
    from .metric import edge_weight

    points = as_pointset(points)
    return float(sum(edge_weight(points[a], points[b], params) for a, b in zip(path, path[1:])))


def all_pairs_to_goals(points, goals, params: MetricParams = MetricParams(), engine: str = "dbd", k: int | None = None) -> np.ndarray:
    """``n x len(goals)`` matrix; column g is a single-goal search from goal g."""
    points, goals = _prepare(points, goals)
    out = np.empty((points.n, len(goals)))
    for gi, g in enumerate(goals.indices):
        out[:, gi] = run_engine(points, GoalSet([g]), params, engine, k).cost
    return out
