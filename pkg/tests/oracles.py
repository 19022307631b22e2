"""Independent reference implementations used by the tests."""

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial.distance import cdist


def powdist(x, y, p):
    """Powered l_p distance summed left to right (same order as the kernels)."""
    acc = 0.0
    for a, b in zip(x, y):
        acc += abs(a - b) ** p if p not in (1.0, 2.0) else (abs(a - b) if p == 1.0 else (a - b) * (a - b))
    return acc


class MaskedBrute:
    """Linear-scan nearest open neighbour with lowest-index tie breaking."""

    def __init__(self, points, p):
        self.x = np.asarray(points, dtype=np.float64)
        self.p = p
        self.closed = np.zeros(len(self.x), bool)

    def remove(self, i):
        assert not self.closed[i]
        self.closed[i] = True

    def nearest(self, q):
        best, best_i = np.inf, -1
        for j in range(len(self.x)):
            if j == q or self.closed[j]:
                continue
            s = powdist(self.x[q], self.x[j], self.p)
            if s < best:
                best, best_i = s, j
        if best_i < 0:
            return None
        return best_i, best ** (1.0 / self.p)

    def knn(self, q, k):
        s = [(powdist(self.x[q], self.x[j], self.p), j) for j in range(len(self.x)) if j != q]
        s.sort()
        return [(j, d ** (1.0 / self.p)) for d, j in s[:k]]


def full_graph_costs(points, goals, p, q):
    """Multi-goal shortest-path costs on the dense complete graph via scipy.

    Zero-length edges are nudged to a tiny positive weight because scipy treats
    explicit zeros as missing edges; callers use distinct points.
    """
    w = cdist(points, points, "minkowski", p=p) ** q
    d = dijkstra(csr_matrix(w), directed=False, indices=list(goals), min_only=True)
    return d


def graph_costs(n, edges, goals):
    """Multi-goal costs on an explicit edge list {(i, j): w}."""
    rows, cols, vals = [], [], []
    for (i, j), w in edges.items():
        rows += [i, j]
        cols += [j, i]
        vals += [w, w]
    g = csr_matrix((vals, (rows, cols)), shape=(n, n))
    return dijkstra(g, directed=False, indices=list(goals), min_only=True)


def powdist_matrix(x, p):
    """All powered distances, accumulated dimension by dimension."""
    acc = np.zeros((len(x), len(x)))
    for k in range(x.shape[1]):
        diff = np.abs(x[:, None, k] - x[None, :, k])
        acc += diff if p == 1.0 else (diff * diff if p == 2.0 else diff**p)
    return acc


def brute_knn_edges(points, k, p, q):
    """Union-symmetrised k-NN edge weights by full sort (ties: lowest index)."""
    x = np.asarray(points, dtype=np.float64)
    s = powdist_matrix(x, p)
    edges = {}
    for i in range(len(x)):
        order = sorted((j for j in range(len(x)) if j != i), key=lambda j: (s[i, j], j))
        for j in order[:k]:
            edges[(min(i, j), max(i, j))] = (s[i, j] ** (1.0 / p)) ** q
    return edges
