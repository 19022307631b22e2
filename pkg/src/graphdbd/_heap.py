"""Array-backed binary min-heap for the numba search kernels.

Entries are ordered by (cost, vertex, aux); the integer keys make the pop
order deterministic. No decrease-key: stale entries are skipped by callers.
"""

import numba
import numpy as np


@numba.njit(cache=True)
def new_heap(capacity):
    capacity = max(capacity, 16)
    return np.empty(capacity), np.empty(capacity, np.int64), np.empty(capacity, np.int64)


@numba.njit(cache=True, inline="always")
def _less(c, v, a, i, j):
    if c[i] != c[j]:
        return c[i] < c[j]
    if v[i] != v[j]:
        return v[i] < v[j]
    return a[i] < a[j]


@numba.njit(cache=True, inline="always")
def _swap(c, v, a, i, j):
    c[i], c[j] = c[j], c[i]
    v[i], v[j] = v[j], v[i]
    a[i], a[j] = a[j], a[i]


@numba.njit(cache=True)
def heap_push(heap, size, cost, vertex, aux):
    """Returns the (possibly reallocated) heap and the new size."""
    c, v, a = heap
    if size == c.shape[0]:
        c = np.concatenate((c, np.empty(size)))
        v = np.concatenate((v, np.empty(size, np.int64)))
        a = np.concatenate((a, np.empty(size, np.int64)))
        heap = (c, v, a)
    c[size] = cost
    v[size] = vertex
    a[size] = aux
    pos = size
    while pos > 0:
        par = (pos - 1) >> 1
        if _less(c, v, a, pos, par):
            _swap(c, v, a, pos, par)
            pos = par
        else:
            break
    return heap, size + 1


@numba.njit(cache=True)
def heap_pop(heap, size):
    """Removes the minimum; returns (cost, vertex, aux, new size)."""
    c, v, a = heap
    cost, vertex, aux = c[0], v[0], a[0]
    size -= 1
    if size > 0:
        c[0], v[0], a[0] = c[size], v[size], a[size]
        pos = 0
        while True:
            l = 2 * pos + 1
            if l >= size:
                break
            m = l
            if l + 1 < size and _less(c, v, a, l + 1, l):
                m = l + 1
            if _less(c, v, a, m, pos):
                _swap(c, v, a, m, pos)
                pos = m
            else:
                break
    return cost, vertex, aux, size
