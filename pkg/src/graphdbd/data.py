"""Dataset loaders (csv, idx, libsvm), synthetic generators and CSV export."""

from __future__ import annotations

import csv
import gzip
import io
import math
import os
import struct
import sys
from dataclasses import dataclass

import numpy as np

from .classify import UNLABELED, LabeledDataset
from .metric import InvalidInput, PointSet
from .search import ShortestPathResult

FORMATS = ("csv", "idx", "libsvm")


class DatasetError(InvalidInput):
    pass


@dataclass
class DatasetFile:
    """Where and how to read a dataset.

    ``label_column`` (csv) is a column name or integer position, default the
    last column; ``None`` with ``label_file`` unset means no labels. For idx
    the companion label file goes in ``label_file``. ``dim`` fixes the
    dimension of libsvm data.
    """

    path: str
    format: str = "csv"
    label_column: str | int | None = -1
    label_file: str | None = None
    sentinel: str = "?"
    dim: int | None = None
    header: bool | None = None  # csv: autodetect when None


def _open(path, mode="rb"):
    if str(path).endswith(".gz"):
        return gzip.open(path, mode)
    return open(path, mode)


def _encode_labels(raw: list, sentinel: str):
    """Raw label strings -> (class ids, classes). Sentinel/empty -> UNLABELED."""
    values = {}
    parsed = []
    for lineno, tok in raw:
        tok = tok.strip()
        if tok == sentinel or tok == "":
            parsed.append(None)
            continue
        try:
            v = int(float(tok)) if float(tok).is_integer() else None
        except ValueError:
            v = None
        if v is None:
            raise DatasetError(f"line {lineno}: label {tok!r} is not an integer")
        parsed.append(v)
        values[v] = True
    classes = np.array(sorted(values), dtype=np.int64)
    lookup = {v: i for i, v in enumerate(classes)}
    ids = np.array([UNLABELED if v is None else lookup[v] for v in parsed], dtype=np.int64)
    return ids, classes


def load_csv(spec: DatasetFile) -> LabeledDataset:
    with open(spec.path, newline="") as fh:
        rows = [(i + 1, row) for i, row in enumerate(csv.reader(fh)) if row and any(c.strip() for c in row)]
    if not rows:
        raise DatasetError(f"{spec.path}: no rows")
    header = spec.header
    if header is None:
        try:
            [float(c) for c in rows[0][1] if c.strip() != spec.sentinel]
            header = False
        except ValueError:
            header = True
    names = [c.strip() for c in rows[0][1]] if header else None
    body = rows[1:] if header else rows
    if not body:
        raise DatasetError(f"{spec.path}: header but no data rows")
    width = len(body[0][1])

    label_col = spec.label_column
    if isinstance(label_col, str):
        if label_col.lstrip("-").isdigit():
            label_col = int(label_col)
        elif names is None or label_col not in names:
            raise DatasetError(f"{spec.path}: no column named {label_col!r}")
        else:
            label_col = names.index(label_col)
    if spec.label_file is not None:
        label_col = None
    if label_col is not None:
        label_col %= width

    coords, raw = [], []
    for lineno, row in body:
        if len(row) != width:
            raise DatasetError(f"{spec.path}: line {lineno}: expected {width} fields, got {len(row)}")
        vals = []
        for j, cell in enumerate(row):
            if j == label_col:
                raw.append((lineno, cell))
                continue
            try:
                vals.append(float(cell))
            except ValueError:
                raise DatasetError(f"{spec.path}: line {lineno}: cannot parse {cell!r} as a number") from None
        coords.append(vals)
    points = PointSet(np.array(coords, dtype=np.float64))
    if spec.label_file is not None:
        raw = _read_label_file(spec.label_file, points.n)
    if not raw:
        return LabeledDataset(points, np.full(points.n, UNLABELED))
    ids, classes = _encode_labels(raw, spec.sentinel)
    return LabeledDataset(points, ids, classes)


def _read_label_file(path, n):
    if str(path).endswith(("idx1-ubyte", ".idx1", "idx1-ubyte.gz")):
        arr = read_idx(path)
        raw = [(i + 1, str(int(v))) for i, v in enumerate(arr.ravel())]
    else:
        with open(path) as fh:
            raw = [(i + 1, line.strip()) for i, line in enumerate(fh) if line.strip()]
    if len(raw) != n:
        raise DatasetError(f"{path}: {len(raw)} labels for {n} points")
    return raw


_IDX_TYPES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}


def read_idx(path) -> np.ndarray:
    """Array from an idx file: 2 zero bytes, type code, rank, big-endian dims."""
    with _open(path) as fh:
        buf = fh.read()
    if len(buf) < 4 or buf[0] != 0 or buf[1] != 0:
        raise DatasetError(f"{path}: bad idx magic")
    code, ndim = buf[2], buf[3]
    if code not in _IDX_TYPES:
        raise DatasetError(f"{path}: unknown idx type code 0x{code:02x}")
    if len(buf) < 4 + 4 * ndim:
        raise DatasetError(f"{path}: truncated idx header")
    dims = struct.unpack(f">{ndim}I", buf[4:4 + 4 * ndim])
    dtype = _IDX_TYPES[code]
    count = math.prod(dims)
    body = buf[4 + 4 * ndim:]
    if len(body) != count * dtype.itemsize:
        raise DatasetError(f"{path}: expected {count * dtype.itemsize} data bytes, found {len(body)}")
    return np.frombuffer(body, dtype=dtype).reshape(dims)


def write_idx(path, arr: np.ndarray) -> None:
    arr = np.asarray(arr)
    by_kind = {(v.kind, v.itemsize): k for k, v in _IDX_TYPES.items()}
    code = by_kind.get((arr.dtype.kind, arr.dtype.itemsize))
    if code is None:
        raise DatasetError(f"dtype {arr.dtype} has no idx type code")
    with _open(path, "wb") as fh:
        fh.write(bytes([0, 0, code, arr.ndim]))
        fh.write(struct.pack(f">{arr.ndim}I", *arr.shape))
        fh.write(arr.astype(_IDX_TYPES[code]).tobytes())


def load_idx(spec: DatasetFile) -> LabeledDataset:
    arr = read_idx(spec.path)
    if arr.ndim < 1:
        raise DatasetError(f"{spec.path}: scalar idx payload")
    pts = arr.reshape(arr.shape[0], -1).astype(np.float64)
    if arr.dtype == np.dtype(">u1"):
        pts /= 255.0
    points = PointSet(pts)
    if spec.label_file is None:
        return LabeledDataset(points, np.full(points.n, UNLABELED))
    ids, classes = _encode_labels(_read_label_file(spec.label_file, points.n), spec.sentinel)
    return LabeledDataset(points, ids, classes)


def load_libsvm(spec: DatasetFile) -> LabeledDataset:
    raw, entries = [], []
    max_feat = 0
    with _open(spec.path, "rt") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            toks = line.split()
            raw.append((lineno, toks[0]))
            feats = {}
            for tok in toks[1:]:
                try:
                    k, v = tok.split(":")
                    k = int(k)
                    feats[k] = float(v)
                except ValueError:
                    raise DatasetError(f"{spec.path}: line {lineno}: bad feature {tok!r}") from None
                if k < 1:
                    raise DatasetError(f"{spec.path}: line {lineno}: feature index {k} < 1")
                max_feat = max(max_feat, k)
            entries.append((lineno, feats))
    if not entries:
        raise DatasetError(f"{spec.path}: no rows")
    d = spec.dim or max_feat
    if max_feat > d:
        raise DatasetError(f"{spec.path}: feature index {max_feat} exceeds dim {d}")
    pts = np.zeros((len(entries), d))
    for r, (_, feats) in enumerate(entries):
        for k, v in feats.items():
            pts[r, k - 1] = v
    ids, classes = _encode_labels(raw, spec.sentinel)
    return LabeledDataset(PointSet(pts), ids, classes)


def load_dataset(spec: DatasetFile) -> LabeledDataset:
    if not os.path.exists(spec.path):
        raise DatasetError(f"{spec.path}: no such file")
    loader = {"csv": load_csv, "idx": load_idx, "libsvm": load_libsvm}.get(spec.format)
    if loader is None:
        raise DatasetError(f"unknown format {spec.format!r}; expected one of {FORMATS}")
    return loader(spec)


# ---------------------------------------------------------------------------
# synthetic data


def gen_uniform_square(n: int, d: int = 2, seed=None) -> PointSet:
    """n i.i.d. points uniform on [0, 1]^d."""
    if n < 1:
        raise InvalidInput("n must be >= 1")
    return PointSet(np.random.default_rng(seed).random((n, d)))


def gen_two_clusters(n: int, separation: float = 1.0, noise: float = 0.1, seed=None,
                     length: float = 4.0) -> LabeledDataset:
    """Two parallel noisy bars, ``separation`` apart, each holding n/2 points.

    Bar 0 is labeled at its left end and bar 1 at its right end, so points at
    the far end of each bar sit Euclidean-closer to the other bar's label
    whenever ``separation < length``.
    """
    rng = np.random.default_rng(seed)
    sizes = (n - n // 2, n // 2)
    pts, truth = [], []
    for c, m in enumerate(sizes):
        x = rng.uniform(0.0, length, m)
        y = c * separation + rng.normal(0.0, noise, m)
        pts.append(np.column_stack((x, y)))
        truth.append(np.full(m, c))
    pts = np.vstack(pts)
    truth = np.concatenate(truth)
    labels = np.full(n, UNLABELED)
    first = np.flatnonzero(truth == 0)
    second = np.flatnonzero(truth == 1)
    labels[first[np.argmin(pts[first, 0])]] = 0
    if second.size:
        labels[second[np.argmax(pts[second, 0])]] = 1
    return LabeledDataset(PointSet(pts), labels, np.array([0, 1]), truth)


def gen_two_arcs(dense: int = 200, sparse: int = 12, depth: float = 0.3, seed=None, jitter: float = 0.0):
    """Two arcs joining the endpoints (-1, 0) and (1, 0).

    The upper arc is a unit half circle holding ``dense`` interior points; the
    lower arc is a shallow sine bump of depth ``depth`` (geometrically shorter)
    holding ``sparse`` interior points. Returns the PointSet (endpoints are
    rows 0 and 1) and the row indices of each arc's interior points.
    """
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, np.pi, dense + 2)[1:-1]
    upper = np.column_stack((-np.cos(t), np.sin(t)))
    s = np.linspace(-1.0, 1.0, sparse + 2)[1:-1]
    lower = np.column_stack((s, -depth * np.cos(0.5 * np.pi * s)))
    if jitter:
        upper = upper + rng.normal(0.0, jitter, upper.shape)
        lower = lower + rng.normal(0.0, jitter, lower.shape)
    pts = np.vstack(([[-1.0, 0.0], [1.0, 0.0]], upper, lower))
    dense_idx = np.arange(2, 2 + dense)
    sparse_idx = np.arange(2 + dense, 2 + dense + sparse)
    return PointSet(pts), dense_idx, sparse_idx


# ---------------------------------------------------------------------------
# export


def fmt_float(x: float) -> str:
    """Shortest round-trip decimal; ``inf`` for unreached."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


DISTANCE_HEADER = ("point_index", "goal_index", "cost", "source_label")


def distance_rows(result_or_matrix, goals=None):
    """Rows of (point_index, goal_index, cost, source_label).

    A ShortestPathResult yields one row per point (its decisive goal, or -1
    and an empty label when unreached); a ``points x goals`` matrix yields
    one row per entry, which then needs the GoalSet for labels.
    """
    if isinstance(result_or_matrix, ShortestPathResult):
        r = result_or_matrix
        labels = r.goals.labels
        for i in range(r.cost.size):
            s = int(r.source[i])
            yield i, s, float(r.cost[i]), "" if s < 0 else labels[s]
        return
    mat = np.asarray(result_or_matrix, dtype=np.float64)
    labels = np.arange(mat.shape[1]) if goals is None else goals.labels
    for i in range(mat.shape[0]):
        for g in range(mat.shape[1]):
            yield i, g, float(mat[i, g]), labels[g]


def export_distances(result_or_matrix, path, goals=None, classes=None) -> None:
    """Write the distance CSV to ``path`` (``"-"`` for stdout, or an open
    text stream)."""

    def label(v):
        if v == "" or classes is None:
            return v
        return classes[int(v)]

    def write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DISTANCE_HEADER)
        for i, g, c, lab in distance_rows(result_or_matrix, goals):
            w.writerow((i, g, fmt_float(c), label(lab)))

    if path in (None, "-"):
        write(sys.stdout)
        return
    if hasattr(path, "write"):
        write(path)
        return
    try:
        with open(path, "w", newline="") as fh:
            write(fh)
    except OSError as exc:
        raise OSError(f"cannot write distances to {path}: {exc.strerror or exc}") from exc


def read_distances(path) -> list[tuple]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != DISTANCE_HEADER:
            raise DatasetError(f"{path}: unexpected header {header}")
        return [(int(a), int(b), float(c), d) for a, b, c, d in reader]
