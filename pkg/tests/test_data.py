import gzip
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from graphdbd.classify import UNLABELED
from graphdbd.data import (DatasetError, DatasetFile, export_distances, fmt_float, gen_two_arcs, gen_two_clusters,
                           gen_uniform_square, load_dataset, read_distances, read_idx, write_idx)
from graphdbd.metric import MetricParams
from graphdbd.search import GoalSet, KnnGraph, all_pairs_to_goals, dijkstra_knn, dijkstra_star


def test_csv_with_sentinel(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("x1,x2,label\n0,0,1\n1,1,?\n")
    ds = load_dataset(DatasetFile(str(f)))
    assert ds.n == 2 and ds.points.d == 2
    assert list(ds.labels) == [0, UNLABELED]
    assert list(ds.classes) == [1]
    np.testing.assert_array_equal(ds.points.points, [[0, 0], [1, 1]])


def test_csv_label_by_name_and_no_header(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("label,a,b\n3,0.5,1\n7,2,3\n")
    ds = load_dataset(DatasetFile(str(f), label_column="label"))
    assert list(ds.labels) == [0, 1] and list(ds.classes) == [3, 7]
    g = tmp_path / "e.csv"
    g.write_text("5,1,2\n?,3,4\n")
    ds = load_dataset(DatasetFile(str(g), label_column=0))
    np.testing.assert_array_equal(ds.points.points, [[1, 2], [3, 4]])
    assert list(ds.labels) == [0, UNLABELED]


def test_csv_errors_carry_line_numbers(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("x,y,label\n0,0,1\n1,oops,0\n")
    with pytest.raises(DatasetError, match="line 3"):
        load_dataset(DatasetFile(str(f)))
    f.write_text("x,y,label\n0,0,1\n1,0\n")
    with pytest.raises(DatasetError, match="line 3"):
        load_dataset(DatasetFile(str(f)))
    f.write_text("x,y,label\n0,0,1.5\n")
    with pytest.raises(DatasetError, match="line 2"):
        load_dataset(DatasetFile(str(f)))
    with pytest.raises(DatasetError):
        load_dataset(DatasetFile(str(tmp_path / "missing.csv")))


def test_csv_label_file(tmp_path):
    f = tmp_path / "x.csv"
    f.write_text("0,0\n1,1\n2,2\n")
    lab = tmp_path / "y.txt"
    lab.write_text("5\n?\n6\n")
    ds = load_dataset(DatasetFile(str(f), label_file=str(lab)))
    assert ds.points.d == 2
    assert list(ds.labels) == [0, UNLABELED, 1]
    lab.write_text("5\n6\n")
    with pytest.raises(DatasetError):
        load_dataset(DatasetFile(str(f), label_file=str(lab)))


@pytest.mark.parametrize("gz", [False, True])
def test_idx_images_and_labels(tmp_path, gz):
    rng = np.random.default_rng(0)
    imgs = rng.integers(0, 256, (10, 28, 28), dtype=np.uint8)
    labs = rng.integers(0, 10, 10, dtype=np.uint8)
    suffix = ".gz" if gz else ""
    ip = tmp_path / f"images-idx3-ubyte{suffix}"
    lp = tmp_path / f"labels-idx1-ubyte{suffix}"
    write_idx(str(ip), imgs)
    write_idx(str(lp), labs)
    raw = (gzip.open if gz else open)(ip, "rb").read()
    assert raw[:4] == bytes([0, 0, 0x08, 3])
    assert int.from_bytes(raw[4:8], "big") == 10 and int.from_bytes(raw[8:12], "big") == 28
    ds = load_dataset(DatasetFile(str(ip), "idx", label_file=str(lp)))
    assert ds.points.points.shape == (10, 784)
    np.testing.assert_array_equal(ds.points.points, imgs.reshape(10, -1) / 255.0)
    assert list(ds.classes[ds.labels]) == list(labs)


def test_idx_roundtrip_types(tmp_path):
    a = np.arange(12, dtype=">f8").reshape(3, 4) / 7
    write_idx(str(tmp_path / "a.idx"), a)
    np.testing.assert_array_equal(read_idx(str(tmp_path / "a.idx")), a)
    (tmp_path / "b.idx").write_bytes(bytes([0, 0, 0x08, 1, 0, 0, 0, 5, 1, 2]))
    with pytest.raises(DatasetError, match="expected 5"):
        read_idx(str(tmp_path / "b.idx"))
    (tmp_path / "c.idx").write_bytes(bytes([1, 0, 0x08, 1]))
    with pytest.raises(DatasetError, match="magic"):
        read_idx(str(tmp_path / "c.idx"))


def test_libsvm(tmp_path):
    f = tmp_path / "d.svm"
    f.write_text("1 1:0.5 3:2.0\n? 2:1\n")
    ds = load_dataset(DatasetFile(str(f), "libsvm", dim=3))
    np.testing.assert_array_equal(ds.points.points, [[0.5, 0, 2.0], [0, 1, 0]])
    assert list(ds.labels) == [0, UNLABELED]
    with pytest.raises(DatasetError):
        load_dataset(DatasetFile(str(f), "libsvm", dim=2))
    f.write_text("1 0:3\n")
    with pytest.raises(DatasetError, match="line 1"):
        load_dataset(DatasetFile(str(f), "libsvm"))


def test_uniform_generator():
    a = gen_uniform_square(4000, 3, seed=9)
    b = gen_uniform_square(4000, 3, seed=9)
    np.testing.assert_array_equal(a.points, b.points)
    assert a.points.min() >= 0 and a.points.max() <= 1
    tol = 3 / math.sqrt(12 * 4000)
    assert np.all(np.abs(a.points.mean(axis=0) - 0.5) < tol)


def test_two_clusters_generator():
    a = gen_two_clusters(101, separation=5.0, noise=0.1, seed=3)
    b = gen_two_clusters(101, separation=5.0, noise=0.1, seed=3)
    np.testing.assert_array_equal(a.points.points, b.points.points)
    assert np.bincount(a.truth).tolist() == [51, 50]
    assert a.labeled.size == 2 and sorted(a.labels[a.labeled]) == [0, 1]
    # separation >> noise: the horizontal line y = 2.5 separates them
    y = a.points.points[:, 1]
    assert np.all((y > 2.5) == (a.truth == 1))


def test_two_arcs_generator():
    pts, dense, sparse = gen_two_arcs(50, 6)
    assert pts.n == 58
    np.testing.assert_array_equal(pts.points[:2], [[-1, 0], [1, 0]])
    assert np.all(pts.points[dense, 1] > 0) and np.all(pts.points[sparse, 1] < 0)


def test_fmt_float():
    assert fmt_float(0.1) == "0.1"
    assert fmt_float(math.inf) == "inf"
    assert float(fmt_float(1 / 3)) == 1 / 3


def test_export_result(tmp_path):
    x = np.array([[0.0], [1.0], [2.0], [10.0]])
    res = dijkstra_star(x, GoalSet([0, 3], [4, 9]), MetricParams(2, 2))
    out = tmp_path / "r.csv"
    export_distances(res, str(out))
    lines = out.read_text().splitlines()
    assert lines[0] == "point_index,goal_index,cost,source_label"
    assert lines[1] == "0,0,0.0,4"
    assert lines[4] == "3,1,0.0,9"


def test_export_unreached_and_matrix(tmp_path):
    g = KnnGraph(np.array([0, 1, 2, 2]), np.array([1, 0]), np.array([0.5, 0.5]))
    res = dijkstra_knn(g, [0])
    out = tmp_path / "u.csv"
    export_distances(res, str(out))
    rows = read_distances(str(out))
    assert rows[2] == (2, -1, math.inf, "")
    assert "2,-1,inf," in out.read_text()

    x = np.random.default_rng(1).random((20, 2))
    m = all_pairs_to_goals(x, [0, 5], MetricParams(2, 8))
    export_distances(m, str(out))
    back = np.array([c for _, _, c, _ in read_distances(str(out))]).reshape(20, 2)
    np.testing.assert_array_equal(back, m)
    with pytest.raises(OSError, match="nope"):
        export_distances(m, str(tmp_path / "nope" / "x.csv"))


@given(st.lists(st.floats(allow_nan=False), min_size=1, max_size=30))
def test_prop_export_roundtrip_bit_exact(vals):
    import io

    m = np.array(vals)[:, None]
    buf = io.StringIO()
    export_distances(m, buf)
    buf.seek(0)
    lines = buf.read().splitlines()[1:]
    back = np.array([float(line.split(",")[2]) for line in lines])
    np.testing.assert_array_equal(back, m[:, 0])
