import json

import numpy as np
import pytest

from graphdbd.data import gen_two_clusters, gen_uniform_square
from graphdbd.experiments import ExperimentReport, run_convergence_experiment, run_timing_experiment
from graphdbd.metric import MetricParams


def test_convergence_single_trial_std_zero():
    rep = run_convergence_experiment([30, 60], 1, seed=4)
    assert [r["scaled_dbd_std"] for r in rep.summary] == [0.0, 0.0]
    assert rep.metadata["seed"] == 4 and rep.metadata["q"] == 2.0


def test_convergence_is_seed_reproducible():
    a = run_convergence_experiment([40, 80], 3, seed=1)
    b = run_convergence_experiment([40, 80], 3, seed=1)
    assert a.to_json() == b.to_json()
    with pytest.raises(ValueError):
        run_convergence_experiment([80, 40], 2)


def test_convergence_trends_small():
    rep = run_convergence_experiment([50, 2000], 30, seed=2)
    lo, hi = rep.summary
    assert hi["scaled_dbd_std"] < lo["scaled_dbd_std"]
    assert 0.6 < hi["density_p50"] < 1.5


def test_timing_report_fields_and_trends():
    pts = gen_uniform_square(1500, 3, seed=0)
    rep = run_timing_experiment(pts, [2, 5, 1499], goal_count=3, trials=2, params=MetricParams(2, 4), seed=7)
    assert len(rep.records) == 2 * 4
    for r in rep.records:
        for key in ("engine", "p", "q", "k", "seed", "trial", "total_s", "pops", "unreachable"):
            assert key in r
    by = {(r["trial"], r["k"]): r for r in rep.records}
    for t in range(2):
        u = [by[(t, k)]["unreachable"] for k in (2, 5, 1499)]
        assert u == sorted(u, reverse=True)
        assert by[(t, 0)]["unreachable"] == 0 and by[(t, 1499)]["unreachable"] == 0
    assert {row["k"] for row in rep.summary} == {0, 2, 5, 1499}
    assert "total_s_median" in rep.summary[0]


def test_timing_counts_reproducible_and_error_recorded():
    ds = gen_two_clusters(300, seed=3)
    kw = dict(ks=[5], goal_count=4, trials=2, params=MetricParams(2, 8), seed=5)
    a, b = run_timing_experiment(ds, **kw), run_timing_experiment(ds, **kw)
    strip = lambda rep: [{k: v for k, v in r.items() if not k.endswith("_s")} for r in rep.records]
    assert strip(a) == strip(b)
    assert all(0.0 <= r["error"] <= 1.0 for r in a.records)


def test_report_serialisation():
    rep = ExperimentReport("x", {"seed": 1}, [{"a": 1, "b": float("inf")}, {"a": np.int64(2), "c": 0.1}])
    body = json.loads(rep.to_json())
    assert body["records"][0]["b"] == "inf" and body["records"][1]["a"] == 2
    assert rep.to_csv().splitlines() == ["a,b,c", "1,inf,", "2,,0.1"]
