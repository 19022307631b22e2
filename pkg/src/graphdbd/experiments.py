"""Experiment runners: density/DBD convergence and Dijkstra* vs k-NN timing."""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .classify import LabeledDataset
from .data import fmt_float, gen_uniform_square
from .metric import MetricParams, as_pointset, density_from_nn_distance, pairwise_lp
from .nn_index import NnIndex
from .search import GoalSet, build_knn_graph, dijkstra_knn, dijkstra_star

log = logging.getLogger(__name__)

PERCENTILES = (25.0, 50.0, 75.0)


@dataclass
class ExperimentReport:
    """Run metadata plus one record per (trial, configuration).

    ``summary`` holds per-configuration aggregates (means, medians, spreads).
    """

    kind: str
    metadata: dict
    records: list = field(default_factory=list)
    summary: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(_jsonable(self.to_dict()), indent=indent, sort_keys=False)

    def to_csv(self, which: str = "records") -> str:
        rows = getattr(self, which)
        keys = []
        for r in rows:
            keys.extend(k for k in r if k not in keys)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(keys)
        for r in rows:
            w.writerow([_cell(r.get(k, "")) for k in keys])
        return buf.getvalue()


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return fmt_float(float(v))
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        # JSON has no infinity; keep the CSV spelling
        return v if np.isfinite(v) else fmt_float(v)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


# ---------------------------------------------------------------------------
# convergence


def run_convergence_experiment(ns, trials: int, params: MetricParams = MetricParams(2.0, 2.0), seed: int = 0,
                               x0=(0.5, 0.5), density: bool = True, dbd: bool = True) -> ExperimentReport:
    """Density estimate at ``x0`` and sqrt(n) * DBD between the corners of
    [0,1]^2, over ``trials`` fresh uniform samples per n.

    Corner points (0,0) and (1,1) are appended to each DBD sample; the density
    estimate uses the bare sample so ``x0`` is never a member.
    """
    ns = [int(n) for n in ns]
    if ns != sorted(ns):
        raise ValueError("ns must be ascending")
    x0 = np.asarray(x0, dtype=np.float64)
    rng = np.random.default_rng(seed)
    report = ExperimentReport("convergence", {"ns": ns, "trials": trials, "p": params.p, "q": params.q,
                                              "seed": seed, "x0": x0.tolist(), "engine": "dbd"})
    corners = np.array([[0.0, 0.0], [1.0, 1.0]])
    for n in ns:
        dens, scaled = [], []
        for t in range(trials):
            sample = gen_uniform_square(n, 2, rng).points
            rec = {"n": n, "trial": t}
            if density:
                z = float(pairwise_lp(x0[None, :], sample, params.p).min())
                rec["density"] = density_from_nn_distance(z, n, 2, params.p).value
                dens.append(rec["density"])
            if dbd:
                pts = np.vstack((sample, corners))
                res = dijkstra_star(pts, [n], params)
                rec["dbd"] = float(res.cost[n + 1])
                rec["scaled_dbd"] = float(np.sqrt(n) * rec["dbd"])
                scaled.append(rec["scaled_dbd"])
            report.records.append(rec)
        row = {"n": n, "trials": trials}
        if density:
            for pc, v in zip(PERCENTILES, np.percentile(dens, PERCENTILES)):
                row[f"density_p{int(pc)}"] = float(v)
        if dbd:
            row["scaled_dbd_mean"] = float(np.mean(scaled))
            row["scaled_dbd_std"] = float(np.std(scaled)) if trials > 1 else 0.0
        report.summary.append(row)
        log.info("convergence n=%d %s", n, row)
    return report


# ---------------------------------------------------------------------------
# timing


def _knn_error(dataset, res, goals):
    if not isinstance(dataset, LabeledDataset) or dataset.truth is None:
        return None
    mask = np.ones(dataset.n, bool)
    mask[goals.indices] = False
    pred = res.source_label()
    return float(np.mean(pred[mask] != dataset.truth[mask]))


def run_timing_experiment(dataset, ks, goal_count: int = 100, trials: int = 3,
                          params: MetricParams = MetricParams(), seed: int = 0) -> ExperimentReport:
    """Wall time and operation counts of Dijkstra* against build_knn_graph +
    dijkstra_knn for each k, with a fresh random goal set per trial.

    Search time and index/graph construction time are recorded separately;
    ``total_s`` is their sum. If ``dataset`` carries ground truth, goals take
    their true labels and each record includes the 1-NN error on the rest.
    """
    points = dataset.points if isinstance(dataset, LabeledDataset) else as_pointset(dataset)
    ks = [int(k) for k in ks]
    rng = np.random.default_rng(seed)
    report = ExperimentReport("timing", {"n": points.n, "d": points.d, "p": params.p, "q": params.q, "ks": ks,
                                         "goal_count": goal_count, "trials": trials, "seed": seed})
    truth = dataset.truth if isinstance(dataset, LabeledDataset) else None
    for t in range(trials):
        idx = np.sort(rng.choice(points.n, goal_count, replace=False))
        goals = GoalSet(idx, None if truth is None else truth[idx])
        base = {"trial": t, "p": params.p, "q": params.q, "seed": seed, "n": points.n, "d": points.d}

        t0 = time.perf_counter()
        index = NnIndex.build(points, params.p)
        t1 = time.perf_counter()
        res = dijkstra_star(points, goals, params, index=index)
        t2 = time.perf_counter()
        rec = dict(base, engine="dbd", k=0, build_s=t1 - t0, search_s=t2 - t1, total_s=t2 - t0,
                   unreachable=res.unreachable_count, **res.stats)
        err = _knn_error(dataset, res, goals)
        if err is not None:
            rec["error"] = err
        report.records.append(rec)
        log.info("trial %d dbd total %.3fs", t, rec["total_s"])

        for k in ks:
            t0 = time.perf_counter()
            graph = build_knn_graph(points, k, params)
            t1 = time.perf_counter()
            res = dijkstra_knn(graph, goals)
            t2 = time.perf_counter()
            rec = dict(base, engine="dbd-knn", k=k, build_s=t1 - t0, search_s=t2 - t1, total_s=t2 - t0,
                       unreachable=res.unreachable_count, **res.stats)
            err = _knn_error(dataset, res, goals)
            if err is not None:
                rec["error"] = err
            report.records.append(rec)
            log.info("trial %d k=%d total %.3fs unreachable %d", t, k, rec["total_s"], rec["unreachable"])

    for engine, k in [("dbd", 0)] + [("dbd-knn", k) for k in ks]:
        rows = [r for r in report.records if r["engine"] == engine and r["k"] == k]
        row = {"engine": engine, "k": k, "trials": len(rows)}
        for key in ("build_s", "search_s", "total_s", "unreachable", "pops", "max_queue", "nn_queries", "error"):
            vals = [r[key] for r in rows if key in r]
            if vals:
                row[f"{key}_mean"] = float(np.mean(vals))
                row[f"{key}_median"] = float(np.median(vals))
        report.summary.append(row)
    return report
