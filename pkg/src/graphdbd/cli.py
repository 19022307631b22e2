"""Command-line interface: ``graphdbd {classify,distances,bench,converge,synth}``.

Data goes to ``--out`` (default stdout); logs and diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys

import numpy as np

from . import __version__
from .classify import CvConfig, LabeledDataset, cross_validate_pq, error_rate, predict_1nn_dbd
from .data import DatasetFile, export_distances, fmt_float, gen_two_clusters, gen_uniform_square, load_dataset
from .experiments import ExperimentReport, run_convergence_experiment, run_timing_experiment
from .metric import InvalidInput, MetricParams
from .search import ENGINES, GoalSet, all_pairs_to_goals, run_engine

log = logging.getLogger("graphdbd")


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _add_metric(p):
    p.add_argument("--p", type=float, default=2.0, help="l_p norm order (default 2)")
    p.add_argument("--q", type=float, default=8.0, help="density exponent, weight = dist**q (default 8)")
    p.add_argument("--k", type=int, default=0, help="k-NN graph size; 0 or omitted searches the full graph")
    p.add_argument("--engine", choices=ENGINES, default="dbd")


def _add_output(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _add_input(p):
    p.add_argument("data", help="dataset path")
    p.add_argument("--input-format", choices=("csv", "idx", "libsvm"), default=None,
                   help="dataset format (guessed from the extension when omitted)")
    p.add_argument("--labels", default=None,
                   help="label column (name or position) for csv, or a label file")
    p.add_argument("--sentinel", default="?", help="missing-label marker (default '?')")
    p.add_argument("--dim", type=int, default=None, help="dimension for libsvm input")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphdbd", description="Graph density-based distances")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="1-NN labels for the unlabeled points")
    _add_input(p)
    _add_metric(p)
    _add_output(p)
    p.add_argument("--cv", action="store_true", help="pick (p, q) by cross-validation first")
    p.add_argument("--p-grid", type=_floats, default=[2.0])
    p.add_argument("--q-grid", type=_floats, default=[1.0, 2.0, 4.0, 8.0])
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--truth", default=None, help="file of true labels (one per point) to report the error")

    p = sub.add_parser("distances", help="export DBD to the labeled points")
    _add_input(p)
    _add_metric(p)
    _add_output(p)
    p.add_argument("--all-pairs", action="store_true", help="one column per goal instead of the closest goal")

    p = sub.add_parser("bench", help="Dijkstra* vs k-NN Dijkstra timing")
    p.add_argument("data", nargs="?", default=None, help="dataset path (default: synthetic uniform data)")
    p.add_argument("--input-format", choices=("csv", "idx", "libsvm"), default=None)
    p.add_argument("--labels", default=None)
    p.add_argument("--sentinel", default="?")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--ks", type=_ints, default=[15, 30, 100])
    p.add_argument("--goals", type=int, default=100)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--q", type=float, default=8.0)
    _add_output(p)

    p = sub.add_parser("converge", help="density and sqrt(n)-scaled DBD convergence")
    p.add_argument("--ns", type=_ints, default=[50, 200, 1000, 5000])
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--summary", action="store_true", help="emit per-n summary rows instead of per-trial records")
    _add_output(p)

    p = sub.add_parser("synth", help="write a synthetic dataset as csv")
    p.add_argument("kind", choices=("uniform", "clusters"))
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--separation", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.add_argument("--truth-out", default=None, help="clusters: also write the true labels, one per line")
    return parser


# ---------------------------------------------------------------------------


def _guess_format(path):
    name = os.path.basename(path).lower()
    if "idx" in name or name.endswith("-ubyte") or name.endswith("-ubyte.gz"):
        return "idx"
    if name.endswith((".svm", ".libsvm", ".svmlight")):
        return "libsvm"
    return "csv"


def _load(args) -> LabeledDataset:
    fmt = args.input_format or _guess_format(args.data)
    spec = DatasetFile(args.data, fmt, sentinel=args.sentinel, dim=args.dim)
    if args.labels is not None:
        if os.path.exists(args.labels):
            spec.label_file = args.labels
        else:
            spec.label_column = args.labels
    elif fmt == "idx":
        spec.label_column = None
    dataset = load_dataset(spec)
    log.info("loaded %d points in %d dims, %d labeled", dataset.n, dataset.points.d, dataset.labeled.size)
    return dataset


class _Output:
    """Writes to a file or stdout; nothing is written on failure."""

    def __init__(self, path):
        self.path = path

    def write(self, text: str) -> None:
        if self.path in (None, "-"):
            sys.stdout.write(text)
            sys.stdout.flush()
            return
        try:
            with open(self.path, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {self.path}: {exc.strerror or exc}") from exc


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt_float(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _params(args) -> MetricParams:
    return MetricParams(args.p, args.q)


def cmd_classify(args) -> int:
    dataset = _load(args)
    params = _params(args)
    k = args.k or None
    table = None
    if args.cv:
        cfg = CvConfig(args.p_grid, args.q_grid, args.folds, args.trials, args.seed)
        params, table = cross_validate_pq(dataset, cfg, args.engine, k)
        log.info("cv selected p=%g q=%g", params.p, params.q)
    pred = predict_1nn_dbd(dataset, params, args.engine, k)
    classes = dataset.classes
    err = None
    truth = dataset.truth
    if args.truth:
        with open(args.truth) as fh:
            raw = [line.strip() for line in fh if line.strip()]
        if len(raw) != dataset.n:
            raise InvalidInput(f"{args.truth}: {len(raw)} labels for {dataset.n} points")
        lookup = {int(c): i for i, c in enumerate(classes)}
        truth = np.array([lookup.get(int(float(v)), -2) for v in raw])
    if truth is not None:
        err = error_rate(pred, truth)
        log.info("error rate %.4f", err)
    log.info("%d unlabeled points, %d fallbacks", len(pred), int(pred.fallback.sum()))
    header = ("point_index", "label", "distance", "decisive_index", "fallback")
    rows = [(int(i), classes[int(c)].item(), float(dist), int(dec), int(fb))
            for i, c, dist, dec, fb in zip(pred.indices, pred.labels, pred.distance, pred.decisive, pred.fallback)]
    if args.format == "csv":
        _Output(args.out).write(_rows_csv(header, rows))
    else:
        report = ExperimentReport("classify", {"engine": args.engine, "p": params.p, "q": params.q, "k": args.k,
                                               "seed": args.seed, "n": dataset.n, "d": dataset.points.d},
                                  [dict(zip(header, r)) for r in rows],
                                  [{"error": err, **pred.stats}] + ([] if table is None else table))
        _Output(args.out).write(report.to_json() + "\n")
    return 0


def cmd_distances(args) -> int:
    dataset = _load(args)
    labeled = dataset.labeled
    if labeled.size == 0:
        raise InvalidInput("dataset has no labeled points")
    goals = GoalSet(labeled, dataset.labels[labeled])
    params = _params(args)
    k = args.k or None
    if args.all_pairs:
        result = all_pairs_to_goals(dataset.points, goals, params, args.engine, k)
    else:
        result = run_engine(dataset.points, goals, params, args.engine, k)
        log.info("unreachable points: %d", result.unreachable_count)
    if args.format == "csv":
        buf = io.StringIO()
        export_distances(result, buf, goals, dataset.classes)
        _Output(args.out).write(buf.getvalue())
    else:
        if args.all_pairs:
            body = {"goal_index": goals.indices.tolist(), "cost": result}
        else:
            body = {"cost": result.cost, "source": result.source, "predecessor": result.predecessor,
                    "unreachable": result.unreachable_count, "stats": result.stats}
        report = ExperimentReport("distances", {"engine": args.engine, "p": params.p, "q": params.q, "k": args.k,
                                                "seed": args.seed, "n": dataset.n}, [body])
        _Output(args.out).write(report.to_json() + "\n")
    return 0


def _report_out(args, report: ExperimentReport, which="records"):
    if args.format == "json":
        _Output(args.out).write(report.to_json() + "\n")
    else:
        _Output(args.out).write(report.to_csv(which))


def cmd_bench(args) -> int:
    params = MetricParams(args.p, args.q)
    if args.data:
        dataset = _load(args)
    else:
        dataset = gen_uniform_square(args.n, args.d, args.seed)
    report = run_timing_experiment(dataset, args.ks, args.goals, args.trials, params, args.seed)
    for row in report.summary:
        log.info("%s", row)
    _report_out(args, report)
    return 0


def cmd_converge(args) -> int:
    report = run_convergence_experiment(args.ns, args.trials, MetricParams(args.p, args.q), args.seed)
    _report_out(args, report, "summary" if args.summary else "records")
    return 0


def cmd_synth(args) -> int:
    if args.kind == "uniform":
        pts = gen_uniform_square(args.n, args.d, args.seed).points
        rows = [tuple(float(v) for v in r) for r in pts]
        header = tuple(f"x{j + 1}" for j in range(pts.shape[1]))
    else:
        ds = gen_two_clusters(args.n, args.separation, args.noise, args.seed)
        rows = [(float(x), float(y), "?" if lab < 0 else int(lab)) for (x, y), lab in zip(ds.points.points, ds.labels)]
        header = ("x1", "x2", "label")
        if args.truth_out:
            _Output(args.truth_out).write("".join(f"{int(t)}\n" for t in ds.truth))
    _Output(args.out).write(_rows_csv(header, rows))
    return 0


COMMANDS = {"classify": cmd_classify, "distances": cmd_distances, "bench": cmd_bench,
            "converge": cmd_converge, "synth": cmd_synth}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s", force=True)
    try:
        return COMMANDS[args.command](args)
    except (InvalidInput, OSError, ValueError) as exc:
        print(f"graphdbd {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
