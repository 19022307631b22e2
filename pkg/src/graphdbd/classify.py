"""1-NN classification on density-based distances, plus (p, q) selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .metric import InvalidInput, MetricParams, PointSet, as_pointset
from .search import GoalSet, run_engine

log = logging.getLogger(__name__)

UNLABELED = -1


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Points with class ids in ``[0, label_count)`` or ``UNLABELED``.

    ``classes`` maps class ids back to the raw label values; ``truth`` is the
    optional full ground truth (used by experiments, never by predictors).
    """

    points: PointSet
    labels: np.ndarray
    classes: np.ndarray = None
    truth: np.ndarray = None

    def __post_init__(self):
        points = as_pointset(self.points)
        labels = np.asarray(self.labels, dtype=np.int64).ravel()
        if labels.shape[0] != points.n:
            raise InvalidInput(f"{labels.shape[0]} labels for {points.n} points")
        count = int(labels.max()) + 1 if labels.size else 0
        classes = np.arange(max(count, 0)) if self.classes is None else np.asarray(self.classes)
        if count > classes.size or labels.min(initial=0) < UNLABELED:
            raise InvalidInput("labels must lie in [0, label_count) or be UNLABELED")
        truth = None
        if self.truth is not None:
            truth = np.asarray(self.truth, dtype=np.int64).ravel()
            if truth.shape != labels.shape:
                raise InvalidInput("truth and labels differ in length")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "truth", truth)

    @property
    def n(self) -> int:
        return self.points.n

    @property
    def label_count(self) -> int:
        return int(self.classes.size)

    @property
    def labeled(self) -> np.ndarray:
        return np.flatnonzero(self.labels != UNLABELED)

    @property
    def unlabeled(self) -> np.ndarray:
        return np.flatnonzero(self.labels == UNLABELED)

    def with_labels(self, labels) -> "LabeledDataset":
        return LabeledDataset(self.points, labels, self.classes, self.truth)


@dataclass
class Prediction:
    """Predicted class per unlabeled point (``indices``)."""

    indices: np.ndarray
    labels: np.ndarray
    distance: np.ndarray
    decisive: np.ndarray  # point index of the deciding labeled point, -1 on fallback
    fallback: np.ndarray  # True where the point was unreachable from every goal
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return self.indices.size


def majority_label(labels: np.ndarray) -> int:
    """Most frequent class id; ties go to the smallest id."""
    return int(np.argmax(np.bincount(labels)))


def predict_1nn_dbd(dataset: LabeledDataset, params: MetricParams = MetricParams(), engine: str = "dbd",
                    k: int | None = None) -> Prediction:
    """Label every unlabeled point with the class of its closest goal.

    Points unreachable on a k-NN graph get the majority labeled class and are
    flagged in ``fallback``.
    """
    labeled = dataset.labeled
    if labeled.size == 0:
        raise InvalidInput("dataset has no labeled points")
    goals = GoalSet(labeled, dataset.labels[labeled])
    result = run_engine(dataset.points, goals, params, engine, k)
    idx = dataset.unlabeled
    src = result.source[idx]
    fallback = src < 0
    labels = np.where(fallback, majority_label(goals.labels), goals.labels[np.maximum(src, 0)])
    decisive = np.where(fallback, -1, goals.indices[np.maximum(src, 0)])
    stats = dict(result.stats, unreachable=int(result.unreachable_count))
    return Prediction(idx, labels.astype(np.int64), result.cost[idx], decisive, fallback, stats)


def error_rate(pred: Prediction, truth) -> float:
    """Fraction of predicted points whose label differs from ``truth``.

    ``truth`` is indexed by point, i.e. has one entry per dataset point.
    """
    truth = np.asarray(truth)
    if len(pred) == 0:
        return 0.0
    return float(np.mean(pred.labels != truth[pred.indices]))


@dataclass
class CvConfig:
    p_grid: list = field(default_factory=lambda: [2.0])
    q_grid: list = field(default_factory=lambda: [1.0, 2.0, 4.0, 8.0])
    folds: int = 10
    trials: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.p_grid or not self.q_grid:
            raise InvalidInput("p_grid and q_grid must be nonempty")
        if self.folds < 2:
            raise InvalidInput("folds must be >= 2")
        if self.trials < 1:
            raise InvalidInput("trials must be >= 1")


def cross_validate_pq(dataset: LabeledDataset, config: CvConfig = CvConfig(), engine: str = "dbd",
                      k: int | None = None):
    """k-fold cross-validation of (p, q) over the labeled points.

    Held-out labeled points stay in the graph as unlabeled nodes. Returns the
    selected ``MetricParams`` and one row per grid cell with its mean error;
    ties prefer smaller q, then smaller p.
    """
    labeled = dataset.labeled
    if config.folds > labeled.size:
        raise InvalidInput(f"{config.folds} folds but only {labeled.size} labeled points")
    splits = []
    for trial in range(config.trials):
        rng = np.random.default_rng(config.seed + trial)
        splits.extend(np.array_split(rng.permutation(labeled), config.folds))

    table = []
    for p in config.p_grid:
        for q in config.q_grid:
            params = MetricParams(float(p), float(q))
            errors = []
            for held in splits:
                labels = dataset.labels.copy()
                labels[held] = UNLABELED
                pred = predict_1nn_dbd(dataset.with_labels(labels), params, engine, k)
                mask = np.isin(pred.indices, held)
                errors.append(float(np.mean(pred.labels[mask] != dataset.labels[pred.indices[mask]])))
            table.append({"p": params.p, "q": params.q, "error": float(np.mean(errors)), "fold_errors": errors})
            log.debug("cv p=%g q=%g error=%.4f", params.p, params.q, table[-1]["error"])
    best = min(table, key=lambda row: (row["error"], row["q"], row["p"]))
    return MetricParams(best["p"], best["q"]), table
