"""Graph density-based distances: Dijkstra* over the implicit complete graph,
k-NN baselines, and 1-NN semi-supervised classification."""

__version__ = "0.1.0"

from .classify import (UNLABELED, CvConfig, LabeledDataset, Prediction, cross_validate_pq, error_rate,
                       majority_label, predict_1nn_dbd)
from .data import (DatasetError, DatasetFile, export_distances, gen_two_clusters, gen_uniform_square,
                   load_dataset, read_distances, read_idx, write_idx)
from .experiments import ExperimentReport, run_convergence_experiment, run_timing_experiment
from .metric import (DensityEstimate, InvalidInput, MetricParams, PointSet, edge_weight, lp_ball_volume,
                     lp_distance, nn_density_estimate)
from .nn_index import NnIndex, knn
from .search import (ENGINES, ClosedPathArena, DijkstraStar, GoalSet, KnnGraph, NotReached, QueueEntry,
                     SearchQueue, ShortestPathResult, all_pairs_to_goals, build_knn_graph, dijkstra_knn,
                     dijkstra_star, euclid_distances, isomap_distances, push_next, reconstruct_path, run_engine)
