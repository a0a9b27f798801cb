"""Top-layer load-driven clustering of SBSs (overload-ranked k-means + Calinski-Harabasz)."""
from dataclasses import dataclass, field
import logging

import numpy as np
from sklearn.metrics import calinski_harabasz_score

from .errors import ClusteringError

logger = logging.getLogger(__name__)

MAX_KMEANS_ITERATIONS = 100
MAX_DEFAULT_CLUSTERS = 6


@dataclass
class LoadHistory:
    """Per-SBS load samples over one stage, shape (T, N)."""
    loads: np.ndarray
    stage_start: int = 0

    def __post_init__(self):
        self.loads = np.atleast_2d(np.asarray(self.loads, dtype=float))
        if np.any(self.loads < 0):
            raise ClusteringError("load history entries must be >= 0")

    @property
    def length(self):
        return 0 if self.loads.size == 0 else self.loads.shape[0]


@dataclass
class ClusterAssignment:
    H: int
    membership: np.ndarray          # SBS id -> cluster index
    centroids: np.ndarray           # (H, 2)
    sse_history: list = field(default_factory=list)
    candidate_scores: dict = field(default_factory=dict)   # H -> CH score, filled by select_num_clusters

    @property
    def sse(self):
        return self.sse_history[-1]

    def clusters(self):
        """SBS ids per cluster, clusters in index order, ids ascending."""
        return [np.flatnonzero(self.membership == h).tolist() for h in range(self.H)]


def sse(positions, membership, centroids):
    diff = positions - centroids[membership]
    return float(np.sum(diff * diff))


def stage_averaged_load(history):
    if not isinstance(history, LoadHistory):
        history = LoadHistory(history)
    if history.length < 1:
        raise ClusteringError("load history is empty")
    return history.loads.mean(axis=0)


def init_centroids(avg_loads, positions, H):
    """Positions of the H most loaded SBSs (ties broken by lower id)."""
    avg_loads = np.asarray(avg_loads, dtype=float)
    positions = np.asarray(positions, dtype=float)
    n = len(avg_loads)
    if not 1 <= H <= n:
        raise ClusteringError(f"H must be in [1, {n}], got {H}")
    order = np.lexsort((np.arange(n), -avg_loads))
    return positions[order[:H]].copy()


def _assign(positions, centroids):
    d2 = np.sum((positions[:, None, :] - centroids[None, :, :]) ** 2, axis=-1)
    return np.argmin(d2, axis=1)   # first minimum -> lower cluster index


def _repair_empty(positions, labels, centroids):
    """Give each empty cluster the point farthest from its own centroid."""
    H = len(centroids)
    for h in range(H):
        counts = np.bincount(labels, minlength=H)
        if counts[h]:
            continue
        dist = np.sum((positions - centroids[labels]) ** 2, axis=1)
        dist[counts[labels] <= 1] = -np.inf
        p = int(np.argmax(dist))
        logger.debug(f"⚠️ [Clustering] Cluster {h} emptied; re-seeding with SBS {p}")
        labels[p] = h
    return labels


def run_kmeans(positions, initial_centroids, max_iter=MAX_KMEANS_ITERATIONS):
    positions = np.asarray(positions, dtype=float)
    centroids = np.array(initial_centroids, dtype=float)
    if centroids.size == 0:
        raise ClusteringError("need at least one initial centroid")
    H = len(centroids)
    if H > len(positions):
        raise ClusteringError(f"{H} centroids for {len(positions)} SBSs")

    history = []
    for _ in range(max_iter):
        labels = _repair_empty(positions, _assign(positions, centroids), centroids)
        updated = np.array([positions[labels == h].mean(axis=0) for h in range(H)])
        history.append(sse(positions, labels, updated))
        if np.array_equal(updated, centroids):
            break
        centroids = updated
    else:
        logger.warning(f"⚠️ [Clustering] k-means hit the {max_iter}-iteration cap")
    return ClusterAssignment(H=H, membership=labels, centroids=updated, sse_history=history)


def calinski_harabasz(assignment, positions):
    """Between/within dispersion ratio; +inf when every cluster is a single point."""
    positions = np.asarray(positions, dtype=float)
    n, H = len(positions), assignment.H
    if not 1 < H < n:
        raise ClusteringError(f"Calinski-Harabasz undefined for H={H}, N={n}")
    labels = assignment.membership
    means = np.array([positions[labels == h].mean(axis=0) for h in range(H)])
    if sse(positions, labels, means) == 0.0:
        return float("inf")
    return float(calinski_harabasz_score(positions, labels))


def default_h_range(n_sbs):
    return list(range(2, min(MAX_DEFAULT_CLUSTERS, n_sbs - 1) + 1))


def select_num_clusters(positions, avg_loads, h_range):
    """Best-scoring k-means partition over the candidate cluster counts (ties -> smaller H)."""
    positions = np.asarray(positions, dtype=float)
    n = len(positions)
    candidates = sorted(set(int(h) for h in h_range))
    if not candidates:
        raise ClusteringError("H range is empty")
    if candidates[0] < 2 or candidates[-1] > n - 1:
        raise ClusteringError(f"H range must lie within [2, {n - 1}]")

    best, best_score, scores = None, -np.inf, {}
    for H in candidates:
        result = run_kmeans(positions, init_centroids(avg_loads, positions, H))
        score = calinski_harabasz(result, positions)
        scores[H] = score
        logger.debug(f"    [Clustering] H={H}: CH={score:.3f} SSE={result.sse_history[-1]:.1f}")
        if best is None or score > best_score:
            best, best_score = result, score
    best.candidate_scores = scores
    return best


class LoadDrivenClusterer:
    """Stage-boundary clustering controller for the top layer."""

    def __init__(self, h_range=None):
        self.h_range = h_range

    def cluster(self, positions, history):
        positions = np.asarray(positions, dtype=float)
        n = len(positions)
        avg = stage_averaged_load(history)
        h_range = self.h_range if self.h_range is not None else default_h_range(n)
        h_range = [h for h in h_range if 2 <= h <= n - 1]
        if not h_range:
            # too few SBSs to split: one cluster holds everything
            return single_cluster(n, positions)
        result = select_num_clusters(positions, avg, h_range)
        logger.info(f"🧭 [Clustering] Selected H={result.H} clusters: {result.clusters()}")
        return result


def single_cluster(n_sbs, positions):
    """Centralized architecture: one cluster over every SBS."""
    positions = np.asarray(positions, dtype=float)
    centroid = positions.mean(axis=0, keepdims=True)
    membership = np.zeros(n_sbs, dtype=int)
    return ClusterAssignment(H=1, membership=membership, centroids=centroid,
                             sse_history=[sse(positions, membership, centroid)])
