"""Euclidean clustering of node embeddings.

Every clusterer is deterministic given (embedding, seed) and only looks at
distances, so results do not change under an orthogonal rotation of the
rows. Seeding is furthest-point: a seeded first center, then repeatedly the
row farthest from all chosen centers. A warm start (labels or memberships
from the previous snapshot) replaces seeding with the group means.
"""

import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning

from geodesic_dcd.errors import DegenerateInputError, RankError

MAX_ITER = 300
TOL = 1e-6
DEFAULT_FUZZIFIER = 2.0

EmbeddingRows = np.ndarray


@dataclass(frozen=True, eq=False)
class ClusterResult:
    """Output of a clusterer; exactly one of labels/memberships is set."""

    centers: np.ndarray
    inertia: float
    labels: Optional[np.ndarray] = None
    memberships: Optional[np.ndarray] = None
    n_iter: int = 0
    empty_clusters: Tuple[int, ...] = ()

    @property
    def k_c(self) -> int:
        return self.centers.shape[0]

    @property
    def is_soft(self) -> bool:
        return self.memberships is not None

    def hard_labels(self) -> np.ndarray:
        if self.labels is not None:
            return self.labels
        return np.argmax(self.memberships, axis=1)


def _rows(emb: EmbeddingRows, k_c: Optional[int] = None) -> np.ndarray:
    X = np.asarray(emb, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.size == 0:
        raise DegenerateInputError("empty embedding")
    if not np.all(np.isfinite(X)):
        raise DegenerateInputError("embedding has non-finite entries")
    if k_c is not None and not 1 <= k_c <= X.shape[0]:
        raise RankError(f"k_c={k_c} must lie in [1, {X.shape[0]}]")
    return X


def row_normalize(emb: EmbeddingRows) -> np.ndarray:
    """L2-normalize rows; zero rows stay zero."""
    X = np.asarray(emb, dtype=np.float64)
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    return np.divide(X, norms, out=np.zeros_like(X), where=norms > 0)


def furthest_point_centers(X: np.ndarray, k_c: int, seed: int,
                           metric: str = "euclidean",
                           initial: Optional[np.ndarray] = None) -> np.ndarray:
    """Greedy furthest-point seeding, optionally extending ``initial`` centers."""
    rng = np.random.default_rng(seed)
    centers = [] if initial is None else [c for c in np.atleast_2d(initial)]
    if not centers:
        centers.append(X[rng.integers(X.shape[0])])
    nearest = cdist(X, np.array(centers), metric=metric).min(axis=1)
    while len(centers) < k_c:
        pick = int(np.argmax(nearest))
        centers.append(X[pick])
        nearest = np.minimum(nearest, cdist(X, X[pick:pick + 1], metric=metric)[:, 0])
    return np.array(centers[:k_c])


def _warm_centers(X: np.ndarray, k_c: int, warm_start: np.ndarray, seed: int,
                  metric: str = "euclidean", median: bool = False) -> np.ndarray:
    """Centers from a previous assignment; missing clusters get furthest-point fills."""
    warm = np.asarray(warm_start)
    if warm.shape[0] != X.shape[0]:
        raise DegenerateInputError("warm start does not match the embedding rows")
    if warm.ndim == 2:
        warm = np.argmax(warm, axis=1)
    warm = warm.astype(np.int64)

    present = [c for c in range(k_c) if np.any(warm == c)]
    if not present:
        return furthest_point_centers(X, k_c, seed, metric)
    reduce = np.median if median else np.mean
    found = np.array([reduce(X[warm == c], axis=0) for c in present])
    if len(present) == k_c:
        return found
    filled = furthest_point_centers(X, k_c, seed, metric, initial=found)
    centers = np.empty((k_c, X.shape[1]))
    missing = [c for c in range(k_c) if c not in present]
    centers[present] = found
    centers[missing] = filled[len(present):]
    return centers


def kmeans(emb: EmbeddingRows, k_c: int, seed: int = 0,
           warm_start: Optional[np.ndarray] = None,
           max_iter: int = MAX_ITER, tol: float = TOL) -> ClusterResult:
    """Lloyd k-means from furthest-point or warm-start centers.

    Raises:
        RankError: k_c > number of rows
        DegenerateInputError: Empty or non-finite embedding
    """
    X = _rows(emb, k_c)
    if warm_start is not None:
        init = _warm_centers(X, k_c, warm_start, seed)
    else:
        init = furthest_point_centers(X, k_c, seed)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        model = KMeans(n_clusters=k_c, init=init, n_init=1, max_iter=max_iter, tol=tol,
                       algorithm="lloyd", random_state=seed).fit(X)

    labels = model.labels_.astype(np.int64)
    empty = tuple(int(c) for c in range(k_c) if not np.any(labels == c))
    return ClusterResult(centers=model.cluster_centers_, inertia=float(model.inertia_),
                         labels=labels, n_iter=int(model.n_iter_), empty_clusters=empty)


def sign_split(emb: EmbeddingRows) -> ClusterResult:
    """Two clusters by sign of a one-dimensional embedding; zeros join cluster 0.

    An empty side is reported in ``empty_clusters`` and its center is 0.
    """
    X = _rows(emb)
    if X.shape[1] != 1:
        raise RankError(f"sign_split needs a 1-dimensional embedding, got {X.shape[1]}")
    u = X[:, 0]
    labels = (u < 0).astype(np.int64)
    centers = np.zeros((2, 1))
    empty = []
    for c in (0, 1):
        members = u[labels == c]
        if len(members):
            centers[c, 0] = members.mean()
        else:
            empty.append(c)
    inertia = float(np.sum((u - centers[labels, 0]) ** 2))
    return ClusterResult(centers=centers, inertia=inertia, labels=labels,
                         empty_clusters=tuple(empty))


def kmedians(emb: EmbeddingRows, k_c: int, seed: int = 0,
             warm_start: Optional[np.ndarray] = None,
             max_iter: int = MAX_ITER, tol: float = TOL) -> ClusterResult:
    """k-medians: L1 assignment, coordinatewise-median centers.

    An empty cluster takes the row farthest (L1) from its current center.
    """
    X = _rows(emb, k_c)
    if warm_start is not None:
        centers = _warm_centers(X, k_c, warm_start, seed, metric="cityblock", median=True)
    else:
        centers = furthest_point_centers(X, k_c, seed, metric="cityblock")

    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        dist = cdist(X, centers, metric="cityblock")
        labels = np.argmin(dist, axis=1)
        for c in range(k_c):
            if not np.any(labels == c):
                own = dist[np.arange(len(X)), labels]
                # only rows whose cluster keeps another member may move
                counts = np.bincount(labels, minlength=k_c)
                own[counts[labels] <= 1] = -np.inf
                labels[int(np.argmax(own))] = c
        updated = np.array([np.median(X[labels == c], axis=0) for c in range(k_c)])
        shift = np.abs(updated - centers).max()
        centers = updated
        if shift < tol:
            break

    dist = cdist(X, centers, metric="cityblock")
    labels = np.argmin(dist, axis=1).astype(np.int64)
    empty = tuple(int(c) for c in range(k_c) if not np.any(labels == c))
    return ClusterResult(centers=centers, inertia=float(dist[np.arange(len(X)), labels].sum()),
                         labels=labels, n_iter=n_iter, empty_clusters=empty)


def _fuzzy_memberships(X: np.ndarray, centers: np.ndarray,
                       m: float) -> Tuple[np.ndarray, np.ndarray]:
    dist = cdist(X, centers)
    memberships = np.empty_like(dist)
    on_center = dist <= 0.0
    hit = on_center.any(axis=1)
    # a row on a center belongs to it (shared equally between coincident centers)
    memberships[hit] = on_center[hit] / on_center[hit].sum(axis=1, keepdims=True)
    if np.any(~hit):
        inv = dist[~hit] ** (-2.0 / (m - 1.0))
        memberships[~hit] = inv / inv.sum(axis=1, keepdims=True)
    return memberships, dist


def fuzzy_cmeans(emb: EmbeddingRows, k_c: int, m: float = DEFAULT_FUZZIFIER, seed: int = 0,
                 warm_start: Optional[np.ndarray] = None,
                 max_iter: int = MAX_ITER, tol: float = TOL) -> ClusterResult:
    """Fuzzy c-means fixed-point iteration; membership rows sum to 1.

    Raises:
        DegenerateInputError: m <= 1
    """
    if m <= 1:
        raise DegenerateInputError(f"fuzzifier must exceed 1, got {m}")
    X = _rows(emb, k_c)
    if warm_start is not None and np.ndim(warm_start) == 2:
        weights = np.asarray(warm_start, dtype=np.float64) ** m
        totals = weights.sum(axis=0)
        if weights.shape[1] == k_c and np.all(totals > 0):
            centers = (weights.T @ X) / totals[:, None]
        else:
            centers = _warm_centers(X, k_c, warm_start, seed)
    elif warm_start is not None:
        centers = _warm_centers(X, k_c, warm_start, seed)
    else:
        centers = furthest_point_centers(X, k_c, seed)

    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        memberships, _ = _fuzzy_memberships(X, centers, m)
        weights = memberships ** m
        updated = (weights.T @ X) / weights.sum(axis=0)[:, None]
        shift = np.abs(updated - centers).max()
        centers = updated
        if shift < tol:
            break

    memberships, dist = _fuzzy_memberships(X, centers, m)
    inertia = float(np.sum((memberships ** m) * dist ** 2))
    return ClusterResult(centers=centers, inertia=inertia, memberships=memberships, n_iter=n_iter)


def soft_membership_from_centers(emb: EmbeddingRows, centers: np.ndarray) -> np.ndarray:
    """Project rows onto span(centers): least-squares coefficients, clamped, row-normalized.

    Rows whose coefficients are all nonpositive get the uniform membership.

    Raises:
        RankError: The centers are linearly dependent
    """
    X = _rows(emb)
    C = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    if C.shape[1] != X.shape[1]:
        raise DegenerateInputError("centers and rows differ in dimension")
    if np.linalg.matrix_rank(C) < C.shape[0]:
        raise RankError("cluster centers are linearly dependent")
    coeffs, *_ = np.linalg.lstsq(C.T, X.T, rcond=None)
    coeffs = np.clip(coeffs.T, 0.0, None)
    sums = coeffs.sum(axis=1, keepdims=True)
    uniform = np.full_like(coeffs, 1.0 / C.shape[0])
    return np.where(sums > 0, coeffs / np.where(sums > 0, sums, 1.0), uniform)


def switch_penalized_paths(scores: np.ndarray, switch_cost: float) -> np.ndarray:
    """Per-node label paths maximizing total score minus ``switch_cost`` per change.

    ``scores[i, l, c]`` rewards node l for label c at snapshot i. Each node
    is an independent k-state Viterbi problem; the recursion runs over all
    nodes at once. On ties a node keeps its label.

    Returns:
        T×d integer labels

    Raises:
        DegenerateInputError: scores is not T×d×k or switch_cost is negative
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 3 or 0 in scores.shape:
        raise DegenerateInputError(f"scores must be a nonempty T×d×k array, got {scores.shape}")
    if switch_cost < 0:
        raise DegenerateInputError("switch_cost must be nonnegative")
    T, d, k = scores.shape
    nodes = np.arange(d)
    stay_ids = np.broadcast_to(np.arange(k), (d, k))

    best = scores[0].copy()
    back = np.zeros((T, d, k), dtype=np.int64)
    for i in range(1, T):
        leader = np.argmax(best, axis=1)
        moved = best[nodes, leader] - switch_cost
        move = moved[:, None] > best
        back[i] = np.where(move, leader[:, None], stay_ids)
        best = np.where(move, moved[:, None], best) + scores[i]

    paths = np.empty((T, d), dtype=np.int64)
    paths[-1] = np.argmax(best, axis=1)
    for i in range(T - 1, 0, -1):
        paths[i - 1] = back[i][nodes, paths[i]]
    return paths
