"""Partition scoring: AMI, element-centric similarity, modularity, label alignment."""

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
import pandas as pd
from scipy.optimize import linear_sum_assignment
from sklearn.metrics import adjusted_mutual_info_score

from geodesic_dcd.core.graph import GraphSnapshot, PartitionSequence
from geodesic_dcd.errors import DegenerateInputError, InvariantViolation

ECS_ALPHA = 0.9
SOFT_THRESHOLD = 0.2
METRICS = ("ami", "ecs")


def ami(labels_a: np.ndarray, labels_b: np.ndarray) -> float:
    """Adjusted mutual information (permutation model, max normalization)."""
    a = np.asarray(labels_a).reshape(-1)
    b = np.asarray(labels_b).reshape(-1)
    if len(a) != len(b):
        raise InvariantViolation("length-mismatch", f"{len(a)} vs {len(b)} labels")
    if len(a) == 0:
        raise DegenerateInputError("AMI of empty labelings")
    return float(adjusted_mutual_info_score(a, b, average_method="max"))


def _binarize(memberships: np.ndarray, threshold: Optional[float]) -> np.ndarray:
    """Threshold soft rows; a row with nothing above threshold keeps its argmax."""
    m = np.asarray(memberships, dtype=np.float64)
    if threshold is None or np.all((m == 0) | (m == 1)):
        return m
    binary = (m > threshold).astype(np.float64)
    empty = binary.sum(axis=1) == 0
    binary[empty, np.argmax(m[empty], axis=1)] = 1.0
    return binary


def _affinity(memberships: np.ndarray, alpha: float) -> np.ndarray:
    """Personalized-PageRank affinities of the element-cluster random walk."""
    m = memberships[:, memberships.sum(axis=0) > 0]
    to_cluster = m / m.sum(axis=1, keepdims=True)
    to_element = m / m.sum(axis=0, keepdims=True)
    walk = to_cluster @ to_element.T
    d = walk.shape[0]
    return (1.0 - alpha) * np.linalg.inv(np.eye(d) - alpha * walk)


def _hard_affinity(labels: np.ndarray, alpha: float) -> np.ndarray:
    _, inverse, counts = np.unique(labels, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    same = inverse[:, None] == inverse[None, :]
    within = np.where(same, alpha / counts[inverse][:, None], 0.0)
    return within + (1.0 - alpha) * np.eye(len(labels))


def _indicator(labels: np.ndarray) -> np.ndarray:
    _, inverse = np.unique(labels, return_inverse=True)
    inverse = inverse.reshape(-1)
    out = np.zeros((len(inverse), inverse.max() + 1))
    out[np.arange(len(inverse)), inverse] = 1.0
    return out


def ecs(membership_a: np.ndarray, membership_b: np.ndarray, alpha: float = ECS_ALPHA,
        threshold: Optional[float] = SOFT_THRESHOLD) -> float:
    """Element-centric similarity of two clusterings.

    Each clustering becomes a d×d affinity matrix p (for a partition,
    p_ij = alpha/|C| + (1 - alpha)δ_ij within a cluster); an element scores
    1 - (1/2) Σ_j |p1_ij - p2_ij| and the similarity is the mean score.

    Args:
        membership_a: Hard labels (length d) or a d×k membership matrix
        membership_b: Same, for the other clustering
        alpha: Random-walk continuation probability
        threshold: Soft memberships above this count as affiliations;
            None keeps soft weights
    """
    a = np.asarray(membership_a)
    b = np.asarray(membership_b)
    if a.shape[0] != b.shape[0]:
        raise InvariantViolation("shape-mismatch", f"{a.shape[0]} vs {b.shape[0]} elements")
    if a.shape[0] == 0:
        raise DegenerateInputError("E-cS of empty clusterings")

    if a.ndim == 1 and b.ndim == 1:
        p1, p2 = _hard_affinity(a, alpha), _hard_affinity(b, alpha)
    else:
        ma = _indicator(a) if a.ndim == 1 else _binarize(a, threshold)
        mb = _indicator(b) if b.ndim == 1 else _binarize(b, threshold)
        p1, p2 = _affinity(ma, alpha), _affinity(mb, alpha)
    scores = 1.0 - 0.5 * np.abs(p1 - p2).sum(axis=1)
    return float(scores.mean())


def modularity(snapshot: GraphSnapshot, labels: np.ndarray) -> float:
    """Newman-Girvan modularity on the symmetrized absolute adjacency (summed over views)."""
    A = snapshot.symmetrized_abs()
    labels = np.asarray(labels)
    if labels.ndim == 2:
        labels = np.argmax(labels, axis=1)
    if len(labels) != A.shape[0]:
        raise InvariantViolation("length-mismatch", f"{len(labels)} labels for d={A.shape[0]}")
    vol = A.sum()
    if vol <= 0:
        raise DegenerateInputError("modularity of an empty graph")
    deg = A.sum(axis=1)
    _, inverse = np.unique(labels, return_inverse=True)
    inverse = inverse.reshape(-1)
    indicator = np.zeros((len(labels), inverse.max() + 1))
    indicator[np.arange(len(labels)), inverse] = 1.0
    within = np.einsum('ic,ij,jc->', indicator, A, indicator)
    totals = indicator.T @ deg
    return float(within / vol - np.sum((totals / vol) ** 2))


def label_mapping(prev: np.ndarray, curr: np.ndarray, n_ids: Optional[int] = None) -> np.ndarray:
    """Bijection of [0, n_ids) sending ``curr`` ids to ``prev`` ids with maximum overlap.

    n_ids defaults to max(k_prev, k_curr). Ids of ``prev`` at or above
    n_ids are ignored; ids unused by ``curr`` still get a distinct image.
    """
    prev = np.asarray(prev, dtype=np.int64).reshape(-1)
    curr = np.asarray(curr, dtype=np.int64).reshape(-1)
    if len(prev) != len(curr):
        raise InvariantViolation("length-mismatch", f"{len(prev)} vs {len(curr)} labels")
    k_prev = int(prev.max()) + 1 if len(prev) else 0
    k_curr = int(curr.max()) + 1 if len(curr) else 0
    if n_ids is None:
        n_ids = max(k_prev, k_curr, 1)
    if n_ids < k_curr:
        raise InvariantViolation("label-range", f"{k_curr} communities do not fit {n_ids} ids")

    overlap = np.zeros((n_ids, n_ids))
    usable = prev < n_ids
    np.add.at(overlap, (curr[usable], prev[usable]), 1.0)
    rows, cols = linear_sum_assignment(overlap, maximize=True)
    mapping = np.empty(n_ids, dtype=np.int64)
    mapping[rows] = cols
    return mapping


def align_labels(prev: np.ndarray, curr: np.ndarray, n_ids: Optional[int] = None) -> np.ndarray:
    """Relabel ``curr`` by maximum-overlap matching against ``prev``.

    Every community of ``curr`` gets a distinct id in [0, n_ids), n_ids
    defaulting to max(k_prev, k_curr); communities without a partner in
    ``prev`` take the unused ids.
    """
    curr = np.asarray(curr, dtype=np.int64).reshape(-1)
    if len(curr) == 0:
        return curr.copy()
    return label_mapping(prev, curr, n_ids)[curr]


def membership_permutation(prev: np.ndarray, curr: np.ndarray) -> np.ndarray:
    """Target column of each column of ``curr`` for the best overlap with ``prev``."""
    prev = np.asarray(prev, dtype=np.float64)
    curr = np.asarray(curr, dtype=np.float64)
    if prev.shape[0] != curr.shape[0]:
        raise InvariantViolation("shape-mismatch", f"{prev.shape[0]} vs {curr.shape[0]} rows")
    k = curr.shape[1]
    overlap = np.zeros((k, k))
    shared = min(k, prev.shape[1])
    overlap[:, :shared] = curr.T @ prev[:, :shared]
    rows, cols = linear_sum_assignment(overlap, maximize=True)
    permutation = np.empty(k, dtype=np.int64)
    permutation[rows] = cols
    return permutation


def permute_columns(memberships: np.ndarray, permutation: np.ndarray) -> np.ndarray:
    out = np.empty_like(memberships)
    out[:, permutation] = memberships
    return out


def align_memberships(prev: np.ndarray, curr: np.ndarray) -> np.ndarray:
    """Permute the columns of ``curr`` to best overlap the columns of ``prev``."""
    curr = np.asarray(curr, dtype=np.float64)
    return permute_columns(curr, membership_permutation(prev, curr))


@dataclass(frozen=True, eq=False)
class ScoreTrace:
    """Per-snapshot scores with median and quartile summary."""

    values: np.ndarray
    metric: str
    indices: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        indices = (np.arange(len(values)) if self.indices is None
                   else np.asarray(self.indices, dtype=np.int64).reshape(-1))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "indices", indices)

    @property
    def summary(self) -> dict:
        if len(self.values) == 0:
            return {"median": float("nan"), "q25": float("nan"), "q75": float("nan")}
        q25, median, q75 = np.percentile(self.values, [25, 50, 75])
        return {"median": float(median), "q25": float(q25), "q75": float(q75)}

    def to_frame(self) -> pd.DataFrame:
        """Rows (t_index, metric, value), then the summary block."""
        rows = pd.DataFrame({"t_index": [str(i) for i in self.indices],
                             "metric": self.metric, "value": self.values})
        summary = pd.DataFrame({"t_index": list(self.summary), "metric": self.metric,
                                "value": list(self.summary.values())})
        return pd.concat([rows, summary], ignore_index=True)


def score_sequence(truth: PartitionSequence, pred: PartitionSequence, metric: str = "ami",
                   threshold: Optional[float] = SOFT_THRESHOLD,
                   mask: Optional[Iterable[int]] = None,
                   alpha: float = ECS_ALPHA) -> ScoreTrace:
    """Score ``pred`` against ``truth`` snapshot by snapshot.

    Nodes flagged unlabeled in ``truth`` are dropped; snapshots listed in
    ``mask`` are left out of the trace.
    """
    if metric not in METRICS:
        raise InvariantViolation("metric", f"unknown metric {metric!r}, expected one of {METRICS}")
    if truth.T != pred.T or truth.d != pred.d:
        raise InvariantViolation("shape-mismatch",
                                 f"truth is {truth.T}x{truth.d}, prediction {pred.T}x{pred.d}")
    skipped = set(int(i) for i in mask) if mask is not None else set()

    values, indices = [], []
    for i in range(truth.T):
        if i in skipped:
            continue
        keep = truth.mask(i)
        if metric == "ami":
            value = ami(truth.hard_labels(i)[keep], pred.hard_labels(i)[keep])
        else:
            value = ecs(truth.step(i)[keep], pred.step(i)[keep], alpha=alpha, threshold=threshold)
        values.append(value)
        indices.append(i)
    return ScoreTrace(values=np.array(values), metric=metric, indices=np.array(indices))
