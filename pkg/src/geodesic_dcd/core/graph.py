"""Snapshot and sequence data model.

Node identity is positional (0-based). Weights are float64; signed graphs are
one edge list with negative weights, split into A+ / A- on demand. All types
are immutable once constructed and validate their invariants eagerly.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from geodesic_dcd.errors import InvariantViolation, ModalityMismatchError

MEMBERSHIP_TOL = 1e-9


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class EdgeSet:
    """Weighted edge list stored column-wise."""

    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray

    def __post_init__(self):
        src = _frozen(np.asarray(self.src, dtype=np.int64).reshape(-1).copy())
        dst = _frozen(np.asarray(self.dst, dtype=np.int64).reshape(-1).copy())
        weight = _frozen(np.asarray(self.weight, dtype=np.float64).reshape(-1).copy())
        if not (len(src) == len(dst) == len(weight)):
            raise InvariantViolation("edge-shape", "src, dst and weight lengths differ")
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)
        object.__setattr__(self, "weight", weight)

    @classmethod
    def empty(cls) -> "EdgeSet":
        return cls(np.empty(0), np.empty(0), np.empty(0))

    @classmethod
    def from_triples(cls, triples: Iterable[Sequence[float]]) -> "EdgeSet":
        rows = [tuple(t) for t in triples]
        if not rows:
            return cls.empty()
        src, dst, weight = zip(*rows)
        return cls(np.array(src), np.array(dst), np.array(weight, dtype=np.float64))

    @classmethod
    def from_dense(cls, adjacency: np.ndarray, directed: bool) -> "EdgeSet":
        """Edges of a dense matrix; upper triangle only when undirected."""
        matrix = np.asarray(adjacency, dtype=np.float64)
        if not directed:
            matrix = np.triu(matrix, k=1)
        src, dst = np.nonzero(matrix)
        return cls(src, dst, matrix[src, dst])

    def triples(self) -> List[List[float]]:
        return [[int(s), int(t), float(w)] for s, t, w in zip(self.src, self.dst, self.weight)]

    def __len__(self) -> int:
        return len(self.weight)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EdgeSet):
            return NotImplemented
        return (np.array_equal(self.src, other.src)
                and np.array_equal(self.dst, other.dst)
                and np.array_equal(self.weight, other.weight))

    def dense(self, d: int, directed: bool) -> np.ndarray:
        matrix = coo_matrix((self.weight, (self.src, self.dst)), shape=(d, d)).toarray()
        if not directed:
            matrix = matrix + matrix.T
        return matrix


@dataclass(frozen=True, eq=False)
class GraphSnapshot:
    """One timestamped adjacency structure on ``d`` nodes.

    Multiview snapshots keep their S edge sets in ``views`` and leave
    ``edges`` empty; ``adjacency()`` then returns the sum over views.
    """

    d: int
    edges: EdgeSet = field(default_factory=EdgeSet.empty)
    directed: bool = False
    views: Optional[Tuple[EdgeSet, ...]] = None
    bipartite_split: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        if int(self.d) <= 0:
            raise InvariantViolation("node-count", f"d must be positive, got {self.d}")
        object.__setattr__(self, "d", int(self.d))
        if self.views is not None:
            views = tuple(self.views)
            if len(views) == 0:
                raise InvariantViolation("views", "multiview snapshot needs at least one view")
            if len(self.edges):
                raise InvariantViolation("views", "edges must be empty when views are given")
            object.__setattr__(self, "views", views)
        if self.bipartite_split is not None:
            n1, n2 = (int(n) for n in self.bipartite_split)
            if n1 <= 0 or n2 <= 0 or n1 + n2 != self.d:
                raise InvariantViolation("bipartite-split",
                                         f"{(n1, n2)} does not partition d={self.d}")
            object.__setattr__(self, "bipartite_split", (n1, n2))
        for edges in self.view_edges():
            self._validate_edges(edges)

    def _validate_edges(self, edges: EdgeSet) -> None:
        if len(edges) == 0:
            return
        if edges.src.min() < 0 or edges.dst.min() < 0 \
                or edges.src.max() >= self.d or edges.dst.max() >= self.d:
            raise InvariantViolation("node-range", f"node index outside [0, {self.d})")
        loops = np.flatnonzero(edges.src == edges.dst)
        if len(loops):
            raise InvariantViolation("self-loop", f"node {int(edges.src[loops[0]])}")
        if not np.all(np.isfinite(edges.weight)):
            raise InvariantViolation("finite-weight", "edge weights must be finite")
        if self.directed:
            keys = edges.src * self.d + edges.dst
        else:
            keys = np.minimum(edges.src, edges.dst) * self.d + np.maximum(edges.src, edges.dst)
        if len(np.unique(keys)) != len(keys):
            raise InvariantViolation("duplicate-edge", "each node pair may appear once")
        if self.bipartite_split is not None:
            n1 = self.bipartite_split[0]
            if np.any((edges.src < n1) == (edges.dst < n1)):
                raise InvariantViolation("bipartite-split", "edge does not cross the split")

    @property
    def is_multiview(self) -> bool:
        return self.views is not None

    @property
    def n_views(self) -> int:
        return len(self.views) if self.views is not None else 1

    @property
    def n_edges(self) -> int:
        return sum(len(e) for e in self.view_edges())

    @property
    def is_signed(self) -> bool:
        return any(np.any(e.weight < 0) for e in self.view_edges())

    def view_edges(self) -> Tuple[EdgeSet, ...]:
        return self.views if self.views is not None else (self.edges,)

    @cached_property
    def _views_dense(self) -> Tuple[np.ndarray, ...]:
        return tuple(_frozen(e.dense(self.d, self.directed)) for e in self.view_edges())

    def view_adjacencies(self) -> Tuple[np.ndarray, ...]:
        """Dense adjacency per view (read-only arrays)."""
        return self._views_dense

    @cached_property
    def _adjacency(self) -> np.ndarray:
        views = self._views_dense
        if len(views) == 1:
            return views[0]
        return _frozen(np.sum(views, axis=0))

    def adjacency(self) -> np.ndarray:
        """Dense d×d adjacency A, A[i, j] the weight of edge i→j (read-only)."""
        return self._adjacency

    def positive_part(self) -> np.ndarray:
        """A+ of a signed graph."""
        return np.clip(self.adjacency(), 0.0, None)

    def negative_part(self) -> np.ndarray:
        """A- of a signed graph, as absolute values."""
        return np.clip(-self.adjacency(), 0.0, None)

    def symmetrized_abs(self) -> np.ndarray:
        """|A| made symmetric, (|A| + |A|^T)/2 for directed graphs."""
        magnitude = np.abs(self.adjacency())
        if self.directed:
            magnitude = 0.5 * (magnitude + magnitude.T)
        return magnitude

    def degrees(self) -> np.ndarray:
        """deg(l) = sum_j A[l, j] (out-degree when directed)."""
        return self.adjacency().sum(axis=1)

    def out_degrees(self) -> np.ndarray:
        return self.adjacency().sum(axis=1)

    def in_degrees(self) -> np.ndarray:
        return self.adjacency().sum(axis=0)

    def volume(self, nodes: Optional[Iterable[int]] = None) -> float:
        """vol(S) = sum of degrees over S (all nodes when S is None)."""
        deg = self.degrees()
        if nodes is None:
            return float(deg.sum())
        return float(deg[np.asarray(list(nodes), dtype=np.int64)].sum())

    def modality(self) -> Tuple[bool, int, Optional[Tuple[int, int]]]:
        return (self.directed, self.n_views, self.bipartite_split)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GraphSnapshot):
            return NotImplemented
        return (self.d == other.d and self.directed == other.directed
                and self.bipartite_split == other.bipartite_split
                and self.edges == other.edges
                and (self.views is None) == (other.views is None)
                and (self.views is None
                     or (len(self.views) == len(other.views)
                         and all(a == b for a, b in zip(self.views, other.views)))))


@dataclass(frozen=True, eq=False)
class SnapshotSequence:
    """Ordered snapshots G_1..G_T observed at times t_1 < ... < t_T in [0, 1]."""

    snapshots: Tuple[GraphSnapshot, ...]
    times: Optional[np.ndarray] = None
    name_table: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        snapshots = tuple(self.snapshots)
        if not snapshots:
            raise InvariantViolation("sequence-length", "a sequence needs at least one snapshot")
        object.__setattr__(self, "snapshots", snapshots)

        first = snapshots[0]
        for i, snap in enumerate(snapshots[1:], start=1):
            if snap.d != first.d:
                raise InvariantViolation("shared-d",
                                         f"snapshot {i} has d={snap.d}, expected {first.d}")
            if snap.modality() != first.modality():
                raise InvariantViolation("shared-modality", f"snapshot {i} differs from snapshot 0")

        T = len(snapshots)
        if self.times is None:
            times = default_times(T)
        else:
            times = np.asarray(self.times, dtype=np.float64).reshape(-1).copy()
        if len(times) != T:
            raise InvariantViolation("times-length", f"{len(times)} times for {T} snapshots")
        if np.any(times < 0.0) or np.any(times > 1.0):
            raise InvariantViolation("times-range", "times must lie in [0, 1]")
        if np.any(np.diff(times) <= 0):
            raise InvariantViolation("times-increasing", "times must be strictly increasing")
        object.__setattr__(self, "times", _frozen(times))

        if self.name_table is not None:
            names = tuple(str(n) for n in self.name_table)
            if len(names) != first.d:
                raise InvariantViolation("name-table", f"{len(names)} names for d={first.d}")
            object.__setattr__(self, "name_table", names)

    @property
    def T(self) -> int:
        return len(self.snapshots)

    @property
    def d(self) -> int:
        return self.snapshots[0].d

    @property
    def directed(self) -> bool:
        return self.snapshots[0].directed

    @property
    def n_views(self) -> int:
        return self.snapshots[0].n_views

    @property
    def bipartite_split(self) -> Optional[Tuple[int, int]]:
        return self.snapshots[0].bipartite_split

    def __len__(self) -> int:
        return self.T

    def __getitem__(self, index: int) -> GraphSnapshot:
        return self.snapshots[index]

    def __iter__(self):
        return iter(self.snapshots)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SnapshotSequence):
            return NotImplemented
        return (self.T == other.T and np.array_equal(self.times, other.times)
                and self.name_table == other.name_table
                and all(a == b for a, b in zip(self.snapshots, other.snapshots)))


@dataclass(frozen=True, eq=False)
class PartitionSequence:
    """Per-snapshot community assignments.

    Hard partitions store ``labels`` (T int arrays of length d); soft ones
    store ``memberships`` (T row-stochastic d×k arrays). ``unlabeled`` is an
    optional per-snapshot boolean mask of nodes without a true community;
    scoring drops them.
    """

    labels: Optional[Tuple[np.ndarray, ...]] = None
    memberships: Optional[Tuple[np.ndarray, ...]] = None
    k_per_step: Optional[Tuple[int, ...]] = None
    unlabeled: Optional[Tuple[np.ndarray, ...]] = None

    def __post_init__(self):
        if (self.labels is None) == (self.memberships is None):
            raise InvariantViolation("partition-kind", "give exactly one of labels or memberships")

        if self.labels is not None:
            steps = tuple(_frozen(np.asarray(z, dtype=np.int64).reshape(-1).copy())
                          for z in self.labels)
            object.__setattr__(self, "labels", steps)
            ks = self.k_per_step
            if ks is None:
                ks = tuple(int(z.max()) + 1 if len(z) else 0 for z in steps)
            for i, (z, k) in enumerate(zip(steps, ks)):
                if len(z) and (z.min() < 0 or z.max() >= k):
                    raise InvariantViolation("label-range",
                                             f"snapshot {i}: labels outside [0, {k})")
        else:
            steps = tuple(_frozen(np.atleast_2d(np.asarray(m, dtype=np.float64)).copy())
                          for m in self.memberships)
            object.__setattr__(self, "memberships", steps)
            ks = self.k_per_step
            if ks is None:
                ks = tuple(m.shape[1] for m in steps)
            for i, (m, k) in enumerate(zip(steps, ks)):
                if m.shape[1] != k:
                    raise InvariantViolation("membership-shape",
                                             f"snapshot {i}: {m.shape[1]} != {k}")
                row_error = np.abs(m.sum(axis=1) - 1.0)
                if np.any(m < -MEMBERSHIP_TOL) or np.any(row_error > MEMBERSHIP_TOL):
                    raise InvariantViolation("membership-rows",
                                             f"snapshot {i}: rows must be nonnegative and sum to 1")

        ks = tuple(int(k) for k in ks)
        if len(ks) != len(steps):
            raise InvariantViolation("k-per-step", f"{len(ks)} entries for {len(steps)} snapshots")
        object.__setattr__(self, "k_per_step", ks)

        sizes = {len(s) for s in steps}
        if len(sizes) > 1:
            raise InvariantViolation("partition-d", "all snapshots must cover the same nodes")

        if self.unlabeled is not None:
            masks = tuple(_frozen(np.asarray(m, dtype=bool).reshape(-1).copy())
                          for m in self.unlabeled)
            if len(masks) != len(steps) or any(len(m) != len(s) for m, s in zip(masks, steps)):
                raise InvariantViolation("unlabeled-mask", "mask shape must match the partition")
            object.__setattr__(self, "unlabeled", masks)

    @property
    def is_soft(self) -> bool:
        return self.memberships is not None

    @property
    def T(self) -> int:
        return len(self.k_per_step)

    @property
    def d(self) -> int:
        steps = self.labels if self.labels is not None else self.memberships
        return len(steps[0]) if steps else 0

    def __len__(self) -> int:
        return self.T

    def step(self, i: int) -> np.ndarray:
        """Labels (hard) or membership matrix (soft) of snapshot i."""
        return self.labels[i] if self.labels is not None else self.memberships[i]

    def hard_labels(self, i: int) -> np.ndarray:
        """Labels of snapshot i; soft memberships collapse to their argmax."""
        if self.labels is not None:
            return self.labels[i]
        return np.argmax(self.memberships[i], axis=1)

    def mask(self, i: int) -> np.ndarray:
        """Boolean mask of scored nodes at snapshot i."""
        if self.unlabeled is None:
            return np.ones(self.d, dtype=bool)
        return ~self.unlabeled[i]

    def without_nodes(self, nodes: Iterable[int]) -> "PartitionSequence":
        keep = np.ones(self.d, dtype=bool)
        keep[np.asarray(list(nodes), dtype=np.int64)] = False
        unlabeled = None if self.unlabeled is None else tuple(m[keep] for m in self.unlabeled)
        if self.labels is not None:
            return PartitionSequence(labels=tuple(z[keep] for z in self.labels),
                                     k_per_step=self.k_per_step, unlabeled=unlabeled)
        rows = []
        for m in self.memberships:
            sub = m[keep]
            sums = sub.sum(axis=1, keepdims=True)
            rows.append(np.where(sums > 0, sub / np.where(sums > 0, sums, 1.0), 1.0 / m.shape[1]))
        return PartitionSequence(memberships=tuple(rows), k_per_step=self.k_per_step,
                                 unlabeled=unlabeled)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PartitionSequence):
            return NotImplemented
        mine = self.labels if self.labels is not None else self.memberships
        theirs = other.labels if other.labels is not None else other.memberships
        masks_equal = (self.unlabeled is None) == (other.unlabeled is None) and (
            self.unlabeled is None
            or all(np.array_equal(a, b) for a, b in zip(self.unlabeled, other.unlabeled)))
        return (self.is_soft == other.is_soft and self.k_per_step == other.k_per_step
                and all(np.array_equal(a, b) for a, b in zip(mine, theirs)) and masks_equal)


def default_times(T: int) -> np.ndarray:
    """Equally spaced times on [0, 1]; a single snapshot sits at t = 0."""
    if T == 1:
        return np.zeros(1)
    return np.linspace(0.0, 1.0, T)


def ensure_connected(snapshot: GraphSnapshot) -> GraphSnapshot:
    """Bridge the components of an undirected snapshot.

    The lowest-index node of every component is joined with a weight-1 edge
    to the lowest-index node of the largest component (ties: the component
    holding the lowest node). Original edges are kept as they are; multiview
    snapshots get the same bridges in every view.

    Raises:
        ModalityMismatchError: Directed or bipartite input
    """
    if snapshot.directed:
        raise ModalityMismatchError(
            "ensure_connected needs an undirected snapshot; symmetrize first")
    if snapshot.bipartite_split is not None:
        raise ModalityMismatchError("ensure_connected does not bridge bipartite snapshots")

    n_comp, comp = connected_components(np.abs(snapshot.adjacency()) > 0, directed=False)
    if n_comp == 1:
        return snapshot

    sizes = np.bincount(comp, minlength=n_comp)
    # np.argmax keeps the first maximum and components are numbered in node order
    largest = int(np.argmax(sizes))
    anchor = int(np.flatnonzero(comp == largest)[0])
    bridges_src, bridges_dst = [], []
    for c in range(n_comp):
        if c == largest:
            continue
        node = int(np.flatnonzero(comp == c)[0])
        bridges_src.append(min(node, anchor))
        bridges_dst.append(max(node, anchor))

    def bridged(edges: EdgeSet) -> EdgeSet:
        return EdgeSet(np.concatenate([edges.src, bridges_src]),
                       np.concatenate([edges.dst, bridges_dst]),
                       np.concatenate([edges.weight, np.ones(len(bridges_src))]))

    if snapshot.views is not None:
        return GraphSnapshot(d=snapshot.d, views=tuple(bridged(v) for v in snapshot.views),
                             directed=False)
    return GraphSnapshot(d=snapshot.d, edges=bridged(snapshot.edges), directed=False)


def remove_nodes(seq: SnapshotSequence, nodes: Iterable[int]) -> SnapshotSequence:
    """Drop ``nodes`` from every snapshot and reindex the rest in order.

    Edges touching a removed node disappear. A bipartite split shrinks on
    whichever sides lose nodes.
    """
    drop = np.zeros(seq.d, dtype=bool)
    drop[np.asarray(list(nodes), dtype=np.int64)] = True
    if drop.all():
        raise InvariantViolation("node-count", "cannot remove every node")
    new_index = np.cumsum(~drop) - 1

    def reindex(edges: EdgeSet) -> EdgeSet:
        keep = ~(drop[edges.src] | drop[edges.dst])
        return EdgeSet(new_index[edges.src[keep]], new_index[edges.dst[keep]], edges.weight[keep])

    split = seq.bipartite_split
    if split is not None:
        n1 = int((~drop[:split[0]]).sum())
        split = (n1, int((~drop).sum()) - n1)

    snapshots = []
    for snap in seq.snapshots:
        if snap.views is not None:
            snapshots.append(GraphSnapshot(d=int((~drop).sum()), directed=snap.directed,
                                           views=tuple(reindex(v) for v in snap.views),
                                           bipartite_split=split))
        else:
            snapshots.append(GraphSnapshot(d=int((~drop).sum()), directed=snap.directed,
                                           edges=reindex(snap.edges), bipartite_split=split))

    names = None
    if seq.name_table is not None:
        names = tuple(n for n, gone in zip(seq.name_table, drop) if not gone)
    return SnapshotSequence(tuple(snapshots), times=seq.times, name_table=names)
