"""Seeded generators for dynamic stochastic block models.

Randomness comes from Philox generators keyed by SeedSequence spawn keys:

    (0,)        community dynamics (switching, swaps)
    (1, i)      edges of snapshot i
    (1, i, s)   edges of view s of snapshot i (multiview)

so any snapshot can be regenerated independently of the others. Edges are
resampled at every snapshot. Apart from MMSBM and SCBM, a node switches
community at most once over the whole sequence.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from geodesic_dcd.core.graph import EdgeSet, GraphSnapshot, PartitionSequence, SnapshotSequence
from geodesic_dcd.errors import ConfigError
from geodesic_dcd.sbm.config import SbmConfig, TreeNode, Variant, equal_split

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SbmSample:
    """A generated sequence with its ground truth.

    ``truths`` maps a name to a PartitionSequence: "truth" for single-partition
    models, "send" and "receive" for the coblock model.
    """

    sequence: SnapshotSequence
    truths: Dict[str, PartitionSequence]
    tree: Optional[TreeNode] = None
    config: Optional[SbmConfig] = field(default=None, repr=False)

    @property
    def truth(self) -> PartitionSequence:
        return self.truths["truth"] if "truth" in self.truths else next(iter(self.truths.values()))


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def _upper_pairs(d: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(d, k=1)


def _sample_undirected(prob: np.ndarray, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Upper-triangle pairs (i < j) kept with probability prob[i, j]."""
    rows, cols = _upper_pairs(prob.shape[0])
    keep = rng.random(len(rows)) < prob[rows, cols]
    return rows[keep], cols[keep]


def _unweighted(rows: np.ndarray, cols: np.ndarray) -> EdgeSet:
    return EdgeSet(rows, cols, np.ones(len(rows)))


def _block_probabilities(labels: np.ndarray, p_in: float, p_out: float) -> np.ndarray:
    return np.where(labels[:, None] == labels[None, :], p_in, p_out)


def _once_only_switching(initial: np.ndarray, k: int, T: int, p_switch: float,
                         rng: np.random.Generator) -> List[np.ndarray]:
    """Label history where each node moves at most once, to a uniform other community."""
    labels = initial.copy()
    switched = np.zeros(len(labels), dtype=bool)
    history = [labels.copy()]
    for _ in range(1, T):
        moves = rng.random(len(labels)) < p_switch
        offsets = rng.integers(1, max(k, 2), size=len(labels))
        if k > 1:
            moving = moves & ~switched
            labels[moving] = (labels[moving] + offsets[moving]) % k
            switched |= moving
        history.append(labels.copy())
    return history


def _hard_truth(history: List[np.ndarray], k: int) -> PartitionSequence:
    return PartitionSequence(labels=tuple(history), k_per_step=(k,) * len(history))


# ---- simple model and its plain variants -----------------------------------

def gen_simple(config: SbmConfig) -> Tuple[SnapshotSequence, PartitionSequence]:
    """Planted partition with once-only switching and per-snapshot edge resampling."""
    d, k = config.d, config.k
    if k > d:
        raise ConfigError(f"k={k} exceeds d={d}", field="k")
    history = _once_only_switching(equal_split(d, k), k, config.T, config.p_switch,
                                   _rng(config.seed, 0))
    snapshots = []
    for i, labels in enumerate(history):
        prob = _block_probabilities(labels, config.p_in, config.p_out)
        rows, cols = _sample_undirected(prob, _rng(config.seed, 1, i))
        snapshots.append(GraphSnapshot(d=d, edges=_unweighted(rows, cols)))
    return SnapshotSequence(tuple(snapshots)), _hard_truth(history, k)


def gen_ssbm(config: SbmConfig) -> Tuple[SnapshotSequence, PartitionSequence]:
    """Signed model: +1 edges within, -1 across, then sign flips at eta_in / eta_out."""
    if config.eta_in >= 0.5 or config.eta_out >= 0.5:
        raise ConfigError("eta_in and eta_out must be below 1/2", field="eta_in")
    d, k = config.d, config.k
    history = _once_only_switching(equal_split(d, k), k, config.T, config.p_switch,
                                   _rng(config.seed, 0))
    snapshots = []
    for i, labels in enumerate(history):
        rng = _rng(config.seed, 1, i)
        prob = _block_probabilities(labels, config.p_in, config.p_out)
        rows, cols = _sample_undirected(prob, rng)
        within = labels[rows] == labels[cols]
        flip = rng.random(len(rows)) < np.where(within, config.eta_in, config.eta_out)
        weight = np.where(within, 1.0, -1.0) * np.where(flip, -1.0, 1.0)
        snapshots.append(GraphSnapshot(d=d, edges=EdgeSet(rows, cols, weight)))
    return SnapshotSequence(tuple(snapshots)), _hard_truth(history, k)


def gen_dsbm(config: SbmConfig) -> Tuple[SnapshotSequence, PartitionSequence]:
    """Directed model: undirected placement, then i -> j with probability F[z_i, z_j]."""
    d, k = config.d, config.k
    F = config.orientation()
    if F.shape != (k, k) or not np.allclose(F + F.T, 1.0, atol=1e-12):
        raise ConfigError("F[l, j] + F[j, l] must equal 1", field="F")
    history = _once_only_switching(equal_split(d, k), k, config.T, config.p_switch,
                                   _rng(config.seed, 0))
    snapshots = []
    for i, labels in enumerate(history):
        rng = _rng(config.seed, 1, i)
        prob = _block_probabilities(labels, config.p_in, config.p_out)
        rows, cols = _sample_undirected(prob, rng)
        forward = rng.random(len(rows)) < F[labels[rows], labels[cols]]
        src = np.where(forward, rows, cols)
        dst = np.where(forward, cols, rows)
        snapshots.append(GraphSnapshot(d=d, edges=EdgeSet(src, dst, np.ones(len(src))),
                                       directed=True))
    return SnapshotSequence(tuple(snapshots)), _hard_truth(history, k)


def gen_mvsbm(config: SbmConfig) -> Tuple[SnapshotSequence, PartitionSequence]:
    """S independent planted-partition views per snapshot sharing one label history."""
    if config.S < 1:
        raise ConfigError("must be at least 1", field="S")
    d, k = config.d, config.k
    history = _once_only_switching(equal_split(d, k), k, config.T, config.p_switch,
                                   _rng(config.seed, 0))
    snapshots = []
    for i, labels in enumerate(history):
        prob = _block_probabilities(labels, config.p_in, config.p_out)
        views = tuple(_unweighted(*_sample_undirected(prob, _rng(config.seed, 1, i, s)))
                      for s in range(config.S))
        snapshots.append(GraphSnapshot(d=d, views=views))
    return SnapshotSequence(tuple(snapshots)), _hard_truth(history, k)


# ---- mixed membership ------------------------------------------------------

def gen_mmsbm(config: SbmConfig) -> Tuple[SnapshotSequence, PartitionSequence]:
    """Mixed-membership model with P(A_ij = 1) = φ_i B φ_j^T.

    A switching node takes a uniformly chosen distinct row of the initial Φ
    other than its current one. Nodes may switch repeatedly.
    """
    Phi = config.memberships()
    B = config.block_matrix()
    if np.any(Phi < 0) or not np.allclose(Phi.sum(axis=1), 1.0, atol=1e-9):
        raise ConfigError("rows must be nonnegative and sum to 1", field="Phi")
    d = Phi.shape[0]
    choices = np.unique(Phi, axis=0)
    dynamics = _rng(config.seed, 0)

    current = Phi.copy()
    history = [current.copy()]
    for _ in range(1, config.T):
        moves = dynamics.random(d) < config.p_switch
        picks = dynamics.integers(0, max(len(choices) - 1, 1), size=d)
        if len(choices) > 1:
            for node in np.flatnonzero(moves):
                others = [row for row in choices if not np.array_equal(row, current[node])]
                current[node] = others[picks[node] % len(others)]
        history.append(current.copy())

    snapshots = []
    for i, memberships in enumerate(history):
        prob = memberships @ B @ memberships.T
        rows, cols = _sample_undirected(prob, _rng(config.seed, 1, i))
        snapshots.append(GraphSnapshot(d=d, edges=_unweighted(rows, cols)))
    truth = PartitionSequence(memberships=tuple(history), k_per_step=(Phi.shape[1],) * len(history))
    return SnapshotSequence(tuple(snapshots)), truth


# ---- coblock model ---------------------------------------------------------

def _swap_dynamics(initial: np.ndarray, k: int, T: int, p_switch: float,
                   rng: np.random.Generator) -> List[np.ndarray]:
    """Label history under size-preserving swaps with a node of another community."""
    labels = initial.copy()
    history = [labels.copy()]
    for _ in range(1, T):
        moves = rng.random(len(labels)) < p_switch
        for node in range(len(labels)):
            draw_community, draw_node = rng.random(2)
            if not moves[node] or k < 2:
                continue
            others = [c for c in range(k) if c != labels[node]]
            target = others[int(draw_community * len(others))]
            members = np.flatnonzero(labels == target)
            if len(members) == 0:
                continue
            partner = members[int(draw_node * len(members))]
            labels[node], labels[partner] = labels[partner], labels[node]
        history.append(labels.copy())
    return history


def gen_scbm(
        config: SbmConfig) -> Tuple[SnapshotSequence, Tuple[PartitionSequence, PartitionSequence]]:
    """Stochastic coblock model: i -> j with probability B[y_i, z_j].

    With a bipartite split, V1 (the first n1 nodes) sends and V2 receives;
    otherwise every node both sends and receives. Returns the sending and
    receiving ground truths, over V1 and V2 respectively.
    """
    B = config.block_matrix()
    k_y, k_z = B.shape
    d = config.d
    split = config.bipartite_split
    if split is not None:
        n1, n2 = split
        if n1 + n2 != d or n1 < k_y or n2 < k_z:
            raise ConfigError(f"{split} does not fit d={d} and B {k_y}x{k_z}",
                              field="bipartite_split")
    else:
        n1 = n2 = d
    p_send, p_receive = config.switch_rates()
    dynamics = _rng(config.seed, 0)
    send_history = _swap_dynamics(equal_split(n1, k_y), k_y, config.T, p_send, dynamics)
    receive_history = _swap_dynamics(equal_split(n2, k_z), k_z, config.T, p_receive, dynamics)

    snapshots = []
    for i, (y, z) in enumerate(zip(send_history, receive_history)):
        rng = _rng(config.seed, 1, i)
        prob = B[y][:, z]
        if split is None:
            np.fill_diagonal(prob, 0.0)
        src, dst = np.nonzero(rng.random((n1, n2)) < prob)
        if split is not None:
            dst = dst + n1
        snapshots.append(GraphSnapshot(d=d, edges=EdgeSet(src, dst, np.ones(len(src))),
                                       directed=True, bipartite_split=split))
    return (SnapshotSequence(tuple(snapshots)),
            (_hard_truth(send_history, k_y), _hard_truth(receive_history, k_z)))


# ---- hierarchical model ----------------------------------------------------

def _leaf_paths(node: TreeNode, prefix: Tuple[int, ...] = ()) -> List[Tuple[int, ...]]:
    if node.is_leaf:
        return [prefix]
    return [path for i, child in enumerate(node.children)
            for path in _leaf_paths(child, prefix + (i,))]


def _node_at(root: TreeNode, path: Tuple[int, ...]) -> TreeNode:
    node = root
    for i in path:
        node = node.children[i]
    return node


def _lca_weights(root: TreeNode, paths: List[Tuple[int, ...]]) -> np.ndarray:
    """L×L matrix of the weight of each leaf pair's least common ancestor."""
    L = len(paths)
    weights = np.empty((L, L))
    for a in range(L):
        for b in range(L):
            common = 0
            while (common < min(len(paths[a]), len(paths[b]))
                   and paths[a][common] == paths[b][common]):
                common += 1
            weights[a, b] = _node_at(root, paths[a][:common]).weight
    return weights


def gen_hsbm(config: SbmConfig) -> Tuple[SnapshotSequence, PartitionSequence, TreeNode]:
    """Hierarchical model: edge probability is the weight of the leaves' LCA.

    A switching node moves to a uniformly random sibling leaf (once only).
    """
    tree = config.hierarchy
    paths = _leaf_paths(tree)
    L = len(paths)
    if L > config.d:
        raise ConfigError("more leaves than nodes", field="tree")
    weights = _lca_weights(tree, paths)
    siblings = [[b for b in range(L) if b != a and paths[b][:-1] == paths[a][:-1]]
                for a in range(L)]

    dynamics = _rng(config.seed, 0)
    labels = equal_split(config.d, L)
    switched = np.zeros(config.d, dtype=bool)
    history = [labels.copy()]
    for _ in range(1, config.T):
        moves = dynamics.random(config.d) < config.p_switch
        picks = dynamics.random(config.d)
        for node in np.flatnonzero(moves & ~switched):
            options = siblings[labels[node]]
            if options:
                labels[node] = options[int(picks[node] * len(options))]
                switched[node] = True
        history.append(labels.copy())

    snapshots = []
    for i, leaf_labels in enumerate(history):
        prob = weights[leaf_labels][:, leaf_labels]
        rows, cols = _sample_undirected(prob, _rng(config.seed, 1, i))
        snapshots.append(GraphSnapshot(d=config.d, edges=_unweighted(rows, cols)))
    return SnapshotSequence(tuple(snapshots)), _hard_truth(history, L), tree


# ---- gradual merges --------------------------------------------------------

def merge_progress(config: SbmConfig) -> np.ndarray:
    """Per-snapshot merge progress in [0, 1]: 0 before the window, 1 after it."""
    T = config.T
    positions = np.arange(T) / max(T - 1, 1)
    start, end = config.merge_start, config.merge_end
    if end <= start:
        return (positions >= start).astype(np.float64)
    return np.clip((positions - start) / (end - start), 0.0, 1.0)


def gen_merge(config: SbmConfig) -> Tuple[SnapshotSequence, PartitionSequence]:
    """k planted communities whose listed pairs merge gradually.

    Across the merge window the edge probability between the two halves of
    each pair ramps linearly from p_out to p_in. Nodes of merging pairs are
    flagged unlabeled while the merge is in progress; once complete, each
    target community is folded into its source and labels are compacted.
    """
    d, k = config.d, config.k
    labels = equal_split(d, k)
    progress = merge_progress(config)

    merged_into = np.arange(k)
    for source, target in config.merges:
        merged_into[target] = source
    final_ids = np.unique(merged_into, return_inverse=True)[1].reshape(-1)
    in_pair = np.zeros(k, dtype=bool)
    for pair in config.merges:
        in_pair[list(pair)] = True
    k_final = int(final_ids.max()) + 1

    snapshots, steps, ks, masks = [], [], [], []
    for i, lam in enumerate(progress):
        same = labels[:, None] == labels[None, :]
        same_pair = merged_into[labels][:, None] == merged_into[labels][None, :]
        prob = np.where(same, config.p_in,
                        np.where(same_pair, config.p_out + lam * (config.p_in - config.p_out),
                                 config.p_out))
        rows, cols = _sample_undirected(prob, _rng(config.seed, 1, i))
        snapshots.append(GraphSnapshot(d=d, edges=_unweighted(rows, cols)))
        if lam >= 1.0:
            steps.append(final_ids[labels])
            ks.append(k_final)
            masks.append(np.zeros(d, dtype=bool))
        else:
            steps.append(labels.copy())
            ks.append(k)
            masks.append(in_pair[labels] if lam > 0.0 else np.zeros(d, dtype=bool))
    truth = PartitionSequence(labels=tuple(steps), k_per_step=tuple(ks), unlabeled=tuple(masks))
    return SnapshotSequence(tuple(snapshots)), truth


# ---- dispatch --------------------------------------------------------------

def generate(config: SbmConfig) -> SbmSample:
    """Run the generator selected by ``config.variant``."""
    variant = config.variant
    logger.info("generate", extra={"data": {"variant": variant.value, "d": config.d,
                                            "T": config.T, "seed": config.seed}})
    if variant is Variant.SCBM:
        seq, (send, receive) = gen_scbm(config)
        return SbmSample(seq, {"send": send, "receive": receive}, config=config)
    if variant is Variant.HSBM:
        seq, truth, tree = gen_hsbm(config)
        return SbmSample(seq, {"truth": truth}, tree=tree, config=config)
    generators = {
        Variant.SIMPLE: gen_simple,
        Variant.SSBM: gen_ssbm,
        Variant.MMSBM: gen_mmsbm,
        Variant.DSBM: gen_dsbm,
        Variant.MVSBM: gen_mvsbm,
        Variant.MERGE: gen_merge,
    }
    seq, truth = generators[variant](config)
    return SbmSample(seq, {"truth": truth}, config=config)
