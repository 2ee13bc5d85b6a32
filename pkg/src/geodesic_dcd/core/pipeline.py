"""Dynamic community detection on snapshot sequences.

Fixed-k detection builds one MCM per snapshot, fits a single rank-k_e
geodesic through them and clusters the embedding U(t_i) of every snapshot,
warm-started from the previous one. Variable-k detection fits one rank-k_max
geodesic, clusters every snapshot for each k in [k_min, k_max], smooths the
per-k modularity traces over time and keeps, per snapshot, the k with the
highest smoothed modularity.
"""

import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.ndimage import gaussian_filter1d

from geodesic_dcd.core.clustering import (
    DEFAULT_FUZZIFIER,
    ClusterResult,
    fuzzy_cmeans,
    kmeans,
    kmedians,
    row_normalize,
    sign_split,
    soft_membership_from_centers,
    switch_penalized_paths,
)
from geodesic_dcd.core.geodesic import (
    DEFAULT_INNER_ITERS,
    DEFAULT_MAX_OUTER,
    DEFAULT_TOL,
    FitReport,
    GeodesicModel,
    fit_geodesic,
)
from geodesic_dcd.core.graph import (
    GraphSnapshot,
    PartitionSequence,
    SnapshotSequence,
    ensure_connected,
)
from geodesic_dcd.core.matfun import symmetrize, top_left_singular_vectors
from geodesic_dcd.core.mcm import (
    COCLUSTER_METHODS,
    Mcm,
    Method,
    MethodSpec,
    build_mcm,
    default_embedding_rank,
    overlap_embedding,
)
from geodesic_dcd.core.metrics import (
    label_mapping,
    membership_permutation,
    modularity,
    permute_columns,
)
from geodesic_dcd.errors import ConfigError, DegenerateInputError, ModalityMismatchError, RankError

logger = logging.getLogger(__name__)

ROW_NORMALIZED = {Method.NSC, Method.CSC, Method.SCC_SEND, Method.SCC_RECEIVE}
FILTER_TRUNCATE = 4.0
# assortative methods whose labels can be refined from edge counts
RELABEL_METHODS = {Method.USC, Method.NSC, Method.SMM, Method.BHC, Method.SRSC, Method.GMSC,
                   Method.SPMSC, Method.PMLSC}
DEFAULT_SWITCH_COST = 1.5

Step = np.ndarray


@dataclass(frozen=True)
class PipelineConfig:
    """Detection parameters.

    Fixed mode tracks ``k_c`` communities on a rank-``k_e`` geodesic;
    ``k_e`` defaults to default_embedding_rank(method, k_c). Setting
    ``k_min``/``k_max`` switches to variable mode, where the default rank
    is default_embedding_rank(method, k_max).

    Attributes:
        method: Spectral method and its parameters
        k_c: Number of communities (fixed mode)
        k_e: Embedding rank
        k_min: Smallest community count tried (variable mode)
        k_max: Largest community count tried (variable mode)
        max_outer: Geodesic fit outer iterations
        tol: Relative objective decrease that stops the fit
        inner_iters: Θ-steps per outer iteration
        seed: Clustering seed
        gaussian_sigma: Width (in snapshots) of the benefit smoothing filter; 0 disables it
        geodesic: False runs the per-snapshot static method instead
        fuzzifier: Fuzzy c-means exponent (CSC)
        warm_start: Seed each snapshot's clustering with the previous result
        connect: Bridge disconnected undirected snapshots before building MCMs
        relabel: Re-decide each node's label path from its per-snapshot edges to
            every community, paying ``switch_cost`` per change (fixed mode)
        switch_cost: Price of one label change, in units of the median per-snapshot
            label margin
    """

    method: MethodSpec = field(default_factory=lambda: MethodSpec(Method.NSC))
    k_c: int = 2
    k_e: Optional[int] = None
    k_min: Optional[int] = None
    k_max: Optional[int] = None
    max_outer: int = DEFAULT_MAX_OUTER
    tol: float = DEFAULT_TOL
    inner_iters: int = DEFAULT_INNER_ITERS
    seed: int = 0
    gaussian_sigma: float = 1.0
    geodesic: bool = True
    fuzzifier: float = DEFAULT_FUZZIFIER
    warm_start: bool = True
    connect: bool = False
    relabel: bool = False
    switch_cost: float = DEFAULT_SWITCH_COST

    def __post_init__(self):
        if not isinstance(self.method, MethodSpec):
            object.__setattr__(self, "method", MethodSpec.from_dict(self.method))
        self.validate()

    @property
    def variable(self) -> bool:
        return self.k_min is not None or self.k_max is not None

    @property
    def top_k(self) -> int:
        """The largest community count this config clusters into."""
        return int(self.k_max) if self.variable else self.k_c

    @property
    def embedding_rank(self) -> int:
        if self.k_e is not None:
            return int(self.k_e)
        return default_embedding_rank(self.method, self.top_k)

    def validate(self) -> None:
        if self.k_c < 1:
            raise ConfigError("must be at least 1", field="k_c")
        if self.variable:
            if self.k_min is None or self.k_max is None:
                raise ConfigError("variable mode needs both k_min and k_max", field="k_min")
            if not 1 <= self.k_min <= self.k_max:
                raise ConfigError(f"need 1 <= k_min <= k_max, got {self.k_min}, {self.k_max}",
                                  field="k_min")
        if self.k_e is not None:
            floor = default_embedding_rank(self.method, self.top_k)
            if self.k_e < floor:
                raise ConfigError(f"k_e={self.k_e} below {floor} for {self.top_k} communities",
                                  field="k_e")
        if self.max_outer < 0:
            raise ConfigError("must be nonnegative", field="max_outer")
        if self.tol < 0:
            raise ConfigError("must be nonnegative", field="tol")
        if self.inner_iters < 1:
            raise ConfigError("must be at least 1", field="inner_iters")
        if self.gaussian_sigma < 0:
            raise ConfigError("must be nonnegative", field="gaussian_sigma")
        if self.fuzzifier <= 1:
            raise ConfigError("must exceed 1", field="fuzzifier")
        if self.switch_cost < 0:
            raise ConfigError("must be nonnegative", field="switch_cost")
        if self.relabel:
            if self.variable:
                raise ConfigError("relabeling applies to fixed mode only", field="relabel")
            if self.method.method not in RELABEL_METHODS:
                raise ConfigError(f"{self.method.method.value} communities are not density based",
                                  field="relabel")

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["method"] = self.method.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PipelineConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown fields {sorted(unknown)}", field="pipeline")
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(str(e), field="pipeline")


@dataclass(frozen=True, eq=False)
class BenefitTable:
    """Modularity of every (k, snapshot) pair, raw and smoothed over time."""

    H: np.ndarray
    filtered: np.ndarray
    k_values: np.ndarray

    @property
    def choice(self) -> np.ndarray:
        """Selected k per snapshot; ties go to the smaller k."""
        return self.k_values[np.argmax(self.filtered, axis=0)]

    def to_frame(self) -> pd.DataFrame:
        k_grid, t_grid = np.meshgrid(self.k_values, np.arange(self.H.shape[1]), indexing="ij")
        return pd.DataFrame({"k": k_grid.reshape(-1), "t_index": t_grid.reshape(-1),
                             "modularity": self.H.reshape(-1),
                             "filtered": self.filtered.reshape(-1)})

    def to_dict(self) -> Dict[str, Any]:
        return {"k_values": self.k_values.tolist(), "H": self.H.tolist(),
                "filtered": self.filtered.tolist(), "choice": self.choice.tolist()}


# ---- building blocks ------------------------------------------------------

def _prepare(seq: SnapshotSequence, config: PipelineConfig) -> SnapshotSequence:
    if not config.connect or seq.directed or seq.bipartite_split is not None:
        return seq
    return SnapshotSequence(tuple(ensure_connected(s) for s in seq), seq.times, seq.name_table)


def build_mcms(seq: SnapshotSequence, spec: MethodSpec) -> List[Mcm]:
    return [build_mcm(snapshot, spec) for snapshot in seq]


def _fit_bases(seq: SnapshotSequence, mcms: Sequence[Mcm], config: PipelineConfig,
               rank: int) -> Tuple[List[np.ndarray], FitReport, Optional[GeodesicModel]]:
    """Per-snapshot orthonormal bases, from the geodesic or from each MCM alone."""
    if not config.geodesic or seq.T == 1:
        bases = [top_left_singular_vectors(m.matrix, rank) for m in mcms]
        return bases, FitReport(converged=True), None
    model, report = fit_geodesic(mcms, seq.times, rank, max_outer=config.max_outer,
                                 tol=config.tol, inner_iters=config.inner_iters)
    return model.evaluate_many(seq.times), report, model


def _embedding(snapshot: GraphSnapshot, basis: np.ndarray, method: Method) -> np.ndarray:
    if method is Method.OSC:
        return overlap_embedding(symmetrize(snapshot.adjacency()), basis)
    return basis


def _cluster_embedding(emb: np.ndarray, k: int, config: PipelineConfig,
                       warm: Optional[Step]) -> ClusterResult:
    """The Euclidean clustering step of each method."""
    method = config.method.method
    seed = config.seed

    if method is Method.OSC:
        X = row_normalize(emb)
        result = kmedians(X, k, seed=seed, warm_start=warm)
        try:
            memberships = soft_membership_from_centers(X, result.centers)
        except RankError:
            logger.warning("osc_center_rank", extra={"data": {"k": k}})
            memberships = np.eye(k)[result.labels]
        return ClusterResult(centers=result.centers, inertia=result.inertia,
                             memberships=memberships, n_iter=result.n_iter,
                             empty_clusters=result.empty_clusters)

    X = row_normalize(emb) if method in ROW_NORMALIZED else emb
    if method is Method.CSC:
        return fuzzy_cmeans(X, k, m=config.fuzzifier, seed=seed, warm_start=warm)
    if emb.shape[1] == 1 and k == 2:
        return sign_split(emb)
    return kmeans(X, k, seed=seed, warm_start=warm)


def _cluster_sequence(seq: SnapshotSequence, bases: Sequence[np.ndarray],
                      config: PipelineConfig, k: int) -> List[Step]:
    """Cluster every snapshot into k groups, aligning each result to its predecessor."""
    method = config.method.method
    steps: List[Step] = []
    prev: Optional[Step] = None
    for i, (snapshot, basis) in enumerate(zip(seq, bases)):
        emb = _embedding(snapshot, basis, method)
        result = _cluster_embedding(emb, k, config, prev if config.warm_start else None)
        if result.empty_clusters:
            logger.debug("empty_clusters", extra={"data": {"snapshot": i, "k": k,
                                                           "empty": list(result.empty_clusters)}})
        if result.is_soft:
            step = result.memberships
            if prev is not None:
                step = permute_columns(step, membership_permutation(prev, step))
        else:
            step = result.labels
            if prev is not None:
                step = label_mapping(prev, step, n_ids=k)[step]
        steps.append(step)
        prev = step
    return steps


def _partition(steps: Sequence[Step], ks: Sequence[int]) -> PartitionSequence:
    if steps and steps[0].ndim == 2:
        return PartitionSequence(memberships=tuple(steps), k_per_step=tuple(int(k) for k in ks))
    return PartitionSequence(labels=tuple(steps), k_per_step=tuple(int(k) for k in ks))


def _require_one_mode(method: Method) -> None:
    if method in COCLUSTER_METHODS:
        raise ModalityMismatchError(
            f"{method.value} partitions senders or receivers only; modularity needs all nodes")


def _benefit(snapshot: GraphSnapshot, step: Step) -> float:
    """Modularity of one snapshot's partition; an edgeless snapshot scores 0."""
    try:
        return modularity(snapshot, step)
    except DegenerateInputError:
        return 0.0


def _community_affinity(snapshot: GraphSnapshot, labels: np.ndarray, k: int) -> np.ndarray:
    """d×k edge weight from every node into every community.

    Unsigned graphs subtract the configuration-model expectation
    deg(l) vol(c) / vol; signed weights are used as they are.
    """
    A = snapshot.adjacency()
    onehot = np.eye(k)[labels]
    affinity = A @ onehot
    if not snapshot.is_signed:
        deg = A.sum(axis=1)
        vol = deg.sum()
        if vol > 0:
            affinity -= np.outer(deg, onehot.T @ deg) / vol
    return affinity


def _relabel(seq: SnapshotSequence, steps: Sequence[Step], k: int,
             config: PipelineConfig) -> List[Step]:
    """Switch-penalized label paths per node, scored by community affinity.

    The price of a change is ``switch_cost`` times the median margin of a
    node's own community over its best alternative, so it scales with the
    per-snapshot evidence. Without a positive margin the labels are kept.
    """
    if k < 2 or seq.T < 2:
        return list(steps)
    scores = np.stack([_community_affinity(s, z, k) for s, z in zip(seq, steps)])
    labels = np.stack(steps)
    own = np.take_along_axis(scores, labels[:, :, None], axis=2)[:, :, 0]
    rivals = np.where(np.eye(k, dtype=bool)[labels], -np.inf, scores).max(axis=2)
    margin = float(np.median(own - rivals))
    if not margin > 0:
        logger.warning("relabel_skipped", extra={"data": {"median_margin": margin}})
        return list(steps)

    paths = switch_penalized_paths(scores, config.switch_cost * margin)
    logger.debug("relabel", extra={"data": {"median_margin": margin,
                                            "changed": int(np.sum(paths != labels))}})
    return [paths[i] for i in range(seq.T)]


# ---- detection ------------------------------------------------------------

def detect_static(seq: SnapshotSequence, config: PipelineConfig) -> PartitionSequence:
    """Per-snapshot static method: truncated SVD of each MCM, then clustering.

    Warm starting (when enabled) still links consecutive clusterings; the
    embeddings themselves are independent.
    """
    seq = _prepare(seq, config)
    if config.variable:
        rank = default_embedding_rank(config.method, config.k_c)
    else:
        rank = config.embedding_rank
    mcms = build_mcms(seq, config.method)
    bases = [top_left_singular_vectors(m.matrix, rank) for m in mcms]
    steps = _cluster_sequence(seq, bases, config, config.k_c)
    if config.relabel:
        steps = _relabel(seq, steps, config.k_c, config)
    return _partition(steps, [config.k_c] * seq.T)


def detect_fixed_k(seq: SnapshotSequence,
                   config: PipelineConfig) -> Tuple[PartitionSequence, FitReport]:
    """Track ``config.k_c`` communities along one geodesic.

    With ``config.geodesic`` off, or a single snapshot, this is the static
    method and the report is empty.

    Returns:
        (partitions, fit report)

    Raises:
        ConfigError: config is in variable mode
        ModalityMismatchError: method does not accept the sequence's modality
    """
    if config.variable:
        raise ConfigError("detect_fixed_k needs fixed mode; unset k_min/k_max", field="k_min")
    if not config.geodesic or seq.T == 1:
        logger.info("detect_static", extra={"data": {"method": config.method.method.value,
                                                     "T": seq.T, "k_c": config.k_c}})
        return detect_static(seq, config), FitReport(converged=True)

    seq = _prepare(seq, config)
    rank = config.embedding_rank
    mcms = build_mcms(seq, config.method)
    bases, report, _ = _fit_bases(seq, mcms, config, rank)
    steps = _cluster_sequence(seq, bases, config, config.k_c)
    if config.relabel:
        steps = _relabel(seq, steps, config.k_c, config)
    logger.info("detect_fixed_k", extra={"data": {"method": config.method.method.value,
                                                  "T": seq.T, "k_c": config.k_c, "k_e": rank,
                                                  "objective": report.final_objective}})
    return _partition(steps, [config.k_c] * seq.T), report


def _smooth(H: np.ndarray, sigma: float) -> np.ndarray:
    if sigma <= 0 or H.shape[1] < 2:
        return H.copy()
    return gaussian_filter1d(H, sigma, axis=1, mode="reflect", truncate=FILTER_TRUNCATE)


def detect_variable_k(seq: SnapshotSequence,
                      config: PipelineConfig) -> Tuple[PartitionSequence, BenefitTable]:
    """Time-varying community counts from a modularity sweep on one geodesic.

    Each k in [k_min, k_max] clusters the whole sequence with warm starts.
    The modularity rows are Gaussian-filtered and each snapshot takes the
    k with the largest filtered value (smaller k on ties). Community ids
    are carried across changes of k by maximum-overlap matching.

    Raises:
        ConfigError: config is in fixed mode
        ModalityMismatchError: coclustering methods (no one-mode modularity)
    """
    if not config.variable:
        raise ConfigError("detect_variable_k needs k_min and k_max", field="k_min")
    _require_one_mode(config.method.method)
    seq = _prepare(seq, config)
    mcms = build_mcms(seq, config.method)
    bases, report, _ = _fit_bases(seq, mcms, config, config.embedding_rank)

    k_values = np.arange(config.k_min, config.k_max + 1)
    passes: Dict[int, List[Step]] = {}
    H = np.zeros((len(k_values), seq.T))
    for row, k in enumerate(k_values):
        passes[int(k)] = _cluster_sequence(seq, bases, config, int(k))
        H[row] = [_benefit(snapshot, step) for snapshot, step in zip(seq, passes[int(k)])]
    table = BenefitTable(H=H, filtered=_smooth(H, config.gaussian_sigma), k_values=k_values)

    chosen = [int(k) for k in table.choice]
    relabel = {int(k): np.arange(int(k)) for k in k_values}
    steps: List[Step] = []
    for i, k in enumerate(chosen):
        raw = passes[k][i]
        if i > 0 and k != chosen[i - 1]:
            prev = steps[-1]
            if raw.ndim == 2:
                relabel[k] = membership_permutation(prev, raw)
            else:
                relabel[k] = label_mapping(prev, raw, n_ids=k)
        steps.append(permute_columns(raw, relabel[k]) if raw.ndim == 2 else relabel[k][raw])

    logger.info("detect_variable_k", extra={"data": {"method": config.method.method.value,
                                                     "k_per_step": chosen,
                                                     "objective": report.final_objective}})
    return _partition(steps, chosen), table


def select_k_by_modularity(seq: SnapshotSequence, config: PipelineConfig,
                           k_range: Sequence[int]) -> int:
    """Run detect_fixed_k for each k and return the mode of the per-snapshot best k.

    Both the per-snapshot argmax and the mode break ties toward the smaller k.
    """
    ks = sorted({int(k) for k in k_range})
    if not ks:
        raise ConfigError("empty k range", field="k_range")
    _require_one_mode(config.method.method)
    scores = np.zeros((len(ks), seq.T))
    for row, k in enumerate(ks):
        parts, _ = detect_fixed_k(seq, replace(config, k_c=k, k_e=None, k_min=None, k_max=None))
        scores[row] = [_benefit(seq[i], parts.hard_labels(i)) for i in range(seq.T)]
    best = np.argmax(scores, axis=0)
    votes = np.bincount(best, minlength=len(ks))
    selected = ks[int(np.argmax(votes))]
    logger.info("select_k", extra={"data": {"k_range": ks, "votes": votes.tolist(),
                                            "selected": selected}})
    return selected


# ---- diagnostics ----------------------------------------------------------

def geodesic_structure_check(mcms: Sequence[Union[Mcm, np.ndarray]],
                             which: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Singular spectrum and planar projection of the stacked eigenvectors.

    The ``which``-th top eigenvector of every MCM and its negation form the
    columns of X (d×2T). When the eigenvectors lie on one great circle, X
    has rank 2 and the projections onto its top two left singular vectors
    sit on the unit circle.

    Args:
        mcms: Symmetric PSD MCMs, one per snapshot
        which: Eigenvector index (0 for modularity-type MCMs, 1 when the
            top eigenvector is trivial)

    Returns:
        (sigma, proj): all singular values of X, and the 2T×2 projections

    Raises:
        DegenerateInputError: Fewer than two MCMs
    """
    mats = [np.asarray(m.matrix if isinstance(m, Mcm) else m, dtype=np.float64) for m in mcms]
    if len(mats) < 2:
        raise DegenerateInputError(f"geodesic check needs T >= 2, got {len(mats)}")
    vectors = [top_left_singular_vectors(m, which + 1)[:, which] for m in mats]
    X = np.column_stack(vectors + [-v for v in vectors])
    U, sigma, _ = linalg.svd(X, full_matrices=False)
    plane = np.zeros((X.shape[0], 2))
    plane[:, :min(2, U.shape[1])] = U[:, :2]
    return sigma, (plane.T @ X).T


def geodesic_ratio(sigma: np.ndarray) -> float:
    """σ_3/σ_1: zero for exactly geodesic first-eigenvector data."""
    if len(sigma) < 3 or sigma[0] == 0:
        return 0.0
    return float(sigma[2] / sigma[0])
