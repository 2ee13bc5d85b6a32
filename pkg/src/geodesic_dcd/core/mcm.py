"""Modeled clustering matrices (MCMs).

An MCM is a matrix whose top-k left singular subspace is the span of a
spectral method's node embedding. Symmetric-method builders return PSD
matrices; spectral coclustering returns an asymmetric (possibly
rectangular) regularized Laplacian.

Conventions:
    - A[i, j] is the weight of the edge i -> j.
    - Degrees are row sums; zero-degree nodes raise unless MethodSpec.regularize
      turns on degree regularization (D <- D + tau*I, tau = mean degree).
    - RWSC uses Pi = D_out^{-1}, not the stationary distribution.
"""

from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from geodesic_dcd.core.graph import GraphSnapshot
from geodesic_dcd.core.matfun import (
    clip_spectrum,
    matrix_geometric_mean,
    matrix_power_mean,
    symmetrize,
    top_left_singular_vectors,
)
from geodesic_dcd.errors import (
    ConfigError,
    DegenerateInputError,
    ModalityMismatchError,
    RankError,
)

PSD_TOL = 1e-8
GMSC_REG = 1e-6


class Method(str, Enum):
    USC = "USC"
    NSC = "NSC"
    SMM = "SMM"
    BHC = "BHC"
    SRSC = "SRSC"
    GMSC = "GMSC"
    SPMSC = "SPMSC"
    OSC = "OSC"
    CSC = "CSC"
    DDSC = "DDSC"
    BSC = "BSC"
    RWSC = "RWSC"
    PMLSC = "PMLSC"
    SCC_SEND = "SCC-send"
    SCC_RECEIVE = "SCC-receive"


SIMPLE_METHODS = {Method.USC, Method.NSC, Method.SMM, Method.BHC, Method.OSC, Method.CSC}
SIGNED_METHODS = {Method.SRSC, Method.GMSC, Method.SPMSC}
DIRECTED_METHODS = {Method.DDSC, Method.BSC, Method.RWSC}
POWER_MEAN_METHODS = {Method.SPMSC, Method.PMLSC}
COCLUSTER_METHODS = {Method.SCC_SEND, Method.SCC_RECEIVE}
SOFT_METHODS = {Method.OSC, Method.CSC}


@dataclass(frozen=True)
class MethodSpec:
    """A spectral method and its parameters.

    Attributes:
        method: Method tag
        p: Power-mean exponent (SPMSC, PMLSC); defaults to 1
        epsilon: Spectrum shift for p < 0 (SPMSC, PMLSC)
        r: Bethe Hessian parameter (BHC); defaults to sqrt(mean degree)
        tau: Regularization (SCC); defaults to the mean degree of each side
        n: Shift for USC, a number or "auto" (2 * max degree)
        regularize: Degree regularization for NSC/RWSC/DDSC/signed methods
    """

    method: Method
    p: Optional[float] = None
    epsilon: float = 1e-6
    r: Optional[float] = None
    tau: Optional[float] = None
    n: Union[float, str] = "auto"
    regularize: bool = False

    def __post_init__(self):
        try:
            object.__setattr__(self, "method", Method(self.method))
        except ValueError:
            raise ConfigError(f"unknown method {self.method!r}", field="method")
        if self.p is not None and self.method not in POWER_MEAN_METHODS:
            raise ConfigError(f"p is only valid for SPMSC/PMLSC, not {self.method.value}",
                              field="p")
        if self.r is not None and self.method is not Method.BHC:
            raise ConfigError("r is only valid for BHC", field="r")
        if self.tau is not None:
            if self.method not in COCLUSTER_METHODS:
                raise ConfigError("tau is only valid for SCC", field="tau")
            if self.tau <= 0:
                raise ConfigError("tau must be positive", field="tau")
        if self.n != "auto":
            if self.method is not Method.USC:
                raise ConfigError("n is only valid for USC", field="n")
            if not isinstance(self.n, (int, float)):
                raise ConfigError("n must be a number or 'auto'", field="n")
        if self.epsilon < 0:
            raise ConfigError("epsilon must be nonnegative", field="epsilon")

    @property
    def power(self) -> float:
        return 1.0 if self.p is None else float(self.p)

    @property
    def is_soft(self) -> bool:
        return self.method in SOFT_METHODS

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["method"] = self.method.value
        defaults = MethodSpec.__dataclass_fields__
        return {k: v for k, v in data.items() if k == "method" or v != defaults[k].default}

    @classmethod
    def from_dict(cls, data: Union[str, Dict[str, Any]]) -> "MethodSpec":
        if isinstance(data, str):
            return cls(method=data)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown fields {sorted(unknown)}", field="method")
        if "method" not in data:
            raise ConfigError("missing method tag", field="method")
        return cls(**data)


@dataclass(frozen=True, eq=False)
class Mcm:
    """A modeled clustering matrix."""

    matrix: np.ndarray
    method: Optional[Method] = None
    k_hint: Optional[int] = None

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=np.float64)
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def symmetric(self) -> bool:
        m = self.matrix
        return m.shape[0] == m.shape[1] and np.allclose(m, m.T, rtol=0.0, atol=1e-12)

    def is_psd(self, tol: float = PSD_TOL) -> bool:
        w = np.linalg.eigvalsh(symmetrize(self.matrix))
        return bool(w[0] >= -tol * max(1.0, w[-1]))


def default_embedding_rank(spec: MethodSpec, k_c: int) -> int:
    """Embedding rank k' for ``k_c`` communities.

    SRSC, and SPMSC with p >= 1, use k_c - 1; every other method uses k_c.
    """
    if spec.method is Method.SRSC or (spec.method is Method.SPMSC and spec.power >= 1):
        return max(k_c - 1, 1)
    return k_c


# ---- modality checks ------------------------------------------------------

def _check_modality(snapshot: GraphSnapshot, method: Method) -> None:
    name = method.value
    if snapshot.is_multiview and method is not Method.PMLSC:
        raise ModalityMismatchError(f"{name} does not accept multiview snapshots")
    if snapshot.is_signed and method not in SIGNED_METHODS:
        raise ModalityMismatchError(f"{name} does not accept signed edge weights")
    if method in COCLUSTER_METHODS:
        if not snapshot.directed and snapshot.bipartite_split is None:
            raise ModalityMismatchError(f"{name} needs a directed or bipartite snapshot")
        return
    if method in DIRECTED_METHODS:
        return
    if snapshot.directed:
        raise ModalityMismatchError(f"{name} needs an undirected snapshot")


def _inv_sqrt_degrees(deg: np.ndarray, regularize: bool, what: str = "degree",
                      allow_zero: bool = False) -> np.ndarray:
    if regularize:
        deg = deg + deg.mean()
    if np.any(deg < 0):
        raise DegenerateInputError(f"negative {what}")
    zero = deg <= 0
    if np.any(zero) and not allow_zero:
        raise DegenerateInputError(
            f"node {int(np.flatnonzero(zero)[0])} has zero {what}; "
            "connect the graph first or enable regularization")
    out = np.zeros_like(deg)
    out[~zero] = 1.0 / np.sqrt(deg[~zero])
    return out


def _require_edges(snapshot: GraphSnapshot, method: Method) -> None:
    if snapshot.n_edges == 0:
        raise DegenerateInputError(f"{method.value} on an empty graph")


# ---- simple networks ------------------------------------------------------

def mcm_generic(R: np.ndarray, leading: bool, method: Optional[Method] = None,
                k_hint: Optional[int] = None) -> Mcm:
    """I + R/||R||_F if ``leading`` else I - R/||R||_F, for symmetric R.

    The result is PSD and its eigenvectors in descending eigenvalue order
    are the leading (resp. trailing) eigenvectors of R.
    """
    R = np.asarray(R, dtype=np.float64)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise DegenerateInputError("R must be square")
    scale = max(1.0, float(np.abs(R).max()) if R.size else 1.0)
    if not np.allclose(R, R.T, rtol=0.0, atol=1e-10 * scale):
        raise DegenerateInputError("R must be symmetric")
    norm = np.linalg.norm(R, 'fro')
    if norm == 0:
        raise DegenerateInputError("R has zero Frobenius norm")
    sign = 1.0 if leading else -1.0
    return Mcm(np.eye(R.shape[0]) + sign * symmetrize(R) / norm, method=method, k_hint=k_hint)


def mcm_usc(snapshot: GraphSnapshot, n: Union[float, str] = "auto") -> Mcm:
    """nI - L for unnormalized spectral clustering (n = 2 * max degree when "auto")."""
    _check_modality(snapshot, Method.USC)
    _require_edges(snapshot, Method.USC)
    A = snapshot.adjacency()
    deg = A.sum(axis=1)
    shift = 2.0 * deg.max() if n == "auto" else float(n)
    laplacian = np.diag(deg) - A
    return Mcm(shift * np.eye(snapshot.d) - laplacian, method=Method.USC)


def mcm_nsc(snapshot: GraphSnapshot, regularize: bool = False) -> Mcm:
    """Q^sym = D^{-1/2}(D + A)D^{-1/2}, spectrum in [0, 2]."""
    _check_modality(snapshot, Method.NSC)
    A = snapshot.adjacency()
    deg = A.sum(axis=1)
    if regularize:
        deg = deg + deg.mean()
    s = _inv_sqrt_degrees(deg, regularize=False)
    return Mcm(s[:, None] * (np.diag(deg) + A) * s[None, :], method=Method.NSC)


def mcm_smm(snapshot: GraphSnapshot) -> Mcm:
    """Modularity MCM, built from B = A - dd^T/vol."""
    _check_modality(snapshot, Method.SMM)
    _require_edges(snapshot, Method.SMM)
    A = snapshot.adjacency()
    deg = A.sum(axis=1)
    B = A - np.outer(deg, deg) / deg.sum()
    return mcm_generic(B, leading=True, method=Method.SMM)


def mcm_bhc(snapshot: GraphSnapshot, r: Optional[float] = None) -> Mcm:
    """Trailing-eigenvector MCM of the Bethe Hessian H(r) = (r^2 - 1)I - rA + D.

    ``r`` defaults to sqrt(c), c the mean degree. An edgeless graph gives
    H = -I and the MCM (1 + 1/sqrt(d)) I.
    """
    _check_modality(snapshot, Method.BHC)
    A = snapshot.adjacency()
    deg = A.sum(axis=1)
    if r is None:
        r = float(np.sqrt(deg.mean()))
    H = (r * r - 1.0) * np.eye(snapshot.d) - r * A + np.diag(deg)
    return mcm_generic(H, leading=False, method=Method.BHC)


# ---- signed networks ------------------------------------------------------

def signed_laplacians(snapshot: GraphSnapshot,
                      regularize: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """(L^sym of G+, Q^sym of G-).

    Nodes without positive (resp. negative) edges get identity rows.
    """
    d = snapshot.d
    pos = snapshot.positive_part()
    neg = snapshot.negative_part()
    s_pos = _inv_sqrt_degrees(pos.sum(axis=1), regularize, "positive degree", allow_zero=True)
    s_neg = _inv_sqrt_degrees(neg.sum(axis=1), regularize, "negative degree", allow_zero=True)
    lap_pos = np.eye(d) - s_pos[:, None] * pos * s_pos[None, :]
    q_neg = np.eye(d) + s_neg[:, None] * neg * s_neg[None, :]
    return symmetrize(lap_pos), symmetrize(q_neg)


def mcm_signed(snapshot: GraphSnapshot, spec: MethodSpec) -> Mcm:
    """MCMs for SRSC, GMSC and SPMSC.

    SRSC: trailing eigenvectors of the signed ratio Laplacian |D| - A.
    SPMSC: I - (1/2) M_p(L^sym+, Q^sym-), the power-mean shift removed again.
    GMSC: I - (1/2) (L^sym+ # Q^sym-), L^sym+ regularized by
    1e-6 * trace / d.
    """
    method = spec.method
    if method not in SIGNED_METHODS:
        raise ModalityMismatchError(f"{method.value} is not a signed method")
    _check_modality(snapshot, method)
    d = snapshot.d

    if method is Method.SRSC:
        A = snapshot.adjacency()
        abs_deg = np.abs(A).sum(axis=1)
        return mcm_generic(np.diag(abs_deg) - A, leading=False, method=method)

    lap_pos, q_neg = signed_laplacians(snapshot, spec.regularize)
    if method is Method.GMSC:
        reg = GMSC_REG * np.trace(lap_pos) / d
        mean = matrix_geometric_mean(lap_pos + reg * np.eye(d), q_neg)
    else:
        p = spec.power
        shift = spec.epsilon if p <= 0 else 0.0
        mean = matrix_power_mean([lap_pos, q_neg], p, epsilon=shift) - shift * np.eye(d)
    mean = clip_spectrum(mean, 0.0, 2.0)
    return Mcm(np.eye(d) - 0.5 * mean, method=method)


# ---- directed networks ----------------------------------------------------

def mcm_directed(snapshot: GraphSnapshot, spec: MethodSpec) -> Mcm:
    """MCMs for BSC (AA^T + A^TA), DDSC and RWSC, all leading-eigenvector."""
    method = spec.method
    if method not in DIRECTED_METHODS:
        raise ModalityMismatchError(f"{method.value} is not a directed method")
    _check_modality(snapshot, method)
    _require_edges(snapshot, method)
    A = snapshot.adjacency()

    if method is Method.BSC:
        return mcm_generic(A @ A.T + A.T @ A, leading=True, method=method)

    out_deg = A.sum(axis=1)
    if method is Method.DDSC:
        s_out = _inv_sqrt_degrees(out_deg, spec.regularize, "out-degree")
        s_in = _inv_sqrt_degrees(A.sum(axis=0), spec.regularize, "in-degree")
        # D_out^-1/2 A D_in^-1/2 A^T D_out^-1/2 + D_in^-1/2 A^T D_out^-1/2 A D_in^-1/2
        coupling = s_out[:, None] * (A @ (s_in[:, None] * A.T)) * s_out[None, :]
        cocitation = s_in[:, None] * (A.T @ (s_out[:, None] * A)) * s_in[None, :]
        return mcm_generic(coupling + cocitation, leading=True, method=method)

    # RWSC: P = D_out^{-1} A, Pi = D_out^{-1}
    s_out = _inv_sqrt_degrees(out_deg, spec.regularize, "out-degree")
    pi_half = s_out
    pi_inv_half = 1.0 / s_out
    transition = (s_out ** 2)[:, None] * A
    half = pi_half[:, None] * transition * pi_inv_half[None, :]
    theta = 0.5 * (half + half.T)
    return mcm_generic(theta, leading=True, method=method)


# ---- overlapping communities ----------------------------------------------

def overlap_embedding(adjacency: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """X = V_k Λ_k^{1/2} restricted to span(basis).

    Rayleigh-Ritz on ``basis``: eigendecompose basis^T A basis = R Λ R^T and
    return basis R Λ_+^{1/2} (columns in descending eigenvalue order,
    negative eigenvalues contribute zero columns). When ``basis`` spans the
    top-k eigenvectors of A this is exactly the thin spectral embedding.
    """
    small = symmetrize(basis.T @ adjacency @ basis)
    w, R = np.linalg.eigh(small)
    order = np.argsort(-w, kind="stable")
    w, R = w[order], R[:, order]
    return (basis @ R) * np.sqrt(np.clip(w, 0.0, None))[None, :]


def mcm_overlap(snapshot: GraphSnapshot, k: int) -> np.ndarray:
    """Node embedding X = V_k Λ_k^{1/2} from the thin spectral decomposition of A."""
    _check_modality(snapshot, Method.OSC)
    if k > snapshot.d:
        raise RankError(f"k={k} exceeds d={snapshot.d}")
    w, v = np.linalg.eigh(symmetrize(snapshot.adjacency()))
    order = np.argsort(-w, kind="stable")[:k]
    return v[:, order] * np.sqrt(np.clip(w[order], 0.0, None))[None, :]


# ---- multiview networks ---------------------------------------------------

def mcm_multiview(views: Union[GraphSnapshot, Tuple[np.ndarray, ...]], spec: MethodSpec) -> Mcm:
    """I - (1/2) clip(M_p(L^sym_1, ..., L^sym_S)) over the S views."""
    if isinstance(views, GraphSnapshot):
        _check_modality(views, Method.PMLSC)
        adjacencies = views.view_adjacencies()
    else:
        adjacencies = tuple(np.asarray(a, dtype=np.float64) for a in views)
    if not adjacencies:
        raise DegenerateInputError("no views")
    d = adjacencies[0].shape[0]
    if any(a.shape != (d, d) for a in adjacencies):
        raise DegenerateInputError("views disagree on d")

    laplacians = []
    for a in adjacencies:
        s = _inv_sqrt_degrees(a.sum(axis=1), spec.regularize, allow_zero=True)
        laplacians.append(symmetrize(np.eye(d) - s[:, None] * a * s[None, :]))

    p = spec.power
    shift = spec.epsilon if p <= 0 else 0.0
    mean = matrix_power_mean(laplacians, p, epsilon=shift) - shift * np.eye(d)
    mean = clip_spectrum(mean, 0.0, 2.0)
    return Mcm(np.eye(d) - 0.5 * mean, method=Method.PMLSC)


# ---- cocommunities --------------------------------------------------------

def mcm_coclustering(snapshot: GraphSnapshot, spec: Optional[MethodSpec] = None) -> Tuple[Mcm, Mcm]:
    """(sending MCM, receiving MCM) from L = (D_r + τI)^{-1/2} A (D_c + τI)^{-1/2}.

    With A[i, j] the weight of i -> j, rows of L index senders, so the
    sending MCM is L and the receiving MCM is L^T; in both the top-k LEFT
    singular vectors are the embeddings. Bipartite snapshots use the
    |V1|×|V2| block, V1 sending and V2 receiving.
    """
    method = spec.method if spec is not None else Method.SCC_SEND
    _check_modality(snapshot, method)
    A = snapshot.adjacency()
    if snapshot.bipartite_split is not None:
        n1 = snapshot.bipartite_split[0]
        A = A[:n1, n1:] + A[n1:, :n1].T

    row_deg = A.sum(axis=1)
    col_deg = A.sum(axis=0)
    tau = spec.tau if spec is not None else None
    tau_r = tau if tau is not None else row_deg.mean()
    tau_c = tau if tau is not None else col_deg.mean()
    # an edgeless graph leaves tau = 0 and L = 0
    r = np.zeros_like(row_deg)
    c = np.zeros_like(col_deg)
    r[row_deg + tau_r > 0] = 1.0 / np.sqrt((row_deg + tau_r)[row_deg + tau_r > 0])
    c[col_deg + tau_c > 0] = 1.0 / np.sqrt((col_deg + tau_c)[col_deg + tau_c > 0])
    L = r[:, None] * A * c[None, :]
    return Mcm(L, method=Method.SCC_SEND), Mcm(L.T, method=Method.SCC_RECEIVE)


# ---- dispatch -------------------------------------------------------------

def build_mcm(snapshot: GraphSnapshot, spec: MethodSpec) -> Mcm:
    """Build the MCM of ``spec.method`` for one snapshot.

    OSC uses the leading-eigenvector MCM of A; CSC shares NSC's MCM.
    """
    method = spec.method
    if method is Method.USC:
        return mcm_usc(snapshot, spec.n)
    if method in (Method.NSC, Method.CSC):
        _check_modality(snapshot, method)
        mcm = mcm_nsc(snapshot, spec.regularize)
        return Mcm(mcm.matrix, method=method)
    if method is Method.SMM:
        return mcm_smm(snapshot)
    if method is Method.BHC:
        return mcm_bhc(snapshot, spec.r)
    if method in SIGNED_METHODS:
        return mcm_signed(snapshot, spec)
    if method in DIRECTED_METHODS:
        return mcm_directed(snapshot, spec)
    if method is Method.OSC:
        _check_modality(snapshot, method)
        _require_edges(snapshot, method)
        return mcm_generic(symmetrize(snapshot.adjacency()), leading=True, method=method)
    if method is Method.PMLSC:
        return mcm_multiview(snapshot, spec)
    if method in COCLUSTER_METHODS:
        send, receive = mcm_coclustering(snapshot, spec)
        return send if method is Method.SCC_SEND else receive
    raise ModalityMismatchError(f"unsupported method {method}")


def static_embedding(snapshot: GraphSnapshot, spec: MethodSpec, k: int) -> np.ndarray:
    """Top-k left singular vectors of the snapshot's MCM (the per-snapshot static embedding)."""
    return top_left_singular_vectors(build_mcm(snapshot, spec).matrix, k)
