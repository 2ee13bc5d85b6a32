"""Grassmann geodesic regression by block coordinate descent.

A geodesic on Gr(d, k) is stored as P = [H Y] (d×2k, orthonormal columns)
and principal angles Θ = (θ_1..θ_k):

    U(t) = H cos(Θt) + Y sin(Θt) = P C(t),   C(t) = [cos(Θt); sin(Θt)]

Fitting minimizes the aggregated reconstruction error

    f(P, Θ) = Σ_i ||M_i - U(t_i) U(t_i)^T M_i||_F^2

by alternating a P-step and a Θ-step, each of which never increases f.

P-step: f = Σ||M_i||² - g(P) with g(P) = Σ ||M_i^T P C_i||² convex in P.
Linearizing g at the current P gives the accumulation
G = Σ_i M_i M_i^T U(t_i) C_i^T and the new P is the polar factor of G.

Θ-step: with P fixed the objective separates over j. Writing
α = ||M^T h_j||², γ = ||M^T y_j||², β = <M^T h_j, M^T y_j>,
φ = atan2(β, (α - γ)/2) and ρ = sqrt(((α - γ)/2)² + β²), each term is
-ρ cos(2θt - φ) + const. Its sharpest quadratic majorizer has curvature
(2t)² ρ sin(x)/x at x = wrap(2θt - φ) in [-π, π), and one step is
θ <- θ - Σ_i ḟ_i / Σ_i w_i.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from geodesic_dcd.core.matfun import (
    principal_angles,
    subspace_distance,
    top_left_singular_vectors,
)
from geodesic_dcd.core.mcm import Mcm
from geodesic_dcd.errors import DegenerateInputError, InvariantViolation, RankError

logger = logging.getLogger(__name__)

ORTHO_TOL = 1e-8
DEGENERATE_SIN = 1e-10
COMPLEMENT_SEED = 0

DEFAULT_MAX_OUTER = 100
DEFAULT_TOL = 1e-8
DEFAULT_INNER_ITERS = 5

MatrixLike = Union[Mcm, np.ndarray]

__all__ = [
    "GeodesicModel",
    "FitReport",
    "objective",
    "p_update",
    "theta_update",
    "theta_gradient",
    "init_geodesic",
    "fit_geodesic",
    "principal_angles",
    "subspace_distance",
    "top_left_singular_vectors",
]


@dataclass(frozen=True, eq=False)
class GeodesicModel:
    """Fitted geodesic t -> U(t) on Gr(d, k)."""

    P: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        P = np.array(self.P, dtype=np.float64)
        theta = np.array(self.theta, dtype=np.float64).reshape(-1)
        k = len(theta)
        if P.ndim != 2 or P.shape[1] != 2 * k:
            raise InvariantViolation("geodesic-shape", f"P is {P.shape}, expected (d, {2 * k})")
        if P.shape[0] < 2 * k:
            raise RankError(f"a rank-{k} geodesic needs d >= {2 * k}, got d={P.shape[0]}")
        if np.any(theta < 0) or not np.all(np.isfinite(theta)):
            raise InvariantViolation("theta-range", "principal angles must be finite and >= 0")
        if np.abs(P.T @ P - np.eye(2 * k)).max() > ORTHO_TOL:
            raise InvariantViolation("orthonormal-P", "P^T P must equal the identity")
        P.setflags(write=False)
        theta.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "theta", theta)

    @property
    def d(self) -> int:
        return self.P.shape[0]

    @property
    def k(self) -> int:
        return len(self.theta)

    @property
    def H(self) -> np.ndarray:
        return self.P[:, :self.k]

    @property
    def Y(self) -> np.ndarray:
        return self.P[:, self.k:]

    def evaluate(self, t: float) -> np.ndarray:
        """U(t), a d×k matrix with orthonormal columns."""
        return _curve(self.P, self.theta, float(t))

    def evaluate_many(self, times: Sequence[float]) -> List[np.ndarray]:
        return [self.evaluate(t) for t in times]


@dataclass
class FitReport:
    """Convergence record of a geodesic fit; ``model`` is the fitted curve, if any."""

    objective_trace: List[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    final_objective: float = float("nan")
    model: Optional[GeodesicModel] = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "objective_trace": list(self.objective_trace),
            "iterations": self.iterations,
            "converged": self.converged,
            "final_objective": self.final_objective,
        }


# ---- helpers --------------------------------------------------------------

def _as_matrices(mcms: Sequence[MatrixLike]) -> List[np.ndarray]:
    mats = [np.asarray(m.matrix if isinstance(m, Mcm) else m, dtype=np.float64) for m in mcms]
    if not mats:
        raise DegenerateInputError("no MCMs to fit")
    d = mats[0].shape[0]
    for i, m in enumerate(mats):
        if m.ndim != 2 or m.shape[0] != d:
            raise DegenerateInputError(f"MCM {i} has shape {m.shape}, expected {d} rows")
    return mats


def _check_lengths(mats: Sequence[np.ndarray], times: Sequence[float]) -> np.ndarray:
    times = np.asarray(times, dtype=np.float64).reshape(-1)
    if len(times) != len(mats):
        raise DegenerateInputError(f"{len(mats)} MCMs but {len(times)} times")
    return times


def _curve(P: np.ndarray, theta: np.ndarray, t: float) -> np.ndarray:
    k = len(theta)
    return P[:, :k] * np.cos(theta * t) + P[:, k:] * np.sin(theta * t)


def _check_dims(P: np.ndarray, mats: Sequence[np.ndarray]) -> None:
    if P.shape[0] != mats[0].shape[0]:
        raise DegenerateInputError(f"model has d={P.shape[0]}, MCMs have {mats[0].shape[0]} rows")


def _loss(P: np.ndarray, theta: np.ndarray, mats: Sequence[np.ndarray], times: np.ndarray) -> float:
    total = 0.0
    for m, t in zip(mats, times):
        U = _curve(P, theta, t)
        residual = m - U @ (U.T @ m)
        total += float(np.sum(residual * residual))
    return total


def _coefficients(P: np.ndarray,
                  mats: Sequence[np.ndarray]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """α, β, γ as T×k arrays for the current base P."""
    k = P.shape[1] // 2
    alpha, beta, gamma = [], [], []
    for m in mats:
        Q = m.T @ P
        Qh, Qy = Q[:, :k], Q[:, k:]
        alpha.append(np.sum(Qh * Qh, axis=0))
        gamma.append(np.sum(Qy * Qy, axis=0))
        beta.append(np.sum(Qh * Qy, axis=0))
    return np.array(alpha), np.array(beta), np.array(gamma)


def _phase(alpha: np.ndarray, beta: np.ndarray, gamma: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    half_diff = 0.5 * (alpha - gamma)
    return np.arctan2(beta, half_diff), np.hypot(half_diff, beta)


def _wrap(x: np.ndarray) -> np.ndarray:
    """Map angles into [-π, π)."""
    return (x + np.pi) % (2.0 * np.pi) - np.pi


def _gradient_and_weight(theta: np.ndarray, times: np.ndarray, phi: np.ndarray,
                         rho: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    t = times[:, None]
    x = 2.0 * theta[None, :] * t - phi
    grad = 2.0 * t * rho * np.sin(x)
    # np.sinc(z) = sin(πz)/(πz), so this is sin(x̃)/x̃ with the x̃ -> 0 limit 1
    weight = (2.0 * t) ** 2 * rho * np.sinc(_wrap(x) / np.pi)
    return grad.sum(axis=0), weight.sum(axis=0)


# ---- public operations ----------------------------------------------------

def objective(model: GeodesicModel, mcms: Sequence[MatrixLike], times: Sequence[float]) -> float:
    """Σ_i ||M_i - U(t_i)U(t_i)^T M_i||_F^2."""
    mats = _as_matrices(mcms)
    times = _check_lengths(mats, times)
    _check_dims(model.P, mats)
    return _loss(model.P, model.theta, mats, times)


def p_update(P_prev: np.ndarray, theta: np.ndarray, mcms: Sequence[MatrixLike],
             times: Sequence[float]) -> np.ndarray:
    """One P-step: polar factor of Σ_i M_i M_i^T U(t_i) [cos(Θt_i) sin(Θt_i)].

    Raises:
        DegenerateInputError: The accumulated matrix is zero
    """
    mats = _as_matrices(mcms)
    times = _check_lengths(mats, times)
    P_prev = np.asarray(P_prev, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    _check_dims(P_prev, mats)

    G = np.zeros_like(P_prev)
    for m, t in zip(mats, times):
        U = _curve(P_prev, theta, t)
        SU = m @ (m.T @ U)
        G += np.hstack([SU * np.cos(theta * t), SU * np.sin(theta * t)])

    if not np.any(G):
        raise DegenerateInputError("P-update accumulation is all zero")
    W, _, Vt = linalg.svd(G, full_matrices=False)
    return W @ Vt


def theta_gradient(P: np.ndarray, theta: np.ndarray, mcms: Sequence[MatrixLike],
                   times: Sequence[float]) -> np.ndarray:
    """∂f/∂θ_j for every j at fixed P."""
    mats = _as_matrices(mcms)
    times = _check_lengths(mats, times)
    P = np.asarray(P, dtype=np.float64)
    _check_dims(P, mats)
    phi, rho = _phase(*_coefficients(P, mats))
    grad, _ = _gradient_and_weight(np.asarray(theta, dtype=np.float64), times, phi, rho)
    return grad


def theta_update(P: np.ndarray, theta_prev: np.ndarray, mcms: Sequence[MatrixLike],
                 times: Sequence[float], inner_iters: int = DEFAULT_INNER_ITERS) -> np.ndarray:
    """``inner_iters`` majorize-minimize steps on each θ_j with P fixed.

    A θ_j whose total majorizer weight vanishes is left unchanged. The
    result may leave [0, π/2]; ``fit_geodesic`` folds it back.
    """
    mats = _as_matrices(mcms)
    times = _check_lengths(mats, times)
    P = np.asarray(P, dtype=np.float64)
    _check_dims(P, mats)
    phi, rho = _phase(*_coefficients(P, mats))

    theta = np.array(theta_prev, dtype=np.float64).reshape(-1)
    for _ in range(inner_iters):
        grad, weight = _gradient_and_weight(theta, times, phi, rho)
        active = weight > 0
        theta[active] -= grad[active] / weight[active]
    return theta


def _fold(P: np.ndarray, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Make θ nonnegative by flipping the matching Y columns (same curve)."""
    k = len(theta)
    negative = theta < 0
    if not np.any(negative):
        return P, theta
    P = P.copy()
    P[:, k + np.flatnonzero(negative)] *= -1.0
    return P, np.abs(theta)


def _complete_basis(P_partial: np.ndarray, n_missing: int, rng: np.random.Generator) -> np.ndarray:
    """``n_missing`` orthonormal columns orthogonal to ``P_partial``."""
    d = P_partial.shape[0]
    block = rng.standard_normal((d, n_missing))
    for _ in range(2):
        block -= P_partial @ (P_partial.T @ block)
    Q, _ = linalg.qr(block, mode='economic')
    return Q


def init_geodesic(mcms: Sequence[MatrixLike], times: Sequence[float], k: int) -> GeodesicModel:
    """Initial geodesic through the top-k subspaces of the first and last MCMs.

    With Z S Q^T the SVD of H_1^T H_T, the base is H = H_1 Z, Θ = arccos(S)
    and Y normalizes the columns of (I - H_1 H_1^T) H_T Q, so that U(0)
    spans ⟨H_1⟩ and U(1) spans ⟨H_T⟩. Directions with zero principal angle
    get a seeded orthonormal complement.

    Raises:
        RankError: k exceeds rank(M_1) or rank(M_T), or d < 2k
    """
    mats = _as_matrices(mcms)
    _check_lengths(mats, times)
    d = mats[0].shape[0]
    if 2 * k > d:
        raise RankError(f"a rank-{k} geodesic needs d >= {2 * k}, got d={d}")

    H1 = top_left_singular_vectors(mats[0], k, require_rank=True)
    HT = top_left_singular_vectors(mats[-1], k, require_rank=True)
    Z, s, Qt = linalg.svd(H1.T @ HT)
    s = np.clip(s, 0.0, 1.0)
    H = H1 @ Z
    X = HT @ Qt.T - H * s[None, :]
    sines = np.linalg.norm(X, axis=0)

    good = sines > DEGENERATE_SIN
    theta = np.where(good, np.arctan2(sines, s), 0.0)
    Y = np.zeros((d, k))
    if np.any(good):
        raw = X[:, good] / sines[good][None, :]
        raw -= H @ (H.T @ raw)
        W, _, Vt = linalg.svd(raw, full_matrices=False)
        Y[:, good] = W @ Vt
    if not np.all(good):
        filled = np.hstack([H, Y[:, good]])
        Y[:, ~good] = _complete_basis(filled, int((~good).sum()),
                                      np.random.default_rng(COMPLEMENT_SEED))
    return GeodesicModel(P=np.hstack([H, Y]), theta=theta)


def fit_geodesic(mcms: Sequence[MatrixLike], times: Sequence[float], k: int,
                 max_outer: int = DEFAULT_MAX_OUTER, tol: float = DEFAULT_TOL,
                 inner_iters: int = DEFAULT_INNER_ITERS,
                 init: Optional[GeodesicModel] = None) -> Tuple[GeodesicModel, FitReport]:
    """Fit a rank-k geodesic to the MCM sequence.

    Alternates p_update and theta_update from init_geodesic until the
    relative objective decrease falls below ``tol`` or ``max_outer``
    iterations have run. After each Θ-step negative angles are folded
    (exact) and angles above π/2 are clamped when that does not increase
    the objective.

    Returns:
        (model, report); report.objective_trace starts with the initial value
    """
    mats = _as_matrices(mcms)
    times = _check_lengths(mats, times)
    model = init if init is not None else init_geodesic(mats, times, k)
    P, theta = model.P, model.theta

    current = _loss(P, theta, mats, times)
    report = FitReport(objective_trace=[current])
    logger.debug("fit_start", extra={"data": {"d": model.d, "k": k, "T": len(mats),
                                              "objective": current}})

    for iteration in range(1, max_outer + 1):
        P = p_update(P, theta, mats, times)
        theta = theta_update(P, theta, mats, times, inner_iters)
        P, theta = _fold(P, theta)
        value = _loss(P, theta, mats, times)
        if np.any(theta > np.pi / 2):
            clamped = np.minimum(theta, np.pi / 2)
            clamped_value = _loss(P, clamped, mats, times)
            if clamped_value <= value:
                theta, value = clamped, clamped_value

        previous, current = current, value
        report.objective_trace.append(current)
        report.iterations = iteration
        change = (previous - current) / previous if previous > 0 else 0.0
        logger.debug("fit_iteration", extra={"data": {"iteration": iteration,
                                                      "objective": current,
                                                      "relative_change": change}})
        if change < tol:
            report.converged = True
            break

    report.final_objective = current
    logger.info("fit_done", extra={"data": report.to_dict() | {"objective_trace": None}})
    report.model = GeodesicModel(P=P, theta=theta)
    return report.model, report
