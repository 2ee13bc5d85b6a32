"""Symmetric matrix functions by eigenvalue mapping.

Negative and fractional powers clamp eigenvalues below EIG_FLOOR to
EIG_FLOOR first, i.e. the smallest possible spectrum shift.
"""

from typing import Callable, Optional, Sequence

import numpy as np
from scipy import linalg

from geodesic_dcd.errors import DegenerateInputError, RankError

EIG_FLOOR = 1e-12
RANK_TOL = 1e-10


def symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def sym_function(a: np.ndarray, fn: Callable[[np.ndarray], np.ndarray],
                 floor: Optional[float] = None) -> np.ndarray:
    """V fn(Λ) V^T for symmetric ``a``; eigenvalues raised to ``floor`` first if given."""
    w, v = linalg.eigh(symmetrize(a))
    if floor is not None:
        w = np.maximum(w, floor)
    return symmetrize((v * fn(w)) @ v.T)


def sym_power(a: np.ndarray, p: float) -> np.ndarray:
    """a^p for symmetric PSD ``a``."""
    if p == 1:
        return symmetrize(np.asarray(a, dtype=np.float64))
    floor = EIG_FLOOR if p < 0 else 0.0
    return sym_function(a, lambda w: np.power(w, p), floor=floor)


def sym_sqrt(a: np.ndarray) -> np.ndarray:
    return sym_function(a, np.sqrt, floor=0.0)


def sym_inv_sqrt(a: np.ndarray) -> np.ndarray:
    return sym_function(a, lambda w: 1.0 / np.sqrt(w), floor=EIG_FLOOR)


def sym_log(a: np.ndarray) -> np.ndarray:
    return sym_function(a, np.log, floor=EIG_FLOOR)


def sym_exp(a: np.ndarray) -> np.ndarray:
    return sym_function(a, np.exp)


def clip_spectrum(a: np.ndarray, lo: float = 0.0, hi: Optional[float] = None) -> np.ndarray:
    """Clamp the eigenvalues of symmetric ``a`` into [lo, hi]."""
    return sym_function(a, lambda w: np.clip(w, lo, hi))


def matrix_power_mean(mats: Sequence[np.ndarray], p: float, epsilon: float = 0.0) -> np.ndarray:
    """Matrix power mean M_p = ((1/S) sum_i X_i^p)^(1/p).

    For p < 0 each argument is shifted to X_i + epsilon*I first. p = 0 is
    the limit of the formula, exp((1/S) sum_i log X_i).

    Args:
        mats: S symmetric PSD matrices of equal shape
        p: Power exponent
        epsilon: Spectrum shift used when p < 0

    Raises:
        DegenerateInputError: p < 0, epsilon = 0 and some argument is singular
    """
    if not mats:
        raise DegenerateInputError("power mean of an empty list")
    mats = [symmetrize(np.asarray(m, dtype=np.float64)) for m in mats]
    d = mats[0].shape[0]
    if any(m.shape != (d, d) for m in mats):
        raise DegenerateInputError("power mean arguments must share one square shape")

    if p == 1:
        return sum(mats) / len(mats)

    if p <= 0:
        if epsilon > 0:
            mats = [m + epsilon * np.eye(d) for m in mats]
        elif p < 0:
            for m in mats:
                if linalg.eigvalsh(m)[0] <= EIG_FLOOR:
                    raise DegenerateInputError(
                        "negative power of a singular matrix; set epsilon > 0")

    if p == 0:
        return sym_exp(sum(sym_log(m) for m in mats) / len(mats))

    return sym_power(sum(sym_power(m, p) for m in mats) / len(mats), 1.0 / p)


def matrix_geometric_mean(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """A # B = A^(1/2) (A^(-1/2) B A^(-1/2))^(1/2) A^(1/2)."""
    a_half = sym_sqrt(a)
    a_inv_half = sym_inv_sqrt(a)
    inner = sym_sqrt(symmetrize(a_inv_half @ b @ a_inv_half))
    return symmetrize(a_half @ inner @ a_half)


def top_left_singular_vectors(m: np.ndarray, k: int, require_rank: bool = False) -> np.ndarray:
    """Orthonormal basis (d×k) of the top-k left singular subspace of ``m``.

    Symmetric inputs go through one symmetric eigensolve, ordering
    eigenvalues by magnitude; other inputs through a thin SVD.

    Raises:
        RankError: k > d, or ``require_rank`` and rank(m) < k
    """
    m = np.asarray(m, dtype=np.float64)
    d = m.shape[0]
    if k < 1 or k > d:
        raise RankError(f"rank {k} outside [1, {d}]")

    atol = 1e-12 * max(1.0, float(np.abs(m).max()) if m.size else 1.0)
    if m.shape[0] == m.shape[1] and np.allclose(m, m.T, rtol=0.0, atol=atol):
        w, v = linalg.eigh(symmetrize(m))
        order = np.argsort(-np.abs(w), kind="stable")
        sigma = np.abs(w[order])
        basis = v[:, order[:k]]
    else:
        u, sigma, _ = linalg.svd(m, full_matrices=False)
        if k > u.shape[1]:
            raise RankError(f"rank {k} exceeds min dimension {u.shape[1]}")
        basis = u[:, :k]

    if require_rank:
        top = sigma[0] if len(sigma) else 0.0
        if top == 0.0 or len(sigma) < k or sigma[k - 1] <= RANK_TOL * top:
            raise RankError(f"matrix has rank below {k}")
    return basis


def principal_angles(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Principal angles (ascending) between the column spans of orthonormal ``a`` and ``b``."""
    s = linalg.svd(a.T @ b, compute_uv=False)
    return np.arccos(np.clip(s, -1.0, 1.0))


def subspace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Largest principal angle between span(a) and span(b).

    Computed from the sine of the angles, ``||(I - aa^T) b||_2``, which is
    accurate for nearly identical subspaces where arccos is not.
    """
    residual = b - a @ (a.T @ b)
    s = linalg.svd(residual, compute_uv=False)
    return float(np.arcsin(np.clip(s.max() if len(s) else 0.0, 0.0, 1.0)))
