import numpy as np
import pytest

from geodesic_dcd.core.matfun import (
    clip_spectrum,
    matrix_geometric_mean,
    matrix_power_mean,
    principal_angles,
    subspace_distance,
    sym_power,
    top_left_singular_vectors,
)
from geodesic_dcd.errors import DegenerateInputError, RankError


def random_spd(rng, d, shift=0.5):
    x = rng.standard_normal((d, d))
    return x @ x.T + shift * np.eye(d)


def test_sym_power_inverts(rng):
    a = random_spd(rng, 5)
    np.testing.assert_allclose(sym_power(a, -1) @ a, np.eye(5), atol=1e-9)
    half = sym_power(a, 0.5)
    np.testing.assert_allclose(half @ half, a, atol=1e-9)


def test_power_mean_of_equal_matrices_is_identity_map(rng):
    a = random_spd(rng, 4)
    for p in (-2.0, 0.0, 1.0, 3.0):
        np.testing.assert_allclose(matrix_power_mean([a, a, a], p), a, atol=1e-8)


def test_power_mean_scalar_case():
    # diagonal inputs reduce to scalar power means entrywise
    a, b = np.diag([1.0, 4.0]), np.diag([9.0, 16.0])
    expected = np.diag([((1.0 ** 2 + 9.0 ** 2) / 2) ** 0.5, ((4.0 ** 2 + 16.0 ** 2) / 2) ** 0.5])
    np.testing.assert_allclose(matrix_power_mean([a, b], 2.0), expected, atol=1e-10)


def test_power_mean_monotone_in_p(rng):
    mats = [random_spd(rng, 4) for _ in range(3)]
    low = matrix_power_mean(mats, -1.0)
    high = matrix_power_mean(mats, 1.0)
    assert np.linalg.eigvalsh(high - low).min() > -1e-8


def test_negative_power_needs_shift_for_singular():
    singular = np.diag([1.0, 0.0])
    with pytest.raises(DegenerateInputError):
        matrix_power_mean([singular, np.eye(2)], -1.0)
    result = matrix_power_mean([singular, np.eye(2)], -1.0, epsilon=1e-3)
    assert np.all(np.isfinite(result))


def test_geometric_mean_commuting():
    a, b = np.diag([1.0, 4.0]), np.diag([4.0, 9.0])
    np.testing.assert_allclose(matrix_geometric_mean(a, b), np.diag([2.0, 6.0]), atol=1e-10)


def test_clip_spectrum():
    a = np.diag([-1.0, 0.5, 3.0])
    np.testing.assert_allclose(clip_spectrum(a, 0.0, 2.0), np.diag([0.0, 0.5, 2.0]), atol=1e-12)


def test_top_vectors_order_by_magnitude():
    m = np.diag([1.0, -5.0, 3.0])
    basis = top_left_singular_vectors(m, 2)
    assert abs(basis[1, 0]) == pytest.approx(1.0)
    assert abs(basis[2, 1]) == pytest.approx(1.0)


def test_top_vectors_rectangular():
    m = np.zeros((4, 3))
    m[0, 0], m[2, 1] = 3.0, 2.0
    basis = top_left_singular_vectors(m, 2)
    np.testing.assert_allclose(np.abs(basis[[0, 2]]), np.eye(2), atol=1e-12)


def test_top_vectors_rank_errors():
    with pytest.raises(RankError):
        top_left_singular_vectors(np.eye(3), 4)
    with pytest.raises(RankError):
        top_left_singular_vectors(np.diag([1.0, 0.0, 0.0]), 2, require_rank=True)


def test_subspace_distance_and_angles():
    a = np.eye(3)[:, :1]
    angle = 0.3
    b = np.array([[np.cos(angle)], [np.sin(angle)], [0.0]])
    assert subspace_distance(a, b) == pytest.approx(angle)
    np.testing.assert_allclose(principal_angles(a, b), [angle])
    assert subspace_distance(a, a) == pytest.approx(0.0, abs=1e-12)
