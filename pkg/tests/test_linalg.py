import math

import numpy as np
import pytest

from ephybrid.linalg import (
    DimensionMismatch,
    NonSquare,
    NotSPD,
    as_matrix,
    as_point,
    spd_solve,
    spectral_norm,
)
from oracles import power_iteration_norm

COST_DIFF = [[1.5, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 2.0]]


def test_spd_solve_identity():
    assert np.allclose(spd_solve(np.eye(3), [1.0, -2.0, 3.0]), [1.0, -2.0, 3.0], atol=0)


def test_spd_solve_diagonal():
    assert np.allclose(spd_solve(np.diag([2.0, 4.0]), [2.0, 8.0]), [1.0, 2.0], atol=1e-15)


def test_spd_solve_residual_bound():
    M = np.array([[2.0, 1.0], [1.0, 2.0]])
    b = np.array([3.0, 3.0])
    y = spd_solve(M, b)
    assert np.allclose(y, [1.0, 1.0], atol=1e-12)
    assert np.linalg.norm(M @ y - b) <= 1e-10 * (1 + np.linalg.norm(b))


def test_spd_solve_rejects_indefinite():
    with pytest.raises(NotSPD):
        spd_solve(np.diag([1.0, -1.0]), [1.0, 1.0])


def test_spd_solve_rejects_asymmetric():
    with pytest.raises(NotSPD):
        spd_solve([[1.0, 2.0], [0.0, 1.0]], [1.0, 1.0])


def test_spd_solve_rejects_tiny_pivot():
    with pytest.raises(NotSPD):
        spd_solve([[1e-13]], [1.0])


def test_spd_solve_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        spd_solve(np.eye(2), [1.0, 2.0, 3.0])


def test_spd_solve_random_roundtrip():
    rng = np.random.default_rng(7)
    for _ in range(200):
        d = int(rng.integers(1, 11))
        G = rng.normal(size=(d, d))
        M = G @ G.T + 1e-3 * np.eye(d)
        y = rng.normal(size=d)
        assert np.linalg.norm(spd_solve(M, M @ y) - y) <= 1e-9 * (1 + np.linalg.norm(y))


def test_spectral_norm_diagonal():
    assert spectral_norm(np.diag([3.0, -5.0])) == pytest.approx(5.0, abs=1e-12)


def test_spectral_norm_zero_matrix():
    assert spectral_norm(np.zeros((3, 3))) == 0.0


def test_spectral_norm_cost_difference_block():
    # eigenvalues of the leading 2x2 block are (3.5 +- sqrt(4.25)) / 2
    expected = (3.5 + math.sqrt(4.25)) / 2.0
    got = spectral_norm(COST_DIFF)
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(2.78078, abs=5e-6)
    assert got == pytest.approx(power_iteration_norm(np.array(COST_DIFF)), rel=1e-8)


def test_spectral_norm_rejects_nonsquare():
    with pytest.raises(NonSquare):
        spectral_norm(np.ones((2, 3)))


def test_spectral_norm_dominates_random_directions():
    rng = np.random.default_rng(11)
    M = rng.normal(size=(5, 5))
    norm = spectral_norm(M)
    sampled = 0.0
    for _ in range(1000):
        v = rng.normal(size=5)
        v /= np.linalg.norm(v)
        sampled = max(sampled, float(np.linalg.norm(M @ v)))
    assert sampled <= norm + 1e-6
    assert norm == pytest.approx(power_iteration_norm(M, seed=3), rel=1e-6)


def test_as_point_validation():
    with pytest.raises(ValueError):
        as_point([[1.0, 2.0]])
    with pytest.raises(ValueError):
        as_point([np.nan])
    with pytest.raises(ValueError):
        as_point([])


def test_as_matrix_validation():
    with pytest.raises(ValueError):
        as_matrix([1.0, 2.0])
    with pytest.raises(ValueError):
        as_matrix([[np.inf]])
