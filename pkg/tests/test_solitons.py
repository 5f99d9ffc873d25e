import numpy as np
import pytest

from mkdvlab.errors import DomainError, ValidationError
from mkdvlab.grid import Grid, spectral_derivative
from mkdvlab.hierarchy import value_H
from mkdvlab.solitons import (
    fitted_decomposition,
    n_soliton,
    one_soliton,
    profile_Q,
    speed_set,
    two_soliton,
)

GRID = Grid(80.0, 2048)


def test_profile_peak_values():
    g = Grid(80.0, 2048)
    assert abs(profile_Q(1.0, g)[1024] - np.sqrt(2)) < 1e-14
    assert abs(profile_Q(4.0, g)[1024] - 2 * np.sqrt(2)) < 1e-14


def test_profile_solves_ode():
    q = profile_Q(1.0, GRID)
    assert np.max(np.abs(spectral_derivative(GRID, q, 2) - (q - q**3))) < 1e-9


def test_speed_set_validation():
    with pytest.raises(ValidationError):
        speed_set([2.0, 1.0])
    with pytest.raises(ValidationError):
        speed_set([-1.0])
    with pytest.raises(ValidationError):
        speed_set([])


def test_one_soliton_translation():
    assert np.array_equal(one_soliton(1.0, 0.0, 0.0, GRID), profile_Q(1.0, GRID))
    u = one_soliton(1.0, 0.0, 2.0, GRID)
    assert abs(GRID.x[np.argmax(u)] - 2.0) <= GRID.spacing


def test_one_soliton_leaving_box_is_an_error():
    with pytest.raises(DomainError):
        one_soliton(1.0, 0.0, 39.0, GRID)


def test_n_soliton_reduces_to_one_soliton():
    assert np.max(np.abs(n_soliton([1.5], [0.0], 1.0, GRID) - one_soliton(1.5, 0.0, 1.0, GRID))) < 1e-13


@pytest.mark.parametrize("t", [-3.0, 0.0, 3.0])
def test_two_formulas_agree(t):
    a = two_soliton([1.0, 2.0], [0.0, 0.0], t, GRID)
    b = n_soliton([1.0, 2.0], [0.0, 0.0], t, GRID)
    assert np.max(np.abs(a - b)) < 1e-12


def test_three_soliton_solves_mkdv():
    c, y, h = [1.0, 2.0, 3.0], [0.0, 0.0, 0.0], 1e-4
    u = n_soliton(c, y, 0.0, GRID)
    # fourth-order stencil; the second-order one leaves a truncation error of about 1e-7
    w = {2: -1.0, 1: 8.0, -1: -8.0, -2: 1.0}
    u_t = sum(v * n_soliton(c, y, k * h, GRID) for k, v in w.items()) / (12 * h)
    res = u_t + spectral_derivative(GRID, spectral_derivative(GRID, u, 2) + u**3, 1)
    assert np.max(np.abs(res)) < 1e-7


def test_mass_of_multi_solitons():
    big = Grid(100.0, 4096)
    u2 = two_soliton([1.0, 2.0], [0.0, 0.0], 0.0, big)
    assert abs(value_H(big, 1, u2) - 2 * (1 + np.sqrt(2))) < 1e-9
    u3 = n_soliton([1.0, 2.0, 3.0], [0.0, 0.0, 0.0], 0.0, big)
    assert abs(value_H(big, 1, u3) - 2 * (1 + np.sqrt(2) + np.sqrt(3))) < 1e-8


def test_fitted_decomposition_recovers_centers():
    z, c = (-20.0, 0.0, 20.0), (1.0, 2.0, 3.0)
    big = Grid(120.0, 2048)
    u = sum(profile_Q(cj, big, center=zj) for cj, zj in zip(c, z))
    fit = fitted_decomposition(u, c, big)
    assert np.allclose([p[1] for p in fit], z, atol=1e-3)


def test_fitted_decomposition_single_soliton():
    u = one_soliton(1.0, 0.0, 3.0, GRID)
    fit = fitted_decomposition(u, [1.0], GRID)
    assert abs(fit[0][1] - 3.0) <= GRID.spacing


def test_asymptotic_shift_is_time_independent():
    big = Grid(160.0, 4096)
    c = np.array([0.5, 2.0])
    shifts = []
    for t in (20.0, 30.0):
        u = two_soliton(c, [0.0, 0.0], t, big)
        centers = np.array([p[1] for p in fitted_decomposition(u, c, big)])
        shifts.append(centers - c * t)
    assert np.max(np.abs(shifts[0] - shifts[1])) < 1e-3
