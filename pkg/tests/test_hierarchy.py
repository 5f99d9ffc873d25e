import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mkdvlab.errors import MeanToleranceError, ValidationError
from mkdvlab.grid import Grid, inner_product, sobolev_norm, spectral_derivative
from mkdvlab.hierarchy import (
    action_gradient,
    action_hessian_apply,
    action_value,
    gradient_H,
    gradients,
    olver_orthogonality,
    recursion_apply,
    value_H,
    vieta_multipliers,
    vieta_residual,
)
from mkdvlab.solitons import n_soliton, profile_Q, sech, two_soliton

GRID = Grid(80.0, 2048)
WIDE = Grid(120.0, 2048)


def closed_form(c, j):
    return (-1) ** j * 2 / (2 * j + 1) * c ** ((2 * j + 1) / 2)


def test_vieta_examples():
    assert np.allclose(vieta_multipliers([1.5]), [1.5])
    assert np.allclose(vieta_multipliers([1.0, 2.0]), [2.0, 3.0])
    assert np.allclose(vieta_multipliers([1.0, 2.0, 3.0]), [6.0, 11.0, 6.0])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.1, 5.0), min_size=1, max_size=6, unique=True))
def test_vieta_roots(speeds):
    c = np.sort(speeds)
    if np.min(np.diff(c), initial=1.0) < 1e-3:
        return
    assert vieta_residual(c, vieta_multipliers(c)) < 1e-12


def test_recursion_at_zero_is_third_derivative():
    w = np.exp(-GRID.x ** 2)
    out = recursion_apply(GRID, GRID.zeros(), w)
    assert np.max(np.abs(out + spectral_derivative(GRID, w, 3))) < 1e-12


def test_first_gradients_on_profile():
    q = profile_Q(1.0, GRID)
    assert np.array_equal(gradient_H(GRID, 1, q), q)
    assert np.max(np.abs(gradient_H(GRID, 2, q) + q)) < 1e-8


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
def test_mass_and_closed_forms(c):
    q = profile_Q(c, WIDE)
    assert abs(value_H(WIDE, 1, q) - 2 * np.sqrt(c)) < 1e-10
    for j in range(5):
        ref = closed_form(c, j)
        assert abs(value_H(WIDE, j + 1, q) - ref) / abs(ref) < 1e-7


def test_second_quantity_of_unit_profile():
    assert abs(value_H(GRID, 2, profile_Q(1.0, GRID)) + 2 / 3) < 1e-12


def test_gradient_closed_form_on_profile():
    for c in (0.5, 2.0):
        q = profile_Q(c, WIDE)
        for k, g in enumerate(gradients(WIDE, 5, q)):
            # each recursion level costs about three digits of round-off
            tol = 1e-13 * 2000.0**k
            assert np.max(np.abs(g - (-c) ** k * q)) < tol * c**k * q.max()


def test_order_validation():
    q = profile_Q(1.0, GRID)
    with pytest.raises(ValidationError):
        value_H(GRID, 8, q)
    with pytest.raises(ValidationError):
        gradient_H(GRID, 0, q)


def test_non_decaying_input_is_refused():
    with pytest.raises(MeanToleranceError):
        gradient_H(GRID, 3, np.ones(GRID.count))


def test_action_gradient_vanishes_on_solitons():
    assert sobolev_norm(GRID, action_gradient(GRID, [1.0], profile_Q(1.0, GRID))) < 1e-8
    big = Grid(100.0, 4096)
    u = two_soliton([1.0, 2.0], [0.0, 0.0], 0.0, big)
    assert sobolev_norm(big, action_gradient(big, [1.0, 2.0], u)) < 1e-6


def test_action_gradient_witness():
    u = profile_Q(1.0, GRID) + 0.3 * np.exp(-GRID.x ** 2)
    assert sobolev_norm(GRID, action_gradient(GRID, [1.0, 2.0], u)) >= 1e-2


def test_action_value_on_profile():
    q = profile_Q(1.0, GRID)
    # S_1(Q_1) = H_2 + H_1 = -2/3 + 2
    assert abs(action_value(GRID, [1.0], q) - 4 / 3) < 1e-12


def test_olver_orthogonality_examples():
    x = GRID.x
    u = profile_Q(1.0, GRID)
    assert abs(olver_orthogonality(GRID, u, 1, 1)) < 1e-13
    u = u + 0.2 * sech(x - 3)
    assert abs(olver_orthogonality(GRID, u, 1, 2)) < 1e-8
    u2 = two_soliton([1.0, 2.0], [0.0, 0.0], 1.0, GRID)
    assert abs(olver_orthogonality(GRID, u2, 2, 3)) < 1e-7


def test_gradient_matches_value_derivative():
    x = GRID.x
    u = np.exp(-x**2 / 4) * (1 + 0.3 * np.sin(x))
    v = np.exp(-((x - 1) ** 2) / 2)
    for n in range(1, 6):
        g = inner_product(GRID, gradient_H(GRID, n, u), v)
        eps = 1e-3
        fd = (value_H(GRID, n, u + eps * v) - value_H(GRID, n, u - eps * v)) / (2 * eps)
        assert abs(fd - g) < 1e-5 * max(1.0, abs(g))


def test_hessian_apply_matches_gradient_difference():
    x = GRID.x
    u = n_soliton([1.0, 2.0], [0.0, 0.0], 0.0, GRID)
    v = np.exp(-x**2) * np.cos(2 * x)
    eps = 1e-5
    fd = (action_gradient(GRID, [1.0, 2.0], u + eps * v) - action_gradient(GRID, [1.0, 2.0], u - eps * v)) / (2 * eps)
    exact = action_hessian_apply(GRID, [1.0, 2.0], u, v)
    assert sobolev_norm(GRID, fd - exact) < 1e-5 * sobolev_norm(GRID, exact)
