"""Conserved quantities of mKdV and their gradients.

Gradients follow the Lenard recursion ``d/dx H'_{n+1} = K(u) H'_n`` with
``H'_1(u) = u``, where ``K(u) = -d^3 - 2u^2 d - 2u_x d^{-1}(u d)`` and
``d^{-1}`` is the symmetric antiderivative. Values of
``H_1..H_3`` use their explicit densities; higher ones are recovered from
the gradients by the homotopy integral ``H_n(u) = int_0^1 <H'_n(su), u> ds``.

The integrand is evaluated as ``<R^a v, (R^T)^b u>`` with ``v = su`` and
``a + b = n - 1`` split evenly. Each recursion level amplifies round-off at
wavenumber ``k`` by ``k^2``, so splitting the levels between the two sides
of the pairing squares the attainable accuracy.
"""

from __future__ import annotations

import numpy as np

from .errors import MeanToleranceError, ValidationError
from .grid import (
    Grid,
    apply_multiplier,
    as_field,
    inner_product,
    spectral_derivative,
    symmetric_antiderivative,
    symmetric_antiderivative_adjoint,
)
from .solitons import speed_set

N_MAX = 7
QUADRATURE_NODES = 32
BAND_TOL = 1e-13
BAND_TOL_EXTENDED = 1e-15
DECAY_TOL = 1e-8


def vieta_multipliers(speeds) -> np.ndarray:
    """Multipliers ``(lambda_1, ..., lambda_N)`` of the action functional.

    ``lambda_{N+1-k}`` is the k-th elementary symmetric polynomial of the
    speeds, i.e. ``z^N + lambda_N z^{N-1} + ... + lambda_1`` has roots ``-c_j``.
    """
    c = speed_set(speeds).array
    coeffs = np.poly(-c)  # [1, e_1, ..., e_N]
    return coeffs[1:][::-1].copy()


def vieta_residual(speeds, multipliers) -> float:
    """Largest relative residual of the multiplier polynomial at ``z = -c_j``."""
    c = speed_set(speeds).array
    lam = np.asarray(multipliers, dtype=float)
    poly = np.concatenate([[1.0], lam[::-1]])
    vals = np.polyval(poly, -c)
    scale = np.polyval(np.abs(poly), c)
    return float(np.max(np.abs(vals) / scale))


def _check_order(n: int, op: str) -> int:
    if int(n) != n or n < 1 or n > N_MAX:
        raise ValidationError(f"hierarchy.{op}: order must be in 1..{N_MAX}, got {n}")
    return int(n)


def recursion_apply(grid: Grid, u, w) -> np.ndarray:
    """Recursion operator ``K(u) w``.

    The inner ``d^{-1}`` is the symmetric antiderivative, so no mean-zero
    assumption on ``u w_x`` is needed.
    """
    u = as_field(grid, u, name="u")
    w = as_field(grid, w, name="w")
    u_x = spectral_derivative(grid, u, 1)
    w_x = spectral_derivative(grid, w, 1)
    w_xxx = spectral_derivative(grid, w, 3)
    inv = symmetric_antiderivative(grid, u * w_x)
    return -w_xxx - 2 * u * u * w_x - 2 * u_x * inv


def _pin_to_zero_at_edges(g: np.ndarray) -> np.ndarray:
    return g - 0.5 * (g[..., :1] + g[..., -1:])


def spectral_band(grid: Grid, u, tol: float | None = None, degree: int = 1) -> np.ndarray:
    """Mask of wavenumbers ``|k| <= K`` where ``u`` or ``u^degree`` carries content.

    ``K`` is the largest ``|k|`` with ``|f_hat(k)| > tol * max|f_hat|`` for
    ``f = u`` and ``f = u^degree``; the power matters for data such as
    Gaussians whose band widens under multiplication. Each recursion level
    multiplies content at wavenumber ``k`` by about ``k^2``, so round-off
    outside the band would otherwise swamp high-order gradients.
    """
    u = np.asarray(u).real
    if tol is None:
        tol = BAND_TOL_EXTENDED if u.dtype == np.longdouble else BAND_TOL
    k = np.abs(grid.wavenumbers)
    cutoff = 0.0
    for f in (u, u**degree):
        spec = np.abs(np.fft.fft(f, axis=-1))
        keep = spec > tol * spec.max(axis=-1, keepdims=True)
        cutoff = np.maximum(cutoff, np.max(np.where(keep, k, 0.0), axis=-1, keepdims=True))
    return k <= cutoff


def recursion_R_apply(grid: Grid, u, w) -> np.ndarray:
    """``R(u) w = -w_xx - 2u d^{-1}(u w_x)``, so that ``K(u) = d/dx R(u)``."""
    w_xx = spectral_derivative(grid, w, 2)
    w_x = spectral_derivative(grid, w, 1)
    return -w_xx - 2 * u * symmetric_antiderivative(grid, u * w_x)


def recursion_R_adjoint_apply(grid: Grid, u, z) -> np.ndarray:
    """Discrete transpose of :func:`recursion_R_apply`: ``-z_xx + 2 d(u A^T(u z))``."""
    inner = symmetric_antiderivative_adjoint(grid, u * z)
    return -spectral_derivative(grid, z, 2) + 2 * spectral_derivative(grid, u * inner, 1)


def _check_decay(u: np.ndarray, op: str) -> None:
    edge = np.maximum(np.abs(u[..., 0]), np.abs(u[..., -1]))
    if np.any(edge > DECAY_TOL * np.max(np.abs(u), axis=-1)):
        raise MeanToleranceError(
            f"hierarchy.{op}: input does not decay at the box edges; "
            "the recursion needs decaying data"
        )


def gradients(
    grid: Grid,
    n_max: int,
    u,
    *,
    band_tol: float | None = None,
    mask: np.ndarray | None = None,
    pin: bool = True,
) -> list[np.ndarray]:
    """``[H'_1(u), ..., H'_{n_max}(u)]`` by one pass of the recursion.

    Each level is ``H'_{n+1} = R(u) H'_n`` (the recursion with the outer
    antiderivative taken exactly), projected onto :func:`spectral_band` of
    ``u`` and pinned to zero at the box edges. Arithmetic follows the dtype
    of ``u``; ``np.longdouble`` input buys about three extra digits.
    Pass ``band_tol=0`` to disable the projection.

    ``mask`` overrides the band and ``pin=False`` drops both the pinning and
    the decay check. Finite differences of the gradient along non-decaying
    directions need both, so that the band and the additive constant do not
    depend on the perturbation.
    """
    n_max = _check_order(n_max, "gradients")
    u = as_field(grid, u, name="u")
    if np.issubdtype(u.dtype, np.integer):
        u = u.astype(float)
    if pin:
        _check_decay(u, "gradients")
    if mask is None and band_tol != 0:
        mask = spectral_band(grid, u, band_tol, 2 * n_max - 1)
    grads = [u]
    for _ in range(n_max - 1):
        nxt = recursion_R_apply(grid, u, grads[-1])
        if mask is not None:
            nxt = apply_multiplier(nxt, mask)
        grads.append(_pin_to_zero_at_edges(nxt) if pin else nxt)
    return grads


def gradients_tangent(
    grid: Grid, n_max: int, u, v, *, band_tol: float | None = None
) -> list[np.ndarray]:
    """Directional derivatives ``d/de H'_n(u + e v)`` at ``e = 0`` for ``n <= n_max``.

    Exact forward-mode linearization of the recursion in :func:`gradients`
    with the same band mask; ``v`` may be a stack of directions and need
    not decay. This gives ``H''_n(u) v`` without finite-difference
    cancellation. The edge pinning of :func:`gradients` is left out: it
    only absorbs boundary round-off on decaying data, while here it would
    add a spurious constant for non-decaying directions.
    """
    n_max = _check_order(n_max, "gradients_tangent")
    u = as_field(grid, u, name="u")
    v = as_field(grid, v, name="v")
    _check_decay(u, "gradients_tangent")
    mask = spectral_band(grid, u, band_tol, 2 * n_max - 1) if band_tol != 0 else None
    w, dw = u, v
    out = [v]
    for _ in range(n_max - 1):
        w_x = spectral_derivative(grid, w, 1)
        dw_x = spectral_derivative(grid, dw, 1)
        nxt = recursion_R_apply(grid, u, w)
        dnxt = (
            -spectral_derivative(grid, dw, 2)
            - 2 * v * symmetric_antiderivative(grid, u * w_x)
            - 2 * u * symmetric_antiderivative(grid, v * w_x + u * dw_x)
        )
        if mask is not None:
            nxt = apply_multiplier(nxt, mask)
            dnxt = apply_multiplier(dnxt, mask)
        w, dw = _pin_to_zero_at_edges(nxt), dnxt
        out.append(dw)
    return out


def gradient_H(grid: Grid, n: int, u) -> np.ndarray:
    """L2 gradient ``H'_n(u)``; the additive constant is fixed so it vanishes at the edges."""
    return gradients(grid, _check_order(n, "gradient_H"), u)[-1]


def value_H(grid: Grid, n: int, u):
    """Value of the n-th conserved quantity (``n = 0`` gives the mass)."""
    if n == 0:
        return grid.spacing * np.sum(as_field(grid, u), axis=-1)
    n = _check_order(n, "value_H")
    u = as_field(grid, u, name="u")
    dx = grid.spacing
    if n == 1:
        return 0.5 * dx * np.sum(u * u, axis=-1)
    u_x = spectral_derivative(grid, u, 1)
    if n == 2:
        return dx * np.sum(0.5 * u_x**2 - 0.25 * u**4, axis=-1)
    if n == 3:
        u_xx = spectral_derivative(grid, u, 2)
        return dx * np.sum(0.5 * u_xx**2 + 0.25 * u**6 - 2.5 * u**2 * u_x**2, axis=-1)
    _check_decay(u, "value_H")
    mask = spectral_band(grid, u, degree=2 * n - 1)
    nodes, weights = np.polynomial.legendre.leggauss(QUADRATURE_NODES)
    s = 0.5 * (nodes + 1)
    v = s.reshape((-1,) + (1,) * u.ndim) * u
    left, right = v, np.broadcast_to(u, v.shape)
    for _ in range(n // 2):
        left = apply_multiplier(recursion_R_apply(grid, v, left), mask)
    for _ in range(n - 1 - n // 2):
        right = apply_multiplier(recursion_R_adjoint_apply(grid, v, right), mask)
    return 0.5 * np.tensordot(weights, inner_product(grid, left, right), axes=1)


def action_gradient(grid: Grid, speeds, u) -> np.ndarray:
    """``S_N'(u) = H'_{N+1}(u) + sum_j lambda_j H'_j(u)``."""
    lam = vieta_multipliers(speeds)
    grads = gradients(grid, lam.size + 1, u)
    out = grads[-1].copy()
    for lj, gj in zip(lam, grads):
        out = out + lj * gj
    return out


def action_hessian_apply(grid: Grid, speeds, u, v) -> np.ndarray:
    """``S_N''(u) v`` by exact linearization of :func:`action_gradient`."""
    lam = vieta_multipliers(speeds)
    tang = gradients_tangent(grid, lam.size + 1, u, v)
    out = tang[-1].copy()
    for lj, tj in zip(lam, tang):
        out = out + lj * tj
    return out


def action_value(grid: Grid, speeds, u):
    """``S_N(u) = H_{N+1}(u) + sum_j lambda_j H_j(u)``."""
    lam = vieta_multipliers(speeds)
    total = value_H(grid, lam.size + 1, u)
    for j, lj in enumerate(lam, start=1):
        total = total + lj * value_H(grid, j, u)
    return total


def olver_orthogonality(grid: Grid, u, j: int, k: int) -> float:
    """Pairing ``<H'_j(u), d/dx H'_k(u)>``; zero for smooth decaying ``u``."""
    j = _check_order(j, "olver_orthogonality")
    k = _check_order(k, "olver_orthogonality")
    grads = gradients(grid, max(j, k), u)
    return float(inner_product(grid, grads[j - 1], spectral_derivative(grid, grads[k - 1], 1)))
