"""Periodic grid and Fourier spectral calculus.

Fields are plain numpy arrays whose last axis runs over the grid samples,
so every routine here also accepts a stack of fields of shape
``(..., count)``. Complex input is supported throughout (the Gateaux
Hessian uses complex-step differentiation through these routines).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import MeanToleranceError, ValidationError

MAX_ORDER = 6
MEAN_TOL = 1e-8


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[-length/2, length/2)``.

    Parameters
    ----------
    length : float
        Period of the box.
    count : int
        Number of samples; even and at least 16.
    """

    length: float = 80.0
    count: int = 2048

    def __post_init__(self):
        if not np.isfinite(self.length) or self.length <= 0:
            raise ValidationError(f"grid_core.Grid: length must be positive, got {self.length}")
        if int(self.count) != self.count or self.count < 16 or self.count % 2:
            raise ValidationError(
                f"grid_core.Grid: count must be an even integer >= 16, got {self.count}"
            )
        object.__setattr__(self, "length", float(self.length))
        object.__setattr__(self, "count", int(self.count))

    @property
    def spacing(self) -> float:
        return self.length / self.count

    @cached_property
    def x(self) -> np.ndarray:
        """Sample coordinates ``-L/2 + m*spacing``."""
        x = -0.5 * self.length + self.spacing * np.arange(self.count)
        x.flags.writeable = False
        return x

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers ``2*pi*k/L`` in numpy FFT ordering."""
        k = 2 * np.pi * np.fft.fftfreq(self.count, d=self.spacing)
        k.flags.writeable = False
        return k

    @property
    def nyquist(self) -> int:
        return self.count // 2

    def zeros(self) -> np.ndarray:
        return np.zeros(self.count)

    def describe(self) -> str:
        return f"L={self.length:g} n={self.count} dx={self.spacing:.6g}"


def as_field(grid: Grid, f, *, name: str = "field") -> np.ndarray:
    """Validate ``f`` against ``grid`` and return it as an array."""
    f = np.asarray(f)
    if f.shape[-1:] != (grid.count,):
        raise ValidationError(
            f"grid_core: {name} has {f.shape[-1] if f.ndim else 0} samples, grid has {grid.count}"
        )
    if not np.all(np.isfinite(f)):
        raise ValidationError(f"grid_core: {name} contains non-finite samples")
    return f


def _symbol(grid: Grid, order: int) -> np.ndarray:
    """Fourier symbol ``(ik)^order`` with the Nyquist mode dropped for odd orders."""
    ik = 1j * grid.wavenumbers
    sym = ik**order
    if order % 2:
        sym = sym.copy()
        sym[grid.nyquist] = 0.0
    return sym


def apply_multiplier(f: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    """Apply a Fourier multiplier along the last axis, preserving realness."""
    out = np.fft.ifft(np.fft.fft(f, axis=-1) * symbol, axis=-1)
    if np.isrealobj(f):
        return out.real
    return out


def spectral_derivative(grid: Grid, f, order: int = 1) -> np.ndarray:
    """Derivative of the given order computed by the discrete Fourier transform.

    Exact for band-limited data. Orders above 6 are refused.
    """
    if int(order) != order or order < 1 or order > MAX_ORDER:
        raise ValidationError(
            f"grid_core.spectral_derivative: order must be in 1..{MAX_ORDER}, got {order}"
        )
    f = as_field(grid, f)
    return apply_multiplier(f, _symbol(grid, int(order)))


def _antiderivative_symbol(grid: Grid) -> np.ndarray:
    k = grid.wavenumbers
    sym = np.zeros(grid.count, dtype=complex)
    nz = k != 0
    sym[nz] = 1.0 / (1j * k[nz])
    sym[grid.nyquist] = 0.0
    return sym


def antiderivative(grid: Grid, f, mean_tol: float = MEAN_TOL) -> np.ndarray:
    """Mean-zero antiderivative on the periodic box.

    Raises :class:`MeanToleranceError` when ``|mean(f)|`` exceeds
    ``mean_tol * max|f|``; on decaying data the mean-zero convention agrees
    with the symmetric antiderivative on the line up to boundary terms.
    """
    f = as_field(grid, f)
    mean = np.abs(f.mean(axis=-1))
    scale = np.max(np.abs(f), axis=-1)
    if np.any(mean > mean_tol * scale):
        worst = float(np.max(mean / np.where(scale > 0, scale, 1.0)))
        raise MeanToleranceError(
            f"grid_core.antiderivative: relative mean {worst:.3e} exceeds mean_tol={mean_tol:g}"
        )
    return apply_multiplier(f, _antiderivative_symbol(grid))


def symmetric_antiderivative(grid: Grid, f) -> np.ndarray:
    """Antiderivative ``(int_{-inf}^x f - int_x^inf f) / 2`` for decaying ``f``.

    Realized on the box as ``F - F(-L/2) + mean(f) * x`` where ``F`` is the
    spectral antiderivative of ``f - mean(f)``. The linear term carries a
    nonzero total integral; it jumps at the box edge, which is harmless
    wherever the result multiplies decaying data.
    """
    f = as_field(grid, f)
    mean = f.mean(axis=-1, keepdims=True)
    F = apply_multiplier(f - mean, _antiderivative_symbol(grid))
    return F - F[..., :1] + mean * grid.x


def symmetric_antiderivative_adjoint(grid: Grid, z) -> np.ndarray:
    """Exact transpose of :func:`symmetric_antiderivative` for the plain sum pairing."""
    z = as_field(grid, z)
    total = z.sum(axis=-1)
    y = z.copy()
    y[..., 0] -= total
    Sy = apply_multiplier(y, _antiderivative_symbol(grid))
    Sy = Sy - Sy.mean(axis=-1, keepdims=True)
    return -Sy + np.sum(z * grid.x, axis=-1, keepdims=True) / grid.count


def inner_product(grid: Grid, f, g):
    """L2 pairing by the rectangle rule; complex data is paired bilinearly."""
    f = np.asarray(f)
    g = np.asarray(g)
    if f.shape[-1] != grid.count or g.shape[-1] != grid.count:
        raise ValidationError("grid_core.inner_product: fields do not match the grid")
    return grid.spacing * np.sum(f * g, axis=-1)


def sobolev_norm(grid: Grid, f, k: int = 0):
    """``H^k`` norm, ``(sum_{j<=k} ||d^j f||^2)^(1/2)``, evaluated in Fourier space."""
    if int(k) != k or k < 0 or k > MAX_ORDER:
        raise ValidationError(f"grid_core.sobolev_norm: k must be in 0..{MAX_ORDER}, got {k}")
    f = as_field(grid, f)
    fh = np.fft.fft(f, axis=-1)
    weight = np.zeros(grid.count)
    for j in range(int(k) + 1):
        weight += np.abs(_symbol(grid, j)) ** 2 if j else 1.0
    # Parseval: dx * sum|f|^2 == (L / n^2) * sum|fhat|^2
    sq = grid.length / grid.count**2 * np.sum(weight * np.abs(fh) ** 2, axis=-1)
    return np.sqrt(sq)


def derivative_matrix(grid: Grid, order: int = 1) -> np.ndarray:
    """Dense real matrix of :func:`spectral_derivative` (acts on column vectors)."""
    return spectral_derivative(grid, np.eye(grid.count), order).T.copy()


def antiderivative_matrix(grid: Grid) -> np.ndarray:
    """Dense matrix of the mean-zero antiderivative, mean projection included."""
    return apply_multiplier(np.eye(grid.count), _antiderivative_symbol(grid)).T.copy()


def symmetric_antiderivative_matrix(grid: Grid) -> np.ndarray:
    """Dense matrix of :func:`symmetric_antiderivative`."""
    return symmetric_antiderivative(grid, np.eye(grid.count)).T.copy()


def multiplier_matrix(grid: Grid, symbol: np.ndarray) -> np.ndarray:
    """Dense real matrix of an even real Fourier multiplier."""
    return apply_multiplier(np.eye(grid.count), symbol).T.copy()
