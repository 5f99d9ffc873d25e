"""The finite-dimensional Hessian of the action along the N-soliton family.

With ``d(lambda)`` the Hessian ``D_ij = d^2 S_N / d lambda_i d lambda_j``,
the chain rule through ``c -> lambda`` gives ``D = A B`` with
``B_ij = dH_j/dc_i`` and ``A^{-1}_ij = d lambda_j / d c_i``. Both are
explicit, since ``H_j(Q_c) = (-1)^(j-1) 2/(2j-1) c^((2j-1)/2)`` and the
multipliers are elementary symmetric polynomials of the speeds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalHealthError, ValidationError
from .grid import Grid
from .hierarchy import value_H
from .linops import Inertia, gateaux_hessian, operator_inertia
from .solitons import n_soliton, profile_Q, speed_set

COND_LIMIT = 1e12
DIAGONAL_TOL = 1e-6
SEPARATION_TOL = 1e-6


def _speeds(speeds) -> np.ndarray:
    c = speed_set(speeds).array
    if c.size > 1 and np.min(np.diff(c)) < SEPARATION_TOL * c.max():
        raise ValidationError(
            f"hessian: speeds {tuple(c)} are closer than {SEPARATION_TOL:g} relative; "
            "the diagonal form degenerates"
        )
    return c


def build_B(speeds) -> np.ndarray:
    """``B_ij = dH_j(Q_{c_i})/dc_i = (-1)^(j-1) c_i^((2j-3)/2)``."""
    c = _speeds(speeds)
    j = np.arange(1, c.size + 1)
    return (-1.0) ** (j - 1) * c[:, None] ** ((2 * j - 3) / 2)


def _elementary(values: np.ndarray) -> np.ndarray:
    """``[e_0, e_1, ..., e_m]`` of the given values."""
    e = np.zeros(values.size + 1)
    e[0] = 1.0
    for v in values:
        e[1:] = e[1:] + v * e[:-1]
    return e


def build_Ainv(speeds) -> np.ndarray:
    """``Ainv_ij = d lambda_j / d c_i = e_{N-j}(c without c_i)``.

    Columns follow the multiplier order ``lambda_1, ..., lambda_N``, so row
    ``i`` reads ``(e_{N-1}, ..., e_1, 1)`` of the speeds other than ``c_i``.
    """
    c = _speeds(speeds)
    rows = [_elementary(np.delete(c, i))[::-1] for i in range(c.size)]
    out = np.array(rows)
    if c.size > 1 and abs(np.linalg.det(out)) == 0.0:
        raise NumericalHealthError("hessian.build_Ainv: matrix is singular")
    return out


@dataclass(frozen=True)
class HessianReport:
    """``D`` (symmetrized), the diagonal of ``B Ainv^T`` and the positive count ``p``.

    ``diagonality`` is the largest off-diagonal entry of ``B Ainv^T``
    relative to its largest diagonal entry; ``asymmetry`` the relative
    asymmetry of ``A B`` before symmetrization; ``p_eigen`` the positive
    count of ``D`` from its eigenvalues (Sylvester cross-check).
    """

    D: np.ndarray
    diagonal_form: np.ndarray
    p: int
    diagonality: float
    asymmetry: float
    condition: float
    p_eigen: int


def build_report(speeds) -> HessianReport:
    """Assemble ``D = A B`` and its congruent diagonal form."""
    c = _speeds(speeds)
    Ainv = build_Ainv(c)
    B = build_B(c)
    cond = float(np.linalg.cond(Ainv))
    if cond > COND_LIMIT:
        raise NumericalHealthError(
            f"hessian.build_report: Ainv condition number {cond:.2e} exceeds {COND_LIMIT:g}"
        )
    A = np.linalg.inv(Ainv)
    D = A @ B
    scale = np.max(np.abs(D))
    asym = float(np.max(np.abs(D - D.T)) / scale)
    D = 0.5 * (D + D.T)
    form = B @ Ainv.T
    diag = np.diag(form).copy()
    off = form - np.diag(diag)
    diagonality = float(np.max(np.abs(off)) / np.max(np.abs(diag)))
    if diagonality > DIAGONAL_TOL:
        raise NumericalHealthError(
            f"hessian.build_report: B Ainv^T is not diagonal (relative off-diagonal "
            f"{diagonality:.2e})"
        )
    p = int(np.sum(diag > 0))
    p_eigen = int(np.sum(np.linalg.eigvalsh(D) > 0))
    return HessianReport(D, diag, p, diagonality, asym, cond, p_eigen)


def expected_diagonal(speeds) -> np.ndarray:
    """``(-1)^(N-1) c_j^(-1/2) prod_{k != j}(c_j - c_k)``."""
    c = _speeds(speeds)
    n = c.size
    return np.array(
        [(-1.0) ** (n - 1) * c[j] ** -0.5 * np.prod(c[j] - np.delete(c, j)) for j in range(n)]
    )


def finite_difference_B(
    speeds, grid: Grid, centers=None, step: float = 1e-4
) -> np.ndarray:
    """``dH_j/dc_i`` by centred differences of ``value_H`` on separated profiles.

    ``centers`` default to evenly spaced positions across the middle half of
    the box. Each profile ``Q_{c_k}(x - z_k)`` is built independently, so
    the sum only couples through exponentially small overlaps.
    """
    c = _speeds(speeds)
    n = c.size
    if centers is None:
        centers = np.linspace(-0.25, 0.25, n) * grid.length if n > 1 else np.zeros(1)
    centers = np.asarray(centers, dtype=float)
    out = np.empty((n, n))
    for i in range(n):
        fields = []
        for sgn in (1, -1):
            ci = c.copy()
            ci[i] += sgn * step
            fields.append(sum(profile_Q(ck, grid, center=z) for ck, z in zip(ci, centers)))
        for j in range(1, n + 1):
            out[i, j - 1] = (value_H(grid, j, fields[0]) - value_H(grid, j, fields[1])) / (2 * step)
    return out


@dataclass(frozen=True)
class CriterionResult:
    """Negative count of ``S_N''(U(t))`` against the positive count of ``D``."""

    equal: bool
    n: int
    p: int
    inertia: Inertia
    report: HessianReport


def criterion_check(speeds, phases, t: float, grid: Grid, *, zero_tol: float = 1e-6) -> CriterionResult:
    """Compare ``n(S_N''(U(t)))`` with ``p(D)``."""
    c = _speeds(speeds)
    u = n_soliton(c, phases, t, grid)
    inertia = operator_inertia(gateaux_hessian(c, u, grid), c, zero_tol)
    report = build_report(c)
    return CriterionResult(inertia.negatives == report.p, inertia.negatives, report.p, inertia, report)
