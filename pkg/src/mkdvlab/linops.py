"""Linearized operators around solitons and multi-solitons.

Self-adjoint operators of high differential order are realized by Galerkin
projection onto the band of Fourier modes resolved by the underlying
profile. Symmetrizing a full-grid matrix would mix in the unresolved top of
the spectrum, where the discrete antiderivative is not antisymmetric; inside
the band the discrete operator is symmetric to round-off. Modes outside the
band carry the leading symbol ``prod_k (k^2 + c_k)`` of the operator, which
is positive, so the inertia of the band block is the inertia of the whole.

Inertia is read off after the congruence ``P L P`` with
``P = prod_k (-d^2 + c_k)^(-1/2)``. By Sylvester's law this leaves the
inertia unchanged and turns an operator of order ``2N`` into a bounded one,
so a threshold relative to the spectral radius is meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InertiaAmbiguityError, ValidationError
from .grid import (
    Grid,
    apply_multiplier,
    as_field,
    derivative_matrix,
    inner_product,
    multiplier_matrix,
    spectral_derivative,
    symmetric_antiderivative,
    symmetric_antiderivative_matrix,
)
from .hierarchy import (
    action_hessian_apply,
    gradients,
    recursion_R_apply,
    spectral_band,
    vieta_multipliers,
)
from .solitons import check_decay, n_soliton, profile_Q, profile_Q_x, speed_set

ZERO_TOL = 1e-6
AMBIGUITY_FACTOR = 10.0
TEST_FIELDS = 20


class OperatorMatrix:
    """Dense real matrix of an operator on a grid.

    Either ``entries`` is given directly, or the operator is stored in band
    form: ``basis`` (``count x m``, orthonormal columns spanning the Fourier
    band), the ``m x m`` block ``reduced`` and the Fourier multiplier
    ``outside`` acting on the complement of the band. ``entries`` is then
    assembled on first access; eigenvalues never need it.
    """

    def __init__(
        self,
        grid: Grid,
        entries: np.ndarray | None = None,
        *,
        self_adjoint: bool = False,
        asymmetry: float = 0.0,
        basis: np.ndarray | None = None,
        reduced: np.ndarray | None = None,
        outside: np.ndarray | None = None,
        mask: np.ndarray | None = None,
    ):
        if entries is None and reduced is None:
            raise ValidationError("linops.OperatorMatrix: entries or a band block is required")
        self.grid = grid
        self._entries = entries
        self.self_adjoint = self_adjoint
        self.asymmetry = float(asymmetry)
        self.basis = basis
        self.reduced = reduced
        self.outside = outside
        self.mask = mask
        if entries is not None:
            if entries.shape != (grid.count, grid.count) or not np.all(np.isfinite(entries)):
                raise ValidationError("linops.OperatorMatrix: entries must be finite count x count")

    @property
    def banded(self) -> bool:
        return self.reduced is not None

    @property
    def entries(self) -> np.ndarray:
        if self._entries is None:
            B = self.basis
            complement = multiplier_matrix(self.grid, np.where(self.mask, 0.0, self.outside))
            self._entries = B @ self.reduced @ B.T + complement
        return self._entries

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.grid, self.entries @ other.entries)
        return self.apply(other)

    @property
    def shape(self):
        return (self.grid.count, self.grid.count)

    def apply(self, f) -> np.ndarray:
        """Apply to a field (or a stack of fields along the last axis)."""
        f = as_field(self.grid, f)
        if self._entries is None:
            inside = (f @ self.basis) @ self.reduced.T @ self.basis.T
            outside = apply_multiplier(f, np.where(self.mask, 0.0, self.outside))
            return inside + outside
        return f @ self.entries.T

    def eigenvalues(self) -> np.ndarray:
        """Sorted eigenvalues (symmetric path)."""
        if self.banded:
            inside = np.linalg.eigvalsh(self.reduced)
            return np.sort(np.concatenate([inside, self.outside[~self.mask]]))
        return np.linalg.eigvalsh(self.entries)

    def eigh(self, count: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Lowest ``count`` eigenpairs (all by default); vectors are columns."""
        if self.banded and count is not None and count <= self.reduced.shape[0]:
            w, v = np.linalg.eigh(self.reduced)
            if w[count - 1] <= np.min(self.outside[~self.mask], initial=np.inf):
                return w[:count], self.basis @ v[:, :count]
        w, v = np.linalg.eigh(self.entries)
        return (w, v) if count is None else (w[:count], v[:, :count])


@dataclass(frozen=True)
class Inertia:
    """Number of negative eigenvalues and dimension of the numerical kernel.

    ``gap`` is the distance between the zero cluster and the nearest
    nonzero eigenvalue (in absolute value); ``threshold`` the absolute
    cut-off that was applied.
    """

    negatives: int
    zeros: int
    gap: float = field(default=np.inf, compare=False)
    threshold: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if self.negatives < 0 or self.zeros < 0:
            raise ValidationError("linops.Inertia: counts must be nonnegative")

    def __add__(self, other: "Inertia") -> "Inertia":
        return Inertia(
            self.negatives + other.negatives,
            self.zeros + other.zeros,
            min(self.gap, other.gap),
        )

    def pair(self) -> tuple[int, int]:
        return (self.negatives, self.zeros)


def _band_basis(grid: Grid, mask: np.ndarray) -> np.ndarray:
    """Orthonormal real Fourier basis (Euclidean) of the modes selected by ``mask``."""
    n = grid.count
    idx = np.flatnonzero(mask[: grid.nyquist])
    m = np.arange(n)
    cols = []
    for j in idx:
        if j == 0:
            cols.append(np.full(n, 1 / np.sqrt(n)))
        else:
            phase = 2 * np.pi * j * m / n
            cols.append(np.sqrt(2 / n) * np.cos(phase))
            cols.append(np.sqrt(2 / n) * np.sin(phase))
    if mask[grid.nyquist]:
        cols.append((-1.0) ** m / np.sqrt(n))
    return np.array(cols).T


def _galerkin(grid: Grid, op, mask: np.ndarray, outside: np.ndarray) -> OperatorMatrix:
    """Symmetric band realization of the linear map ``op`` (acting on row stacks)."""
    B = _band_basis(grid, mask)
    image = op(B.T)  # (m, count)
    R = image @ B
    R = R.T  # R[a, b] = <b_a, op b_b>
    scale = np.max(np.abs(R))
    asym = float(np.max(np.abs(R - R.T)) / scale) if scale > 0 else 0.0
    R = 0.5 * (R + R.T)
    return OperatorMatrix(
        grid,
        self_adjoint=True,
        asymmetry=asym,
        basis=B,
        reduced=R,
        outside=np.asarray(outside, dtype=float),
        mask=mask,
    )


def _leading_symbol(grid: Grid, speeds) -> np.ndarray:
    k2 = grid.wavenumbers**2
    return np.prod([k2 + ck for ck in speeds], axis=0)


def _tanh_term(c: float, grid: Grid) -> np.ndarray:
    return np.sqrt(c) * np.tanh(np.sqrt(c) * grid.x)


def apply_M(c: float, grid: Grid, f) -> np.ndarray:
    """``M_c h = h' + sqrt(c) tanh(sqrt(c) x) h``."""
    return spectral_derivative(grid, f, 1) + _tanh_term(c, grid) * f


def apply_Mt(c: float, grid: Grid, f) -> np.ndarray:
    """``M_c^t k = -k' + sqrt(c) tanh(sqrt(c) x) k``."""
    return -spectral_derivative(grid, f, 1) + _tanh_term(c, grid) * f


def build_M(c: float, grid: Grid) -> OperatorMatrix:
    """Dense matrix of ``M_c``; its kernel is spanned by ``Q_c``."""
    check_decay(c, grid)
    return OperatorMatrix(grid, derivative_matrix(grid, 1) + np.diag(_tanh_term(c, grid)))


def build_Mt(c: float, grid: Grid) -> OperatorMatrix:
    """Dense matrix of ``M_c^t``, the transpose of :func:`build_M`."""
    check_decay(c, grid)
    return OperatorMatrix(grid, -derivative_matrix(grid, 1) + np.diag(_tanh_term(c, grid)))


def random_test_fields(grid: Grid, count: int = TEST_FIELDS, seed: int = 0, modes: int = 4):
    """Decaying band-limited test fields.

    Random trigonometric polynomials with wavenumbers in ``(0, 2]`` under a
    Gaussian window of width ``L/16``, normalized to unit ``L^2`` norm. The
    window keeps them below 1e-13 at the box edges.
    """
    rng = np.random.default_rng(seed)
    x = grid.x
    width = grid.length / 16
    window = np.exp(-0.5 * (x / width) ** 2)
    out = np.empty((count, grid.count))
    for i in range(count):
        kappa = rng.uniform(0.0, 2.0, modes)
        a, b = rng.standard_normal((2, modes))
        shift = rng.uniform(-width, width)
        z = window * np.sum(
            a[:, None] * np.cos(kappa[:, None] * (x - shift))
            + b[:, None] * np.sin(kappa[:, None] * (x - shift)),
            axis=0,
        )
        out[i] = z / np.sqrt(inner_product(grid, z, z))
    return out


def _rel(grid: Grid, lhs: np.ndarray, rhs: np.ndarray) -> float:
    num = np.sqrt(inner_product(grid, lhs - rhs, lhs - rhs))
    den = np.sqrt(inner_product(grid, rhs, rhs))
    return float(np.max(num / np.maximum(den, np.finfo(float).tiny)))


def verify_M_algebra(c: float, grid: Grid, *, count: int = TEST_FIELDS, seed: int = 0) -> dict:
    """Relative residuals of the ``M_c`` identities on decaying test fields.

    Keys: ``M_Mt`` for ``M M^t = -d^2 + c``, ``Mt_M`` for
    ``M^t M = -d^2 + c - Q^2``, ``intertwine_R`` for
    ``M (-d^2 - 2Q d^{-1}(Q d)) = (-d^2 - Q^2) M`` and ``intertwine_Mt`` for
    ``(-d^2 - Q^2) M^t = M^t (-d^2)``.
    """
    check_decay(c, grid)
    q = profile_Q(c, grid)
    z = random_test_fields(grid, count, seed)

    def d2(f):
        return spectral_derivative(grid, f, 2)

    def schrod(f):
        return -d2(f) - q * q * f

    lin = -d2(z) - 2 * q * symmetric_antiderivative(grid, q * spectral_derivative(grid, z, 1))
    return {
        "M_Mt": _rel(grid, apply_M(c, grid, apply_Mt(c, grid, z)), -d2(z) + c * z),
        "Mt_M": _rel(grid, apply_Mt(c, grid, apply_M(c, grid, z)), -d2(z) + c * z - q * q * z),
        "intertwine_R": _rel(grid, apply_M(c, grid, lin), schrod(apply_M(c, grid, z))),
        "intertwine_Mt": _rel(grid, schrod(apply_Mt(c, grid, z)), apply_Mt(c, grid, -d2(z))),
    }


def apply_L1(c: float, grid: Grid, f, q: np.ndarray | None = None) -> np.ndarray:
    """``(-d^2 + c - 3 Q_c^2) f``."""
    if q is None:
        q = profile_Q(c, grid)
    return -spectral_derivative(grid, f, 2) + (c - 3 * q * q) * f


def build_L1(c: float, grid: Grid, *, galerkin: bool = True) -> OperatorMatrix:
    """Linearized operator ``-d^2 + c - 3 Q_c^2`` around a single soliton.

    With ``galerkin=False`` the plain full-grid matrix is returned (it is
    symmetric to round-off since only a second derivative is involved).
    """
    return build_L_Nj([c], 1, grid, galerkin=galerkin)


def recursion_operator_R(q, grid: Grid) -> OperatorMatrix:
    """Dense matrix of ``R(q) = -d^2 - 2 q d^{-1}(q d)`` (not self-adjoint)."""
    q = as_field(grid, q, name="q")
    D1 = derivative_matrix(grid, 1)
    A = symmetric_antiderivative_matrix(grid)
    return OperatorMatrix(grid, -derivative_matrix(grid, 2) - 2 * q[:, None] * (A @ (q[:, None] * D1)))


def _check_index(speeds, j: int, op: str) -> int:
    if int(j) != j or not 1 <= j <= len(speeds):
        raise ValidationError(f"linops.{op}: index j must be in 1..{len(speeds)}, got {j}")
    return int(j)


def apply_L_Nj(speeds, j: int, grid: Grid, f) -> np.ndarray:
    """Matrix-free ``prod_{k != j}(R(Q_j) + c_k) (-d^2 + c_j - 3 Q_j^2) f``."""
    c = speed_set(speeds).array
    j = _check_index(c, j, "apply_L_Nj")
    cj = c[j - 1]
    q = profile_Q(cj, grid)
    out = apply_L1(cj, grid, f, q)
    for k, ck in enumerate(c, start=1):
        if k != j:
            out = recursion_R_apply(grid, q, out) + ck * out
    return out


def build_L_Nj(speeds, j: int, grid: Grid, *, galerkin: bool = True) -> OperatorMatrix:
    """``L_{N,j}``: the Hessian of the action at the j-th soliton profile.

    Formed as the product of ``R(Q_j) + c_k`` over ``k != j`` with the
    1-soliton linearization, realized on the resolved Fourier band of
    ``Q_{c_j}`` (see module notes) and symmetrized; the relative asymmetry
    before symmetrization is kept in ``asymmetry``.
    """
    c = speed_set(speeds).array
    j = _check_index(c, j, "build_L_Nj")
    cj = c[j - 1]
    q = profile_Q(cj, grid)
    if galerkin:
        mask = spectral_band(grid, q)
        return _galerkin(
            grid, lambda f: apply_L_Nj(c, j, grid, f), mask, _leading_symbol(grid, c)
        )
    D2 = derivative_matrix(grid, 2)
    L = -D2 + np.diag(cj - 3 * q * q)
    if c.size > 1:
        R = recursion_operator_R(q, grid).entries
        for k, ck in enumerate(c, start=1):
            if k != j:
                L = (R + ck * np.eye(grid.count)) @ L
    scale = np.max(np.abs(L))
    asym = float(np.max(np.abs(L - L.T)) / scale)
    return OperatorMatrix(grid, 0.5 * (L + L.T), self_adjoint=True, asymmetry=asym)


def gateaux_hessian(
    speeds, u, grid: Grid, step: float | None = None, *, method: str = "tangent"
) -> OperatorMatrix:
    """``S_N''(u)`` as the Jacobian of :func:`hierarchy.action_gradient`.

    The Jacobian is sampled on the resolved Fourier band of ``u``.
    ``method="tangent"`` uses the exact forward-mode linearization of the
    gradient recursion; ``method="central"`` uses centered differences
    ``(S'(u + h e) - S'(u - h e)) / 2h`` with ``h = step`` (default
    ``1e-5 (1 + max|u|)``), which loses digits to cancellation at high
    order.
    """
    c = speed_set(speeds).array
    u = as_field(grid, u, name="u")
    mask = spectral_band(grid, u)
    if method == "tangent":

        def jac(f):
            return action_hessian_apply(grid, c, u, f)

    elif method == "central":
        h = 1e-5 * (1 + np.max(np.abs(u))) if step is None else step
        lam = vieta_multipliers(c)
        grad_mask = spectral_band(grid, u, degree=2 * c.size + 1)

        def grad(w):
            g = gradients(grid, c.size + 1, w, mask=grad_mask, pin=False)
            return g[-1] + sum(lj * gj for lj, gj in zip(lam, g))

        def jac(f):
            return (grad(u + h * f) - grad(u - h * f)) / (2 * h)

    else:
        raise ValidationError(f"linops.gateaux_hessian: unknown method {method!r}")

    def op(rows):
        return np.concatenate([jac(rows[i : i + 128]) for i in range(0, rows.shape[0], 128)])

    return _galerkin(grid, op, mask, _leading_symbol(grid, c))


def factorization_residual(
    speeds, j: int, grid: Grid, *, count: int = TEST_FIELDS, seed: int = 0
) -> float:
    """Relative residual of ``M_j L_{N,j} M_j^t = M_j^t prod_k(-d^2 + c_k) M_j``.

    The largest ``|(LHS - RHS) z| / |RHS z|`` over decaying test fields ``z``;
    both sides are applied matrix-free.
    """
    c = speed_set(speeds).array
    j = _check_index(c, j, "factorization_residual")
    cj = c[j - 1]
    check_decay(cj, grid)
    z = random_test_fields(grid, count, seed)
    lhs = apply_M(cj, grid, apply_L_Nj(c, j, grid, apply_Mt(cj, grid, z)))
    w = apply_M(cj, grid, z)
    for ck in c:
        w = -spectral_derivative(grid, w, 2) + ck * w
    rhs = apply_Mt(cj, grid, w)
    return _rel(grid, lhs, rhs)


def inertia_of(m, zero_tol: float = ZERO_TOL) -> Inertia:
    """Inertia from a full symmetric eigendecomposition.

    Eigenvalues with ``|lambda| <= zero_tol * max|lambda|`` count as zero.
    Raises :class:`InertiaAmbiguityError` when an eigenvalue lies within a
    factor 10 of the threshold on either side.
    """
    if isinstance(m, OperatorMatrix):
        lam = m.eigenvalues()
    else:
        m = np.asarray(m, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError("linops.inertia_of: a square matrix is required")
        scale = np.max(np.abs(m)) if m.size else 0.0
        if scale and np.max(np.abs(m - m.T)) > 1e-10 * scale:
            raise ValidationError("linops.inertia_of: matrix is not symmetric")
        lam = np.linalg.eigvalsh(m)
    s = float(np.max(np.abs(lam))) if lam.size else 0.0
    thr = zero_tol * s
    mag = np.abs(lam)
    close = (mag > thr / AMBIGUITY_FACTOR) & (mag < thr * AMBIGUITY_FACTOR)
    if np.any(close):
        worst = lam[close][np.argmin(np.abs(np.log(mag[close] / thr)))]
        raise InertiaAmbiguityError(
            f"linops.inertia_of: eigenvalue {worst:.3e} within a factor "
            f"{AMBIGUITY_FACTOR:g} of the zero threshold {thr:.3e}; refine the grid or "
            "change zero_tol"
        )
    zero = mag <= thr
    nonzero = mag[~zero]
    gap = float(nonzero.min() - (mag[zero].max() if zero.any() else 0.0)) if nonzero.size else np.inf
    return Inertia(int(np.sum(lam < -thr)), int(np.sum(zero)), gap, thr)


def normalize(m: OperatorMatrix, speeds) -> OperatorMatrix:
    """Congruence ``P m P`` with ``P = prod_k (-d^2 + c_k)^(-1/2)``.

    Preserves inertia and maps the leading symbol outside the band to 1.
    """
    c = speed_set(speeds).array
    grid = m.grid
    p = 1.0 / np.sqrt(_leading_symbol(grid, c))
    if m.banded:
        # each basis vector is a single real Fourier mode, so P is diagonal there
        pb = np.linalg.norm(apply_multiplier(m.basis.T, p), axis=-1)
        R = pb[:, None] * m.reduced * pb[None, :]
        return OperatorMatrix(
            grid,
            self_adjoint=True,
            asymmetry=m.asymmetry,
            basis=m.basis,
            reduced=R,
            outside=m.outside * p * p,
            mask=m.mask,
        )
    P = multiplier_matrix(grid, p)
    return OperatorMatrix(grid, P @ m.entries @ P, self_adjoint=True, asymmetry=m.asymmetry)


def operator_inertia(m: OperatorMatrix, speeds, zero_tol: float = ZERO_TOL) -> Inertia:
    """Inertia of ``m`` after the normalizing congruence of :func:`normalize`."""
    return inertia_of(normalize(m, speeds), zero_tol)


def scaling_derivative(c: float, grid: Grid) -> np.ndarray:
    """``Lambda Q_c = (Q_c + x Q_c') / (2c)`` with the box coordinate ``x``."""
    q = profile_Q(c, grid)
    return (q + grid.x * profile_Q_x(c, grid)) / (2 * c)


@dataclass(frozen=True)
class IsoInertiaScan:
    """Inertia of the multi-soliton Hessian at each time, and the decoupled sum."""

    times: tuple
    inertias: tuple
    components: tuple
    total: Inertia

    @property
    def constant(self) -> bool:
        return all(i == self.inertias[0] for i in self.inertias)

    @property
    def sum_rule(self) -> bool:
        return all(i == self.total for i in self.inertias)


def iso_inertia_scan(
    speeds, phases, times, grid: Grid, *, zero_tol: float = ZERO_TOL
) -> IsoInertiaScan:
    """Inertia of ``S_N''(U(t))`` over ``times`` and the sum over ``L_{N,j}``."""
    c = speed_set(speeds).array
    found = []
    for t in times:
        u = n_soliton(c, phases, t, grid)
        found.append(operator_inertia(gateaux_hessian(c, u, grid), c, zero_tol))
    parts = tuple(
        operator_inertia(build_L_Nj(c, j, grid), c, zero_tol) for j in range(1, c.size + 1)
    )
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    return IsoInertiaScan(tuple(float(t) for t in times), tuple(found), parts, total)
