"""Exact mKdV solitons and multi-solitons.

Conventions: the 1-soliton ``one_soliton(c, x0, t)`` is ``Q_c(x - c t - x0)``.
Multi-solitons are parametrized by phases entering the exponents
``s_j = sqrt(c_j) (x - c_j t) + x_j``, so an isolated soliton with phase
``x_j`` sits at ``c_j t - x_j / sqrt(c_j)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .grid import Grid, as_field

DECAY_TOL = 1e-12
MAX_SOLITONS = 8
SAFE_MARGIN = 10.0


@dataclass(frozen=True)
class SpeedSet:
    """Strictly increasing positive speeds ``c_1 < ... < c_N``."""

    speeds: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(self.speeds))
        if not c:
            raise ValidationError("soliton_factory.SpeedSet: at least one speed is required")
        if not all(np.isfinite(c)) or min(c) <= 0:
            raise ValidationError(f"soliton_factory.SpeedSet: speeds must be positive, got {c}")
        if any(b <= a for a, b in zip(c, c[1:])):
            raise ValidationError(
                f"soliton_factory.SpeedSet: speeds must be strictly increasing, got {c}"
            )
        object.__setattr__(self, "speeds", c)

    def __len__(self):
        return len(self.speeds)

    def __iter__(self):
        return iter(self.speeds)

    def __getitem__(self, i):
        return self.speeds[i]

    @property
    def array(self) -> np.ndarray:
        return np.array(self.speeds)


def speed_set(speeds) -> SpeedSet:
    return speeds if isinstance(speeds, SpeedSet) else SpeedSet(tuple(np.atleast_1d(speeds)))


def phase_vector(phases, n: int) -> np.ndarray:
    y = np.atleast_1d(np.asarray(phases, dtype=float))
    if y.shape != (n,):
        raise ValidationError(
            f"soliton_factory.PhaseSet: expected {n} phases, got {y.shape[0] if y.ndim else 0}"
        )
    if not np.all(np.isfinite(y)):
        raise ValidationError("soliton_factory.PhaseSet: phases must be finite")
    return y


def sech(z):
    """Overflow-free hyperbolic secant."""
    a = np.exp(-np.abs(z))
    return 2 * a / (1 + a * a)


def check_decay(c: float, grid: Grid, center: float = 0.0, tol: float = DECAY_TOL) -> None:
    """Refuse profiles whose tail at the box edge exceeds ``tol``."""
    gap = 0.5 * grid.length - abs(center)
    tail = np.sqrt(2 * c) * sech(np.sqrt(c) * gap) if gap > 0 else np.inf
    if tail >= tol:
        raise DomainError(
            f"soliton_factory: Q_c with c={c:g} centred at {center:g} leaves {tail:.2e} "
            f"at the box edge ({grid.describe()}); enlarge the domain"
        )


def _check_safe(c: float, center: float, grid: Grid, op: str) -> None:
    limit = 0.5 * grid.length - SAFE_MARGIN / np.sqrt(c)
    if abs(center) >= limit:
        raise DomainError(
            f"soliton_factory.{op}: centre {center:g} of the c={c:g} soliton is outside "
            f"the safe region |x| < {limit:g}"
        )


def profile_Q(c: float, grid: Grid, *, center: float = 0.0) -> np.ndarray:
    """Soliton profile ``sqrt(2c) sech(sqrt(c) (x - center))``."""
    if not c > 0:
        raise ValidationError(f"soliton_factory.profile_Q: speed must be positive, got {c}")
    check_decay(c, grid, center)
    return np.sqrt(2 * c) * sech(np.sqrt(c) * (grid.x - center))


def profile_Q_x(c: float, grid: Grid, *, center: float = 0.0) -> np.ndarray:
    """Closed-form x-derivative of :func:`profile_Q`."""
    q = profile_Q(c, grid, center=center)
    return -np.sqrt(c) * np.tanh(np.sqrt(c) * (grid.x - center)) * q


def one_soliton(c: float, x0: float, t: float, grid: Grid) -> np.ndarray:
    center = x0 + c * t
    _check_safe(c, center, grid, "one_soliton")
    return np.sqrt(2 * c) * sech(np.sqrt(c) * (grid.x - center))


def asymptotic_centers(speeds, phases, t: float) -> np.ndarray:
    """Centres of the decoupled components, ignoring interaction shifts."""
    c = speed_set(speeds).array
    y = phase_vector(phases, len(c))
    return c * t - y / np.sqrt(c)


def _check_centers(c, y, t, grid, op):
    for cj, zj in zip(c, c * t - y / np.sqrt(c)):
        _check_safe(cj, zj, grid, op)


def two_soliton(speeds, phases, t: float, grid: Grid, *, check: bool = True) -> np.ndarray:
    """2-soliton from its own closed formula, with analytic x-derivative."""
    c = speed_set(speeds).array
    if c.size != 2:
        raise ValidationError("soliton_factory.two_soliton: exactly two speeds are required")
    y = phase_vector(phases, 2)
    if check:
        _check_centers(c, y, t, grid, "two_soliton")
    rc = np.sqrt(c)
    rho2 = ((rc[0] - rc[1]) / (rc[0] + rc[1])) ** 2
    s1 = rc[0] * (grid.x - c[0] * t) + y[0]
    s2 = rc[1] * (grid.x - c[1] * t) + y[1]
    s12 = s1 + s2 + np.log(rho2)
    m = np.maximum.reduce([np.zeros_like(s1), s1, s2, s12])
    e1, e2, e12 = np.exp(s1 - m), np.exp(s2 - m), np.exp(s12 - m)
    num = e1 + e2
    den = np.exp(-m) - e12
    num_x = rc[0] * e1 + rc[1] * e2
    den_x = -(rc[0] + rc[1]) * e12
    return 2 * np.sqrt(2) * (num_x * den - num * den_x) / (num**2 + den**2)


@dataclass(frozen=True)
class _Combinatorics:
    subsets: np.ndarray  # (2^N, N) indicator matrix
    log_coeff: np.ndarray
    sign: np.ndarray
    odd: np.ndarray
    rate: np.ndarray  # sum of sqrt(c) over each subset


def _combinatorics(c: np.ndarray) -> _Combinatorics:
    n = c.size
    rc = np.sqrt(c)
    pair = np.ones((n, n))
    for k, l in itertools.combinations(range(n), 2):
        pair[k, l] = pair[l, k] = -(((rc[l] - rc[k]) / (rc[l] + rc[k])) ** 2)
    rows, logs, signs = [], [], []
    for size in range(n + 1):
        for sigma in itertools.combinations(range(n), size):
            a = 1.0
            for k, l in itertools.combinations(sigma, 2):
                a *= pair[k, l]
            row = np.zeros(n)
            row[list(sigma)] = 1
            rows.append(row)
            logs.append(np.log(abs(a)))
            signs.append(np.sign(a))
    subsets = np.array(rows)
    return _Combinatorics(
        subsets=subsets,
        log_coeff=np.array(logs),
        sign=np.array(signs),
        odd=subsets.sum(axis=1) % 2 == 1,
        rate=subsets @ rc,
    )


def n_soliton(speeds, phases, t: float, grid: Grid, *, check: bool = True) -> np.ndarray:
    """N-soliton ``2 sqrt(2) d/dx arctan(g/f)`` for ``N <= 8``.

    Every exponential is divided by the pointwise largest one before
    summation; the quotient ``(g_x f - g f_x) / (f^2 + g^2)`` is invariant
    under that common rescaling, so large ``|t|`` cannot overflow.
    """
    c = speed_set(speeds).array
    if c.size > MAX_SOLITONS:
        raise ValidationError(f"soliton_factory.n_soliton: N <= {MAX_SOLITONS} required")
    y = phase_vector(phases, c.size)
    if check:
        _check_centers(c, y, t, grid, "n_soliton")
    comb = _combinatorics(c)
    s = np.sqrt(c)[:, None] * (grid.x[None, :] - c[:, None] * t) + y[:, None]
    expo = comb.subsets @ s + comb.log_coeff[:, None]
    terms = comb.sign[:, None] * np.exp(expo - expo.max(axis=0))
    f = terms[~comb.odd].sum(axis=0)
    g = terms[comb.odd].sum(axis=0)
    f_x = (comb.rate[:, None] * terms)[~comb.odd].sum(axis=0)
    g_x = (comb.rate[:, None] * terms)[comb.odd].sum(axis=0)
    return 2 * np.sqrt(2) * (g_x * f - g * f_x) / (f * f + g * g)


def phases_at(speeds, phases, tau: float) -> np.ndarray:
    """Phases of the decoupled 1-soliton motion after time ``tau``."""
    c = speed_set(speeds).array
    return phase_vector(phases, c.size) - c**1.5 * tau


def _local_maxima(u: np.ndarray, threshold: float) -> np.ndarray:
    left = np.roll(u, 1)
    right = np.roll(u, -1)
    return np.flatnonzero((u > left) & (u >= right) & (u > threshold))


def fitted_decomposition(u, speeds, grid: Grid) -> list[tuple[float, float]]:
    """Locate well-separated soliton peaks in ``u``.

    Peaks above ``sqrt(2 c_1)/2`` are refined by a three-point parabola in
    ``log u`` and matched to speeds by height (``max Q_c = sqrt(2c)``).
    Returns ``(speed, center)`` pairs sorted by speed.
    """
    c = speed_set(speeds).array
    u = as_field(grid, u)
    peaks = _local_maxima(u, 0.5 * np.sqrt(2 * c[0]))
    if peaks.size != c.size:
        raise ValidationError(
            f"soliton_factory.fitted_decomposition: found {peaks.size} peaks for "
            f"{c.size} speeds; solitons are not separated enough"
        )
    n = grid.count
    found = []
    for i in peaks:
        lm, l0, lp = np.log(u[(i - 1) % n]), np.log(u[i]), np.log(u[(i + 1) % n])
        curv = lm - 2 * l0 + lp
        offset = 0.5 * (lm - lp) / curv if curv < 0 else 0.0
        found.append((grid.x[i] + offset * grid.spacing, u[i]))
    heights = np.array([h for _, h in found])
    order = np.argsort(heights)
    # heights and speeds are both increasing, so sorted peaks pair with sorted speeds
    return [(float(c[j]), float(found[i][0])) for j, i in enumerate(order)]
