"""Exact solver for ``E'' + (kappa^2 + q(t)) E = 0`` with piecewise-constant ``q``.

On each piece the state ``(E, E')`` is advanced by the closed-form 2x2
propagator, whose determinant is one. Scattering data follow from

    E(t) = exp(i kappa t) + R exp(-i kappa t)     before the layout,
    E(t) = tau exp(i kappa t)                     after the layout.

Everything else in the package is checked against this module.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .model import Layout, StepProfile

__all__ = [
    "PieceTransferMatrix",
    "ScatteringCoeffs",
    "FieldTrace",
    "piece_propagator",
    "propagator_entries",
    "solve_scattering",
    "reflection_recursion",
    "field_at",
    "trace",
]

# Entry-growth guard. Products stay O(1) for weak steps but grow like
# 1/|tau| inside a momentum gap; past this size the 2x2 boundary solve
# loses digits and the bounded reflection recursion takes over.
MAX_ENTRY = 1e8


@dataclass(frozen=True)
class PieceTransferMatrix:
    m11: complex
    m12: complex
    m21: complex
    m22: complex
    mu: float
    duration: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]])

    @property
    def det(self):
        return self.m11 * self.m22 - self.m12 * self.m21


@dataclass(frozen=True)
class ScatteringCoeffs:
    R: complex
    tau: complex
    kappa: float
    layout: Layout

    @property
    def flux_defect(self) -> float:
        return abs(abs(self.R) ** 2 + abs(self.tau) ** 2 - 1.0)


@dataclass(frozen=True)
class FieldTrace:
    """Complex field sampled on a strictly increasing time grid."""

    grid: np.ndarray
    values: np.ndarray
    label: str

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if grid.ndim != 1 or grid.size == 0:
            raise ValueError("trace grid must be a non-empty 1-d array")
        if values.shape != grid.shape:
            raise ValueError("trace values must match the grid")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("trace grid must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise NumericalError(f"non-finite values in {self.label} trace")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def sup_diff(self, other: "FieldTrace") -> float:
        if not np.array_equal(self.grid, other.grid):
            raise ValueError("traces live on different grids")
        return float(np.max(np.abs(self.values - other.values)))


def propagator_entries(mu, dt):
    """Vectorised propagator entries ``(cos, sin/mu, -mu sin, cos)``.

    ``mu = 0`` is handled by the limit ``sin(mu dt)/mu -> dt``.
    """
    mu = np.asarray(mu, dtype=float)
    dt = np.asarray(dt, dtype=float)
    phase = mu * dt
    c = np.cos(phase)
    s = np.sin(phase)
    with np.errstate(invalid="ignore", divide="ignore"):
        s_over_mu = np.where(mu > 0, s / np.where(mu > 0, mu, 1.0), dt)
    return c, s_over_mu, -mu * s, c


def piece_propagator(q, dt, kappa=0.0) -> PieceTransferMatrix:
    """Map ``(E, E')`` across a piece of length ``dt`` with local ``mu = sqrt(kappa^2 + q)``."""
    if dt < 0:
        raise ValueError("piece duration must be non-negative")
    mu2 = kappa**2 + q
    if mu2 < 0:
        raise ValueError("local squared wavenumber must be non-negative")
    mu = float(np.sqrt(mu2))
    a, b, c, d = (complex(x) for x in propagator_entries(mu, dt))
    return PieceTransferMatrix(a, b, c, d, mu, float(dt))


def _as_layout(profile) -> Layout:
    if isinstance(profile, Layout):
        return profile
    if isinstance(profile, StepProfile):
        return profile.layout()
    raise TypeError(f"cannot build a layout from {type(profile).__name__}")


def _piece_matrices(layout: Layout, kappa):
    mu = np.sqrt(kappa**2 + layout.q)
    a, b, c, d = propagator_entries(mu, np.diff(layout.edges))
    return np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2)


def _edge_states(layout: Layout, kappa, e0, de0):
    """State ``(E, E')`` at every edge, starting from ``(e0, de0)`` at ``edges[0]``."""
    mats = _piece_matrices(layout, kappa)
    states = np.empty((layout.edges.size, 2), dtype=complex)
    states[0] = (e0, de0)
    for i, m in enumerate(mats):
        states[i + 1] = m @ states[i]
    return states


def total_transfer(layout: Layout, kappa) -> np.ndarray:
    """Product of the piece propagators, left to right."""
    total = np.eye(2)
    for m in _piece_matrices(layout, kappa):
        total = m @ total
        if np.max(np.abs(total)) > MAX_ENTRY:
            raise NumericalError("transfer-matrix entries exceeded the growth guard")
    return total


def reflection_recursion(layout: Layout, kappa):
    """``(R, tau)`` by sweeping the reflection ratio from right to left.

    Every factor has modulus at most ``max(1, kappa / mu)``, so the result
    stays accurate when transfer-matrix products blow up.
    """
    k = float(kappa)
    mu = np.concatenate([[k], np.sqrt(k**2 + layout.q), [k]])
    widths = np.concatenate([[0.0], np.diff(layout.edges)])
    L = layout.q.size
    # rho[j]: ratio of left- to right-moving amplitude at the left edge of piece j
    rho = np.zeros(L + 2, dtype=complex)
    den = np.empty(L + 1, dtype=complex)
    ratio = np.empty(L + 1, dtype=complex)
    for j in range(L, -1, -1):
        s = mu[j + 1] / mu[j]
        den[j] = (1 + rho[j + 1]) + s * (1 - rho[j + 1])
        ratio[j] = ((1 + rho[j + 1]) - s * (1 - rho[j + 1])) / den[j]
        rho[j] = ratio[j] * np.exp(2j * mu[j] * widths[j])
    e0, e1 = layout.start, layout.stop
    R = ratio[0] * np.exp(2j * k * e0)
    amp = np.exp(1j * k * e0)
    for j in range(L + 1):
        amp = 2 * amp / den[j]
        if j < L:
            amp *= np.exp(1j * mu[j + 1] * widths[j + 1])
    return complex(R), complex(amp * np.exp(-1j * k * e1))


def solve_scattering(profile, kappa) -> ScatteringCoeffs:
    """Reflection and transmission coefficients of a layout (or step profile)."""
    layout = _as_layout(profile)
    k = float(kappa)
    try:
        m = total_transfer(layout, k)
    except NumericalError:
        R, tau = reflection_recursion(layout, k)
        return ScatteringCoeffs(R, tau, k, layout)
    t0, t1 = layout.start, layout.stop
    ein0 = np.exp(1j * k * t0)
    eref0 = np.exp(-1j * k * t0)
    eout = np.exp(1j * k * t1)
    # unknowns (R, tau): M [E(t0), E'(t0)] = tau * eout * [1, i k]
    lhs = np.array(
        [
            [m[0, 0] * eref0 - 1j * k * m[0, 1] * eref0, -eout],
            [m[1, 0] * eref0 - 1j * k * m[1, 1] * eref0, -1j * k * eout],
        ]
    )
    rhs = -np.array(
        [
            m[0, 0] * ein0 + 1j * k * m[0, 1] * ein0,
            m[1, 0] * ein0 + 1j * k * m[1, 1] * ein0,
        ]
    )
    det = lhs[0, 0] * lhs[1, 1] - lhs[0, 1] * lhs[1, 0]
    if abs(det) < 1e-14 * max(1.0, np.abs(lhs).max() ** 2):
        raise NumericalError("singular boundary system in the transfer-matrix solve")
    R, tau = np.linalg.solve(lhs, rhs)
    return ScatteringCoeffs(complex(R), complex(tau), k, layout)


def _field_and_derivative(profile, kappa, coeffs, t):
    layout = _as_layout(profile)
    k = float(kappa)
    t = np.asarray(t, dtype=float)
    R, tau = coeffs.R, coeffs.tau
    t0 = layout.start
    e0 = np.exp(1j * k * t0) + R * np.exp(-1j * k * t0)
    de0 = 1j * k * (np.exp(1j * k * t0) - R * np.exp(-1j * k * t0))
    states = _edge_states(layout, k, e0, de0)

    E = np.empty(t.shape, dtype=complex)
    dE = np.empty(t.shape, dtype=complex)
    left = t <= layout.start
    right = t >= layout.stop
    inside = ~(left | right)

    tl = t[left]
    E[left] = np.exp(1j * k * tl) + R * np.exp(-1j * k * tl)
    dE[left] = 1j * k * (np.exp(1j * k * tl) - R * np.exp(-1j * k * tl))
    tr = t[right]
    E[right] = tau * np.exp(1j * k * tr)
    dE[right] = 1j * k * tau * np.exp(1j * k * tr)

    ti = t[inside]
    if ti.size:
        piece = np.clip(np.searchsorted(layout.edges, ti, side="right") - 1, 0, layout.q.size - 1)
        mu = np.sqrt(k**2 + layout.q[piece])
        a, b, c, d = propagator_entries(mu, ti - layout.edges[piece])
        s = states[piece]
        E[inside] = a * s[:, 0] + b * s[:, 1]
        dE[inside] = c * s[:, 0] + d * s[:, 1]
    return E, dE


def field_at(profile, kappa, coeffs: ScatteringCoeffs, t):
    """Exact total field at time(s) ``t``."""
    E, _ = _field_and_derivative(profile, kappa, coeffs, t)
    return E if E.ndim else complex(E)


def field_derivative_at(profile, kappa, coeffs: ScatteringCoeffs, t):
    _, dE = _field_and_derivative(profile, kappa, coeffs, t)
    return dE if dE.ndim else complex(dE)


def trace(profile, kappa, grid, coeffs=None) -> FieldTrace:
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty grid")
    if coeffs is None:
        coeffs = solve_scattering(profile, kappa)
    return FieldTrace(grid, field_at(profile, kappa, coeffs, grid), "oracle")


def incident_trace(kappa, grid) -> FieldTrace:
    grid = np.asarray(grid, dtype=float)
    return FieldTrace(grid, np.exp(1j * kappa * grid), "incident")
