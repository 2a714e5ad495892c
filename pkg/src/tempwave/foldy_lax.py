"""Point-interaction (Foldy-Lax) approximation of the many-step field.

Each step is collapsed onto its centre. The integrated field values
``q_m = int_{I_m} E`` solve the dense symmetric system

    (1 - beta) q_m - beta sum_{j != m} exp(i k |T_m - T_j|) q_j = int_{I_m} E_inc

with ``beta = i C delta**(1-h) / (2 k)``, and the total field is rebuilt as

    E(t) = E_inc(t) + C delta**-h sum_m Phi(t, T_m) q_m,
    Phi(t, s) = i/(2k) exp(i k |t - s|).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .errors import CapacityError, NearSingularError, NumericalError
from .model import RegimeParams, StepProfile
from .oracle import FieldTrace

__all__ = [
    "MAX_UNKNOWNS",
    "FoldyLaxSystem",
    "phi",
    "phi_tilde",
    "assemble_matrix",
    "assemble_rhs",
    "assemble",
    "solve",
    "condition_estimate",
    "reconstruct_field",
    "foldy_lax_trace",
    "nystrom_solve",
    "step_l2_norms",
]

MAX_UNKNOWNS = 6000


def phi_tilde(t, s, kappa):
    return np.exp(1j * kappa * np.abs(np.subtract(t, s)))


def phi(t, s, kappa):
    """Outgoing fundamental solution of ``d^2/dt^2 + kappa^2`` on the line."""
    return 1j / (2.0 * kappa) * phi_tilde(t, s, kappa)


@dataclass(frozen=True)
class FoldyLaxSystem:
    A_bar: np.ndarray
    beta: complex
    E_in: np.ndarray
    Q: np.ndarray
    kappa: float
    d_tilde: np.ndarray | None = None
    q_tilde: np.ndarray | None = None
    lu: tuple | None = None
    residual: float | None = None

    @property
    def n(self) -> int:
        return self.A_bar.shape[0]


def _check_capacity(unknowns, max_unknowns):
    if unknowns > max_unknowns:
        raise CapacityError(
            f"{unknowns} unknowns exceed the dense-solve budget of {max_unknowns}; "
            "lower n_cap or raise max_unknowns"
        )


def assemble_matrix(profile: StepProfile, params: RegimeParams, max_unknowns=MAX_UNKNOWNS) -> FoldyLaxSystem:
    _check_capacity(profile.n, max_unknowns)
    k = params.wavenumber
    beta = params.beta
    c = profile.centers
    Q = phi_tilde(c[:, None], c[None, :], k)
    A = -beta * Q
    A[np.diag_indices_from(A)] = 1.0 - beta
    E_in = np.exp(1j * k * c)
    return FoldyLaxSystem(A, beta, E_in, Q, k)


def assemble_rhs(profile: StepProfile, params: RegimeParams) -> np.ndarray:
    """Exact step integrals of the incident wave, ``delta exp(i k T_m) sinc(k delta / 2)``."""
    k = params.wavenumber
    half = profile.half_width
    return 2.0 * half * np.exp(1j * k * profile.centers) * np.sinc(k * half / np.pi)


def assemble(profile: StepProfile, params: RegimeParams, max_unknowns=MAX_UNKNOWNS) -> FoldyLaxSystem:
    system = assemble_matrix(profile, params, max_unknowns)
    return replace(system, d_tilde=assemble_rhs(profile, params))


def solve(system: FoldyLaxSystem, rhs=None, residual_tol=1e-10) -> FoldyLaxSystem:
    """LU with partial pivoting; returns the system with ``q_tilde`` filled in."""
    b = system.d_tilde if rhs is None else np.asarray(rhs, dtype=complex)
    if b is None:
        raise ValueError("system has no right-hand side; use assemble() or pass rhs")
    lu = system.lu
    if lu is None:
        lu = scipy.linalg.lu_factor(system.A_bar, check_finite=True)
        pivots = np.abs(np.diag(lu[0]))
        scale = np.linalg.norm(system.A_bar, 2) if system.n <= 200 else np.linalg.norm(system.A_bar, "fro")
        bad = np.flatnonzero(pivots < 1e-14 * scale)
        if bad.size:
            raise NearSingularError(f"pivot {pivots[bad[0]]:.3e} at index {bad[0]} is below 1e-14 |A|", int(bad[0]))
    q = scipy.linalg.lu_solve(lu, b)
    bnorm = np.linalg.norm(b)
    res = np.linalg.norm(system.A_bar @ q - b) / (bnorm if bnorm > 0 else 1.0)
    if res >= residual_tol:
        raise NumericalError(f"relative residual {res:.3e} exceeds {residual_tol:g}")
    return replace(system, d_tilde=b, q_tilde=q, lu=lu, residual=float(res))


def condition_estimate(system: FoldyLaxSystem, max_iter=20, rtol=1e-3) -> float:
    """Estimate ``||A_bar^{-1}||_2`` by power iteration on ``A^{-H} A^{-1}``."""
    lu = system.lu if system.lu is not None else scipy.linalg.lu_factor(system.A_bar)
    n = system.n
    rng = np.random.default_rng(12345)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(max_iter):
        y = scipy.linalg.lu_solve(lu, x)
        z = scipy.linalg.lu_solve(lu, y, trans=2)
        new = math.sqrt(np.linalg.norm(z))
        x = z / np.linalg.norm(z)
        if est and abs(new - est) <= rtol * new:
            est = new
            break
        est = new
    return est


def reconstruct_field(system: FoldyLaxSystem, profile: StepProfile, params: RegimeParams, t, form="derived"):
    """Total field from the solved charges.

    ``form="derived"`` uses the full kernel ``Phi = i/(2k) Phi_tilde``.
    ``form="bare"`` drops the ``i/(2k)`` factor and uses
    ``C delta**(1-h) Phi_tilde A^{-1} E_in``; it is kept for comparison only.
    """
    if system.q_tilde is None:
        raise ValueError("solve the system first")
    k = params.wavenumber
    t = np.asarray(t, dtype=float)
    kernel = phi_tilde(t[..., None], profile.centers, k)
    if form == "derived":
        scattered = params.amplitude * (1j / (2 * k)) * (kernel @ system.q_tilde)
    elif form == "bare":
        coeff = scipy.linalg.lu_solve(system.lu, system.E_in)
        scattered = params.C * profile.delta ** (1 - params.h) * (kernel @ coeff)
    else:
        raise ValueError(f"unknown form {form!r}")
    out = np.exp(1j * k * t) + scattered
    return out if out.ndim else complex(out)


def foldy_lax_trace(profile, params, grid, max_unknowns=MAX_UNKNOWNS, form="derived"):
    system = solve(assemble(profile, params, max_unknowns))
    grid = np.asarray(grid, dtype=float)
    return FieldTrace(grid, reconstruct_field(system, profile, params, grid, form), "foldy_lax"), system


def _nystrom_nodes(profile: StepProfile, m):
    x, w = np.polynomial.legendre.leggauss(m)
    nodes = (profile.centers[:, None] + profile.half_width * x[None, :]).ravel()
    weights = np.tile(profile.half_width * w, profile.n)
    return nodes, weights


def nystrom_solve(profile: StepProfile, params: RegimeParams, nodes_per_step, grid, max_unknowns=MAX_UNKNOWNS):
    """Gauss-Legendre Nystrom discretisation of the integral equation on the steps.

    Collocates ``E - C delta**-h sum_j int_{I_j} Phi(., s) E(s) ds = E_inc`` at
    ``nodes_per_step`` Gauss nodes inside every step and evaluates the field
    on ``grid`` by the Nystrom interpolant. With one node per step this is the
    midpoint rule, i.e. the point-interaction matrix with ``delta E_in`` on
    the right.
    """
    if nodes_per_step < 1:
        raise ValueError("nodes_per_step must be at least 1")
    _check_capacity(profile.n * nodes_per_step, max_unknowns)
    k = params.wavenumber
    A = params.amplitude
    s, w = _nystrom_nodes(profile, nodes_per_step)
    K = A * phi(s[:, None], s[None, :], k) * w[None, :]
    M = np.eye(s.size, dtype=complex) - K
    E_nodes = scipy.linalg.solve(M, np.exp(1j * k * s))
    grid = np.asarray(grid, dtype=float)
    values = np.exp(1j * k * grid) + A * (phi(grid[:, None], s[None, :], k) @ (w * E_nodes))
    return FieldTrace(grid, values, "nystrom"), E_nodes


def step_l2_norms(field, profile: StepProfile, order=8):
    """``||E||_{L^2(I_j)}`` for every step, by Gauss-Legendre quadrature.

    ``field`` is a callable returning the complex field on an array of times.
    """
    s, w = _nystrom_nodes(profile, order)
    vals = np.abs(field(s)) ** 2 * w
    return np.sqrt(vals.reshape(profile.n, order).sum(axis=1))
