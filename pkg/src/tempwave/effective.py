"""Closed-form effective field of the homogenised slab on ``[0, T]``.

As the number of steps grows the medium behaves like a single slab with
squared plasma frequency ``C delta**-alpha`` (``alpha = -1 + h + l``).
Its exact solution is

    exp(i k t) + C2 exp(-i k t)            t < 0
    C3 exp(i lam t) + C4 exp(-i lam t)     0 <= t <= T
    C5 exp(i k t)                          t > T

with ``lam = sqrt(k^2 + C delta**-alpha)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NumericalError
from .model import RegimeParams

__all__ = [
    "EffectiveSolution",
    "RegimeKind",
    "RegimeClass",
    "lambda_of",
    "coefficients",
    "effective_solution",
    "effective_field_at",
    "effective_derivative_at",
    "classify",
    "asymptotic_magnitudes",
    "integral_residual",
    "gauss_legendre_panels",
]


@dataclass(frozen=True)
class EffectiveSolution:
    lam: float
    kappa: float
    T: float
    C1: complex
    C2: complex
    C3: complex
    C4: complex
    C5: complex
    C6: complex

    @property
    def slab_amplitude(self) -> float:
        return self.lam**2 - self.kappa**2

    @property
    def flux_defect(self) -> float:
        return abs(abs(self.C2) ** 2 + abs(self.C5) ** 2 - 1.0)


def lambda_of(params: RegimeParams) -> float:
    """Wavenumber inside the effective slab."""
    return math.sqrt(params.wavenumber**2 + params.effective_amplitude)


def coefficients(lam, kappa, T) -> EffectiveSolution:
    """Coefficients of the slab field from continuity of ``E`` and ``E'`` at 0 and T."""
    if not (kappa > 0 and lam >= kappa and T > 0):
        raise ValueError("need lam >= kappa > 0 and T > 0")
    ep = np.exp(1j * lam * T)
    em = np.exp(-1j * lam * T)
    D = (lam + kappa) ** 2 * em - (lam - kappa) ** 2 * ep
    if abs(D) < 1e-14:
        raise NumericalError("vanishing denominator in the slab coefficients")
    C2 = (lam**2 - kappa**2) * (ep - em) / D
    C3 = 2 * kappa * (kappa + lam) * em / D
    C4 = 2 * kappa * (lam - kappa) * ep / D
    C5 = 4 * lam * kappa * np.exp(-1j * kappa * T) / D
    return EffectiveSolution(float(lam), float(kappa), float(T), 1.0 + 0j, complex(C2), complex(C3), complex(C4), complex(C5), 0j)


def effective_solution(params: RegimeParams, amplitude=None) -> EffectiveSolution:
    """Slab solution for ``params``; ``amplitude`` overrides ``C delta**-alpha``."""
    k = params.wavenumber
    if amplitude is None:
        amplitude = params.effective_amplitude
    return coefficients(math.sqrt(k**2 + amplitude), k, params.T)


def _branches(sol: EffectiveSolution, t):
    t = np.asarray(t, dtype=float)
    return t, t < 0, (t >= 0) & (t <= sol.T), t > sol.T


def effective_field_at(sol: EffectiveSolution, t):
    t, left, mid, right = _branches(sol, t)
    k, lam = sol.kappa, sol.lam
    out = np.empty(t.shape, dtype=complex)
    out[left] = sol.C1 * np.exp(1j * k * t[left]) + sol.C2 * np.exp(-1j * k * t[left])
    out[mid] = sol.C3 * np.exp(1j * lam * t[mid]) + sol.C4 * np.exp(-1j * lam * t[mid])
    out[right] = sol.C5 * np.exp(1j * k * t[right]) + sol.C6 * np.exp(-1j * k * t[right])
    return out if out.ndim else complex(out)


def effective_derivative_at(sol: EffectiveSolution, t):
    t, left, mid, right = _branches(sol, t)
    k, lam = sol.kappa, sol.lam
    out = np.empty(t.shape, dtype=complex)
    out[left] = 1j * k * (sol.C1 * np.exp(1j * k * t[left]) - sol.C2 * np.exp(-1j * k * t[left]))
    out[mid] = 1j * lam * (sol.C3 * np.exp(1j * lam * t[mid]) - sol.C4 * np.exp(-1j * lam * t[mid]))
    out[right] = 1j * k * (sol.C5 * np.exp(1j * k * t[right]) - sol.C6 * np.exp(-1j * k * t[right]))
    return out if out.ndim else complex(out)


def branch_values(sol: EffectiveSolution, t):
    """Value and derivative of each of the three branch formulas at ``t``.

    Used to check the matching conditions, where two formulas meet.
    """
    k, lam = sol.kappa, sol.lam
    left = (
        np.exp(1j * k * t) + sol.C2 * np.exp(-1j * k * t),
        1j * k * (np.exp(1j * k * t) - sol.C2 * np.exp(-1j * k * t)),
    )
    mid = (
        sol.C3 * np.exp(1j * lam * t) + sol.C4 * np.exp(-1j * lam * t),
        1j * lam * (sol.C3 * np.exp(1j * lam * t) - sol.C4 * np.exp(-1j * lam * t)),
    )
    right = (sol.C5 * np.exp(1j * k * t), 1j * k * sol.C5 * np.exp(1j * k * t))
    return left, mid, right


class RegimeKind(str, Enum):
    TRANSPARENT = "TransparentLimit"
    NEAR_RESONANCE = "NearResonance"
    OFF_RESONANCE = "OffResonance"


@dataclass(frozen=True)
class RegimeClass:
    kind: RegimeKind
    n: int
    parity: str
    sign_1hl: int
    lam_T: float
    detuning: float
    behavior: str
    near_resonance: bool = False


def classify(params: RegimeParams, c=1.0) -> RegimeClass:
    """Place ``params`` in one of the three regimes of the effective slab.

    ``1 - h - l > 0`` is the transparent limit. Otherwise the slab is near
    resonance when ``|lam T - n pi| <= c / n`` for the nearest integer ``n``.
    The resonance test is reported in ``near_resonance`` for every regime,
    including the transparent one.
    """
    lam = lambda_of(params)
    lam_T = lam * params.T
    n = int(round(lam_T / math.pi))
    detuning = lam_T - n * math.pi
    margin = 1.0 - params.h - params.l
    # exponents like 0.1 + 0.9 leave rounding residue around the sign test
    sign = 0 if abs(margin) < 1e-12 else (1 if margin > 0 else -1)
    parity = "even" if n % 2 == 0 else "odd"
    near = n >= 1 and abs(detuning) <= c / n
    if sign > 0:
        kind = RegimeKind.TRANSPARENT
        behavior = "transparent: effective field close to the incident wave"
    elif near:
        kind = RegimeKind.NEAR_RESONANCE
        behavior = "well: full transmission" if sign < 0 else "full transmission (moderate contrast)"
    else:
        kind = RegimeKind.OFF_RESONANCE
        behavior = "wall: full reflection" if sign < 0 else "partial reflection and transmission (moderate contrast)"
    return RegimeClass(kind, n, parity, sign, lam_T, detuning, behavior, near)


def asymptotic_magnitudes(params: RegimeParams, c=1.0) -> dict:
    """Leading behaviour of ``C2..C5`` as ``delta -> 0``.

    Each entry is ``(limit, exponent)``: the coefficient tends to ``limit``
    and the correction is ``O(delta**exponent)``; ``exponent`` is ``None``
    where only ``o(1)`` or ``O(1)`` is known.
    """
    rc = classify(params, c)
    a = params.alpha
    sign = 1.0 if rc.parity == "even" else -1.0
    phase = np.exp(-1j * params.wavenumber * params.T)
    if rc.kind is RegimeKind.TRANSPARENT:
        e = 1.0 - params.h - params.l
        return {"C2": (0.0, e), "C3": (1.0, e), "C4": (0.0, e), "C5": (phase, e)}
    if rc.kind is RegimeKind.NEAR_RESONANCE:
        if rc.sign_1hl < 0:
            return {"C2": (0.0, None), "C3": (0.5, a / 2), "C4": (0.5, a / 2), "C5": (sign * phase, None)}
        return {"C2": (0.0, None), "C3": (1.0, None), "C4": (0.0, None), "C5": (sign * phase, None)}
    if rc.sign_1hl < 0:
        return {"C2": (-1.0, a / 2), "C3": (0.0, a / 2), "C4": (0.0, a / 2), "C5": (0.0, a / 2)}
    return {"C2": (None, None), "C3": (None, None), "C4": (None, None), "C5": (None, None)}


def gauss_legendre_panels(a, b, n_panels, order):
    """Composite Gauss-Legendre nodes and weights on ``[a, b]``."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def integral_residual(sol: EffectiveSolution, quad_points=2048, grid=None, order=4, return_all=False):
    """Sup residual of the slab field in its Lippmann-Schwinger equation.

    Evaluates ``|E(t) - exp(i k t) - A int_0^T Phi(t, s) E(s) ds|`` with
    ``Phi(t, s) = i/(2k) exp(i k |t - s|)`` and ``A = lam^2 - k^2``. The
    integral is split at ``s = t`` (where the kernel has a kink) and each
    part uses composite Gauss-Legendre with ``quad_points // 2`` nodes.
    """
    if quad_points < 64:
        raise ValueError("integral_residual needs at least 64 quadrature points")
    periods = sol.lam * sol.T / (2 * math.pi)
    if quad_points < 10 * periods:
        raise ValueError(
            f"{quad_points} quadrature points cannot resolve {periods:.1f} periods (need >= 10 per period)"
        )
    if grid is None:
        grid = np.linspace(-sol.T / 2, 1.5 * sol.T, 401)
    grid = np.asarray(grid, dtype=float)
    k = sol.kappa
    A = sol.slab_amplitude
    per_part = quad_points // 2
    n_panels = max(per_part // order, 1)
    unit_nodes, unit_weights = gauss_legendre_panels(0.0, 1.0, n_panels, order)

    res = np.empty(grid.size)
    for i, t in enumerate(grid):
        split = min(max(t, 0.0), sol.T)
        total = 0j
        for lo, hi in ((0.0, split), (split, sol.T)):
            if hi <= lo:
                continue
            s = lo + (hi - lo) * unit_nodes
            ws = (hi - lo) * unit_weights
            kern = 1j / (2 * k) * np.exp(1j * k * np.abs(t - s))
            total += np.sum(ws * kern * effective_field_at(sol, s))
        res[i] = abs(effective_field_at(sol, t) - np.exp(1j * k * t) - A * total)
    return res if return_all else float(res.max())
