"""Regime parameters, step profiles and the plane-wave scalar reduction.

The plasma frequency is switched on, with squared value ``C * delta**-h``,
on ``N`` short intervals of width ``delta`` centred at ``T_1 < ... < T_N``
inside the window ``(0, T)``; it vanishes elsewhere (or takes a constant
background value, which simply shifts the wavenumber).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = [
    "RegimeParams",
    "StepProfile",
    "Layout",
    "WaveVectorSetup",
    "scalar_reduction",
    "build_profile",
    "omega_p_squared",
    "profile_samples",
]


@dataclass(frozen=True)
class RegimeParams:
    """Scalar parameters of a step medium.

    Parameters
    ----------
    T : float
        Length of the modulation window ``(0, T)``.
    delta : float
        Step width, in ``(0, 1)``.
    h : float
        Contrast exponent in ``(0, 1]``; each step carries ``C * delta**-h``.
    l : float
        Spacing exponent in ``(0, 1]``; neighbouring centres are ``delta**l`` apart.
    C : float
        Amplitude constant. ``C = 0`` is accepted and means free propagation.
    kappa : float
        Background wavenumber.
    background : float
        Constant squared plasma frequency outside the steps. The model
        replaces ``kappa`` by ``sqrt(kappa**2 + background)`` everywhere.
    """

    T: float = 10.0
    delta: float = 1e-3
    h: float = 0.1
    l: float = 0.1
    C: float = 1.0
    kappa: float = 1.0
    background: float = 0.0

    def __post_init__(self):
        for name in ("T", "delta", "h", "l", "C", "kappa", "background"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        checks = [
            (self.T > 0, f"T must be positive, got {self.T}"),
            (0 < self.delta < 1, f"delta must lie in (0, 1), got {self.delta}"),
            (0 < self.h <= 1, f"h must lie in (0, 1] (contrast exponent), got {self.h}"),
            (0 < self.l <= 1, f"l must lie in (0, 1] (spacing exponent), got {self.l}"),
            (self.C >= 0, f"C must be non-negative, got {self.C}"),
            (self.kappa > 0, f"kappa must be positive, got {self.kappa}"),
            (self.background >= 0, f"background must be non-negative, got {self.background}"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)

    @property
    def alpha(self) -> float:
        """Effective contrast exponent ``-1 + h + l``."""
        return -1.0 + self.h + self.l

    @property
    def amplitude(self) -> float:
        """Squared plasma frequency inside one step, ``C * delta**-h``."""
        return self.C * self.delta ** (-self.h)

    @property
    def effective_amplitude(self) -> float:
        """Squared plasma frequency of the homogenised slab, ``C * delta**-alpha``."""
        return self.C * self.delta ** (-self.alpha)

    @property
    def wavenumber(self) -> float:
        """Wavenumber seen outside the steps (``kappa`` shifted by the background)."""
        return math.sqrt(self.kappa**2 + self.background)

    @property
    def beta(self) -> complex:
        """Coupling scalar ``i C delta**(1-h) / (2 kappa)`` of the point-interaction matrix."""
        return 1j * self.C * self.delta ** (1.0 - self.h) / (2.0 * self.wavenumber)

    @property
    def spacing(self) -> float:
        return self.delta**self.l

    def replace(self, **changes) -> "RegimeParams":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class Layout:
    """Piecewise-constant coefficient on ``[edges[0], edges[-1]]``.

    ``q[i]`` is the squared plasma frequency on ``[edges[i], edges[i+1]]``;
    outside the layout the coefficient is zero. ``edges[0]`` is the origin
    of the scattering problem (usually 0).
    """

    edges: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if edges.ndim != 1 or q.shape != (edges.size - 1,):
            raise ValueError("need len(edges) == len(q) + 1")
        if np.any(np.diff(edges) < 0):
            raise ValueError("edges must be non-decreasing")
        if np.any(q < 0):
            raise ValueError("coefficient values must be non-negative")
        edges.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "q", q)

    @classmethod
    def slab(cls, T, amplitude, start=0.0):
        return cls(np.array([start, start + T]), np.array([amplitude]))

    @property
    def start(self) -> float:
        return float(self.edges[0])

    @property
    def stop(self) -> float:
        return float(self.edges[-1])


@dataclass(frozen=True)
class StepProfile:
    """Realised layout of the steps ``I_j = [T_j - delta/2, T_j + delta/2]``."""

    centers: np.ndarray
    half_width: float
    amplitude: float
    T: float
    d: float
    truncated: bool = False
    requested_n: int = field(default=0, compare=False)

    def __post_init__(self):
        c = np.array(self.centers, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "centers", c)
        if c.size == 0:
            raise ValueError("a step profile needs at least one step")
        if np.any(np.diff(c) <= 0):
            raise ValueError("step centres must be strictly increasing")
        if not (c[0] - self.half_width > 0 and c[-1] + self.half_width < self.T):
            raise ValueError("steps must lie strictly inside (0, T)")

    @property
    def n(self) -> int:
        return int(self.centers.size)

    @property
    def delta(self) -> float:
        return 2.0 * self.half_width

    @property
    def lower(self) -> np.ndarray:
        return self.centers - self.half_width

    @property
    def upper(self) -> np.ndarray:
        return self.centers + self.half_width

    def layout(self) -> Layout:
        """Steps and gaps on ``[0, T]`` as a :class:`Layout`."""
        n = self.n
        edges = np.empty(2 * n + 2)
        edges[0] = 0.0
        edges[1:-1:2] = self.lower
        edges[2:-1:2] = self.upper
        edges[-1] = self.T
        q = np.zeros(2 * n + 1)
        q[1::2] = self.amplitude
        return Layout(edges, q)


@dataclass(frozen=True)
class WaveVectorSetup:
    k: tuple
    eps0: float = 1.0
    mu0: float = 1.0
    k_perp: tuple | None = None


def scalar_reduction(setup: WaveVectorSetup, tol=1e-12) -> float:
    """Wavenumber ``|k| / sqrt(eps0 mu0)`` of the polarised scalar problem.

    The transverse component ``E . k_perp`` obeys a scalar wave equation in
    time with this wavenumber. ``k_perp`` must be a unit vector orthogonal
    to ``k``; when omitted, one is picked.
    """
    k = np.asarray(setup.k, dtype=float)
    if k.shape != (3,):
        raise ValueError("k must have three components")
    if setup.eps0 <= 0 or setup.mu0 <= 0:
        raise ValueError("eps0 and mu0 must be positive")
    knorm = float(np.linalg.norm(k))
    if knorm == 0:
        raise ValueError("k must be non-zero")
    if setup.k_perp is not None:
        kp = np.asarray(setup.k_perp, dtype=float)
        if abs(np.linalg.norm(kp) - 1.0) > tol:
            raise ValueError("k_perp must be a unit vector")
        if abs(kp @ k) > tol * knorm:
            raise ValueError("k_perp must be orthogonal to k")
    return knorm * math.sqrt(1.0 / (setup.eps0 * setup.mu0))


def build_profile(params: RegimeParams, spacing_rule="uniform", n_cap=None, d=None) -> StepProfile:
    """Place uniformly spaced steps ``T_j = j d`` inside ``(0, T)``.

    ``N`` is the largest count with ``(N + 1) d < T``, so every gap
    including the outer ones ``T_1 - 0`` and ``T - T_N`` is at least ``d``.
    With ``n_cap`` the profile keeps only the first ``n_cap`` steps and is
    flagged as truncated.
    """
    if spacing_rule != "uniform":
        raise ValueError(f"unsupported spacing rule {spacing_rule!r}")
    if d is None:
        d = params.spacing
    if d < params.delta:
        raise ValueError(f"spacing d={d:g} is below the step width delta={params.delta:g}; steps would overlap")
    n = math.ceil(params.T / d) - 2
    while n >= 0 and (n + 1) * d >= params.T:
        n -= 1
    while (n + 2) * d < params.T:
        n += 1
    if n <= 0:
        raise ValueError(f"window T={params.T:g} too small for spacing d={d:g}: no step fits")
    requested = n
    truncated = n_cap is not None and n > n_cap
    if truncated:
        n = int(n_cap)
    centers = d * np.arange(1, n + 1)
    return StepProfile(centers, params.delta / 2.0, params.amplitude, params.T, d, truncated, requested)


def omega_p_squared(profile: StepProfile, t):
    """Squared plasma frequency at time(s) ``t``; closed intervals."""
    t = np.asarray(t, dtype=float)
    idx = np.searchsorted(profile.centers, t)
    lo = np.clip(idx - 1, 0, profile.n - 1)
    hi = np.clip(idx, 0, profile.n - 1)
    lower, upper = profile.lower, profile.upper
    inside = ((t >= lower[lo]) & (t <= upper[lo])) | ((t >= lower[hi]) & (t <= upper[hi]))
    out = np.where(inside, profile.amplitude, 0.0)
    return out if out.ndim else float(out)


def profile_samples(profile: StepProfile, t_min=None, t_max=None, samples=2001):
    """Uniform samples ``(t, omega_p^2(t))`` for plotting the profile."""
    t_min = -0.05 * profile.T if t_min is None else t_min
    t_max = 1.05 * profile.T if t_max is None else t_max
    t = np.linspace(t_min, t_max, samples)
    return t, omega_p_squared(profile, t)
