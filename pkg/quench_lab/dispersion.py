"""Dispersion templates, two-component coupling analysis and analogue horizons.

The low-energy dispersion of a Goldstone-type mode is written as a function
of ``k**2``. Three parametrized templates are provided (quadratic mass gap /
stiffness, roton dip, tabulated samples); each parameter may be a plain
number or a :class:`~quench_lab.sweeps.SweepProfile` of time.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np
import pandas as pd
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from quench_lab.errors import (
    ConvergenceError,
    DivergentHorizonError,
    DomainError,
    NegativeSpeedError,
)
from quench_lab.sweeps import SweepProfile, profile_from_dict, value_at


logger = logging.getLogger(__name__)

DIVERGENT = math.inf
CRITICAL_RTOL = 1e-12
QUAD_EPSREL = 1e-9
CLASSIFY_GRID = 2048
CLASSIFY_XATOL = 1e-10
CLASSIFY_RTOL = 1e-12

Parameter = float | SweepProfile


# --------------------------------------------------------------------------
# two-component mixture


@dataclass(frozen=True)
class CouplingMatrix:
    g11: float
    g22: float
    g12: float

    def __post_init__(self) -> None:
        if not (self.g11 > 0 and self.g22 > 0):
            raise DomainError("intra-component couplings g11 and g22 must be positive")


class MixturePhase(Enum):
    MIXED = "mixed"
    CRITICAL = "critical"
    PHASE_SEPARATED = "phase-separated"


def coupling_eigenvalues(g: CouplingMatrix) -> tuple[float, float]:
    """Eigenvalues ``(g_plus, g_minus)`` of ``[[g11, g12], [g12, g22]]``.

    ``g_minus`` is taken from the determinant so that it is exactly zero when
    ``g12**2 == g11 * g22``.
    """
    mean = 0.5 * (g.g11 + g.g22)
    spread = math.hypot(0.5 * (g.g11 - g.g22), g.g12)
    det = g.g11 * g.g22 - g.g12 * g.g12
    g_plus = mean + spread
    g_minus = det / g_plus
    return g_plus, g_minus


def phase_of_mixture(g: CouplingMatrix) -> MixturePhase:
    g_plus, g_minus = coupling_eigenvalues(g)
    if abs(g_minus) <= CRITICAL_RTOL * (abs(g_plus) + abs(g_minus)):
        return MixturePhase.CRITICAL
    return MixturePhase.MIXED if g_minus > 0 else MixturePhase.PHASE_SEPARATED


def mixture_energy_landscape(g_minus: float, x, quartic: float = 0.0):
    """Order-parameter energy of a mixture with component fraction ``x``."""
    x_arr = np.asarray(x, dtype=float)
    if np.any((x_arr < 0) | (x_arr > 1)):
        raise DomainError("component fraction must lie in [0, 1]")
    delta = x_arr - 0.5
    energy = g_minus * delta**2 + quartic * delta**4
    return float(energy) if np.ndim(x) == 0 else energy


def landscape_minimum(g_minus: float, quartic: float = 0.0) -> float:
    if quartic < 0:
        raise DomainError("quartic coefficient must be non-negative")
    if g_minus >= 0:
        return 0.5
    if quartic == 0:
        return 0.0
    return float(np.clip(0.5 - math.sqrt(-g_minus / (2.0 * quartic)), 0.0, 1.0))


# --------------------------------------------------------------------------
# sound speed and horizon


def sound_speed_squared(alpha: Parameter, beta: Parameter, t: float) -> float:
    return value_at(alpha, t) * value_at(beta, t)


def sound_speed_profile(alpha: Parameter, beta: Parameter, times) -> pd.DataFrame:
    rows = []
    for t in np.asarray(times, dtype=float):
        a, b = value_at(alpha, t), value_at(beta, t)
        rows.append({"t": float(t), "alpha": a, "beta": b, "c2": a * b})
    return pd.DataFrame(rows, columns=["t", "alpha", "beta", "c2"])


def is_divergent(length: float) -> bool:
    return math.isinf(length)


def horizon_size(c: SweepProfile, t: float, t_end: float = math.inf, method: str = "auto") -> float:
    """Distance a signal moving at ``c`` still covers between ``t`` and ``t_end``.

    Returns :data:`DIVERGENT` (``inf``) when the improper integral does not
    converge. ``method="quad"`` forces adaptive quadrature even when a closed
    form exists; divergence is always decided from the closed form.
    """
    if method not in {"auto", "quad"}:
        raise DomainError(f"unknown horizon method {method!r}")
    if t_end < t:
        raise DomainError(f"horizon end {t_end} precedes start {t}")
    if math.isinf(t_end) and not c.has_closed_form:
        raise DomainError("tabulated speed profiles need a finite horizon end time")
    if c.minimum(t, t_end) < 0:
        raise NegativeSpeedError(f"sound speed becomes negative on [{t}, {t_end}]")

    if c.has_closed_form:
        exact = c.integral(t, t_end)
        if method == "auto" or math.isinf(exact):
            return exact

    value, abserr = quad(c, t, t_end, epsrel=QUAD_EPSREL, epsabs=0.0, limit=200)
    if abserr > max(10 * QUAD_EPSREL * abs(value), 1e-300):
        raise ConvergenceError(f"horizon quadrature did not reach rtol {QUAD_EPSREL} (error estimate {abserr:g})")
    logger.debug("horizon quadrature on [%g, %g]: %g +- %g", t, t_end, value, abserr)
    return float(value)


def horizon_shrink_rate(c: SweepProfile, t: float, h: float = 1e-4, t_end: float = math.inf) -> float:
    """Centered difference of :func:`horizon_size`; equals ``-c(t)``."""
    if h <= 0:
        raise DomainError("finite-difference step must be positive")
    ahead = horizon_size(c, t + h, t_end)
    behind = horizon_size(c, t - h, t_end)
    if is_divergent(ahead) or is_divergent(behind):
        raise DivergentHorizonError(f"horizon diverges around t={t}; no shrink rate")
    return (ahead - behind) / (2.0 * h)


# --------------------------------------------------------------------------
# dispersion templates


@dataclass(frozen=True)
class Quadratic:
    """``m2 + c2 * k**2``."""

    m2: Parameter
    c2: Parameter

    def omega2(self, k2, t: float = 0.0):
        return value_at(self.m2, t) + value_at(self.c2, t) * np.asarray(k2, dtype=float)


@dataclass(frozen=True)
class Roton:
    """``delta + curvature * (k**2 - k_crit**2)**2``; single dip at ``k_crit``."""

    k_crit: Parameter
    delta: Parameter
    curvature: Parameter

    def omega2(self, k2, t: float = 0.0):
        kc = value_at(self.k_crit, t)
        return value_at(self.delta, t) + value_at(self.curvature, t) * (np.asarray(k2, dtype=float) - kc * kc) ** 2


@dataclass(frozen=True)
class TabulatedDispersion:
    """Linear interpolation through ``(k2, omega2)`` samples."""

    k2: tuple[float, ...]
    omega2_values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.k2) != len(self.omega2_values) or len(self.k2) < 2:
            raise DomainError("tabulated dispersion needs at least two (k2, omega2) pairs")
        if self.k2[0] < 0 or np.any(np.diff(self.k2) <= 0):
            raise DomainError("tabulated dispersion must be strictly increasing in k2 >= 0")

    def omega2(self, k2, t: float = 0.0):
        k2_arr = np.asarray(k2, dtype=float)
        if np.any(k2_arr < self.k2[0]) or np.any(k2_arr > self.k2[-1]):
            raise DomainError(f"k2 outside tabulated range [{self.k2[0]}, {self.k2[-1]}]")
        return np.interp(k2_arr, self.k2, self.omega2_values)


DispersionRelation = Quadratic | Roton | TabulatedDispersion


def omega2_at(d: DispersionRelation, k: float, t: float) -> float:
    return float(d.omega2(k * k, t))


DISPERSION_TEMPLATES: dict[str, tuple[type, tuple[str, ...]]] = {
    "quadratic": (Quadratic, ("m2", "c2")),
    "roton": (Roton, ("k_crit", "delta", "curvature")),
    "tabulated": (TabulatedDispersion, ("k2", "omega2")),
}


def _parameter(value: Any, key: str) -> Parameter:
    if isinstance(value, dict):
        return profile_from_dict(value)
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    raise DomainError(f"dispersion parameter {key!r} must be a number or a profile block")


def dispersion_from_dict(spec: dict[str, Any]) -> DispersionRelation:
    """Build a template from ``{"template": "roton", "k_crit": 1, "delta": {...profile...}, ...}``."""
    if not isinstance(spec, dict) or "template" not in spec:
        raise DomainError('dispersion block must be an object with a "template" key')
    template = str(spec["template"]).lower()
    if template not in DISPERSION_TEMPLATES:
        raise DomainError(f"unknown dispersion template {spec['template']!r}; expected one of {sorted(DISPERSION_TEMPLATES)}")
    cls, keys = DISPERSION_TEMPLATES[template]
    missing = [key for key in keys if key not in spec]
    if missing:
        raise DomainError(f"{template} dispersion is missing {', '.join(missing)}")
    if cls is TabulatedDispersion:
        return TabulatedDispersion(tuple(float(v) for v in spec["k2"]), tuple(float(v) for v in spec["omega2"]))
    return cls(**{key: _parameter(spec[key], key) for key in keys})


# --------------------------------------------------------------------------
# instability taxonomy


class InstabilityKind(Enum):
    STABLE = "stable"
    ROTON = "roton"
    MASS_GAP = "mass-gap"
    STIFFNESS = "stiffness"


@dataclass(frozen=True)
class InstabilityClass:
    variant: InstabilityKind
    k_min: float
    omega2_min: float

    @property
    def k_crit(self) -> float | None:
        return self.k_min if self.variant is InstabilityKind.ROTON else None


def classify_dispersion(d: DispersionRelation, t: float, k_max: float) -> InstabilityClass:
    """Locate the minimum of ``omega2`` over ``k in [0, k_max]`` and name the instability.

    A uniform grid of :data:`CLASSIFY_GRID` points in ``k**2`` brackets the
    minimum; an interior bracket is refined with bounded Brent minimization.
    Sign tests use a tolerance relative to ``max |omega2|`` on the grid.
    """
    if not k_max > 0:
        raise DomainError("classification needs k_max > 0")
    grid = np.linspace(0.0, k_max * k_max, CLASSIFY_GRID)
    values = np.asarray(d.omega2(grid, t), dtype=float)
    tol = CLASSIFY_RTOL * float(np.max(np.abs(values)))
    i = int(np.argmin(values))
    k2_min, w_min = float(grid[i]), float(values[i])
    w0 = float(values[0])

    if 0 < i < CLASSIFY_GRID - 1:
        result = minimize_scalar(
            lambda k2: float(d.omega2(k2, t)),
            bounds=(float(grid[i - 1]), float(grid[i + 1])),
            method="bounded",
            options={"xatol": CLASSIFY_XATOL},
        )
        if result.success and result.fun <= w_min:
            k2_min, w_min = float(result.x), float(result.fun)
        logger.debug("refined interior minimum to k2=%.12g, omega2=%.6g", k2_min, w_min)
        kind = InstabilityKind.ROTON if w_min <= tol else InstabilityKind.STABLE
    elif i == 0:
        kind = InstabilityKind.MASS_GAP if w0 < -tol else InstabilityKind.STABLE
    elif w_min > tol:
        kind = InstabilityKind.STABLE
    elif w0 < -tol:
        kind = InstabilityKind.MASS_GAP
    else:
        kind = InstabilityKind.STIFFNESS

    return InstabilityClass(kind, math.sqrt(k2_min), w_min)
