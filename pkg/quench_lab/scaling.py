"""Finite-size gap models and the decoherence error estimator."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import pandas as pd
import statsmodels.api as sm

from quench_lab.aqc import SpinHamiltonian, lowest_levels
from quench_lab.errors import DomainError, PreconditionError


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FirstOrderModel:
    overlap_decay: float
    norm_poly_degree: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.overlap_decay < 1:
            raise DomainError("overlap decay s must lie in (0, 1)")
        if self.norm_poly_degree < 0:
            raise DomainError("polynomial degree must be non-negative")


@dataclass(frozen=True)
class BathSpectrum:
    """``f(omega) = eta * omega**s * exp(-omega / cutoff)``."""

    eta: float
    exponent: float = 1.0
    cutoff: float = math.inf

    def __post_init__(self) -> None:
        if self.eta < 0 or self.exponent < 0 or self.cutoff <= 0:
            raise DomainError("bath needs eta >= 0, exponent >= 0 and a positive cutoff")

    def __call__(self, omega: float) -> float:
        return self.eta * omega**self.exponent * math.exp(-omega / self.cutoff)


def first_order_gap(model: FirstOrderModel, n: int) -> float:
    """``n**d * s**n``; the empty system (n=0) has gap 1."""
    if n < 0:
        raise DomainError("system size must be non-negative")
    if n == 0:
        return 1.0
    prefactor = float(n) ** model.norm_poly_degree
    return prefactor * model.overlap_decay**n


def avoided_crossing_gap(model: FirstOrderModel, n: int, detuning: float = 0.0) -> tuple[float, float]:
    """Minimum gap and the two-level splitting ``sqrt(detuning**2 + gap**2)`` at ``detuning``."""
    gap = first_order_gap(model, n)
    return gap, math.hypot(detuning, gap)


@dataclass(frozen=True)
class GapRegression:
    slope: float
    intercept: float
    max_residual: float


def log_gap_regression(model: FirstOrderModel, ns) -> GapRegression:
    """Least squares of ``ln gap - d ln n`` against ``n``; the slope recovers ``ln s``."""
    ns = np.asarray(list(ns), dtype=float)
    if len(ns) < 2 or np.any(ns < 1):
        raise PreconditionError("regression needs at least two sizes n >= 1")
    y = np.array([math.log(first_order_gap(model, int(n))) for n in ns]) - model.norm_poly_degree * np.log(ns)
    fit = sm.OLS(y, sm.add_constant(ns)).fit()
    return GapRegression(float(fit.params[1]), float(fit.params[0]), float(np.max(np.abs(fit.resid))))


def tfim_gap(n: int, g: float, J: float = 1.0) -> float:
    """Quasiparticle energy ``2 J sqrt(1 + g**2 - 2 g cos k)`` at the smallest antiperiodic momentum ``pi / n``."""
    if n < 2 or g < 0:
        raise DomainError("tfim_gap needs n >= 2 and g >= 0")
    return 2.0 * J * math.sqrt(1.0 + g * g - 2.0 * g * math.cos(math.pi / n))


def tfim_chain(n: int, g: float, J: float = 1.0) -> SpinHamiltonian:
    """Periodic chain ``-J sum X_i X_{i+1} - g J sum Z_i``."""
    if n < 2:
        raise DomainError("chain needs n >= 2")
    terms = [(((i, "X"), ((i + 1) % n, "X")), -J) for i in range(n)]
    terms += [(((i, "Z"),), -g * J) for i in range(n)]
    return SpinHamiltonian.from_terms(n, terms)


def even_parity_basis(n: int) -> np.ndarray:
    """States with an even number of down spins."""
    down = n - np.bitwise_count(np.arange(1 << n, dtype=np.uint64)).astype(np.int64)
    return np.flatnonzero(down % 2 == 0)


def tfim_dense_gap(n: int, g: float, J: float = 1.0) -> float:
    """Half the lowest gap inside the even-parity sector of :func:`tfim_chain`.

    The lowest even-parity excitation is a pair of quasiparticles at momenta
    ``+-pi / n``, so this matches :func:`tfim_gap`.
    """
    levels = lowest_levels(tfim_chain(n, g, J), 2, basis=even_parity_basis(n))
    return 0.5 * float(levels.energies[1] - levels.energies[0])


def decoherence_error(bath: BathSpectrum, gap_min: float, prefactor: float = 1.0) -> float:
    """Excitation scale ``prefactor * f(gap) / gap`` (not a normalized probability)."""
    if not gap_min > 0:
        raise DomainError(f"minimum gap must be positive, got {gap_min}")
    if bath.exponent == 1.0:
        # ohmic: the gap cancels exactly
        return prefactor * bath.eta * math.exp(-gap_min / bath.cutoff)
    return prefactor * bath(gap_min) / gap_min


def second_order_error(bath: BathSpectrum, gap: float, n: int, prefactor: float = 1.0) -> float:
    """Sum over the ``n`` soft modes ``j * gap`` of their decoherence error."""
    return sum(decoherence_error(bath, j * gap, prefactor) for j in range(1, n + 1))


def scheme_vulnerability_report(
    first_order: FirstOrderModel,
    second_order_gap: Callable[[int], float],
    bath: BathSpectrum,
    n_range,
    prefactor: float = 1.0,
) -> pd.DataFrame:
    """Gap and decoherence error per size for a first-order and a second-order transition.

    Two rows per size. The ``trend`` column says whether the error at the
    largest size exceeds the one at the smallest (``growing``) or not
    (``controlled``).
    """
    ns = [int(n) for n in n_range]
    if not ns:
        raise PreconditionError("n_range must not be empty")
    rows = []
    for n in ns:
        gap = first_order_gap(first_order, n)
        rows.append({"n": n, "model": "first-order", "gap": gap, "error": decoherence_error(bath, gap, prefactor)})
        gap = float(second_order_gap(n))
        rows.append({"n": n, "model": "second-order", "gap": gap, "error": second_order_error(bath, gap, n, prefactor)})
    frame = pd.DataFrame(rows)
    for model, group in frame.groupby("model"):
        errors = group.sort_values("n")["error"].to_numpy()
        trend = "growing" if len(errors) > 1 and errors[-1] > errors[0] else "controlled"
        frame.loc[frame["model"] == model, "trend"] = trend
        logger.info("%s transition: decoherence error %s with n", model, trend)
    return frame
