"""Bose-Hubbard hopping sweeps: sound speed, frozen number variance, sweep phenomenology.

The superfluid phase mode of the Bose-Hubbard model propagates with
``c**2 = ell**2 J U n``. When the hopping ``J(t)`` is switched off, the
number fluctuations (the momentum quadrature of the phase mode) either
freeze at a finite value, keep oscillating, or decay, depending on whether
the analogue horizon closes.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
import pandas as pd

from quench_lab.dispersion import Quadratic, horizon_size, is_divergent
from quench_lab.errors import AmbiguousClassificationError, DomainError, PreconditionError
from quench_lab.modes import IntegratorConfig, Trajectory, evolve_mode
from quench_lab.sweeps import Constant, Exponential, PowerLaw, SweepProfile


logger = logging.getLogger(__name__)

SERIES_SWITCH = 1e-3
SERIES_TOL = 1e-16


@dataclass(frozen=True)
class BHParams:
    n: float
    U: float
    ell: float
    J: SweepProfile

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DomainError(f"filling n must be >= 1, got {self.n}")
        if self.U <= 0 or self.ell <= 0:
            raise DomainError("U and ell must be positive")
        if isinstance(self.J, (int, float)):
            object.__setattr__(self, "J", Constant(float(self.J)))
        if self.J.minimum(self.t_reference, self.J.t_end) < 0:
            raise DomainError("hopping J(t) must be non-negative")

    @property
    def t_reference(self) -> float:
        if math.isfinite(self.J.t_start):
            return self.J.t_start
        return self.J.t0 if isinstance(self.J, PowerLaw) else 0.0

    @property
    def chemical_potential(self) -> float:
        return self.U * self.n


def bh_sound_speed_squared(p: BHParams, t: float) -> float:
    return p.ell**2 * p.J(t) * p.U * p.n


def bh_sound_speed_profile(p: BHParams) -> SweepProfile:
    """``c(t) = ell * sqrt(J(t) U n)`` as a profile of the same family where possible."""
    return p.J.scaled_power(p.ell * math.sqrt(p.U * p.n), 0.5)


def adiabaticity_parameter(p: BHParams) -> float:
    """``nu = U n / gamma`` for exponentially switched-off hopping."""
    if not isinstance(p.J, Exponential) or p.J.gamma <= 0:
        raise PreconditionError("the adiabaticity parameter is defined for decaying exponential sweeps")
    return p.chemical_potential / p.J.gamma


def horizon_forms(p: BHParams, t: float | None = None) -> bool:
    start = p.t_reference if t is None else t
    return not is_divergent(horizon_size(bh_sound_speed_profile(p), start))


def frozen_number_variance(n: float, nu: float) -> float:
    """``n (1 - exp(-2 pi nu)) / (2 pi nu)``, with the limits ``n`` at 0 and 0 at infinity."""
    if n < 1:
        raise DomainError(f"filling n must be >= 1, got {n}")
    if nu < 0 or math.isnan(nu):
        raise DomainError(f"adiabaticity parameter must be non-negative, got {nu}")
    if nu == 0:
        return float(n)
    if math.isinf(nu):
        return 0.0
    z = 2.0 * math.pi * nu
    if nu < SERIES_SWITCH:
        total, term, j = 0.0, 1.0, 1
        while abs(term) >= SERIES_TOL:
            total += term
            j += 1
            term *= -z / j
        return n * total
    return n * -math.expm1(-z) / z


@dataclass(frozen=True)
class Superfluid:
    n: float


@dataclass(frozen=True)
class Mott:
    pass


def limiting_state_variance(state: Superfluid | Mott) -> float:
    """Poissonian ``n`` for the coherent superfluid, zero deep in the Mott state."""
    if isinstance(state, Superfluid):
        return float(state.n)
    return 0.0


# --------------------------------------------------------------------------
# sweep simulation


class OutcomeKind(Enum):
    FROZEN_AT = "frozen"
    OSCILLATING = "oscillating"
    DECAYING_TO_ZERO = "decaying"


@dataclass(frozen=True)
class SweepThresholds:
    window_fraction: float = 0.9
    frozen_drift: float = 0.01
    oscillation_amplitude: float = 0.10
    decay_fraction: float = 0.01
    convergence_ratio: float = 0.9
    window_samples: int = 4001


@dataclass(frozen=True)
class SweepOutcome:
    k: float
    kind: OutcomeKind
    value: float | None
    ratio: float | None
    drift: float
    oscillation: float
    extrema: int
    trend_ratio: float | None = None


@dataclass(eq=False)
class BHSweepResult:
    trajectories: list[Trajectory]
    outcomes: list[SweepOutcome]

    @property
    def summary(self) -> SweepOutcome:
        """Outcome of the lowest-k mode."""
        return min(self.outcomes, key=lambda outcome: outcome.k)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "k": o.k,
                    "outcome": o.kind.value,
                    "frozen_value": o.value,
                    "frozen_ratio": o.ratio,
                    "window_drift": o.drift,
                    "oscillation": o.oscillation,
                    "extrema": o.extrema,
                    "trend_ratio": o.trend_ratio,
                }
                for o in self.outcomes
            ]
        )


def _half_window_slopes(log_t: np.ndarray, log_v: np.ndarray) -> tuple[float, float] | None:
    """Log-log slopes of the earlier and later half of the window, split at its log-time midpoint."""
    mid = 0.5 * (log_t[0] + log_t[-1])
    early, late = log_t < mid, log_t >= mid
    if np.count_nonzero(early) < 2 or np.count_nonzero(late) < 2:
        return None
    s1 = np.polynomial.polynomial.polyfit(log_t[early], log_v[early], 1)[1]
    s2 = np.polynomial.polynomial.polyfit(log_t[late], log_v[late], 1)[1]
    return float(s1), float(s2)


def classify_late_variance(
    k: float, times: np.ndarray, variance: np.ndarray, initial: float, th: SweepThresholds
) -> SweepOutcome:
    """Name the late-time behavior of a number-variance series sampled over the window.

    ``times`` are measured from the start of the sweep. In order:

    1. relative drift below ``frozen_drift``: frozen at the final value;
    2. at least two extrema with a log-amplitude above ``oscillation_amplitude``: oscillating;
    3. final value below ``decay_fraction`` of the initial one: decaying;
    4. otherwise the log-log slopes of the two half-decades decide. A monotone series
       whose slope shrinks by more than ``convergence_ratio`` approaches a finite limit
       (frozen, at the extrapolated limit); a steady or rippled decline is decaying;
       any other non-monotone series is oscillating.

    A monotone series that keeps growing has no name and raises.
    """
    times = np.asarray(times, dtype=float)
    variance = np.asarray(variance, dtype=float)
    mean = float(np.mean(variance))
    drift = float((np.max(variance) - np.min(variance)) / mean) if mean > 0 else math.inf
    steps = np.sign(np.diff(variance))
    steps = steps[steps != 0]
    extrema = int(np.count_nonzero(steps[1:] != steps[:-1]))

    positive = (variance > 0) & (times > 0)
    oscillation = 0.0
    slopes = None
    if np.count_nonzero(positive) > 2:
        log_t, log_v = np.log(times[positive]), np.log(variance[positive])
        coeffs = np.polynomial.polynomial.polyfit(log_t, log_v, 1)
        residual = log_v - np.polynomial.polynomial.polyval(log_t, coeffs)
        oscillation = float(0.5 * (np.max(residual) - np.min(residual)))
        slopes = _half_window_slopes(log_t, log_v)

    final = float(variance[-1])
    trend_ratio = slopes[1] / slopes[0] if slopes is not None and slopes[0] != 0 else None

    def outcome(kind: OutcomeKind, value: float | None = None) -> SweepOutcome:
        ratio = None if value is None else value / initial
        return SweepOutcome(k, kind, value, ratio, drift, oscillation, extrema, trend_ratio)

    if drift < th.frozen_drift:
        return outcome(OutcomeKind.FROZEN_AT, final)
    if extrema >= 2 and oscillation > math.log1p(th.oscillation_amplitude):
        return outcome(OutcomeKind.OSCILLATING)
    if final < th.decay_fraction * initial and final < float(variance[0]):
        return outcome(OutcomeKind.DECAYING_TO_ZERO)
    if slopes is not None:
        s1, s2 = slopes
        if extrema == 0 and trend_ratio is not None and 0 < trend_ratio < th.convergence_ratio:
            # log-slope shrinking geometrically per half-decade; sum the remaining tail
            half = 0.5 * float(np.log(times[-1] / times[positive][0]))
            rate = -math.log(trend_ratio) / half
            limit = final * math.exp(s2 * math.sqrt(trend_ratio) / rate)
            return outcome(OutcomeKind.FROZEN_AT, limit)
        if s1 < 0 and s2 < 0:
            return outcome(OutcomeKind.DECAYING_TO_ZERO)
        if extrema >= 1:
            return outcome(OutcomeKind.OSCILLATING)
    raise AmbiguousClassificationError(
        f"mode k={k}: late variance neither frozen, oscillating nor decaying "
        f"(drift {drift:.3g}, oscillation {oscillation:.3g}, extrema {extrema}, final/initial {final / initial:.3g})"
    )


def simulate_bh_sweep(
    p: BHParams,
    k_list,
    t0: float,
    t1: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    thresholds: SweepThresholds = SweepThresholds(),
    threads: int = 1,
) -> BHSweepResult:
    """Evolve phase modes ``omega2 = c(t)**2 k**2`` from their vacuum and classify the late number variance.

    The late window is the final ``window_fraction`` of the elapsed time; the classifier
    sees times measured from ``t0``.
    """
    if not isinstance(p.J, (Exponential, PowerLaw, Constant)):
        raise PreconditionError("hopping sweeps must be exponential, power-law or constant")
    ks = sorted(float(k) for k in k_list)
    if not ks:
        raise PreconditionError("k_list must not be empty")
    if not t1 > t0:
        raise DomainError(f"sweep interval [{t0}, {t1}] is empty")

    c2 = p.J.scaled_power(p.ell**2 * p.U * p.n, 1.0)
    dispersion = Quadratic(0.0, c2)
    window_start = t1 - thresholds.window_fraction * (t1 - t0)
    window = np.linspace(window_start, t1, thresholds.window_samples)
    run_cfg = replace(cfg, t_eval=(t0, *window.tolist()))

    def run(k: float) -> tuple[Trajectory, SweepOutcome]:
        trajectory = evolve_mode(dispersion, k, t0, t1, None, run_cfg)
        variance = trajectory.moments()[:, 1]
        outcome = classify_late_variance(k, trajectory.times[1:] - t0, variance[1:], float(variance[0]), thresholds)
        logger.info("bose-hubbard mode k=%g: %s", k, outcome.kind.value)
        return trajectory, outcome

    if threads <= 1:
        pairs = [run(k) for k in ks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pairs = list(pool.map(run, ks))
    return BHSweepResult([pair[0] for pair in pairs], [pair[1] for pair in pairs])
