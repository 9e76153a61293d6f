"""Gaussian dynamics of single linearized modes under a sweep.

Each mode obeys ``u'' + omega2(k**2, t) u = 0``. Alongside the classical
mode function ``(u, u_dot)`` the second moments of the quantum state are
propagated:

    d<q^2>/dt = 2 <qp>,  d<p^2>/dt = -2 omega2 <qp>,  d<qp>/dt = <p^2> - omega2 <q^2>

with ``hbar = 1``. Two quantities are conserved exactly by these equations
and are monitored along every trajectory: the Wronskian
``u conj(u_dot) - conj(u) u_dot`` and the determinant
``<q^2><p^2> - <qp>^2`` (bounded below by 1/4).
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np
import pandas as pd
from scipy.integrate import DOP853, RK23, RK45, OdeSolution, solve_ivp
from scipy.optimize import bisect

from quench_lab.dispersion import DispersionRelation, horizon_size, is_divergent
from quench_lab.errors import (
    ConvergenceError,
    DomainError,
    InvariantViolationError,
    PreconditionError,
)
from quench_lab.sweeps import SweepProfile, Tabulated


logger = logging.getLogger(__name__)

SYMPLECTIC_FLOOR = 0.25
PHYSICAL_RTOL = 1e-9
GAP_CHECK_POINTS = 513
STAGE_RTOL = 1e-12
SQUEEZE_THRESHOLD = 0.1

SOLVERS = {"DOP853": DOP853, "RK45": RK45, "RK23": RK23}


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "DOP853"
    rtol: float = 1e-11
    atol: float = 1e-13
    abort_rtol: float = 1e-6
    samples: int = 201
    t_eval: tuple[float, ...] | None = None
    max_step: float = math.inf

    def __post_init__(self) -> None:
        if self.method not in SOLVERS:
            raise DomainError(f"unknown integrator {self.method!r}; expected one of {sorted(SOLVERS)}")

    def sample_times(self, t0: float, t1: float) -> np.ndarray:
        if self.t_eval is not None:
            times = np.asarray(self.t_eval, dtype=float)
            if times[0] < t0 or times[-1] > t1 or np.any(np.diff(times) <= 0):
                raise DomainError("t_eval must be strictly increasing inside [t0, t1]")
            return times
        return np.linspace(t0, t1, max(self.samples, 2))


@dataclass(frozen=True)
class ModeState:
    k: float
    u: complex
    u_dot: complex
    qq: float
    pp: float
    qp: float
    t: float

    @property
    def determinant(self) -> float:
        return self.qq * self.pp - self.qp * self.qp

    @property
    def wronskian(self) -> complex:
        return self.u * np.conj(self.u_dot) - np.conj(self.u) * self.u_dot

    def check_physical(self) -> None:
        if self.qq <= 0 or self.pp < 0:
            raise PreconditionError(f"non-physical moments qq={self.qq}, pp={self.pp}")
        if self.determinant < SYMPLECTIC_FLOOR - PHYSICAL_RTOL * self.qq * self.pp:
            raise PreconditionError(
                f"moments violate the uncertainty bound: det={self.determinant:.12g} < 1/4"
            )

    def as_vector(self) -> np.ndarray:
        return np.array(
            [self.u.real, self.u.imag, self.u_dot.real, self.u_dot.imag, self.qq, self.pp, self.qp]
        )

    @classmethod
    def from_vector(cls, k: float, t: float, y: np.ndarray) -> ModeState:
        return cls(k, complex(y[0], y[1]), complex(y[2], y[3]), float(y[4]), float(y[5]), float(y[6]), float(t))


def ground_state(omega: float, t: float = 0.0, k: float = 0.0) -> ModeState:
    """Instantaneous vacuum of an oscillator of frequency ``omega``."""
    if not omega > 0:
        raise PreconditionError(f"ground state needs a positive frequency, got {omega}")
    amplitude = 1.0 / math.sqrt(2.0 * omega)
    return ModeState(k, complex(amplitude), -1j * omega * amplitude, 0.5 / omega, 0.5 * omega, 0.0, t)


@dataclass(eq=False)
class Trajectory:
    k: float
    times: np.ndarray
    states: list[ModeState]
    steps: int
    nfev: int
    max_wronskian_drift: float
    max_symplectic_drift: float
    rejected_steps: int = 0
    max_local_error: float = 0.0

    @property
    def final(self) -> ModeState:
        return self.states[-1]

    def moments(self) -> np.ndarray:
        """Array of shape ``(samples, 3)`` holding ``qq, pp, qp``."""
        return np.array([[s.qq, s.pp, s.qp] for s in self.states])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "k": self.k,
                "t": self.times,
                "re_u": [s.u.real for s in self.states],
                "im_u": [s.u.imag for s in self.states],
                "qq": [s.qq for s in self.states],
                "pp": [s.pp for s in self.states],
                "qp": [s.qp for s in self.states],
            }
        )


def _mode_rhs(d: DispersionRelation, k2: float):
    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        w2 = float(d.omega2(k2, t))
        return np.array(
            [
                y[2],
                y[3],
                -w2 * y[0],
                -w2 * y[1],
                2.0 * y[6],
                -2.0 * w2 * y[6],
                y[5] - w2 * y[4],
            ]
        )

    return rhs


@dataclass(frozen=True)
class _SolverRun:
    sol: OdeSolution | None
    y_last: np.ndarray
    t_last: float
    steps: int
    rejected: int
    nfev: int
    max_local_error: float
    failure: str | None = None


def _integrate(rhs, t0: float, t1: float, y0: np.ndarray, cfg: IntegratorConfig) -> _SolverRun:
    """Step an explicit Runge-Kutta pair by hand so rejected attempts and error estimates are visible.

    Every attempt of an explicit pair costs ``n_stages`` evaluations, so the
    evaluation count of one ``step()`` gives the number of retries. The local
    error is the solver's own scaled estimate of each accepted step (at most 1).
    """
    solver = SOLVERS[cfg.method](rhs, t0, y0, t1, rtol=cfg.rtol, atol=cfg.atol, max_step=cfg.max_step)
    ts, interpolants = [t0], []
    rejected, worst = 0, 0.0
    while solver.status == "running":
        before = solver.nfev
        message = solver.step()
        if solver.status == "failed":
            return _SolverRun(None, solver.y, solver.t, len(interpolants), rejected, solver.nfev, worst, message)
        rejected += (solver.nfev - before) // solver.n_stages - 1
        scale = cfg.atol + np.maximum(np.abs(solver.y_old), np.abs(solver.y)) * cfg.rtol
        worst = max(worst, float(solver._estimate_error_norm(solver.K, solver.t - solver.t_old, scale)))
        ts.append(solver.t)
        interpolants.append(solver.dense_output())
    return _SolverRun(OdeSolution(ts, interpolants), solver.y, solver.t, len(interpolants), rejected, solver.nfev, worst)


def evolve_mode(
    d: DispersionRelation,
    k: float,
    t0: float,
    t1: float,
    initial: ModeState | None = None,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> Trajectory:
    """Integrate one mode from ``t0`` to ``t1``.

    ``initial=None`` starts from the instantaneous vacuum at ``t0``, which
    requires ``omega2(k**2, t0) > 0``.
    """
    if not t1 > t0:
        raise DomainError(f"evolution interval [{t0}, {t1}] is empty")
    k2 = k * k
    if initial is None:
        w2 = float(d.omega2(k2, t0))
        if not w2 > 0:
            raise PreconditionError(f"no vacuum at t0={t0}: omega2={w2} <= 0")
        initial = ground_state(math.sqrt(w2), t0, k)
    initial.check_physical()

    run = _integrate(_mode_rhs(d, k2), t0, t1, initial.as_vector(), cfg)
    if run.failure is not None:
        raise ConvergenceError(f"mode k={k} integration failed at t={run.t_last}: {run.failure}")

    times = cfg.sample_times(t0, t1)
    ys = run.sol(times)
    if times[0] == t0:
        ys[:, 0] = initial.as_vector()
    if times[-1] == t1:
        ys[:, -1] = run.y_last
    states = [ModeState.from_vector(k, t, ys[:, i]) for i, t in enumerate(times)]

    w0 = initial.wronskian
    det0 = initial.determinant
    wronskian_drift = 0.0
    symplectic_drift = 0.0
    for state in states:
        scale = max(abs(w0), 2.0 * abs(state.u) * abs(state.u_dot), 1e-300)
        wronskian_drift = max(wronskian_drift, abs(state.wronskian - w0) / scale)
        symplectic_drift = max(symplectic_drift, abs(state.determinant - det0) / (state.qq * state.pp + abs(det0)))
    if max(wronskian_drift, symplectic_drift) > cfg.abort_rtol:
        raise InvariantViolationError(
            f"mode k={k}: invariant drift (wronskian {wronskian_drift:.3g}, "
            f"determinant {symplectic_drift:.3g}) exceeds {cfg.abort_rtol:g}"
        )
    logger.debug(
        "mode k=%g: %d steps (%d rejected), %d evaluations, drift %.2e / %.2e",
        k,
        run.steps,
        run.rejected,
        run.nfev,
        wronskian_drift,
        symplectic_drift,
    )
    return Trajectory(
        k, times, states, run.steps, run.nfev, wronskian_drift, symplectic_drift, run.rejected, run.max_local_error
    )


def evolve_modes(
    d: DispersionRelation,
    ks,
    t0: float,
    t1: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    threads: int = 1,
) -> list[Trajectory]:
    """Vacuum-started trajectories for every ``k``, returned in input order."""
    ks = [float(k) for k in ks]
    if threads <= 1:
        return [evolve_mode(d, k, t0, t1, None, cfg) for k in ks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda k: evolve_mode(d, k, t0, t1, None, cfg), ks))


# --------------------------------------------------------------------------
# adiabatic expansion


@dataclass(frozen=True)
class TwoLevelSystem:
    gap: SweepProfile
    coupling: SweepProfile

    def check_gap(self, t0: float, t1: float) -> None:
        grid = np.linspace(t0, t1, GAP_CHECK_POINTS)
        if self.gap.minimum(t0, t1) <= 0 or np.any(self.gap(grid) <= 0):
            raise PreconditionError(f"gap closes on [{t0}, {t1}]; adiabatic expansion undefined")


def landau_zener_system(rate: float, min_gap: float, t0: float, t1: float, samples: int = 8193) -> TwoLevelSystem:
    """Tabulated two-level sweep ``H = (rate t / 2) sz + (min_gap / 2) sx``."""
    if not min_gap > 0:
        raise DomainError(f"Landau-Zener sweep needs a positive minimum gap, got {min_gap}")
    if not t1 > t0 or samples < 2:
        raise DomainError("Landau-Zener sweep needs t1 > t0 and at least two samples")
    times = np.linspace(t0, t1, samples)
    gap = np.hypot(rate * times, min_gap)
    coupling = 0.5 * rate * min_gap / gap
    return TwoLevelSystem(Tabulated(tuple(times), tuple(gap)), Tabulated(tuple(times), tuple(coupling)))


def adiabatic_amplitude(sys: TwoLevelSystem, t0: float, t1: float) -> complex:
    """First-order excitation amplitude ``coupling / gap**2 * exp(i phi)`` at ``t1``.

    ``phi = -integral(gap)`` is the dynamical phase only.
    """
    sys.check_gap(t0, t1)
    phase = -sys.gap.integral(t0, t1)
    return sys.coupling(t1) / sys.gap(t1) ** 2 * complex(math.cos(phase), math.sin(phase))


def two_level_amplitude(sys: TwoLevelSystem, t0: float, t1: float, cfg: IntegratorConfig = IntegratorConfig()) -> complex:
    """Excited-state amplitude from integrating the Schrodinger equation in the adiabatic frame.

    The instantaneous eigenbasis rotates at ``theta_dot = -coupling / gap``;
    the state starts in the instantaneous ground state at ``t0``.
    """
    sys.check_gap(t0, t1)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        a0, a1 = complex(y[0], y[1]), complex(y[2], y[3])
        gap = sys.gap(t)
        theta_dot = -sys.coupling(t) / gap
        da0 = 0.5j * gap * a0 + theta_dot * a1
        da1 = -0.5j * gap * a1 - theta_dot * a0
        return np.array([da0.real, da0.imag, da1.real, da1.imag])

    solution = solve_ivp(rhs, (t0, t1), np.array([1.0, 0.0, 0.0, 0.0]), method=cfg.method, rtol=cfg.rtol, atol=cfg.atol)
    if solution.status != 0:
        raise ConvergenceError(f"two-level integration failed: {solution.message}")
    y = solution.y[:, -1]
    return complex(y[2], y[3])


# --------------------------------------------------------------------------
# squeezing and stages


def thermal_factor(s: ModeState) -> float:
    """``nu = 2 sqrt(det)``: 1 for pure states, ``2 n_th + 1`` for a thermal occupation ``n_th``."""
    s.check_physical()
    return 2.0 * math.sqrt(max(s.determinant, SYMPLECTIC_FLOOR))


def squeeze_parameters(s: ModeState, omega_ref: float) -> tuple[float, float]:
    """Squeeze magnitude ``r`` and angle ``phi`` in [0, pi) relative to the vacuum at ``omega_ref``.

    The scaled moment matrix is decomposed as ``nu / 2 * R S S^T R^T``; ``r``
    comes from the eigenvalue ratio, which does not depend on the thermal
    factor ``nu``. A thermal state therefore has ``r = 0``; the state is the
    reference vacuum exactly when ``r = 0`` and ``thermal_factor(s) == 1``.
    """
    if not omega_ref > 0:
        raise DomainError("reference frequency must be positive")
    s.check_physical()
    a = s.qq * omega_ref
    b = s.pp / omega_ref
    c = s.qp
    half_trace = 0.5 * (a + b)
    spread = math.hypot(0.5 * (a - b), c)
    major = half_trace + spread
    minor = (a * b - c * c) / major
    r = 0.25 * math.log(major / minor)
    phi = 0.5 * math.atan2(2.0 * c, a - b) % math.pi
    return r, phi


class Stage(IntEnum):
    OSCILLATING = 0
    HORIZON_CROSSING = 1
    FROZEN = 2


def classify_stage(
    d: DispersionRelation,
    c: SweepProfile,
    k: float,
    t: float,
    band: bool = False,
    t_end: float = math.inf,
) -> Stage:
    """Compare the wavelength ``2 pi / k`` with the horizon size at ``t``.

    A divergent horizon never engulfs a wavelength, so it gives OSCILLATING.
    Modes with ``omega2 < 0`` are FROZEN. ``band=True`` widens the crossing
    stage to wavelengths in ``[horizon / 2, 2 * horizon]``.
    """
    if not k > 0:
        raise DomainError("stage classification needs k > 0")
    horizon = horizon_size(c, t, t_end)
    if is_divergent(horizon):
        return Stage.OSCILLATING
    if float(d.omega2(k * k, t)) < 0:
        return Stage.FROZEN
    wavelength = 2.0 * math.pi / k
    low, high = (0.5 * horizon, 2.0 * horizon) if band else (horizon, horizon)
    if abs(wavelength - horizon) <= STAGE_RTOL * max(wavelength, horizon):
        return Stage.HORIZON_CROSSING
    if wavelength < low:
        return Stage.OSCILLATING
    if wavelength > high:
        return Stage.FROZEN
    return Stage.HORIZON_CROSSING


class SweepStage(Enum):
    COOLING = "cooling"
    FREEZING = "freezing"
    SQUEEZING = "squeezing"
    REHEATING = "reheating"


def _omega2_rate(d: DispersionRelation, k2: float, t: float) -> float:
    h = 1e-6 * max(1.0, abs(t))
    try:
        return (float(d.omega2(k2, t + h)) - float(d.omega2(k2, t - h))) / (2.0 * h)
    except DomainError:
        pass
    try:
        return (float(d.omega2(k2, t + h)) - float(d.omega2(k2, t))) / h
    except DomainError:
        return (float(d.omega2(k2, t)) - float(d.omega2(k2, t - h))) / h


def sweep_stage(d: DispersionRelation, k: float, state: ModeState) -> SweepStage:
    """Cooling, freezing, squeezing or reheating of one mode at ``state.t``."""
    k2 = k * k
    w2 = float(d.omega2(k2, state.t))
    if w2 < 0:
        return SweepStage.REHEATING
    if w2 > 0:
        omega = math.sqrt(w2)
        ratio = abs(_omega2_rate(d, k2, state.t)) / (2.0 * omega * w2)
        if ratio < 1.0:
            return SweepStage.COOLING
        r, _ = squeeze_parameters(state, omega)
    else:
        r = math.inf
    return SweepStage.FREEZING if r < SQUEEZE_THRESHOLD else SweepStage.SQUEEZING


# --------------------------------------------------------------------------
# Kibble-Zurek freeze-out


@dataclass(frozen=True)
class Freezeout:
    t_tilde: float
    xi_tilde: float
    gap: float = field(default=math.nan)


def kz_freezeout(gap: SweepProfile, xi_coeff: float, t_c: float) -> Freezeout:
    """Solve ``t_c - t = 1 / gap(t)`` by bisection; ``xi = xi_coeff / gap(t)``."""
    if t_c > gap.t_end or t_c <= gap.t_start:
        raise DomainError(f"critical time {t_c} outside the gap profile domain")

    def mismatch(t: float) -> float:
        return (t_c - t) - 1.0 / gap(t)

    start = gap.t_start
    if math.isinf(start):
        distance = 1.0
        for _ in range(200):
            if mismatch(t_c - distance) > 0:
                break
            distance *= 2.0
        start = t_c - distance
    if mismatch(start) <= 0:
        raise PreconditionError("no freeze-out in the domain: response time already exceeds the remaining time")

    grid = np.linspace(start, t_c, GAP_CHECK_POINTS)[:-1]
    values = np.asarray(gap(grid), dtype=float)
    if np.any(values <= 0):
        raise PreconditionError("gap must stay positive before the critical time")
    if np.any(np.diff(values) > 1e-12 * np.max(values)):
        raise PreconditionError("gap must decrease monotonically toward the critical time")

    end = float(grid[-1])
    for _ in range(60):
        if mismatch(end) < 0:
            break
        end = 0.5 * (end + t_c)
    else:
        raise PreconditionError("could not bracket the freeze-out time below the critical time")

    t_tilde = bisect(mismatch, start, end, xtol=1e-14 * max(1.0, abs(t_c)), rtol=4 * np.finfo(float).eps, maxiter=400)
    g = gap(t_tilde)
    return Freezeout(float(t_tilde), xi_coeff / g, g)
