"""Time profiles of externally swept parameters.

A profile is a scalar function of time on a domain ``[t_start, t_end]``.
Closed forms (constant, exponential, power law, linear) evaluate and
differentiate analytically and carry an exact definite integral, including
the improper one to ``t = inf`` when it converges. Tabulated profiles
interpolate samples with a cubic spline and differentiate by centered
finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np
from scipy.interpolate import CubicSpline

from quench_lab.errors import DomainError


TABULATED_DIFF_STEP = 1e-6
MIN_SAMPLES = 4097


@dataclass(frozen=True, kw_only=True)
class SweepProfile:
    t_start: float = -math.inf
    t_end: float = math.inf

    def __post_init__(self) -> None:
        if not self.t_start < self.t_end:
            raise DomainError(f"empty profile domain [{self.t_start}, {self.t_end}]")

    # evaluation ---------------------------------------------------------

    def __call__(self, t):
        self.check_domain(t)
        return self._value(np.asarray(t, dtype=float)) if np.ndim(t) else float(self._value(float(t)))

    def derivative(self, t):
        self.check_domain(t)
        return self._derivative(np.asarray(t, dtype=float)) if np.ndim(t) else float(self._derivative(float(t)))

    def check_domain(self, t) -> None:
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < self.t_start) or np.any(t_arr > self.t_end) or np.any(np.isnan(t_arr)):
            raise DomainError(f"t outside profile domain [{self.t_start}, {self.t_end}]")

    def _value(self, t):
        raise NotImplementedError

    def _derivative(self, t):
        raise NotImplementedError

    # integrals ----------------------------------------------------------

    @property
    def has_closed_form(self) -> bool:
        return True

    def integral(self, a: float, b: float) -> float:
        """Exact integral over [a, b]; ``math.inf`` when an improper integral diverges."""
        if b < a:
            raise DomainError(f"integration limits out of order: {a} > {b}")
        self.check_domain(a)
        if math.isfinite(b):
            self.check_domain(b)
        elif self.t_end != math.inf:
            raise DomainError("improper integral requested beyond the profile domain")
        if a == b:
            return 0.0
        return self._integral(a, b)

    def _integral(self, a: float, b: float) -> float:
        raise NotImplementedError

    def minimum(self, a: float, b: float) -> float:
        """Smallest value on [a, b] (the limit value when b is infinite)."""
        raise NotImplementedError

    # transforms ---------------------------------------------------------

    def scaled_power(self, scale: float, exponent: float) -> SweepProfile:
        """Profile of ``scale * v(t) ** exponent``."""
        times = self._finite_grid()
        values = scale * np.power(self._value(times), exponent)
        return Tabulated(tuple(times), tuple(values))

    def _finite_grid(self, count: int = MIN_SAMPLES) -> np.ndarray:
        if not (math.isfinite(self.t_start) and math.isfinite(self.t_end)):
            raise DomainError(f"{type(self).__name__} on an unbounded domain cannot be tabulated")
        return np.linspace(self.t_start, self.t_end, count)

    def describe(self) -> dict[str, Any]:
        payload = {"form": type(self).__name__.lower()}
        for key, value in self.__dict__.items():
            if not key.startswith("_") and key not in {"times", "values"}:
                payload[key] = value
        return payload


@dataclass(frozen=True)
class Constant(SweepProfile):
    value: float

    def _value(self, t):
        return np.full_like(t, self.value) if np.ndim(t) else self.value

    def _derivative(self, t):
        return np.zeros_like(t) if np.ndim(t) else 0.0

    def _integral(self, a: float, b: float) -> float:
        if math.isinf(b):
            return 0.0 if self.value == 0 else math.copysign(math.inf, self.value)
        return self.value * (b - a)

    def minimum(self, a: float, b: float) -> float:
        return self.value

    def scaled_power(self, scale: float, exponent: float) -> SweepProfile:
        return Constant(scale * self.value**exponent, t_start=self.t_start, t_end=self.t_end)


@dataclass(frozen=True)
class Exponential(SweepProfile):
    """``v0 * exp(-gamma * t)``."""

    v0: float
    gamma: float

    def _value(self, t):
        return self.v0 * np.exp(-self.gamma * t)

    def _derivative(self, t):
        return -self.gamma * self.v0 * np.exp(-self.gamma * t)

    def _integral(self, a: float, b: float) -> float:
        if self.v0 == 0:
            return 0.0
        if self.gamma == 0:
            return Constant(self.v0)._integral(a, b)
        head = self.v0 * math.exp(-self.gamma * a)
        if math.isinf(b):
            return head / self.gamma if self.gamma > 0 else math.copysign(math.inf, self.v0)
        return head * -math.expm1(-self.gamma * (b - a)) / self.gamma

    def minimum(self, a: float, b: float) -> float:
        end = float(self._value(b)) if math.isfinite(b) else (0.0 if self.gamma > 0 else self.v0 * math.inf)
        return min(float(self._value(a)), end)

    def scaled_power(self, scale: float, exponent: float) -> SweepProfile:
        return Exponential(
            scale * self.v0**exponent,
            self.gamma * exponent,
            t_start=self.t_start,
            t_end=self.t_end,
        )


@dataclass(frozen=True)
class PowerLaw(SweepProfile):
    """``v0 * (t / t0) ** (-x)`` for ``t > 0``."""

    v0: float
    t0: float
    x: float

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.t0 <= 0:
            raise DomainError("power-law reference time t0 must be positive")

    def check_domain(self, t) -> None:
        super().check_domain(t)
        if np.any(np.asarray(t, dtype=float) <= 0):
            raise DomainError("power-law profiles are defined for t > 0 only")

    def _value(self, t):
        return self.v0 * np.power(t / self.t0, -self.x)

    def _derivative(self, t):
        return -self.x * self.v0 * np.power(t / self.t0, -self.x - 1.0) / self.t0

    def _integral(self, a: float, b: float) -> float:
        if self.v0 == 0:
            return 0.0
        scale = self.v0 * self.t0
        if math.isinf(b):
            if self.x > 1:
                return scale * (a / self.t0) ** (1.0 - self.x) / (self.x - 1.0)
            return math.copysign(math.inf, self.v0)
        if self.x == 1:
            return scale * math.log(b / a)
        power = 1.0 - self.x
        return scale * ((b / self.t0) ** power - (a / self.t0) ** power) / power

    def minimum(self, a: float, b: float) -> float:
        if math.isinf(b):
            end = 0.0 if self.x > 0 else (self.v0 if self.x == 0 else self.v0 * math.inf)
        else:
            end = float(self._value(b))
        return min(float(self._value(a)), end)

    def scaled_power(self, scale: float, exponent: float) -> SweepProfile:
        return PowerLaw(
            scale * self.v0**exponent,
            self.t0,
            self.x * exponent,
            t_start=self.t_start,
            t_end=self.t_end,
        )


@dataclass(frozen=True)
class Linear(SweepProfile):
    """``v0 + rate * t``."""

    v0: float
    rate: float

    def _value(self, t):
        return self.v0 + self.rate * t

    def _derivative(self, t):
        return np.full_like(t, self.rate) if np.ndim(t) else self.rate

    def _integral(self, a: float, b: float) -> float:
        if math.isinf(b):
            if self.rate == 0:
                return Constant(self.v0)._integral(a, b)
            return math.copysign(math.inf, self.rate)
        return self.v0 * (b - a) + 0.5 * self.rate * (b * b - a * a)

    def minimum(self, a: float, b: float) -> float:
        end = float(self._value(b)) if math.isfinite(b) else (-math.inf if self.rate < 0 else float(self._value(a)))
        return min(float(self._value(a)), end)

    def scaled_power(self, scale: float, exponent: float) -> SweepProfile:
        if exponent == 1:
            return Linear(scale * self.v0, scale * self.rate, t_start=self.t_start, t_end=self.t_end)
        return super().scaled_power(scale, exponent)


@dataclass(frozen=True)
class Tabulated(SweepProfile):
    """Samples ``(times, values)`` joined by a not-a-knot cubic spline."""

    times: tuple[float, ...]
    values: tuple[float, ...]
    t_start: float = field(init=False)
    t_end: float = field(init=False)

    def __post_init__(self) -> None:
        if len(self.times) != len(self.values):
            raise DomainError("tabulated profile needs as many values as times")
        if len(self.times) < 4:
            raise DomainError("tabulated profile needs at least 4 samples")
        if np.any(np.diff(self.times) <= 0):
            raise DomainError("tabulated profile times must be strictly increasing")
        object.__setattr__(self, "t_start", float(self.times[0]))
        object.__setattr__(self, "t_end", float(self.times[-1]))

    @cached_property
    def _spline(self) -> CubicSpline:
        return CubicSpline(np.asarray(self.times), np.asarray(self.values))

    @property
    def has_closed_form(self) -> bool:
        return False

    def _value(self, t):
        return self._spline(t)

    def _derivative(self, t):
        h = TABULATED_DIFF_STEP * (self.t_end - self.t_start)
        lo = np.clip(np.asarray(t) - h, self.t_start, self.t_end)
        hi = np.clip(np.asarray(t) + h, self.t_start, self.t_end)
        return (self._spline(hi) - self._spline(lo)) / (hi - lo)

    def _integral(self, a: float, b: float) -> float:
        if math.isinf(b):
            raise DomainError("tabulated profiles need a finite upper limit")
        return float(self._spline.integrate(a, b))

    def minimum(self, a: float, b: float) -> float:
        grid = np.linspace(a, b, MIN_SAMPLES)
        return float(np.min(self._spline(grid)))

    def scaled_power(self, scale: float, exponent: float) -> SweepProfile:
        grid = np.linspace(self.t_start, self.t_end, max(MIN_SAMPLES, len(self.times)))
        return Tabulated(tuple(grid), tuple(scale * np.power(self._spline(grid), exponent)))


PROFILE_FORMS: dict[str, type[SweepProfile]] = {
    "constant": Constant,
    "exponential": Exponential,
    "powerlaw": PowerLaw,
    "linear": Linear,
    "tabulated": Tabulated,
}


def profile_from_dict(spec: dict[str, Any]) -> SweepProfile:
    """Build a profile from a config block such as ``{"form": "exponential", "v0": 1, "gamma": 0.5}``."""
    if not isinstance(spec, dict) or "form" not in spec:
        raise DomainError('profile block must be an object with a "form" key')
    form = str(spec["form"]).replace("-", "").replace("_", "").lower()
    if form not in PROFILE_FORMS:
        raise DomainError(f"unknown profile form {spec['form']!r}; expected one of {sorted(PROFILE_FORMS)}")
    kwargs = {key: value for key, value in spec.items() if key != "form"}
    if form == "tabulated":
        return Tabulated(tuple(float(v) for v in kwargs["times"]), tuple(float(v) for v in kwargs["values"]))
    try:
        return PROFILE_FORMS[form](**{key: float(value) for key, value in kwargs.items()})
    except TypeError as exc:
        raise DomainError(f"bad parameters for {form} profile: {exc}") from exc


def value_at(parameter: float | SweepProfile, t: float) -> float:
    """Evaluate a parameter that is either a plain number or a profile."""
    if isinstance(parameter, SweepProfile):
        return parameter(t)
    return float(parameter)
