from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad

from quench_lab.errors import DomainError
from quench_lab.sweeps import (
    Constant,
    Exponential,
    Linear,
    PowerLaw,
    Tabulated,
    profile_from_dict,
    value_at,
)


def test_exponential_integral_matches_quadrature():
    profile = Exponential(2.0, 0.7)
    expected, _ = quad(profile, 0.3, 4.0, epsrel=1e-13)
    assert profile.integral(0.3, 4.0) == pytest.approx(expected, rel=1e-12)
    assert profile.integral(0.0, math.inf) == pytest.approx(2.0 / 0.7, rel=1e-15)


@pytest.mark.parametrize(
    ("x", "finite"),
    [(0.5, False), (1.0, False), (2.0, True), (3.0, True)],
)
def test_power_law_improper_integral_converges_only_above_one(x, finite):
    value = PowerLaw(1.0, 1.0, x).integral(1.0, math.inf)
    assert math.isfinite(value) is finite


def test_power_law_rejects_non_positive_times():
    with pytest.raises(DomainError):
        PowerLaw(1.0, 1.0, 2.0)(0.0)


def test_linear_and_constant_closed_forms():
    assert Linear(1.0, 2.0).integral(0.0, 3.0) == pytest.approx(12.0)
    assert Constant(0.0).integral(0.0, math.inf) == 0.0
    assert math.isinf(Constant(1.0).integral(0.0, math.inf))
    assert Linear(1.0, -1.0).minimum(0.0, math.inf) == -math.inf


def test_scaled_power_keeps_the_family():
    exp_scaled = Exponential(4.0, 1.0).scaled_power(3.0, 0.5)
    assert isinstance(exp_scaled, Exponential)
    assert exp_scaled(1.0) == pytest.approx(3.0 * math.sqrt(4.0 * math.exp(-1.0)))

    power_scaled = PowerLaw(4.0, 2.0, 3.0).scaled_power(1.0, 0.5)
    assert isinstance(power_scaled, PowerLaw)
    assert power_scaled.x == pytest.approx(1.5)


def test_scaled_power_tabulates_other_forms_on_a_finite_domain():
    profile = Linear(1.0, 1.0, t_start=0.0, t_end=2.0).scaled_power(1.0, 2.0)
    assert isinstance(profile, Tabulated)
    assert profile(1.5) == pytest.approx(6.25, rel=1e-9)
    with pytest.raises(DomainError):
        Linear(1.0, 1.0).scaled_power(1.0, 2.0)


def test_tabulated_profile_spline_and_derivative():
    times = np.linspace(0.0, 1.0, 11)
    profile = Tabulated(tuple(times), tuple(3.0 * times + 1.0))
    assert profile(0.55) == pytest.approx(2.65)
    assert profile.derivative(0.5) == pytest.approx(3.0, rel=1e-6)
    assert profile.integral(0.0, 1.0) == pytest.approx(2.5)
    assert not profile.has_closed_form
    with pytest.raises(DomainError):
        profile(1.5)


@pytest.mark.parametrize(
    ("times", "values"),
    [((0.0, 1.0, 2.0), (1.0, 1.0, 1.0)), ((0.0, 2.0, 1.0, 3.0), (1.0, 1.0, 1.0, 1.0))],
)
def test_tabulated_profile_validation(times, values):
    with pytest.raises(DomainError):
        Tabulated(times, values)


def test_profile_from_dict():
    profile = profile_from_dict({"form": "power-law", "v0": 2, "t0": 1, "x": 2})
    assert isinstance(profile, PowerLaw)
    assert profile(2.0) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        profile_from_dict({"form": "sawtooth"})
    with pytest.raises(DomainError):
        profile_from_dict({"form": "exponential", "v0": 1})


def test_value_at_accepts_numbers_and_profiles():
    assert value_at(2.5, 10.0) == 2.5
    assert value_at(Linear(1.0, 2.0), 1.0) == pytest.approx(3.0)
