from __future__ import annotations

import math

import numpy as np
import pytest

from quench_lab.bosehubbard import (
    BHParams,
    Mott,
    OutcomeKind,
    Superfluid,
    SweepThresholds,
    adiabaticity_parameter,
    bh_sound_speed_profile,
    bh_sound_speed_squared,
    classify_late_variance,
    frozen_number_variance,
    horizon_forms,
    limiting_state_variance,
    simulate_bh_sweep,
)
from quench_lab.errors import AmbiguousClassificationError, DomainError, PreconditionError
from quench_lab.sweeps import Exponential, Linear, PowerLaw


def closed_form(n: float, nu: float) -> float:
    z = 2.0 * math.pi * nu
    return n * -math.expm1(-z) / z


@pytest.mark.parametrize("nu", [1e-6, 1e-4, 1e-3, 0.01, 0.1, 1.0, 10.0, 1e3])
def test_frozen_number_variance_matches_closed_form(nu):
    assert frozen_number_variance(100, nu) == pytest.approx(closed_form(100, nu), rel=1e-12)


def test_frozen_number_variance_limits():
    assert frozen_number_variance(100, 0.0) == 100.0
    assert frozen_number_variance(100, 1e-12) == pytest.approx(100.0, abs=1e-9)
    assert frozen_number_variance(100, math.inf) == 0.0
    assert frozen_number_variance(100, 1e12) == pytest.approx(0.0, abs=1e-9)


def test_frozen_number_variance_decreases_strictly_in_nu():
    nu = np.logspace(-8, 2, 400)
    values = np.array([frozen_number_variance(100, v) for v in nu])
    assert np.all(np.diff(values) < 0)
    assert np.all((values > 0) & (values < 100))


def test_frozen_number_variance_is_continuous_across_the_series_switch():
    below = frozen_number_variance(10, 1e-3 * (1 - 1e-12))
    above = frozen_number_variance(10, 1e-3)
    assert below == pytest.approx(above, rel=1e-11)


@pytest.mark.parametrize(("n", "nu"), [(0.5, 1.0), (10, -1.0), (10, math.nan)])
def test_frozen_number_variance_domain(n, nu):
    with pytest.raises(DomainError):
        frozen_number_variance(n, nu)


def test_limiting_states():
    assert limiting_state_variance(Superfluid(7)) == 7.0
    assert limiting_state_variance(Mott()) == 0.0


def test_params_validation_and_sound_speed():
    p = BHParams(n=2, U=3.0, ell=0.5, J=Exponential(1.0, 0.5))
    assert bh_sound_speed_squared(p, 0.0) == pytest.approx(0.25 * 1.0 * 3.0 * 2)
    c = bh_sound_speed_profile(p)
    assert isinstance(c, Exponential)
    assert c(1.0) ** 2 == pytest.approx(bh_sound_speed_squared(p, 1.0))
    assert adiabaticity_parameter(p) == pytest.approx(12.0)
    assert BHParams(1, 1.0, 1.0, 0.5).J(3.0) == 0.5
    with pytest.raises(DomainError):
        BHParams(0.5, 1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        BHParams(1, 1.0, 1.0, Linear(1.0, -1.0, t_start=0.0, t_end=5.0))
    with pytest.raises(PreconditionError):
        adiabaticity_parameter(BHParams(1, 1.0, 1.0, PowerLaw(1.0, 1.0, 2.0)))


@pytest.mark.parametrize(("x", "forms"), [(1.0, False), (2.0, False), (2.5, True), (4.0, True)])
def test_horizon_forms_for_power_law_hopping(x, forms):
    assert horizon_forms(BHParams(1, 1.0, 1.0, PowerLaw(1.0, 1.0, x))) is forms


def test_horizon_forms_for_exponential_hopping():
    assert horizon_forms(BHParams(1, 1.0, 1.0, Exponential(1.0, 1.0)))


def test_classify_late_variance_categories():
    th = SweepThresholds()
    t = np.linspace(10.0, 100.0, 2001)
    frozen = classify_late_variance(0.1, t, np.full_like(t, 0.3), 0.5, th)
    assert frozen.kind is OutcomeKind.FROZEN_AT
    assert frozen.ratio == pytest.approx(0.6)

    wiggly = t**-0.5 * (1.0 + 0.5 * np.cos(t))
    assert classify_late_variance(0.1, t, wiggly, 1.0, th).kind is OutcomeKind.OSCILLATING

    decaying = 1e-3 * (t / 10.0) ** -2
    assert classify_late_variance(0.1, t, decaying, 1.0, th).kind is OutcomeKind.DECAYING_TO_ZERO


def test_slow_convergence_freezes_at_the_extrapolated_limit():
    t = np.linspace(10.0, 100.0, 2001)
    variance = 0.3 * (1.0 + 0.5 * (t / 10.0) ** -0.5)
    outcome = classify_late_variance(0.1, t, variance, 1.0, SweepThresholds())
    assert outcome.drift > 0.01
    assert outcome.kind is OutcomeKind.FROZEN_AT
    assert 0.0 < outcome.trend_ratio < 0.9
    assert 0.25 < outcome.value < variance[-1]


def test_steady_power_law_decline_is_decaying():
    t = np.linspace(10.0, 100.0, 2001)
    outcome = classify_late_variance(0.1, t, 0.5 * (t / 10.0) ** -0.1, 1.0, SweepThresholds())
    assert outcome.kind is OutcomeKind.DECAYING_TO_ZERO
    assert outcome.trend_ratio == pytest.approx(1.0, abs=1e-6)
    assert outcome.value is None


def test_single_hump_is_oscillating():
    t = np.linspace(10.0, 100.0, 2001)
    hump = 1.0 + 0.5 * np.sin(np.pi * (t - 10.0) / 90.0)
    assert classify_late_variance(0.1, t, hump, 1.0, SweepThresholds()).kind is OutcomeKind.OSCILLATING


def test_unbounded_growth_has_no_class():
    t = np.linspace(10.0, 100.0, 2001)
    with pytest.raises(AmbiguousClassificationError):
        classify_late_variance(0.1, t, 0.1 * t, 1.0, SweepThresholds())


def test_exponential_switch_off_freezes():
    p = BHParams(1, 1.0, 1.0, Exponential(1.0, 1.0))
    result = simulate_bh_sweep(p, [0.2, 0.1], 0.0, 200.0)
    assert [outcome.k for outcome in result.outcomes] == [0.1, 0.2]
    assert all(outcome.kind is OutcomeKind.FROZEN_AT for outcome in result.outcomes)
    assert result.summary.k == 0.1
    assert result.summary.value > 0
    frame = result.to_frame()
    assert list(frame["outcome"]) == ["frozen", "frozen"]


def test_linear_decay_of_the_hopping_oscillates():
    p = BHParams(1, 1.0, 1.0, PowerLaw(1.0, 1.0, 1.0))
    result = simulate_bh_sweep(p, [0.2], 1.0, 1000.0)
    assert result.summary.kind is OutcomeKind.OSCILLATING
    assert result.summary.value is None


def test_quadratic_decay_of_the_hopping_decays():
    p = BHParams(1, 1.0, 1.0, PowerLaw(1.0, 1.0, 2.0))
    result = simulate_bh_sweep(p, [0.45], 1.0, 1e6)
    assert result.summary.kind is OutcomeKind.DECAYING_TO_ZERO


def test_fast_power_law_freezes():
    p = BHParams(1, 1.0, 1.0, PowerLaw(1.0, 1.0, 4.0))
    result = simulate_bh_sweep(p, [0.2], 1.0, 1000.0)
    assert result.summary.kind is OutcomeKind.FROZEN_AT


def test_threads_do_not_change_the_result():
    p = BHParams(1, 1.0, 1.0, Exponential(1.0, 1.0))
    serial = simulate_bh_sweep(p, [0.1, 0.2, 0.3], 0.0, 60.0).to_frame()
    threaded = simulate_bh_sweep(p, [0.1, 0.2, 0.3], 0.0, 60.0, threads=3).to_frame()
    assert serial.equals(threaded)


def test_sweep_input_validation():
    p = BHParams(1, 1.0, 1.0, Exponential(1.0, 1.0))
    with pytest.raises(PreconditionError):
        simulate_bh_sweep(p, [], 0.0, 10.0)
    with pytest.raises(DomainError):
        simulate_bh_sweep(p, [0.1], 10.0, 10.0)


# (J profile, k, t0, t1): each mode is followed long enough to settle into its late regime.
SWEEP_GRID = [
    *[(PowerLaw(1.0, 1.0, x), 0.2, 1.0, 1000.0) for x in (0.75, 1.0)],
    (PowerLaw(1.0, 1.0, 1.25), 0.2, 1.0, 1e4),
    (PowerLaw(1.0, 1.0, 1.5), 0.5, 1.0, 1e5),
    (PowerLaw(1.0, 1.0, 1.75), 1.0, 1.0, 1e6),
    *[(PowerLaw(1.0, 1.0, 2.0), k, 1.0, 1e5) for k in (0.1, 0.2, 0.45)],
    *[(PowerLaw(1.0, 1.0, x), 0.2, 1.0, 1000.0) for x in (2.25, 2.5, 2.75, 3.0, 3.5, 4.0, 5.0, 6.0, 8.0)],
    *[(Exponential(1.0, gamma), 0.2, 0.0, 100.0 / gamma) for gamma in (0.25, 0.5, 1.0)],
]


@pytest.mark.slow
@pytest.mark.parametrize(("J", "k", "t0", "t1"), SWEEP_GRID)
def test_classification_agrees_with_horizon_finiteness(J, k, t0, t1):
    p = BHParams(1, 1.0, 1.0, J)
    outcome = simulate_bh_sweep(p, [k], t0, t1).summary
    if horizon_forms(p):
        assert outcome.kind is OutcomeKind.FROZEN_AT
        assert outcome.value > 0
    else:
        assert outcome.kind is not OutcomeKind.FROZEN_AT


def test_sweep_grid_covers_twenty_profiles():
    assert len(SWEEP_GRID) == 20
    assert sum(horizon_forms(BHParams(1, 1.0, 1.0, J)) for J, *_ in SWEEP_GRID) == 12
