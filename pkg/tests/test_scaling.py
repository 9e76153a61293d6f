from __future__ import annotations

import math

import pytest

from quench_lab.errors import DomainError, PreconditionError
from quench_lab.scaling import (
    BathSpectrum,
    FirstOrderModel,
    avoided_crossing_gap,
    decoherence_error,
    even_parity_basis,
    first_order_gap,
    log_gap_regression,
    scheme_vulnerability_report,
    second_order_error,
    tfim_chain,
    tfim_dense_gap,
    tfim_gap,
)


def test_first_order_gap_is_exponential():
    model = FirstOrderModel(0.5, norm_poly_degree=2)
    assert first_order_gap(model, 0) == 1.0
    assert first_order_gap(model, 4) == pytest.approx(16 * 0.5**4)
    gap, splitting = avoided_crossing_gap(model, 4, detuning=0.75)
    assert splitting == pytest.approx(math.hypot(0.75, gap))
    with pytest.raises(DomainError):
        FirstOrderModel(1.0)


def test_log_gap_regression_recovers_the_decay():
    fit = log_gap_regression(FirstOrderModel(0.9, norm_poly_degree=1), range(4, 40, 4))
    assert fit.slope == pytest.approx(math.log(0.9), rel=1e-9)
    assert fit.intercept == pytest.approx(0.0, abs=1e-9)
    assert fit.max_residual < 1e-9
    with pytest.raises(PreconditionError):
        log_gap_regression(FirstOrderModel(0.9), [5])


def test_critical_tfim_gap_closes_as_one_over_n():
    for n in (64, 128, 512):
        assert n * tfim_gap(n, 1.0) == pytest.approx(2 * math.pi, rel=0.01)
    assert tfim_gap(16, 0.0) == pytest.approx(2.0)


def test_tfim_chain_terms():
    chain = tfim_chain(4, 0.5)
    assert len(chain.terms) == 8
    assert chain.norm_bound == pytest.approx(4 * 1.0 + 4 * 0.5)
    assert len(even_parity_basis(4)) == 8


@pytest.mark.parametrize("g", [0.5, 1.0, 1.5])
def test_exact_diagonalization_matches_the_quasiparticle_gap(g):
    assert tfim_dense_gap(8, g) == pytest.approx(tfim_gap(8, g), rel=1e-6)


def test_ohmic_error_does_not_depend_on_the_gap():
    bath = BathSpectrum(0.01)
    assert decoherence_error(bath, 0.1) == decoherence_error(bath, 0.2)


def test_super_ohmic_error_grows_with_the_gap():
    bath = BathSpectrum(0.01, exponent=2.0)
    assert decoherence_error(bath, 0.2) / decoherence_error(bath, 0.1) == pytest.approx(2.0)
    with pytest.raises(DomainError):
        decoherence_error(bath, 0.0)
    with pytest.raises(DomainError):
        BathSpectrum(0.01, cutoff=0.0)


def test_second_order_error_sums_the_soft_modes():
    bath = BathSpectrum(0.01, exponent=2.0)
    assert second_order_error(bath, 0.5, 3) == pytest.approx(0.01 * 0.5 * (1 + 2 + 3))


def test_vulnerability_report_rows_and_trends():
    bath = BathSpectrum(0.01, exponent=2.0)
    frame = scheme_vulnerability_report(FirstOrderModel(0.9), lambda n: tfim_gap(n, 1.0), bath, [4, 8, 16])
    assert len(frame) == 6
    assert list(frame.columns) == ["n", "model", "gap", "error", "trend"]
    trends = frame.groupby("model")["trend"].first()
    assert trends["first-order"] == "controlled"
    assert trends["second-order"] == "growing"

    single = scheme_vulnerability_report(FirstOrderModel(0.9), lambda n: 1.0, bath, [4])
    assert len(single) == 2
    with pytest.raises(PreconditionError):
        scheme_vulnerability_report(FirstOrderModel(0.9), lambda n: 1.0, bath, [])


def test_critical_tfim_gap_shrinks_while_n_times_gap_grows():
    gaps = [tfim_gap(n, 1.0) for n in range(2, 200)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    products = [n * gap for n, gap in zip(range(2, 200), gaps)]
    assert all(b > a for a, b in zip(products, products[1:]))
    assert products[-1] == pytest.approx(2.0 * math.pi, rel=1e-4)


@pytest.mark.parametrize("exponent", [0.5, 1.0, 2.0, 3.0])
def test_decoherence_error_is_linear_in_the_bath_strength(exponent):
    for eta in (1e-3, 0.2, 5.0):
        for factor in (0.5, 3.0, 100.0):
            base = decoherence_error(BathSpectrum(eta, exponent, 4.0), 0.3)
            scaled = decoherence_error(BathSpectrum(factor * eta, exponent, 4.0), 0.3)
            assert scaled == pytest.approx(factor * base, rel=1e-12)
    assert decoherence_error(BathSpectrum(0.0, exponent), 0.3) == 0.0
