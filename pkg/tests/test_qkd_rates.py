import numpy as np
import pytest

from src.qkd_rates import (DetectorModel, NoiseEnvironment, SourceSpec, aes_gcm_secured_capacity,
                           binary_entropy, budget_headroom, dead_time_saturation,
                           detection_rates, evaluate, fiber_equivalent, qber,
                           qber_crossing_budget, secure_fraction, secure_qber_threshold,
                           sweep_budget, sweep_classical_power)
from src.utils.errors import DomainError


def test_binary_entropy():
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(0.5) == pytest.approx(1.0)
    assert binary_entropy(0.11) == pytest.approx(binary_entropy(0.89))
    with pytest.raises(DomainError):
        binary_entropy(1.5)


def test_secure_fraction_threshold():
    assert secure_qber_threshold() == pytest.approx(0.110, abs=0.002)
    assert secure_fraction(0.0) == 1.0
    assert secure_fraction(0.12) == 0.0
    assert secure_qber_threshold(1.2) < secure_qber_threshold(1.0)


@pytest.mark.parametrize("q", [-0.01, 0.51])
def test_secure_fraction_domain(q):
    with pytest.raises(DomainError):
        secure_fraction(q)


@pytest.mark.parametrize("sifted, q, skr, tolerance", [
    (17.5e3, 0.103, 785.0, 0.10),
    (10.1e3, 0.0913, 1.2e3, 0.05),
])
def test_secure_rate_reproduction(sifted, q, skr, tolerance):
    assert sifted * secure_fraction(q) == pytest.approx(skr, rel=tolerance)


def test_aes_gcm_capacity():
    assert aes_gcm_secured_capacity(785.0) == pytest.approx(1.57e12, rel=0.01)
    with pytest.raises(DomainError):
        aes_gcm_secured_capacity(-1.0)


def test_fiber_equivalent():
    assert fiber_equivalent(26.0) == pytest.approx(93.9, abs=0.5)
    with pytest.raises(DomainError):
        fiber_equivalent(-1.0)


def test_dead_time_saturation():
    tau = 25e-6
    assert dead_time_saturation(1.0 / tau, tau) == pytest.approx(0.5 / tau)
    np.testing.assert_allclose(dead_time_saturation([0.0, 1e12], tau), [0.0, 1.0 / tau],
                               rtol=1e-6)
    with pytest.raises(DomainError):
        dead_time_saturation(-1.0, tau)


def test_qber_composition():
    assert qber(1000.0, 0.0, 0.02) == pytest.approx(0.02)
    assert qber(0.0, 1000.0, 0.02) == pytest.approx(0.5)
    assert qber(900.0, 100.0, 0.0) == pytest.approx(0.05)
    with pytest.raises(DomainError):
        qber(0.0, 0.0, 0.01)


def test_detector_topologies():
    assert DetectorModel().count == 4
    basis = DetectorModel(dark_rates_hz=(559.0, 599.0), topology="per_basis")
    assert basis.channel_states(1) == (2, 3)
    assert basis.channel_basis(1) == 1
    with pytest.raises(DomainError):
        DetectorModel(topology="per_basis")
    with pytest.raises(DomainError):
        DetectorModel(topology="single")


def test_two_detector_ceiling():
    det = DetectorModel(dark_rates_hz=(559.0, 599.0), topology="per_basis")
    rates = detection_rates(SourceSpec(mean_photon_number=1.0), det, NoiseEnvironment(), 0.0)
    assert rates.sifted_rate_hz < 0.5 * 2 / det.dead_time_s
    assert rates.sifted_rate_hz < 54.3e3


def test_detection_rates_split():
    det = DetectorModel()
    rates = detection_rates(SourceSpec(), det, NoiseEnvironment((10.0,) * 4, 0.01), 10.0,
                            0.4, 0.7)
    np.testing.assert_allclose(rates.output_rate_hz,
                               dead_time_saturation(rates.incident_signal_hz + rates.noise_hz,
                                                    det.dead_time_s))
    assert rates.sifted_rate_hz == pytest.approx(0.5 * 0.7 * rates.output_rate_hz.sum())
    with pytest.raises(DomainError):
        detection_rates(SourceSpec(), det, NoiseEnvironment(), -1.0)


def test_back_to_back_anchor(b2b_scenario):
    report = evaluate(b2b_scenario, 0.0)
    assert report.sifted_rate_hz == pytest.approx(54.3e3, rel=0.01)
    assert report.qber == pytest.approx(0.0207, abs=0.0005)
    assert report.fiber_equiv_km == 0.0


def test_qber_limit_crossing(b2b_scenario, indoor_scenario):
    assert qber_crossing_budget(b2b_scenario) == pytest.approx(26.0, abs=4.0)
    assert budget_headroom(indoor_scenario) == pytest.approx(10.5, abs=4.0)


def test_indoor_operating_point(indoor_scenario):
    report = evaluate(indoor_scenario)
    assert report.budget_db == pytest.approx(15.5, abs=0.01)
    assert report.sifted_rate_hz == pytest.approx(23.5e3, rel=0.02)
    assert report.secure_rate_hz > 0


def test_outdoor_operating_point(outdoor_scenario):
    report = evaluate(outdoor_scenario)
    assert report.budget_db == pytest.approx(20.0, abs=1.5)
    assert report.qber == pytest.approx(0.0913, abs=0.001)
    assert report.sifted_rate_hz == pytest.approx(10.1e3, rel=0.01)
    assert report.secure_rate_hz == pytest.approx(1.2e3, rel=0.05)


def test_coexistence_operating_point(coexistence_scenario):
    report = evaluate(coexistence_scenario)
    assert report.classical_power_dbm is None
    assert report.sifted_rate_hz == pytest.approx(17.5e3, rel=0.01)
    assert report.qber == pytest.approx(0.103, abs=0.001)
    assert report.secure_rate_hz == pytest.approx(785.0, rel=0.10)
    assert aes_gcm_secured_capacity(report.secure_rate_hz) > 470e9


def test_budget_sweep_is_monotonic(b2b_scenario):
    reports = sweep_budget(b2b_scenario, b2b_scenario.sweep.budgets_db)
    sifted = [r.sifted_rate_hz for r in reports]
    errors = [r.qber for r in reports]
    assert all(a > b for a, b in zip(sifted, sifted[1:]))
    assert all(a < b for a, b in zip(errors, errors[1:]))
    assert reports[0].to_row()[0] == "0"
    with pytest.raises(DomainError):
        sweep_budget(b2b_scenario, [])


def test_coexistence_penalty(coexistence_scenario):
    loaded = evaluate(coexistence_scenario)
    assert loaded.qber == pytest.approx(0.103, abs=0.002)

    # −200 дБм: фактично без класичного навантаження
    no_load, low, high = sweep_classical_power(coexistence_scenario, [-200.0, 0.0, 11.2])
    assert high.qber == pytest.approx(loaded.qber)
    # Лінійна модель шуму дає зсув 0.56 п.п. при 0 дБм (див. DESIGN.md, рішення 4)
    shift = low.qber - no_load.qber
    assert shift == pytest.approx(0.00561, abs=2e-4)
    assert shift < 0.15 * (high.qber - no_load.qber)
    assert high.to_row("classical_power_dbm")[0] == "11.2"
