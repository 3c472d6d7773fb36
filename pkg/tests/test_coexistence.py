import math

import pytest
from scipy.constants import c

from src.coexistence import (ChannelRole, NotchFilter, build_channel_plan,
                             coexistence_noise_rate, dbm_to_watts, fit_solar_slope,
                             per_channel_launch_dbm, photon_energy, solar_background)
from src.qkd_rates import DetectorModel
from src.utils.config import L_BAND_MAX_WAVELENGTH_M, QUANTUM_WAVELENGTH_M
from src.utils.errors import ConfigError, DomainError


@pytest.fixture(scope="module")
def plan():
    return build_channel_plan()


def test_default_plan_layout(plan):
    assert len(plan.channels) == 48
    assert len(plan.data_channels) == 47
    above = [ch for ch in plan.data_channels if ch.frequency_hz > plan.quantum_frequency_hz]
    assert len(above) == 24
    supervisory = [ch for ch in plan.channels if ch.role == ChannelRole.SUPERVISORY]
    assert supervisory[0].wavelength_m == L_BAND_MAX_WAVELENGTH_M
    assert [ch.index for ch in plan.channels] == list(range(1, 49))


def test_detuning_extremes(plan):
    low, high = plan.detuning_range_hz()
    assert low == pytest.approx(155.5e9, abs=1e6)
    expected_high = c / QUANTUM_WAVELENGTH_M - c / L_BAND_MAX_WAVELENGTH_M
    assert high == pytest.approx(expected_high, abs=1e6)
    # 1618.63 нм дає 8185.6 ГГц, а не рівно 8.19 ТГц
    assert high == pytest.approx(8.19e12, abs=5e9)


def test_plan_rows(plan):
    rows = plan.to_rows()
    assert rows[-1][3] == "supervisory"
    assert rows[-1][1] == "1618.630"
    assert all(float(row[2]) >= 155.5 for row in rows)


def test_plan_rejects_channel_on_quantum_wavelength():
    grid = build_channel_plan()
    wavelengths = [ch.wavelength_m for ch in grid.data_channels]
    wavelengths[0] = QUANTUM_WAVELENGTH_M
    with pytest.raises(ConfigError, match="канал"):
        build_channel_plan(wavelengths_m=wavelengths)


def test_plan_rejects_wrong_count():
    grid = build_channel_plan()
    wavelengths = [ch.wavelength_m for ch in grid.data_channels][:-1]
    with pytest.raises(ConfigError):
        build_channel_plan(wavelengths_m=wavelengths)


def test_plan_rejects_out_of_band_channel():
    grid = build_channel_plan()
    wavelengths = [ch.wavelength_m for ch in grid.data_channels]
    wavelengths[-1] = 1500e-9
    with pytest.raises(ConfigError, match="поза діапазоном"):
        build_channel_plan(wavelengths_m=wavelengths)


def test_noise_rate_is_linear_in_power(plan):
    det = DetectorModel()
    notch = NotchFilter()
    assert coexistence_noise_rate(plan, None, notch, det, 2e-12) == 0.0
    one = coexistence_noise_rate(plan, 0.0, notch, det, 2e-12)
    two = coexistence_noise_rate(plan, 10 * math.log10(2.0), notch, det, 2e-12)
    assert two == pytest.approx(2 * one)
    expected = det.efficiency * 1e-3 * (notch.leakage + 2e-12) / photon_energy(QUANTUM_WAVELENGTH_M)
    assert one == pytest.approx(expected)


def test_unit_helpers(plan):
    assert dbm_to_watts(0.0) == pytest.approx(1e-3)
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert per_channel_launch_dbm(plan, 11.2) == pytest.approx(11.2 - 10 * math.log10(47))
    assert NotchFilter(30.0).leakage == pytest.approx(1e-3)
    with pytest.raises(DomainError):
        NotchFilter(-1.0)


def test_solar_slope_fit():
    slope = fit_solar_slope(61000.0, 1204.0, 559.0)
    assert slope == pytest.approx(645.0 / 61000.0)
    assert solar_background(61000.0, slope, 559.0) == pytest.approx(1204.0)
    with pytest.raises(DomainError):
        fit_solar_slope(0.0, 1204.0, 559.0)
    with pytest.raises(DomainError):
        solar_background(-1.0, slope)
