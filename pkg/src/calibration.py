"""Підгонка констант моделі до опорних вимірювань сценарію."""

import logging
from dataclasses import dataclass, replace
from typing import Any, Dict, Optional, Tuple

from scipy.optimize import brentq

from src.coexistence import coexistence_noise_rate, fit_solar_slope
from src.qkd_rates import (DetectionRates, NoiseEnvironment, detection_rates, evaluate,
                           qber)
from src.scenario import Calibration, LinkScenario
from src.utils.errors import NumericalError

logger = logging.getLogger(__name__)

SYSTEM_EFFICIENCY_BRACKET = (0.02, 10.0)
RAMAN_BRACKET = (0.0, 1e-6)
NOTCH_LOSS_BRACKET_DB = (0.0, 8.0)
LINK_BACKGROUND_BRACKET_HZ = (0.0, 2000.0)


@dataclass(frozen=True)
class CalibrationResult:
    calibration: Calibration
    tx_excess_loss_db: Optional[float] = None
    rx_excess_loss_db: Optional[float] = None
    extra_loss_db: Optional[float] = None
    notch_insertion_loss_db: Optional[float] = None
    background_rates_hz: Optional[Tuple[float, ...]] = None

    def apply(self, scenario: LinkScenario) -> LinkScenario:
        applied = scenario.with_calibration(self.calibration).with_losses(
            self.tx_excess_loss_db, self.rx_excess_loss_db, self.extra_loss_db)
        if self.notch_insertion_loss_db is not None:
            applied = replace(applied, notch_filter=replace(
                applied.notch_filter, insertion_loss_db=self.notch_insertion_loss_db))
        if self.background_rates_hz is not None:
            applied = replace(applied, extra_background_hz=self.background_rates_hz)
        return applied

    def update_config(self, config: Dict[str, Any]) -> Dict[str, Any]:
        """Запис підігнаних значень у словник конфігу сценарію"""
        config["calibration"] = self.calibration.to_dict()
        if self.tx_excess_loss_db is not None:
            config.setdefault("tx", {})["excess_loss_db"] = self.tx_excess_loss_db
            config.setdefault("rx", {})["excess_loss_db"] = self.rx_excess_loss_db
        if self.extra_loss_db is not None:
            config.setdefault("link", {})["extra_loss_db"] = self.extra_loss_db
        if self.notch_insertion_loss_db is not None:
            config.setdefault("notch_filter", {})["insertion_loss_db"] = self.notch_insertion_loss_db
        if self.background_rates_hz is not None:
            config.setdefault("environment", {})["background_rates_hz"] = \
                [float(b) for b in self.background_rates_hz]
        return config


def fit_solar_slopes(scenario: LinkScenario) -> Tuple[float, ...]:
    """Нахил фонових відліків для кожного детектора"""
    anchors = scenario.anchors
    counts = anchors.solar_counts_hz
    return tuple(fit_solar_slope(anchors.solar_irradiance_lux, counts[c % len(counts)], dark)
                 for c, dark in enumerate(scenario.detector.dark_rates_hz))


def _environment(scenario: LinkScenario, slopes: Tuple[float, ...], irradiance_lux: float,
                 coexistence_hz: float = 0.0, e_int: float = 0.0) -> NoiseEnvironment:
    count = scenario.detector.count
    background = tuple(slopes[c % len(slopes)] * irradiance_lux + coexistence_hz / count
                       for c in range(count))
    return NoiseEnvironment(background, e_int)


def fit_efficiencies(scenario: LinkScenario, slopes: Tuple[float, ...]) -> Tuple[float, float]:
    """Спільна підгонка системної ефективності та ефективності обробки

    Внутрішня умова: просіяна швидкість при 0 дБ дорівнює опорній.
    Зовнішня: просіяна швидкість на FSO-лінії дорівнює опорній.
    """
    anchors = scenario.anchors
    b2b_env = _environment(scenario, slopes, 0.0)
    fso_env = _environment(scenario, slopes, anchors.fso_irradiance_lux)

    def rates(env: NoiseEnvironment, budget: float, efficiency: float,
              evaluation: float = 1.0) -> DetectionRates:
        return detection_rates(scenario.source, scenario.detector, env, budget,
                               efficiency, evaluation)

    def evaluation_for(efficiency: float) -> float:
        return anchors.b2b_sifted_hz / rates(b2b_env, 0.0, efficiency).sifted_rate_hz

    def residual(efficiency: float) -> float:
        predicted = rates(fso_env, anchors.fso_budget_db, efficiency,
                          evaluation_for(efficiency)).sifted_rate_hz
        return predicted - anchors.fso_sifted_hz

    try:
        efficiency = brentq(residual, *SYSTEM_EFFICIENCY_BRACKET, xtol=1e-12)
    except ValueError as e:
        raise NumericalError(f"підгонка системної ефективності не збіглася: {e}")
    return efficiency, evaluation_for(efficiency)


def fit_intrinsic_error(scenario: LinkScenario, slopes: Tuple[float, ...],
                        efficiency: float, evaluation: float) -> float:
    """Власна похибка з QBER при 0 дБ (розв'язок складу QBER відносно e_int)"""
    anchors = scenario.anchors
    rates = detection_rates(scenario.source, scenario.detector,
                            _environment(scenario, slopes, 0.0), 0.0, efficiency, evaluation)
    signal, background = rates.sifted_signal_hz, rates.sifted_background_hz
    e_int = (anchors.b2b_qber * (signal + background) - 0.5 * background) / signal
    if not 0.0 <= e_int < 0.5:
        raise NumericalError(f"власна похибка {e_int:.4f} поза [0, 0.5)")
    return e_int


def _coexistence_rates(scenario: LinkScenario, slopes: Tuple[float, ...], efficiency: float,
                       evaluation: float, e_int: float, rho: float,
                       budget_db: float) -> DetectionRates:
    anchors = scenario.anchors
    noise = coexistence_noise_rate(scenario.channel_plan, anchors.coexistence_power_dbm,
                                   scenario.notch_filter, scenario.detector, rho)
    env = _environment(scenario, slopes, anchors.fso_irradiance_lux, noise, e_int)
    return detection_rates(scenario.source, scenario.detector, env, budget_db,
                           efficiency, evaluation)


def fit_raman_coefficient(scenario: LinkScenario, slopes: Tuple[float, ...],
                          efficiency: float, evaluation: float, e_int: float,
                          budget_db: Optional[float] = None) -> float:
    """Раманівський коефіцієнт з точки (потужність, QBER) на FSO-лінії"""
    anchors = scenario.anchors
    if budget_db is None:
        budget_db = anchors.fso_budget_db

    def residual(rho: float) -> float:
        rates = _coexistence_rates(scenario, slopes, efficiency, evaluation, e_int, rho,
                                   budget_db)
        return qber(rates.sifted_signal_hz, rates.sifted_background_hz, e_int) \
            - anchors.coexistence_qber

    try:
        return brentq(residual, *RAMAN_BRACKET, xtol=1e-20)
    except ValueError as e:
        raise NumericalError(f"підгонка раманівського коефіцієнта не збіглася: {e}")


def fit_coexistence(scenario: LinkScenario, slopes: Tuple[float, ...], efficiency: float,
                    evaluation: float, e_int: float) -> Tuple[float, float]:
    """Спільна підгонка ρ та вносимих втрат режекторного фільтра

    Для кожних втрат ρ підганяється до опорного QBER, а втрати - до опорної
    просіяної швидкості при класичному навантаженні.

    Returns:
        (ρ, вносимі втрати у дБ)
    """
    anchors = scenario.anchors
    if anchors.coexistence_sifted_hz is None:
        return fit_raman_coefficient(scenario, slopes, efficiency, evaluation, e_int), 0.0

    def rho_for(loss: float) -> float:
        return fit_raman_coefficient(scenario, slopes, efficiency, evaluation, e_int,
                                     anchors.fso_budget_db + loss)

    def residual(loss: float) -> float:
        rates = _coexistence_rates(scenario, slopes, efficiency, evaluation, e_int,
                                   rho_for(loss), anchors.fso_budget_db + loss)
        return rates.sifted_rate_hz - anchors.coexistence_sifted_hz

    try:
        loss = brentq(residual, *NOTCH_LOSS_BRACKET_DB, xtol=1e-9)
    except ValueError as e:
        raise NumericalError(f"підгонка втрат режекторного фільтра не збіглася: {e}")
    return rho_for(loss), loss


def fit_excess_loss(scenario: LinkScenario) -> Optional[float]:
    """Додаткові втрати кожного термінала для опорних втрат найкращої пари"""
    anchors = scenario.anchors
    if scenario.link_kind != "fso" or anchors.best_pair_loss_db is None:
        return None
    geometric = scenario.with_losses(0.0, 0.0).coupling_map().best_pair()[2]
    excess = (anchors.best_pair_loss_db - geometric) / 2.0
    if excess < anchors.insertion_loss_floor_db:
        logger.warning(f"Підігнані втрати {excess:.2f} дБ нижчі за вносимі "
                       f"{anchors.insertion_loss_floor_db} дБ, використано мінімум")
        excess = anchors.insertion_loss_floor_db
    logger.info(f"Геометричні втрати найкращої пари {geometric:.3f} дБ, "
                f"додаткові на термінал {excess:.3f} дБ")
    return excess


def fit_extra_loss(scenario: LinkScenario) -> Optional[float]:
    """Додаткові втрати лінії, за яких робоча точка має опорний QBER"""
    target = scenario.anchors.link_qber
    if scenario.link_kind != "fso" or target is None:
        return None
    base = scenario.link_budget_db() - scenario.extra_loss_db

    def residual(budget: float) -> float:
        return evaluate(scenario, budget).qber - target

    try:
        budget = brentq(residual, base, base + 60.0, xtol=1e-9)
    except ValueError as e:
        raise NumericalError(f"підгонка втрат лінії не збіглася: {e}")
    return budget - base


def fit_link_operating_point(scenario: LinkScenario) -> Tuple[Optional[float],
                                                              Optional[Tuple[float, ...]]]:
    """Втрати лінії та додатковий фон для опорних QBER і просіяної швидкості

    Фон однаковий на всіх детекторах і замінює явно заданий у сценарії. Без
    опорної просіяної швидкості підганяються лише втрати лінії.

    Returns:
        (додаткові втрати у дБ, фон на кожному детекторі або None)
    """
    anchors = scenario.anchors
    if scenario.link_kind != "fso" or anchors.link_qber is None:
        return None, None
    if anchors.link_sifted_hz is None:
        return fit_extra_loss(scenario), None

    count = scenario.detector.count

    def with_background(extra_hz: float) -> LinkScenario:
        return replace(scenario, extra_background_hz=(extra_hz,) * count)

    def residual(extra_hz: float) -> float:
        shifted = with_background(extra_hz)
        loss = fit_extra_loss(shifted)
        return evaluate(replace(shifted, extra_loss_db=loss)).sifted_rate_hz \
            - anchors.link_sifted_hz

    try:
        extra_hz = brentq(residual, *LINK_BACKGROUND_BRACKET_HZ, xtol=1e-6)
    except ValueError as e:
        raise NumericalError(f"підгонка фону лінії не збіглася: {e}")
    shifted = with_background(extra_hz)
    return fit_extra_loss(shifted), shifted.extra_background_hz


def calibrate(scenario: LinkScenario) -> CalibrationResult:
    """Повна підгонка: сонячний фон, ефективності, e_int, ρ, втрати терміналів і лінії"""
    slopes = fit_solar_slopes(scenario)
    efficiency, evaluation = fit_efficiencies(scenario, slopes)
    e_int = fit_intrinsic_error(scenario, slopes, efficiency, evaluation)
    rho, notch_loss = fit_coexistence(scenario, slopes, efficiency, evaluation, e_int)
    f_ec = scenario.calibration.error_correction_efficiency if scenario.calibration else 1.0
    calibration = Calibration(efficiency, evaluation, e_int, rho, slopes, f_ec)
    logger.info(f"Калібрування: η_sys={efficiency:.5f}, κ={evaluation:.5f}, "
                f"e_int={e_int:.5f}, ρ={rho:.4e}")

    excess = fit_excess_loss(scenario)
    calibrated = scenario.with_calibration(calibration)
    if excess is not None:
        calibrated = calibrated.with_losses(excess, excess)

    notch = None
    if scenario.link_kind == "fso" and scenario.classical_power_dbm is not None:
        notch = notch_loss
        calibrated = replace(calibrated, notch_filter=replace(calibrated.notch_filter,
                                                              insertion_loss_db=notch))
        logger.info(f"Вносимі втрати режекторного фільтра {notch:.3f} дБ")

    extra, background = fit_link_operating_point(replace(calibrated, extra_loss_db=0.0))
    if extra is not None:
        logger.info(f"Додаткові втрати лінії {extra:.3f} дБ")
    if background is not None:
        logger.info(f"Додатковий фон лінії {background[0]:.1f} відл/с на детектор")
    return CalibrationResult(calibration, excess, excess, extra, notch, background)
