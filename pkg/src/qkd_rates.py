"""Аналітична модель BB84: швидкості детектування з мертвим часом,
склад QBER, частка секретного ключа та похідні величини."""

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import entr

from src.utils.config import (AES_GCM_BYTES_PER_KEY, AES_GCM_KEY_BITS,
                              FIBER_LOSS_DB_PER_KM, QBER_LIMIT)
from src.utils.errors import DomainError, NumericalError

if TYPE_CHECKING:
    from src.scenario import LinkScenario

logger = logging.getLogger(__name__)

#Стани BB84: базис = стан // 2, ортогональний стан = стан ^ 1
STATES = ("H", "V", "R", "L")
TOPOLOGIES = {"per_output": 4, "per_basis": 2}

SWEEP_COLUMNS = ["sifted_hz", "qber", "skr_hz", "fiber_km", "capacity_bps"]


@dataclass(frozen=True)
class SourceSpec:
    symbol_rate_hz: float = 1e9
    mean_photon_number: float = 0.1
    duty_cycle: float = 0.5

    def __post_init__(self):
        if self.symbol_rate_hz <= 0 or self.mean_photon_number < 0:
            raise DomainError("частота символів має бути додатною, μ невід'ємним")
        if not 0 < self.duty_cycle <= 1:
            raise DomainError("коефіцієнт заповнення імпульсу поза (0, 1]")


@dataclass(frozen=True)
class DetectorModel:
    """Детектори одиночних фотонів

    per_output: по детектору на кожен вихід аналізатора (H, V, R, L);
    per_basis: по детектору на базис, обидва результати на одному детекторі.
    """
    efficiency: float = 0.10
    dead_time_s: float = 25e-6
    dark_rates_hz: Tuple[float, ...] = (559.0, 599.0, 559.0, 599.0)
    timestamp_resolution_s: float = 82.3e-12
    topology: str = "per_output"

    def __post_init__(self):
        if not 0 < self.efficiency <= 1:
            raise DomainError("ефективність детектора поза (0, 1]")
        if self.dead_time_s < 0 or any(d < 0 for d in self.dark_rates_hz):
            raise DomainError("мертвий час та темнові відліки не можуть бути від'ємними")
        if self.timestamp_resolution_s <= 0:
            raise DomainError("роздільна здатність часових міток має бути додатною")
        if self.topology not in TOPOLOGIES:
            raise DomainError(f"невідома топологія детекторів: {self.topology}")
        if len(self.dark_rates_hz) != TOPOLOGIES[self.topology]:
            raise DomainError(f"топологія {self.topology} потребує "
                              f"{TOPOLOGIES[self.topology]} детекторів")

    @property
    def count(self) -> int:
        return len(self.dark_rates_hz)

    def channel_basis(self, channel: int) -> int:
        return channel // 2 if self.topology == "per_output" else channel

    def channel_states(self, channel: int) -> Tuple[int, ...]:
        """Результати вимірювання, які реєструє канал"""
        if self.topology == "per_output":
            return (channel,)
        return (2 * channel, 2 * channel + 1)


@dataclass(frozen=True)
class NoiseEnvironment:
    background_rates_hz: Tuple[float, ...] = ()
    intrinsic_error: float = 0.0

    def __post_init__(self):
        if any(b < 0 for b in self.background_rates_hz):
            raise DomainError("фонові відліки не можуть бути від'ємними")
        if not 0 <= self.intrinsic_error < 0.5:
            raise DomainError("власна похибка поза [0, 0.5)")

    def background_for(self, count: int) -> np.ndarray:
        if not self.background_rates_hz:
            return np.zeros(count)
        if len(self.background_rates_hz) != count:
            raise DomainError("кількість фонових швидкостей не відповідає кількості детекторів")
        return np.asarray(self.background_rates_hz, dtype=float)


@dataclass(frozen=True)
class DetectionRates:
    incident_signal_hz: np.ndarray
    noise_hz: np.ndarray
    signal_rate_hz: np.ndarray
    background_rate_hz: np.ndarray
    sifted_signal_hz: float
    sifted_background_hz: float

    @property
    def sifted_rate_hz(self) -> float:
        return self.sifted_signal_hz + self.sifted_background_hz

    @property
    def output_rate_hz(self) -> np.ndarray:
        return self.signal_rate_hz + self.background_rate_hz


@dataclass(frozen=True)
class KeyRateReport:
    budget_db: float
    sifted_rate_hz: float
    qber: float
    secure_rate_hz: float
    fiber_equiv_km: float
    secured_capacity_bps: float
    classical_power_dbm: Optional[float] = None

    def to_row(self, axis: str = "budget_db") -> List[str]:
        first = self.budget_db if axis == "budget_db" else self.classical_power_dbm
        values = [first, self.sifted_rate_hz, self.qber, self.secure_rate_hz,
                  self.fiber_equiv_km, self.secured_capacity_bps]
        return [_fmt(v) for v in values]

    def to_dict(self) -> dict:
        return {
            "budget_db": self.budget_db,
            "classical_power_dbm": self.classical_power_dbm,
            "sifted_hz": self.sifted_rate_hz,
            "qber": self.qber,
            "skr_hz": self.secure_rate_hz,
            "fiber_km": self.fiber_equiv_km,
            "capacity_bps": self.secured_capacity_bps,
        }


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.6g}"


def binary_entropy(p: float) -> float:
    """h2(p) = −p·log2(p) − (1−p)·log2(1−p)"""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"ймовірність {p} поза [0, 1]")
    return float((entr(p) + entr(1.0 - p)) / math.log(2.0))


def secure_fraction(q: float, error_correction_efficiency: float = 1.0) -> float:
    """Асимптотична частка секретного ключа max(0, 1 − f·h2(Q) − h2(Q))"""
    if not 0.0 <= q <= 0.5:
        raise DomainError(f"QBER {q} поза [0, 0.5]")
    h = binary_entropy(q)
    return max(0.0, 1.0 - error_correction_efficiency * h - h)


def secure_qber_threshold(error_correction_efficiency: float = 1.0) -> float:
    """QBER, при якому частка секретного ключа досягає нуля"""
    return brentq(lambda q: 1.0 - (1.0 + error_correction_efficiency) * binary_entropy(q),
                  1e-9, 0.5, xtol=1e-12)


def dead_time_saturation(incident_rate_hz, dead_time_s: float):
    """Непаралізовна модель: R_out = R_in/(1 + R_in·τ)"""
    rate = np.asarray(incident_rate_hz, dtype=float)
    if np.any(rate < 0):
        raise DomainError("швидкість падаючих відліків не може бути від'ємною")
    result = rate / (1.0 + rate * dead_time_s)
    return float(result) if result.ndim == 0 else result


def incident_signal_rate(src: SourceSpec, det: DetectorModel, budget_db: float,
                         system_efficiency: float = 1.0) -> float:
    """Частота кліків сигналу на один детектор (пуассонівська статистика імпульсу)"""
    mean_detected = (src.mean_photon_number * 10.0 ** (-budget_db / 10.0)
                     * det.efficiency * system_efficiency)
    return src.symbol_rate_hz * -math.expm1(-mean_detected / det.count)


def detection_rates(src: SourceSpec, det: DetectorModel, env: NoiseEnvironment,
                    budget_db: float, system_efficiency: float = 1.0,
                    evaluation_efficiency: float = 1.0) -> DetectionRates:
    """Швидкості сигналу та шуму на кожному детекторі і просіяна швидкість

    Args:
        src: Джерело
        det: Детектори
        env: Фон та власна похибка
        budget_db: Загальні втрати каналу
        system_efficiency: Калібрована ефективність приймача
        evaluation_efficiency: Частка просіяних подій, що лишає офлайн-обробка

    Returns:
        DetectionRates з насиченими частками сигналу й шуму
    """
    if budget_db < 0:
        raise DomainError("бюджет втрат не може бути від'ємним")

    signal = np.full(det.count, incident_signal_rate(src, det, budget_db, system_efficiency))
    noise = np.asarray(det.dark_rates_hz, dtype=float) + env.background_for(det.count)
    incident = signal + noise
    scale = 1.0 / (1.0 + incident * det.dead_time_s)
    signal_out = signal * scale
    noise_out = noise * scale

    sift = 0.5 * evaluation_efficiency
    return DetectionRates(signal, noise, signal_out, noise_out,
                          float(sift * signal_out.sum()), float(sift * noise_out.sum()))


def qber(signal_rate: float, background_rate: float, e_int: float) -> float:
    """Q = (e_int·S + 0.5·B)/(S + B)"""
    if signal_rate < 0 or background_rate < 0:
        raise DomainError("швидкості не можуть бути від'ємними")
    total = signal_rate + background_rate
    if total == 0:
        raise DomainError("немає ні сигналу, ні фону для оцінки QBER")
    return (e_int * signal_rate + 0.5 * background_rate) / total


def fiber_equivalent(budget_db: float, loss_db_per_km: float = FIBER_LOSS_DB_PER_KM) -> float:
    if budget_db < 0:
        raise DomainError("бюджет втрат не може бути від'ємним")
    return budget_db / loss_db_per_km


def aes_gcm_secured_capacity(skr_bps: float) -> float:
    """Пропускна здатність, яку захищає оновлення ключа AES-GCM кожні 64 ГБ"""
    if skr_bps < 0:
        raise DomainError("швидкість секретного ключа не може бути від'ємною")
    return skr_bps / AES_GCM_KEY_BITS * AES_GCM_BYTES_PER_KEY * 8


def evaluate(scenario: "LinkScenario", budget_db: Optional[float] = None,
             classical_power_dbm: Optional[float] = None) -> KeyRateReport:
    """Ланцюг detection_rates → qber → secure_fraction для однієї робочої точки"""
    calibration = scenario.require_calibration()
    if budget_db is None:
        budget_db = scenario.link_budget_db()
    env = scenario.noise_environment(classical_power_dbm)

    rates = detection_rates(scenario.source, scenario.detector, env, budget_db,
                            calibration.system_efficiency, calibration.evaluation_efficiency)
    q = qber(rates.sifted_signal_hz, rates.sifted_background_hz, env.intrinsic_error)
    skr = rates.sifted_rate_hz * secure_fraction(q, calibration.error_correction_efficiency)
    if not math.isfinite(skr):
        raise NumericalError(f"нескінченна швидкість ключа при бюджеті {budget_db} дБ")

    return KeyRateReport(
        budget_db=budget_db,
        sifted_rate_hz=rates.sifted_rate_hz,
        qber=q,
        secure_rate_hz=skr,
        fiber_equiv_km=fiber_equivalent(budget_db),
        secured_capacity_bps=aes_gcm_secured_capacity(skr),
        classical_power_dbm=classical_power_dbm,
    )


def sweep_budget(scenario: "LinkScenario", budgets: Sequence[float]) -> List[KeyRateReport]:
    if not budgets:
        raise DomainError("сітка бюджетів порожня")
    return [evaluate(scenario, float(b)) for b in budgets]


def sweep_classical_power(scenario: "LinkScenario", powers_dbm: Sequence[float],
                          budget_db: Optional[float] = None) -> List[KeyRateReport]:
    if not powers_dbm:
        raise DomainError("сітка потужностей порожня")
    if budget_db is None:
        budget_db = scenario.link_budget_db()
    return [evaluate(scenario, budget_db, float(p)) for p in powers_dbm]


def qber_crossing_budget(scenario: "LinkScenario", limit: float = QBER_LIMIT,
                         classical_power_dbm: Optional[float] = None) -> float:
    """Бюджет втрат, при якому QBER досягає межі"""
    def excess(budget):
        return evaluate(scenario, budget, classical_power_dbm).qber - limit

    if excess(0.0) >= 0:
        raise NumericalError(f"QBER перевищує {limit:.1%} вже при нульових втратах")
    try:
        return brentq(excess, 0.0, 120.0, xtol=1e-9)
    except ValueError as e:
        raise NumericalError(f"не вдалося знайти перетин межі QBER: {e}")


def budget_headroom(scenario: "LinkScenario", limit: float = QBER_LIMIT) -> float:
    """Запас бюджету між робочою точкою сценарію та межею QBER"""
    operating = scenario.link_budget_db()
    crossing = qber_crossing_budget(scenario, limit)
    logger.info(f"Перетин межі QBER при {crossing:.2f} дБ, робоча точка {operating:.2f} дБ")
    return crossing - operating
