"""План класичних DWDM каналів, режекторний фільтр та шум співіснування
(раманівське розсіяння і просочування крізь фільтр) у квантовому приймачі."""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import h as PLANCK

from src.qkd_rates import DetectorModel
from src.utils.config import (C_BAND_MIN_WAVELENGTH_M, L_BAND_MAX_WAVELENGTH_M,
                              QUANTUM_WAVELENGTH_M)
from src.utils.errors import ConfigError, DomainError

logger = logging.getLogger(__name__)

WAVELENGTH_TOLERANCE_M = 1e-12


class ChannelRole(Enum):
    DATA = "data"
    SUPERVISORY = "supervisory"


@dataclass(frozen=True)
class Channel:
    index: int
    wavelength_m: float
    role: ChannelRole

    @property
    def frequency_hz(self) -> float:
        return SPEED_OF_LIGHT / self.wavelength_m


@dataclass(frozen=True)
class ChannelPlan:
    channels: Tuple[Channel, ...]
    quantum_wavelength_m: float = QUANTUM_WAVELENGTH_M

    @property
    def quantum_frequency_hz(self) -> float:
        return SPEED_OF_LIGHT / self.quantum_wavelength_m

    def detuning_hz(self, channel: Channel) -> float:
        return abs(channel.frequency_hz - self.quantum_frequency_hz)

    @property
    def data_channels(self) -> List[Channel]:
        return [ch for ch in self.channels if ch.role == ChannelRole.DATA]

    def detuning_range_hz(self) -> Tuple[float, float]:
        detunings = [self.detuning_hz(ch) for ch in self.channels]
        return min(detunings), max(detunings)

    def to_rows(self) -> List[List[str]]:
        """Рядки (index, wavelength_nm, detuning_ghz, role)"""
        return [[str(ch.index), f"{ch.wavelength_m * 1e9:.3f}",
                 f"{self.detuning_hz(ch) / 1e9:.1f}", ch.role.value]
                for ch in self.channels]

    def validate(self, min_detuning_hz: float = 155.5e9) -> None:
        """Перевірка плану; ConfigError з номером каналу-порушника"""
        data = self.data_channels
        supervisory = [ch for ch in self.channels if ch.role == ChannelRole.SUPERVISORY]
        if len(data) != 47 or len(supervisory) != 1:
            raise ConfigError(f"план має містити 47 каналів даних і 1 службовий, "
                              f"отримано {len(data)} і {len(supervisory)}")
        for ch in self.channels:
            if not (C_BAND_MIN_WAVELENGTH_M - WAVELENGTH_TOLERANCE_M <= ch.wavelength_m
                    <= L_BAND_MAX_WAVELENGTH_M + WAVELENGTH_TOLERANCE_M):
                raise ConfigError(f"канал {ch.index}: довжина хвилі "
                                  f"{ch.wavelength_m * 1e9:.3f} нм поза діапазоном")
            if abs(ch.wavelength_m - self.quantum_wavelength_m) <= WAVELENGTH_TOLERANCE_M:
                raise ConfigError(f"канал {ch.index} збігається з квантовим каналом")
            if self.detuning_hz(ch) < min_detuning_hz - 1e6:
                raise ConfigError(f"канал {ch.index}: розстроювання "
                                  f"{self.detuning_hz(ch) / 1e9:.1f} ГГц менше за "
                                  f"{min_detuning_hz / 1e9:.1f} ГГц")


@dataclass(frozen=True)
class NotchFilter:
    suppression_db_at_quantum: float = 132.3
    insertion_loss_db: float = 0.0

    def __post_init__(self):
        if self.suppression_db_at_quantum < 0:
            raise DomainError("придушення фільтра не може бути від'ємним")

    @property
    def leakage(self) -> float:
        return 10.0 ** (-self.suppression_db_at_quantum / 10.0)


def build_channel_plan(data_channels: int = 47, channels_above: int = 24,
                       spacing_hz: float = 100e9, guard_hz: float = 155.5e9,
                       supervisory_wavelength_m: float = L_BAND_MAX_WAVELENGTH_M,
                       quantum_wavelength_m: float = QUANTUM_WAVELENGTH_M,
                       wavelengths_m: Optional[Sequence[float]] = None) -> ChannelPlan:
    """Сітка каналів даних навколо квантового каналу із захисним проміжком

    Args:
        data_channels: Кількість каналів даних
        channels_above: Скільки з них вище за частотою квантового каналу
        spacing_hz: Крок сітки
        guard_hz: Розстроювання найближчих каналів
        supervisory_wavelength_m: Довжина хвилі службового каналу
        quantum_wavelength_m: Довжина хвилі квантового каналу
        wavelengths_m: Явні довжини хвиль каналів даних замість сітки

    Returns:
        Перевірений план, канали пронумеровані за зростанням довжини хвилі
    """
    if wavelengths_m is None:
        f_q = SPEED_OF_LIGHT / quantum_wavelength_m
        below = data_channels - channels_above
        freqs = [f_q + guard_hz + k * spacing_hz for k in range(channels_above)]
        freqs += [f_q - guard_hz - k * spacing_hz for k in range(below)]
        wavelengths_m = [SPEED_OF_LIGHT / f for f in freqs]

    entries = [(w, ChannelRole.DATA) for w in wavelengths_m]
    entries.append((supervisory_wavelength_m, ChannelRole.SUPERVISORY))
    entries.sort(key=lambda e: e[0])

    plan = ChannelPlan(tuple(Channel(i + 1, w, role) for i, (w, role) in enumerate(entries)),
                       quantum_wavelength_m)
    plan.validate(min_detuning_hz=guard_hz)
    low, high = plan.detuning_range_hz()
    logger.info(f"План каналів: розстроювання {low / 1e9:.1f} ГГц .. {high / 1e12:.2f} ТГц")
    return plan


def photon_energy(wavelength_m: float) -> float:
    return PLANCK * SPEED_OF_LIGHT / wavelength_m


def dbm_to_watts(power_dbm: float) -> float:
    return 1e-3 * 10.0 ** (power_dbm / 10.0)


def coexistence_noise_rate(plan: ChannelPlan, aggregate_power_dbm: Optional[float],
                           notch: NotchFilter, det: DetectorModel,
                           raman_coefficient: float) -> float:
    """Сумарна швидкість шумових відліків від класичних каналів

    Лінійна за потужністю: просочування крізь фільтр плюс раманівська складова ρ·P.
    """
    if aggregate_power_dbm is None:
        return 0.0
    power_w = dbm_to_watts(aggregate_power_dbm)
    leak_w = power_w * notch.leakage
    raman_w = raman_coefficient * power_w
    return det.efficiency * (leak_w + raman_w) / photon_energy(plan.quantum_wavelength_m)


def per_channel_launch_dbm(plan: ChannelPlan, aggregate_power_dbm: float) -> float:
    """Потужність одного каналу даних при рівному розподілі"""
    return aggregate_power_dbm - 10.0 * math.log10(len(plan.data_channels))


def solar_background(irradiance_lux: float, slope_hz_per_lux: float,
                     dark_rate_hz: float = 0.0) -> float:
    """Відліки детектора при освітленості: slope·E + dark"""
    if irradiance_lux < 0:
        raise DomainError("освітленість не може бути від'ємною")
    return slope_hz_per_lux * irradiance_lux + dark_rate_hz


def fit_solar_slope(irradiance_lux: float, counts_hz: float, dark_rate_hz: float) -> float:
    """Нахил відліків від освітленості за однією точкою поверх темнових відліків"""
    if irradiance_lux <= 0:
        raise DomainError("освітленість калібрування має бути додатною")
    return (counts_hz - dark_rate_hz) / irradiance_lux
