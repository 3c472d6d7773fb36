"""Опис експерименту: два термінали, лінія, джерело, детектори, шуми та
калібровані константи."""

import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.beam_optics import CouplingMap, FpaTerminal, TerminalPose, simulate_coupling_map
from src.coexistence import (ChannelPlan, NotchFilter, build_channel_plan,
                             coexistence_noise_rate)
from src.fpa_geometry import CollimatorSpec, HexLattice
from src.qkd_rates import DetectorModel, NoiseEnvironment, SourceSpec
from src.sounding import SoundingConfig
from src.utils.config import REQUIRED_CALIBRATION_KEYS, ConfigManager
from src.utils.errors import ConfigError, DomainError

logger = logging.getLogger(__name__)

LINK_KINDS = ("fiber", "fso")


@dataclass(frozen=True)
class Calibration:
    system_efficiency: float
    evaluation_efficiency: float
    intrinsic_error: float
    raman_coefficient: float
    solar_slope_hz_per_lux: Tuple[float, ...]
    error_correction_efficiency: float = 1.0

    def slope_for(self, channel: int) -> float:
        slopes = self.solar_slope_hz_per_lux
        return slopes[channel % len(slopes)] if slopes else 0.0

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["solar_slope_hz_per_lux"] = [float(s) for s in self.solar_slope_hz_per_lux]
        return {k: (float(v) if isinstance(v, (float, np.floating)) else v)
                for k, v in data.items()}


@dataclass(frozen=True)
class CalibrationAnchors:
    """Виміряні опорні значення, до яких підганяється модель"""
    b2b_sifted_hz: float = 54300.0
    b2b_qber: float = 0.0207
    fso_budget_db: float = 15.5
    fso_sifted_hz: float = 23500.0
    fso_irradiance_lux: float = 800.0
    coexistence_power_dbm: float = 11.2
    coexistence_qber: float = 0.103
    coexistence_sifted_hz: Optional[float] = 17500.0
    solar_irradiance_lux: float = 61000.0
    solar_counts_hz: Tuple[float, ...] = (1204.0, 980.0)
    best_pair_loss_db: Optional[float] = None
    insertion_loss_floor_db: float = 2.0
    link_qber: Optional[float] = None
    link_sifted_hz: Optional[float] = None


@dataclass(frozen=True)
class SweepGrid:
    budgets_db: Tuple[float, ...]
    powers_dbm: Tuple[float, ...]
    duration_s: float = 10.0


@dataclass
class LinkScenario:
    name: str
    seed: int
    wavelength_m: float
    link_kind: str
    distance_m: float
    budget_db: float
    extra_loss_db: float
    tx: FpaTerminal
    rx: FpaTerminal
    source: SourceSpec
    detector: DetectorModel
    irradiance_lux: float
    classical_power_dbm: Optional[float]
    extra_background_hz: Tuple[float, ...]
    channel_plan: ChannelPlan
    notch_filter: NotchFilter
    sounding: SoundingConfig
    sweep: SweepGrid
    anchors: CalibrationAnchors
    calibration: Optional[Calibration] = None
    source_path: Optional[str] = None
    _coupling_map: Optional[CouplingMap] = field(default=None, init=False, repr=False,
                                                 compare=False)

    def __post_init__(self):
        if self.distance_m <= 0:
            raise ConfigError("link.distance_m має бути додатною", path=self.source_path)
        if self.link_kind not in LINK_KINDS:
            raise ConfigError(f"link.kind має бути одним з {LINK_KINDS}", path=self.source_path)

    @classmethod
    def from_file(cls, path: str) -> "LinkScenario":
        manager = ConfigManager(path)
        scenario = cls.from_config(manager.load_config(), manager)
        logger.info(f"Сценарій '{scenario.name}' завантажено з {path}")
        return scenario

    @classmethod
    def from_config(cls, config: Dict[str, Any],
                    manager: Optional[ConfigManager] = None) -> "LinkScenario":
        """Побудова сценарію зі словника конфігу; помилки з контекстом рядка"""
        manager = manager or ConfigManager()
        reader = _Reader(config, manager)

        section = "lattice"
        try:
            lattice = HexLattice(reader.get_float("lattice.pitch_m"), reader.get_int("lattice.rings"),
                                 reader.get_float("lattice.mode_field_diameter_m"))
            section = "collimator"
            collimator = CollimatorSpec(reader.get_float("collimator.focal_length_m"),
                                        reader.get_float("collimator.aperture_diameter_m"))
            section = "tx"
            tx = reader.terminal("tx", lattice, collimator)
            section = "rx"
            rx = reader.terminal("rx", lattice, collimator)
            section = "source"
            source = SourceSpec(reader.get_float("source.symbol_rate_hz"),
                                reader.get_float("source.mean_photon_number"),
                                reader.get_float("source.duty_cycle"))
            section = "detector"
            detector = DetectorModel(reader.get_float("detector.efficiency"),
                                     reader.get_float("detector.dead_time_s"),
                                     reader.get_floats("detector.dark_rates_hz"),
                                     reader.get_float("detector.timestamp_resolution_s"),
                                     reader.get_str("detector.topology"))
            section = "channel_plan"
            plan = build_channel_plan(
                data_channels=reader.get_int("channel_plan.data_channels"),
                channels_above=reader.get_int("channel_plan.channels_above"),
                spacing_hz=reader.get_float("channel_plan.spacing_hz"),
                guard_hz=reader.get_float("channel_plan.guard_hz"),
                supervisory_wavelength_m=reader.get_float("channel_plan.supervisory_wavelength_m"),
                quantum_wavelength_m=reader.get_float("wavelength_m"),
                wavelengths_m=reader.get_floats("channel_plan.wavelengths_m", optional=True))
            section = "notch_filter"
            notch = NotchFilter(reader.get_float("notch_filter.suppression_db_at_quantum"),
                                reader.get_float("notch_filter.insertion_loss_db"))
            section = "sounding"
            sounding = SoundingConfig(**{k: reader.get_float(f"sounding.{k}")
                                         for k in config["sounding"]})
            section = "sweep"
            sweep = SweepGrid(reader.get_floats("sweep.budgets_db"),
                              reader.get_floats("sweep.powers_dbm"),
                              reader.get_float("sweep.duration_s"))
            section = "anchors"
            anchors = reader.anchors()
            section = "calibration"
            calibration = reader.calibration()
            section = "link"
            scenario = cls(
                name=reader.get_str("name"),
                seed=reader.get_int("seed"),
                wavelength_m=reader.get_float("wavelength_m"),
                link_kind=reader.get_str("link.kind"),
                distance_m=reader.get_float("link.distance_m"),
                budget_db=reader.get_float("link.budget_db"),
                extra_loss_db=reader.get_float("link.extra_loss_db"),
                tx=tx,
                rx=rx,
                source=source,
                detector=detector,
                irradiance_lux=reader.get_float("environment.irradiance_lux"),
                classical_power_dbm=reader.get_float("environment.classical_power_dbm", optional=True),
                extra_background_hz=reader.get_floats("environment.background_rates_hz",
                                                  optional=True) or (),
                channel_plan=plan,
                notch_filter=notch,
                sounding=sounding,
                sweep=sweep,
                anchors=anchors,
                calibration=calibration,
                source_path=manager.config_path,
            )
        except DomainError as e:
            raise manager.error(section, str(e))
        except ConfigError as e:
            if e.path is None and manager.config_path:
                raise manager.error(section, str(e))
            raise
        return scenario

    def require_calibration(self) -> Calibration:
        if self.calibration is None:
            raise ConfigError("калібрування відсутнє, спочатку виконайте 'calibrate'",
                              path=self.source_path)
        return self.calibration

    def with_calibration(self, calibration: Calibration) -> "LinkScenario":
        return replace(self, calibration=calibration)

    def with_losses(self, tx_excess_db: Optional[float] = None,
                    rx_excess_db: Optional[float] = None,
                    extra_loss_db: Optional[float] = None) -> "LinkScenario":
        tx, rx = self.tx, self.rx
        if tx_excess_db is not None:
            tx = replace(tx, pose=replace(tx.pose, excess_loss_db=tx_excess_db))
        if rx_excess_db is not None:
            rx = replace(rx, pose=replace(rx.pose, excess_loss_db=rx_excess_db))
        extra = self.extra_loss_db if extra_loss_db is None else extra_loss_db
        return replace(self, tx=tx, rx=rx, extra_loss_db=extra)

    def coupling_map(self) -> CouplingMap:
        """Змодельована карта зв'язку (обчислюється один раз)"""
        if self._coupling_map is None:
            self._coupling_map = simulate_coupling_map(self.tx, self.rx, self.distance_m,
                                                       wavelength_m=self.wavelength_m)
        return self._coupling_map

    def link_budget_db(self, pair: Optional[Tuple[int, int]] = None) -> float:
        """Бюджет втрат робочої точки

        fiber: link.budget_db; fso: втрати найкращої (або заданої) пари плюс
        додаткові втрати лінії, а з класичними каналами ще й вносимі втрати
        режекторного фільтра.
        """
        if self.link_kind == "fiber":
            return self.budget_db
        coupling_map = self.coupling_map()
        if pair is None:
            loss = coupling_map.best_pair()[2]
        else:
            loss = coupling_map.loss(*pair)
        if self.classical_power_dbm is not None:
            loss += self.notch_filter.insertion_loss_db
        return loss + self.extra_loss_db

    def noise_environment(self, classical_power_dbm: Optional[float] = None) -> NoiseEnvironment:
        """Фон на кожному детекторі: сонце, співіснування та явні додатки

        Без явної потужності використовується потужність зі сценарію.
        """
        calibration = self.require_calibration()
        power = self.classical_power_dbm if classical_power_dbm is None else classical_power_dbm
        count = self.detector.count
        coexistence = coexistence_noise_rate(self.channel_plan, power, self.notch_filter,
                                             self.detector, calibration.raman_coefficient)
        background: List[float] = []
        for c in range(count):
            extra = self.extra_background_hz[c] if self.extra_background_hz else 0.0
            background.append(calibration.slope_for(c) * self.irradiance_lux
                              + coexistence / count + extra)
        return NoiseEnvironment(tuple(background), calibration.intrinsic_error)

    def element_subsets(self) -> Tuple[List[int], List[int]]:
        return self.tx.element_ids, self.rx.element_ids

    def summary(self) -> Dict[str, Any]:
        """Параметри, які друкуються разом з кожним результатом"""
        data: Dict[str, Any] = {
            "scenario": self.name,
            "seed": self.seed,
            "link_kind": self.link_kind,
            "distance_m": self.distance_m,
            "tx_excess_loss_db": self.tx.pose.excess_loss_db,
            "rx_excess_loss_db": self.rx.pose.excess_loss_db,
            "extra_loss_db": self.extra_loss_db,
        }
        if self.calibration is not None:
            data.update(self.calibration.to_dict())
        return data


class _Reader:
    """Читання типізованих значень конфігу з повідомленнями про рядок"""

    def __init__(self, config: Dict[str, Any], manager: ConfigManager):
        self.config = config
        self.manager = manager

    def _raw(self, dotted: str) -> Any:
        node: Any = self.config
        for part in dotted.split('.'):
            if not isinstance(node, dict) or part not in node:
                raise self.manager.error(dotted, "ключ відсутній")
            node = node[part]
        return node

    def get_float(self, dotted: str, optional: bool = False) -> Optional[float]:
        value = self._raw(dotted)
        if value is None and optional:
            return None
        if isinstance(value, bool):
            raise self.manager.error(dotted, "очікується число")
        try:
            return float(value)
        except (TypeError, ValueError):
            raise self.manager.error(dotted, f"очікується число, отримано {value!r}")

    def get_int(self, dotted: str) -> int:
        value = self._raw(dotted)
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.manager.error(dotted, f"очікується ціле число, отримано {value!r}")
        return value

    def get_str(self, dotted: str) -> str:
        value = self._raw(dotted)
        if not isinstance(value, str):
            raise self.manager.error(dotted, f"очікується рядок, отримано {value!r}")
        return value

    def get_floats(self, dotted: str, optional: bool = False) -> Optional[Tuple[float, ...]]:
        value = self._raw(dotted)
        if value is None and optional:
            return None
        if not isinstance(value, list):
            raise self.manager.error(dotted, f"очікується список чисел, отримано {value!r}")
        try:
            return tuple(float(v) for v in value)
        except (TypeError, ValueError):
            raise self.manager.error(dotted, f"очікується список чисел, отримано {value!r}")

    def terminal(self, name: str, lattice: HexLattice,
                 collimator: CollimatorSpec) -> FpaTerminal:
        position = self.get_floats(f"{name}.position_m")
        error = self.get_floats(f"{name}.boresight_error_rad")
        if len(position) != 3:
            raise self.manager.error(f"{name}.position_m", "очікується 3 координати")
        if len(error) != 2:
            raise self.manager.error(f"{name}.boresight_error_rad", "очікується 2 кути")
        subset = self._raw(f"{name}.subset_size")
        if subset is not None and (isinstance(subset, bool) or not isinstance(subset, int)):
            raise self.manager.error(f"{name}.subset_size", "очікується ціле число або null")
        if subset is not None:
            lattice.nearest_subset(subset)
        pose = TerminalPose(position, error, self.get_float(f"{name}.excess_loss_db"))
        return FpaTerminal(lattice, collimator, pose, subset)

    def anchors(self) -> CalibrationAnchors:
        values = dict(self.config["anchors"])
        kwargs: Dict[str, Any] = {}
        for key, value in values.items():
            dotted = f"anchors.{key}"
            if key == "solar_counts_hz":
                kwargs[key] = self.get_floats(dotted)
            else:
                kwargs[key] = self.get_float(dotted, optional=True)
        return CalibrationAnchors(**kwargs)

    def calibration(self) -> Optional[Calibration]:
        section = self.config.get("calibration")
        if not section:
            return None
        missing = [k for k in REQUIRED_CALIBRATION_KEYS if section.get(k) is None]
        if missing:
            raise self.manager.error("calibration", f"неповне калібрування, бракує {missing}")
        efficiency = section.get("error_correction_efficiency")
        return Calibration(
            system_efficiency=self.get_float("calibration.system_efficiency"),
            evaluation_efficiency=self.get_float("calibration.evaluation_efficiency"),
            intrinsic_error=self.get_float("calibration.intrinsic_error"),
            raman_coefficient=self.get_float("calibration.raman_coefficient"),
            solar_slope_hz_per_lux=self.get_floats("calibration.solar_slope_hz_per_lux"),
            error_correction_efficiency=1.0 if efficiency is None
            else self.get_float("calibration.error_correction_efficiency"),
        )
