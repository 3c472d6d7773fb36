"""Колімація гаусового пучка та ефективність зв'язку між парами елементів
передавача і приймача."""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.fpa_geometry import CollimatorSpec, HexLattice, steering_angles
from src.utils.config import QUANTUM_WAVELENGTH_M
from src.utils.errors import DomainError

logger = logging.getLogger(__name__)

NEPER_TO_DB = 10.0 / math.log(10.0)


@dataclass(frozen=True)
class GaussianBeam:
    waist_radius_m: float
    wavelength_m: float = QUANTUM_WAVELENGTH_M
    center_offset_m: Tuple[float, float] = (0.0, 0.0)
    direction_offset_rad: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.waist_radius_m <= 0 or self.wavelength_m <= 0:
            raise DomainError("радіус перетяжки та довжина хвилі мають бути додатними")

    @property
    def diameter_m(self) -> float:
        return 2.0 * self.waist_radius_m


@dataclass(frozen=True)
class TerminalPose:
    position_m: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    boresight_error_rad: Tuple[float, float] = (0.0, 0.0)
    excess_loss_db: float = 0.0

    def __post_init__(self):
        if self.excess_loss_db < 0:
            raise DomainError("додаткові втрати термінала не можуть бути від'ємними")


@dataclass(frozen=True)
class FpaTerminal:
    """Термінал: решітка, коліматор, положення та доступна підмножина елементів

    Поперечні осі обох терміналів збігаються з глобальними x/y;
    приймач дивиться вздовж −z.
    """
    lattice: HexLattice = field(default_factory=HexLattice)
    collimator: CollimatorSpec = field(default_factory=CollimatorSpec)
    pose: TerminalPose = field(default_factory=TerminalPose)
    subset_size: Optional[int] = None

    @property
    def element_ids(self) -> List[int]:
        if self.subset_size is None:
            return [idx.id for idx in self.lattice.indices]
        return [idx.id for idx in self.lattice.nearest_subset(self.subset_size)]


@dataclass
class CouplingMap:
    tx_ids: List[int]
    rx_ids: List[int]
    loss_db: np.ndarray
    distance_m: float
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.loss_db = np.asarray(self.loss_db, dtype=float)
        if self.loss_db.shape != (len(self.tx_ids), len(self.rx_ids)):
            raise DomainError("розмір матриці втрат не відповідає спискам елементів")

    def loss(self, tx_id: int, rx_id: int) -> float:
        return float(self.loss_db[self.tx_ids.index(tx_id), self.rx_ids.index(rx_id)])

    def best_pair(self) -> Tuple[int, int, float]:
        """Пара з мінімальними втратами (перша за порядком при рівності)"""
        flat = np.nanargmin(self.loss_db)
        i, j = np.unravel_index(flat, self.loss_db.shape)
        return self.tx_ids[i], self.rx_ids[j], float(self.loss_db[i, j])

    def rx_slice(self, tx_id: int) -> np.ndarray:
        return self.loss_db[self.tx_ids.index(tx_id)]

    def to_rows(self) -> Tuple[List[str], List[List[str]]]:
        """Заголовок з номерами RX та рядок на кожен TX, втрати з 3 знаками"""
        header = ["tx\\rx"] + [str(i) for i in self.rx_ids]
        rows = []
        for tx_id, row in zip(self.tx_ids, self.loss_db):
            rows.append([str(tx_id)] + ["nan" if np.isnan(v) else f"{v:.3f}" for v in row])
        return header, rows

    def to_dict(self) -> Dict[str, Any]:
        return {
            "distance_m": self.distance_m,
            "tx_ids": list(self.tx_ids),
            "rx_ids": list(self.rx_ids),
            "loss_db": [[None if np.isnan(v) else round(float(v), 3) for v in row]
                        for row in self.loss_db],
            "metadata": self.metadata,
        }


def collimate(lattice: HexLattice, collimator: CollimatorSpec,
              wavelength_m: float = QUANTUM_WAVELENGTH_M) -> GaussianBeam:
    """Колімований пучок: w = f·λ/(π·MFD/2)"""
    if wavelength_m <= 0:
        raise DomainError("довжина хвилі має бути додатною")
    waist = collimator.focal_length_m * wavelength_m / (math.pi * lattice.mode_field_diameter_m / 2.0)
    return GaussianBeam(waist_radius_m=waist, wavelength_m=wavelength_m)


def rayleigh_range(beam: GaussianBeam) -> float:
    return math.pi * beam.waist_radius_m ** 2 / beam.wavelength_m


def line_of_sight(tx: FpaTerminal, rx: FpaTerminal, distance_m: float) -> np.ndarray:
    """Поперечний нахил лінії візування від TX до RX"""
    delta = np.subtract(rx.pose.position_m, tx.pose.position_m)
    return delta[:2] / distance_m


def _coupling_loss(tx: FpaTerminal, tx_angles: np.ndarray, rx: FpaTerminal,
                   rx_angles: np.ndarray, distance_m: float, wavelength_m: float) -> np.ndarray:
    """Матриця втрат для всіх комбінацій кутів керування TX × RX"""
    if distance_m <= 0:
        raise DomainError("відстань лінії має бути додатною")

    beam = collimate(tx.lattice, tx.collimator, wavelength_m)
    z_r = rayleigh_range(beam)
    if distance_m >= z_r:
        logger.warning(f"Відстань {distance_m} м перевищує довжину Релея {z_r:.1f} м")

    los = line_of_sight(tx, rx, distance_m)
    # Відхилення від лінії візування у глобальній поперечній площині
    p_tx = tx_angles + np.asarray(tx.pose.boresight_error_rad) - los
    q_rx = rx_angles + np.asarray(rx.pose.boresight_error_rad) + los

    p = p_tx[:, None, :]
    q = q_rx[None, :, :]
    angular = p + q
    lateral = 0.5 * distance_m * (p - q)

    w = beam.waist_radius_m
    nepers = (np.sum(lateral ** 2, axis=-1) / w ** 2
              + (math.pi * w / wavelength_m) ** 2 * np.sum(angular ** 2, axis=-1))
    return NEPER_TO_DB * nepers + tx.pose.excess_loss_db + rx.pose.excess_loss_db


def pair_coupling(tx: FpaTerminal, tx_id: int, rx: FpaTerminal, rx_id: int,
                  distance_m: float, wavelength_m: float = QUANTUM_WAVELENGTH_M) -> float:
    """Втрати зв'язку однієї пари елементів у дБ

    Args:
        tx: Термінал передавача
        tx_id: Номер елемента TX
        rx: Термінал приймача
        rx_id: Номер елемента RX
        distance_m: Довжина лінії
        wavelength_m: Довжина хвилі

    Returns:
        −10·log10(η) плюс додаткові втрати обох терміналів
    """
    tx_angles = steering_angles(tx.lattice, tx.collimator, [tx_id])
    rx_angles = steering_angles(rx.lattice, rx.collimator, [rx_id])
    return float(_coupling_loss(tx, tx_angles, rx, rx_angles, distance_m, wavelength_m)[0, 0])


def simulate_coupling_map(tx: FpaTerminal, rx: FpaTerminal, distance_m: float,
                          tx_ids: Optional[Sequence[int]] = None,
                          rx_ids: Optional[Sequence[int]] = None,
                          wavelength_m: float = QUANTUM_WAVELENGTH_M) -> CouplingMap:
    """Карта втрат для декартового добутку підмножин TX і RX"""
    tx_ids = list(tx_ids) if tx_ids is not None else tx.element_ids
    rx_ids = list(rx_ids) if rx_ids is not None else rx.element_ids
    if not tx_ids or not rx_ids:
        raise DomainError("підмножини елементів не можуть бути порожніми")

    loss = _coupling_loss(tx, steering_angles(tx.lattice, tx.collimator, tx_ids),
                          rx, steering_angles(rx.lattice, rx.collimator, rx_ids),
                          distance_m, wavelength_m)
    metadata = {
        "tx_pose": _pose_dict(tx.pose),
        "rx_pose": _pose_dict(rx.pose),
        "wavelength_m": wavelength_m,
    }
    return CouplingMap(tx_ids, rx_ids, loss, distance_m, metadata)


def _pose_dict(pose: TerminalPose) -> Dict[str, Any]:
    return {
        "position_m": list(pose.position_m),
        "boresight_error_rad": list(pose.boresight_error_rad),
        "excess_loss_db": pose.excess_loss_db,
    }
