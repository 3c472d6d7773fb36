"""Гексагональна решітка фокальної площини: позиції елементів, нумерація,
кути керування променем, поле зору та коефіцієнт заповнення."""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Tuple

import numpy as np

from src.utils.errors import DomainError


@dataclass(frozen=True)
class ElementIndex:
    """Елемент решітки: порядковий номер та аксіальні координати (q, r)"""
    id: int
    axial_q: int
    axial_r: int

    @property
    def ring(self) -> int:
        """Номер кільця (гексагональна відстань до центру)"""
        return max(abs(self.axial_q), abs(self.axial_r), abs(self.axial_q + self.axial_r))


@dataclass(frozen=True)
class HexLattice:
    pitch_m: float = 36.9e-6
    rings: int = 4
    mode_field_diameter_m: float = 8.4e-6

    def __post_init__(self):
        if self.pitch_m <= 0 or self.mode_field_diameter_m <= 0:
            raise DomainError("крок решітки та MFD мають бути додатними")
        if self.rings < 0:
            raise DomainError("кількість кілець не може бути від'ємною")

    @property
    def element_count(self) -> int:
        return 1 + 3 * self.rings * (self.rings + 1)

    @property
    def elements_per_axis(self) -> int:
        return 2 * self.rings + 1

    @cached_property
    def indices(self) -> List[ElementIndex]:
        """Нумерація рядками: верхній рядок першим, зліва направо"""
        result = []
        next_id = 1
        for r in range(self.rings, -self.rings - 1, -1):
            q_min = max(-self.rings, -self.rings - r)
            q_max = min(self.rings, self.rings - r)
            for q in range(q_min, q_max + 1):
                result.append(ElementIndex(next_id, q, r))
                next_id += 1
        return result

    @cached_property
    def _by_axial(self) -> Dict[Tuple[int, int], ElementIndex]:
        return {(idx.axial_q, idx.axial_r): idx for idx in self.indices}

    @property
    def center(self) -> ElementIndex:
        return self._by_axial[(0, 0)]

    def index(self, element_id: int) -> ElementIndex:
        """Елемент за номером"""
        if not 1 <= element_id <= self.element_count:
            raise DomainError(f"номер елемента {element_id} поза межами 1..{self.element_count}")
        return self.indices[element_id - 1]

    def index_at(self, q: int, r: int) -> ElementIndex:
        """Елемент за аксіальними координатами"""
        try:
            return self._by_axial[(q, r)]
        except KeyError:
            raise DomainError(f"координати ({q}, {r}) поза решіткою з {self.rings} кілець")

    def validate(self, idx: ElementIndex) -> None:
        if self._by_axial.get((idx.axial_q, idx.axial_r)) != idx:
            raise DomainError(f"недійсний індекс елемента: {idx}")

    def positions(self) -> np.ndarray:
        """Масив позицій (n, 2) у порядку номерів"""
        return np.array([element_position(self, idx) for idx in self.indices])

    def nearest_subset(self, count: int) -> List[ElementIndex]:
        """count елементів, найближчих до центру; рівні відстані впорядковані за номером"""
        if not 1 <= count <= self.element_count:
            raise DomainError(f"розмір підмножини {count} поза межами 1..{self.element_count}")
        radius = np.hypot(*self.positions().T) / self.pitch_m
        order = sorted(range(self.element_count), key=lambda i: (round(radius[i], 9), i))
        return sorted((self.indices[i] for i in order[:count]), key=lambda idx: idx.id)


@dataclass(frozen=True)
class CollimatorSpec:
    focal_length_m: float = 0.150
    aperture_diameter_m: float = 0.0508

    def __post_init__(self):
        if self.focal_length_m <= 0:
            raise DomainError("фокусна відстань має бути додатною")


def element_position(lattice: HexLattice, idx: ElementIndex) -> Tuple[float, float]:
    """Зміщення елемента у фокальній площині (x, y) у метрах

    Args:
        lattice: Решітка
        idx: Індекс елемента

    Returns:
        x = δ·(q + r/2), y = δ·(√3/2)·r
    """
    lattice.validate(idx)
    x = lattice.pitch_m * (idx.axial_q + idx.axial_r / 2.0)
    y = lattice.pitch_m * (math.sqrt(3.0) / 2.0) * idx.axial_r
    return x, y


def steering_angle(lattice: HexLattice, collimator: CollimatorSpec,
                   idx: ElementIndex) -> Tuple[float, float]:
    """Напрям променя (θx, θy) у радіанах, наближення малих кутів"""
    x, y = element_position(lattice, idx)
    return -x / collimator.focal_length_m, -y / collimator.focal_length_m


def steering_angles(lattice: HexLattice, collimator: CollimatorSpec,
                    ids: List[int]) -> np.ndarray:
    """Кути керування (n, 2) для списку номерів"""
    return np.array([steering_angle(lattice, collimator, lattice.index(i)) for i in ids])


def field_of_view(lattice: HexLattice, collimator: CollimatorSpec) -> float:
    """Поле зору N·δ/f у градусах"""
    return math.degrees(_field_of_view_rad(lattice, collimator))


def footprint(lattice: HexLattice, collimator: CollimatorSpec, distance_m: float) -> float:
    """Розмір області покриття на відстані distance_m"""
    return _field_of_view_rad(lattice, collimator) * distance_m


def _field_of_view_rad(lattice: HexLattice, collimator: CollimatorSpec) -> float:
    return lattice.elements_per_axis * lattice.pitch_m / collimator.focal_length_m


def fill_factor(lattice: HexLattice) -> Tuple[float, float]:
    """Коефіцієнт заповнення (MFD/δ)² та його значення в дБ"""
    ratio = (lattice.mode_field_diameter_m / lattice.pitch_m) ** 2
    return ratio, 10.0 * math.log10(ratio)
