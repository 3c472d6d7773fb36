"""Монте-Карло генератор часових міток: статистика фотонів, мертвий час
детекторів, квантування TTM, офлайн просіювання та оцінка QBER."""

import csv
import logging
import math
import struct
from dataclasses import dataclass
from typing import TYPE_CHECKING, Dict, Iterator, List, Optional, Tuple

import numpy as np
from scipy.stats import poisson

from src.qkd_rates import STATES, DetectorModel, SourceSpec
from src.utils.errors import DomainError

if TYPE_CHECKING:
    from src.scenario import LinkScenario

logger = logging.getLogger(__name__)

TAG_MAGIC = b"FSOQ"
TAG_FORMAT_VERSION = 1
TAG_HEADER = struct.Struct("<4sHQ2x")
TAG_RECORD = np.dtype([("detector", "<u1"), ("tick", "<u8")])

ORIGIN_SIGNAL, ORIGIN_DARK, ORIGIN_BACKGROUND = 0, 1, 2

#Імпульси обробляються блоками такої тривалості
CHUNK_DURATION_S = 0.05


@dataclass(frozen=True)
class TimeTag:
    detector_id: int
    tick: int
    resolution_s: float
    true_state: int
    measured_state: int

    @property
    def time_s(self) -> float:
        return self.tick * self.resolution_s

    @property
    def true_state_name(self) -> str:
        return STATES[self.true_state]


@dataclass
class SimRun:
    """Потік міток одного прогону у вигляді стовпців NumPy"""
    seed: int
    duration_s: float
    scenario: "LinkScenario"
    budget_db: float
    detector_id: np.ndarray
    tick: np.ndarray
    true_state: np.ndarray
    measured_state: np.ndarray
    origin: np.ndarray

    @property
    def resolution_s(self) -> float:
        return self.scenario.detector.timestamp_resolution_s

    def __len__(self) -> int:
        return len(self.tick)

    @property
    def tags(self) -> List[TimeTag]:
        return list(self.iter_tags())

    def iter_tags(self) -> Iterator[TimeTag]:
        for d, t, a, m in zip(self.detector_id, self.tick, self.true_state, self.measured_state):
            yield TimeTag(int(d), int(t), self.resolution_s, int(a), int(m))

    def counts_per_detector(self) -> Dict[int, int]:
        counts = np.bincount(self.detector_id, minlength=self.scenario.detector.count)
        return {i: int(n) for i, n in enumerate(counts)}


@dataclass(frozen=True)
class SiftEstimate:
    sifted_rate_hz: float
    qber: Optional[float]
    sifted_count: int
    error_count: int
    counts_per_detector: Dict[int, int]
    rates_per_detector_hz: Dict[int, float]
    valid: bool = True

    def to_dict(self) -> dict:
        return {
            "sifted_rate_hz": self.sifted_rate_hz,
            "qber": self.qber,
            "sifted_count": self.sifted_count,
            "error_count": self.error_count,
            "counts_per_detector": {str(k): v for k, v in self.counts_per_detector.items()},
            "rates_per_detector_hz": {str(k): v for k, v in self.rates_per_detector_hz.items()},
            "valid": self.valid,
        }


def dead_time_ticks(detector: DetectorModel) -> int:
    return math.ceil(detector.dead_time_s / detector.timestamp_resolution_s)


def detected_photon_mean(source: SourceSpec, detector: DetectorModel, budget_db: float,
                         system_efficiency: float) -> float:
    """Середня кількість виявлених фотонів на імпульс (проріджування Пуассона)"""
    if budget_db < 0:
        raise DomainError("бюджет втрат не може бути від'ємним")
    survival = 10.0 ** (-budget_db / 10.0) * system_efficiency
    return source.mean_photon_number * survival * detector.efficiency


def _nonempty_slots(rng: np.random.Generator, p: float, start: int, stop: int) -> np.ndarray:
    """Номери імпульсів у [start, stop), які несуть хоча б один виявлений фотон

    Проміжки між такими імпульсами геометричні; надлишок за межею відкидається.
    """
    if p <= 0:
        return np.zeros(0, dtype=np.int64)
    size = int((stop - start) * p * 1.1) + 16
    parts = []
    cursor = start - 1
    while True:
        slots = cursor + np.cumsum(rng.geometric(p, size=size))
        inside = slots[slots < stop]
        parts.append(inside)
        if len(inside) < len(slots):
            break
        cursor = int(slots[-1])
    return np.concatenate(parts).astype(np.int64)


def _photon_counts(rng: np.random.Generator, mean: float, size: int) -> np.ndarray:
    """Кількість виявлених фотонів у непорожньому імпульсі: Пуассон(mean) за умови ≥ 1"""
    counts = np.ones(size, dtype=np.int64)
    if size == 0:
        return counts
    u = rng.random(size)
    p_zero = math.exp(-mean)
    p_one = mean * p_zero / -math.expm1(-mean)
    more = u >= p_one
    if np.any(more):
        q = np.minimum(p_zero + u[more] * (1.0 - p_zero), np.nextafter(1.0, 0.0))
        counts[more] = np.maximum(poisson.ppf(q, mean), 2).astype(np.int64)
    return counts


def _route_photons(rng: np.random.Generator, alice: np.ndarray, counts: np.ndarray,
                   detector: DetectorModel,
                   e_int: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Пасивний вибір базису, вимірювання та вибір детектора для кожного фотона

    Returns:
        (номер імпульсу, канал, результат), по одному кліку на канал за імпульс
    """
    pulse = np.repeat(np.arange(len(alice), dtype=np.int64), counts)
    sent = alice[pulse]
    basis = rng.integers(0, 2, size=len(pulse))
    flip = (rng.random(len(pulse)) < e_int).astype(np.int64)
    random_bit = rng.integers(0, 2, size=len(pulse))
    outcome = np.where(basis == sent // 2, sent ^ flip, 2 * basis + random_bit)
    channel = outcome if detector.topology == "per_output" else basis

    _, first = np.unique(pulse * detector.count + channel, return_index=True)
    return pulse[first], channel[first], outcome[first]


def _apply_dead_time(ticks: np.ndarray, last: int, dead_ticks: int) -> Tuple[np.ndarray, int]:
    """Індекси подій, які приймає непаралізовний детектор

    ticks відсортовані; last - такт останнього прийнятого кліку.
    """
    if len(ticks) == 0:
        return np.zeros(0, dtype=np.int64), last
    following = np.searchsorted(ticks, ticks + dead_ticks + 1).tolist()
    i = int(np.searchsorted(ticks, last + dead_ticks + 1))
    accepted = []
    while i < len(following):
        accepted.append(i)
        i = following[i]
    if accepted:
        last = int(ticks[accepted[-1]])
    return np.asarray(accepted, dtype=np.int64), last


def generate_tags(scenario: "LinkScenario", duration_s: float, seed: int,
                  budget_db: Optional[float] = None) -> SimRun:
    """Прогін Монте-Карло по імпульсах джерела

    Імпульси йдуть з частотою символів; моделюються лише ті, що несуть виявлений
    фотон. Темнові та фонові відліки - незалежні пуассонівські потоки на кожному
    детекторі. Мертвий час застосовується до кожного детектора в порядку часу.

    Args:
        scenario: Калібрований сценарій
        duration_s: Тривалість прогону
        seed: Зерно генератора
        budget_db: Втрати каналу (за замовчуванням робоча точка сценарію)

    Returns:
        SimRun з мітками, впорядкованими за часом
    """
    if duration_s <= 0:
        raise DomainError("тривалість прогону має бути додатною")
    calibration = scenario.require_calibration()
    if budget_db is None:
        budget_db = scenario.link_budget_db()
    source, detector = scenario.source, scenario.detector
    env = scenario.noise_environment()
    mean = detected_photon_mean(source, detector, budget_db, calibration.system_efficiency)
    p_pulse = -math.expm1(-mean)

    rng = np.random.default_rng(seed)
    res = detector.timestamp_resolution_s
    period = 1.0 / source.symbol_rate_hz
    ticks_per_slot = period / res
    total_slots = int(round(duration_s * source.symbol_rate_hz))
    duration_ticks = int(round(duration_s / res))
    chunk_slots = max(1, int(CHUNK_DURATION_S * source.symbol_rate_hz))
    dead_ticks = dead_time_ticks(detector)
    dark = np.asarray(detector.dark_rates_hz, dtype=float)
    noise = dark + env.background_for(detector.count)
    last = [-(dead_ticks + 1)] * detector.count

    columns: Dict[str, List[np.ndarray]] = {k: [] for k in ("det", "tick", "a", "m", "origin")}
    for start in range(0, total_slots, chunk_slots):
        stop = min(start + chunk_slots, total_slots)
        slots = _nonempty_slots(rng, p_pulse, start, stop)
        alice = rng.integers(0, 4, size=len(slots))
        counts = _photon_counts(rng, mean, len(slots))
        pulse, channel, outcome = _route_photons(rng, alice, counts, detector,
                                                 env.intrinsic_error)
        offset = rng.random(len(slots)) * source.duty_cycle
        pulse_ticks = np.floor((slots + offset) * ticks_per_slot).astype(np.int64)

        for c in range(detector.count):
            on_channel = channel == c
            hits = pulse[on_channel]

            k = int(rng.poisson(noise[c] * (stop - start) * period))
            noise_slots = np.sort(rng.integers(start, stop, size=k))
            noise_ticks = np.floor((noise_slots + rng.random(k)) * ticks_per_slot).astype(np.int64)
            noise_alice = rng.integers(0, 4, size=k)
            # Відлік у слоті надісланого імпульсу бачить той самий стан Аліси
            pos = np.searchsorted(slots, noise_slots)
            same = pos < len(slots)
            same[same] = slots[pos[same]] == noise_slots[same]
            noise_alice[same] = alice[pos[same]]
            states = np.asarray(detector.channel_states(c))
            noise_measured = states[rng.integers(0, len(states), size=k)]
            noise_origin = np.where(rng.random(k) * noise[c] < dark[c],
                                    ORIGIN_DARK, ORIGIN_BACKGROUND)

            ticks = np.concatenate([pulse_ticks[hits], noise_ticks])
            order = np.argsort(ticks, kind="stable")
            ticks = ticks[order]
            keep, last[c] = _apply_dead_time(ticks, last[c], dead_ticks)
            keep = keep[ticks[keep] < duration_ticks]
            chosen = order[keep]

            n = len(chosen)
            columns["det"].append(np.full(n, c, dtype=np.uint8))
            columns["tick"].append(ticks[keep].astype(np.uint64))
            columns["a"].append(np.concatenate([alice[hits], noise_alice])[chosen].astype(np.uint8))
            columns["m"].append(np.concatenate([outcome[on_channel],
                                                noise_measured])[chosen].astype(np.uint8))
            columns["origin"].append(np.concatenate([
                np.full(len(hits), ORIGIN_SIGNAL), noise_origin])[chosen].astype(np.uint8))

    if columns["tick"]:
        merged = {k: np.concatenate(v) for k, v in columns.items()}
    else:
        merged = {k: np.zeros(0, dtype=np.uint64 if k == "tick" else np.uint8) for k in columns}
    order = np.lexsort((merged["det"], merged["tick"]))

    run = SimRun(seed, duration_s, scenario, budget_db,
                 merged["det"][order], merged["tick"][order], merged["a"][order],
                 merged["m"][order], merged["origin"][order])
    logger.info(f"Згенеровано {len(run)} міток за {duration_s} с (seed={seed})")
    return run


def sift_and_estimate(run: SimRun, evaluation_efficiency: Optional[float] = None) -> SiftEstimate:
    """Просіювання за базисом, проріджування обробкою та оцінка QBER"""
    if evaluation_efficiency is None:
        evaluation_efficiency = run.scenario.require_calibration().evaluation_efficiency
    detector = run.scenario.detector

    basis_of_channel = np.array([detector.channel_basis(c) for c in range(detector.count)])
    matched = (run.true_state // 2) == basis_of_channel[run.detector_id]
    kept = np.random.default_rng([run.seed, 1]).random(len(run)) < evaluation_efficiency
    sifted = matched & kept

    sifted_count = int(sifted.sum())
    errors = int((run.true_state[sifted] != run.measured_state[sifted]).sum())
    counts = run.counts_per_detector()
    rates = {k: v / run.duration_s for k, v in counts.items()}

    if sifted_count == 0:
        logger.warning("Жодної просіяної події: QBER не визначений")
        return SiftEstimate(0.0, None, 0, 0, counts, rates, valid=False)
    return SiftEstimate(sifted_count / run.duration_s, errors / sifted_count,
                        sifted_count, errors, counts, rates)


def write_tag_file(run: SimRun, path: str) -> str:
    """Бінарний потік: 16-байтний заголовок і записи (u8 детектор, u64 такт)"""
    resolution_fs = int(round(run.resolution_s * 1e15))
    records = np.empty(len(run), dtype=TAG_RECORD)
    records["detector"] = run.detector_id
    records["tick"] = run.tick
    with open(path, "wb") as f:
        f.write(TAG_HEADER.pack(TAG_MAGIC, TAG_FORMAT_VERSION, resolution_fs))
        f.write(records.tobytes())
    return path


def read_tag_file(path: str) -> Tuple[float, np.ndarray]:
    """Читання бінарного потоку; повертає роздільну здатність і записи"""
    with open(path, "rb") as f:
        header = f.read(TAG_HEADER.size)
        if len(header) != TAG_HEADER.size:
            raise DomainError(f"файл міток {path} закороткий")
        magic, version, resolution_fs = TAG_HEADER.unpack(header)
        if magic != TAG_MAGIC or version != TAG_FORMAT_VERSION:
            raise DomainError(f"невідомий формат файлу міток {path}")
        records = np.frombuffer(f.read(), dtype=TAG_RECORD)
    return resolution_fs * 1e-15, records


def write_tag_csv(run: SimRun, path: str) -> str:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["detector_id", "tick", "time_s", "true_state", "measured_state"])
        for tag in run.iter_tags():
            writer.writerow([tag.detector_id, tag.tick, f"{tag.time_s:.12e}",
                             STATES[tag.true_state], STATES[tag.measured_state]])
    return path
