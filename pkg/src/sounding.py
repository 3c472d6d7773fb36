"""Протокол зондування каналу: контролер TX та агент RX обмінюються
повідомленнями допоміжного каналу керування, будують карту зв'язку,
ранжують пари елементів і приймають рішення при завмираннях."""

import json
import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from src.beam_optics import CouplingMap
from src.utils.errors import DomainError

logger = logging.getLogger(__name__)

#Справжні втрати пари; збій вимірювання - ValueError, KeyError або RuntimeError
Oracle = Callable[[int, int], float]


@dataclass(frozen=True)
class SoundingConfig:
    dwell_time_s: float = 1e-3
    power_meter_noise_db: float = 0.2
    resound_period_s: float = 60.0
    fade_trigger_db: float = 3.0
    margin_db: float = 0.5
    budget_db: float = 26.0
    launch_power_dbm: float = 0.0

    def __post_init__(self):
        if self.dwell_time_s <= 0 or self.resound_period_s <= 0:
            raise DomainError("тривалості зондування мають бути додатними")
        if self.fade_trigger_db <= 0:
            raise DomainError("поріг завмирання має бути додатним")
        if self.power_meter_noise_db < 0 or self.margin_db < 0:
            raise DomainError("шум вимірювача та запас не можуть бути від'ємними")


class MessageKind(Enum):
    BEGIN_SOUND = "BeginSound"
    SET_TX = "SetTx"
    SET_RX = "SetRx"
    REPORT = "Report"
    END_SOUND = "EndSound"
    ACK = "Ack"
    NACK = "Nack"


@dataclass(frozen=True)
class SoundingMessage:
    kind: MessageKind
    sequence: int
    timestamp_s: float
    tx_id: Optional[int] = None
    rx_id: Optional[int] = None
    power_dbm: Optional[float] = None

    def to_json(self) -> str:
        payload = {k: v for k, v in asdict(self).items() if v is not None}
        payload["kind"] = self.kind.value
        return json.dumps(payload, sort_keys=True)


@dataclass(frozen=True)
class RankedPair:
    tx_id: int
    rx_id: int
    loss_db: float


@dataclass
class PairRanking:
    entries: List[RankedPair]
    usable_count: int = 0

    @property
    def best(self) -> Tuple[int, int]:
        return select_pair(self)

    def position(self, pair: Tuple[int, int]) -> int:
        for i, entry in enumerate(self.entries):
            if (entry.tx_id, entry.rx_id) == tuple(pair):
                return i
        raise DomainError(f"пари {pair} немає у рейтингу")

    def to_rows(self) -> List[List[str]]:
        return [[str(e.tx_id), str(e.rx_id), f"{e.loss_db:.3f}"] for e in self.entries]


@dataclass
class SoundingResult:
    coupling_map: CouplingMap
    ranking: PairRanking
    trace: List[SoundingMessage] = field(default_factory=list)
    valid: bool = True

    def trace_lines(self) -> List[str]:
        return [msg.to_json() for msg in self.trace]


class Decision(Enum):
    STAY = "Stay"
    SWITCH_TO = "SwitchTo"
    RESOUND = "Resound"


@dataclass(frozen=True)
class FailoverDecision:
    action: Decision
    pair: Optional[Tuple[int, int]] = None


class ControlChannel:
    """Надійний впорядкований канал керування з наскрізною нумерацією"""

    def __init__(self):
        self.trace: List[SoundingMessage] = []
        self._sequence = 0
        self.clock_s = 0.0

    def send(self, kind: MessageKind, **fields) -> SoundingMessage:
        self._sequence += 1
        message = SoundingMessage(kind, self._sequence, round(self.clock_s, 12), **fields)
        self.trace.append(message)
        return message


class RxAgent:
    """Агент приймача: перемикає елемент RX і вимірює потужність"""

    def __init__(self, channel: ControlChannel, oracle: Oracle, cfg: SoundingConfig,
                 rng: np.random.Generator):
        self.channel = channel
        self.oracle = oracle
        self.cfg = cfg
        self.rng = rng
        self.active = False
        self.current_tx: Optional[int] = None
        self.current_rx: Optional[int] = None

    def handle(self, message: SoundingMessage) -> SoundingMessage:
        if message.kind == MessageKind.BEGIN_SOUND:
            self.active = True
            return self.channel.send(MessageKind.ACK)
        if message.kind == MessageKind.END_SOUND:
            self.active = False
            return self.channel.send(MessageKind.ACK)
        if message.kind == MessageKind.SET_TX:
            self.current_tx = message.tx_id
            return message
        if message.kind == MessageKind.SET_RX and self.active:
            self.current_rx = message.rx_id
            return self._measure()
        return self.channel.send(MessageKind.NACK)

    def _measure(self) -> SoundingMessage:
        try:
            true_loss = float(self.oracle(self.current_tx, self.current_rx))
        except (ValueError, KeyError, RuntimeError) as e:
            logger.error(f"Збій вимірювання пари ({self.current_tx}, {self.current_rx}): {e}")
            return self.channel.send(MessageKind.NACK, tx_id=self.current_tx,
                                     rx_id=self.current_rx)

        noise = self.rng.normal(0.0, self.cfg.power_meter_noise_db) \
            if self.cfg.power_meter_noise_db > 0 else 0.0
        self.channel.clock_s += self.cfg.dwell_time_s
        power = self.cfg.launch_power_dbm - (true_loss + noise)
        return self.channel.send(MessageKind.REPORT, tx_id=self.current_tx,
                                 rx_id=self.current_rx, power_dbm=round(power, 9))


class TxController:
    """Контролер передавача: керує циклом зондування всіх пар"""

    def __init__(self, channel: ControlChannel, agent: RxAgent, cfg: SoundingConfig):
        self.channel = channel
        self.agent = agent
        self.cfg = cfg

    def sweep(self, tx_ids: Sequence[int], rx_ids: Sequence[int]) -> Tuple[np.ndarray, bool]:
        """Зовнішній цикл по TX, внутрішній по RX"""
        measured = np.full((len(tx_ids), len(rx_ids)), np.nan)
        self.agent.handle(self.channel.send(MessageKind.BEGIN_SOUND))

        for i, tx_id in enumerate(tx_ids):
            self.agent.handle(self.channel.send(MessageKind.SET_TX, tx_id=tx_id))
            for j, rx_id in enumerate(rx_ids):
                reply = self.agent.handle(self.channel.send(MessageKind.SET_RX, rx_id=rx_id))
                if reply.kind != MessageKind.REPORT:
                    logger.warning(f"Сесію зондування перервано на парі ({tx_id}, {rx_id})")
                    self.agent.handle(self.channel.send(MessageKind.END_SOUND))
                    return measured, False
                measured[i, j] = max(0.0, self.cfg.launch_power_dbm - reply.power_dbm)

        self.agent.handle(self.channel.send(MessageKind.END_SOUND))
        return measured, True


def run_sounding(oracle: Oracle, tx_ids: Sequence[int], rx_ids: Sequence[int],
                 cfg: SoundingConfig, rng_seed: int, distance_m: float = 0.0) -> SoundingResult:
    """Повний цикл зондування

    Args:
        oracle: Функція справжніх втрат (tx_id, rx_id) -> дБ
        tx_ids: Підмножина елементів TX
        rx_ids: Підмножина елементів RX
        cfg: Параметри зондування
        rng_seed: Зерно шуму вимірювача
        distance_m: Довжина лінії для метаданих карти

    Returns:
        Виміряна карта, рейтинг пар та журнал повідомлень
    """
    tx_ids, rx_ids = list(tx_ids), list(rx_ids)
    if not tx_ids or not rx_ids:
        raise DomainError("підмножини елементів не можуть бути порожніми")

    channel = ControlChannel()
    agent = RxAgent(channel, oracle, cfg, np.random.default_rng(rng_seed))
    measured, valid = TxController(channel, agent, cfg).sweep(tx_ids, rx_ids)

    coupling_map = CouplingMap(tx_ids, rx_ids, measured, distance_m,
                               {"seed": rng_seed, "valid": valid})
    ranking = rank_pairs(coupling_map, cfg)
    logger.info(f"Зондування завершено: {len(ranking.entries)} пар, придатних {ranking.usable_count}")
    return SoundingResult(coupling_map, ranking, channel.trace, valid)


def rank_pairs(coupling_map: CouplingMap, cfg: SoundingConfig) -> PairRanking:
    """Рейтинг виміряних пар за зростанням втрат, рівність за (ζ, ξ)"""
    entries = []
    for i, tx_id in enumerate(coupling_map.tx_ids):
        for j, rx_id in enumerate(coupling_map.rx_ids):
            value = coupling_map.loss_db[i, j]
            if not np.isnan(value):
                entries.append(RankedPair(tx_id, rx_id, float(value)))
    entries.sort(key=lambda e: (e.loss_db, e.tx_id, e.rx_id))
    usable = sum(1 for e in entries if _is_usable(e, cfg))
    return PairRanking(entries, usable)


def _is_usable(entry: RankedPair, cfg: SoundingConfig) -> bool:
    return entry.loss_db + cfg.margin_db <= cfg.budget_db


def select_pair(ranking: PairRanking) -> Tuple[int, int]:
    if not ranking.entries:
        raise DomainError("рейтинг пар порожній")
    best = ranking.entries[0]
    return best.tx_id, best.rx_id


def fallbacks_within(ranking: PairRanking, window_db: float) -> List[RankedPair]:
    """Запасні пари, втрати яких не більше ніж на window_db гірші за найкращу"""
    if not ranking.entries:
        return []
    best = ranking.entries[0].loss_db
    return [e for e in ranking.entries[1:] if e.loss_db - best <= window_db]


def fading_failover(ranking: PairRanking, current: Tuple[int, int],
                    observed_drop_db: float, cfg: SoundingConfig) -> FailoverDecision:
    """Рішення при падінні потужності: залишитись, перемкнутись або перезондувати

    Перемикання на першу придатну пару після поточної, записані втрати якої
    менші за поточні втрати з урахуванням падіння.
    """
    start = ranking.position(current)
    if observed_drop_db < cfg.fade_trigger_db:
        return FailoverDecision(Decision.STAY)

    degraded = ranking.entries[start].loss_db + observed_drop_db
    for entry in ranking.entries[start + 1:]:
        if _is_usable(entry, cfg) and entry.loss_db < degraded:
            return FailoverDecision(Decision.SWITCH_TO, (entry.tx_id, entry.rx_id))
    return FailoverDecision(Decision.RESOUND)


def resound_due(last_sound_s: float, now_s: float, cfg: SoundingConfig) -> bool:
    """Чи настав час періодичного перезондування"""
    return now_s - last_sound_s >= cfg.resound_period_s
