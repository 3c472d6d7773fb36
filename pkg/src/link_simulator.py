import os
import logging
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence

from src.beam_optics import CouplingMap
from src.calibration import calibrate
from src.coexistence import per_channel_launch_dbm
from src.event_sim import generate_tags, sift_and_estimate, write_tag_csv, write_tag_file
from src.qkd_rates import (SWEEP_COLUMNS, aes_gcm_secured_capacity, budget_headroom, evaluate,
                           qber_crossing_budget, secure_qber_threshold, sweep_budget,
                           sweep_classical_power)
from src.report_generator import ReportGenerator
from src.scenario import LinkScenario
from src.sounding import fallbacks_within, run_sounding
from src.utils.config import DEFAULT_LOG_DIR, DEFAULT_OUT_DIR, QBER_LIMIT, ConfigManager
from src.utils.errors import NumericalError

FALLBACK_WINDOW_DB = 3.0


class LinkSimulator:
    """Основний клас для прогонів симулятора лінії за файлом сценарію"""

    def __init__(self, scenario_path: Optional[str], out_dir: str = DEFAULT_OUT_DIR,
                 seed: Optional[int] = None, output_format: str = "csv",
                 log_dir: str = DEFAULT_LOG_DIR):
        """Ініціалізація симулятора: логування, сценарій, генератор звітів"""
        self.scenario_path = scenario_path
        self.log_dir = log_dir
        self._setup_logging()

        self.config_manager = ConfigManager(scenario_path)
        self.config = self.config_manager.load_config()
        self.scenario = LinkScenario.from_config(self.config, self.config_manager)
        self.seed = self.scenario.seed if seed is None else seed
        self.report_generator = ReportGenerator(out_dir, output_format)

    def _setup_logging(self) -> None:
        """Налаштування системи логування (лог поза директорією результатів)"""
        os.makedirs(self.log_dir, exist_ok=True)

        log_filename = f"fsoqkd_{datetime.now().strftime('%Y%m%d_%H%M%S')}.log"
        log_path = os.path.join(self.log_dir, log_filename)

        logging.basicConfig(
            level=logging.INFO,
            format='%(asctime)s - %(levelname)s - %(message)s',
            handlers=[
                logging.FileHandler(log_path),
                logging.StreamHandler()
            ]
        )
        self.logger = logging.getLogger(__name__)

    def parameters(self) -> Dict[str, Any]:
        """Параметри прогону: сценарій, зерно, калібрування"""
        data = self.scenario.summary()
        data["seed"] = self.seed
        return data

    def build_map(self) -> Dict[str, Any]:
        """
        Модель карти зв'язку та зондування підмножин елементів

        Returns:
            dict: Найкраща пара, її втрати, кількість придатних і запасних пар
        """
        scenario = self.scenario
        scenario.require_calibration()
        coupling_map = scenario.coupling_map()
        tx_ids, rx_ids = scenario.element_subsets()

        self.logger.info(f"Зондування {len(tx_ids)}×{len(rx_ids)} пар елементів")
        result = run_sounding(coupling_map.loss, tx_ids, rx_ids, scenario.sounding,
                              self.seed, scenario.distance_m)

        self._write_map("coupling_map", coupling_map)
        self._write_map("measured_map", result.coupling_map)
        self.report_generator.write_table("ranking", ["tx", "rx", "loss_db"],
                                          result.ranking.to_rows())
        self.report_generator.write_lines("sounding_trace.jsonl", result.trace_lines())

        best_tx, best_rx, best_loss = coupling_map.best_pair()
        ordered = sorted(coupling_map.rx_slice(best_tx))
        suppression = ordered[1] - ordered[0] if len(ordered) > 1 else float("nan")
        fallbacks = fallbacks_within(result.ranking, FALLBACK_WINDOW_DB)

        summary = {
            "best_pair": [best_tx, best_rx],
            "best_loss_db": best_loss,
            "sounded_best_pair": list(result.ranking.best),
            "usable_pairs": result.ranking.usable_count,
            "fallbacks_within_3db": len(fallbacks),
            "second_rx_suppression_db": suppression,
            "sounding_valid": result.valid,
        }
        self.report_generator.generate_run_report("map", self.parameters(), summary)
        return summary

    def _write_map(self, name: str, coupling_map: CouplingMap) -> str:
        """Карта у CSV (матриця) або JSON (матриця з метаданими та зерном)"""
        if self.report_generator.output_format == "json":
            payload = coupling_map.to_dict()
            payload["metadata"] = dict(payload["metadata"], seed=self.seed)
            return self.report_generator.write_json(name, payload)
        header, rows = coupling_map.to_rows()
        return self.report_generator.write_table(name, header, rows)

    def sweep_budget(self, budgets: Optional[Sequence[float]] = None) -> Dict[str, Any]:
        """Розгортка за бюджетом втрат з перетином межі QBER"""
        budgets = list(budgets) if budgets else list(self.scenario.sweep.budgets_db)
        reports = sweep_budget(self.scenario, budgets)
        self.report_generator.write_table("sweep_budget", ["budget_db"] + SWEEP_COLUMNS,
                                          [r.to_row("budget_db") for r in reports])

        summary: Dict[str, Any] = {"points": len(reports)}
        notes: List[str] = []
        try:
            summary["qber_limit_budget_db"] = qber_crossing_budget(self.scenario, QBER_LIMIT)
            summary["headroom_db"] = budget_headroom(self.scenario, QBER_LIMIT)
        except NumericalError as e:
            self.logger.warning(f"Межу QBER не знайдено: {e}")
            notes.append(str(e))
        summary["operating_budget_db"] = self.scenario.link_budget_db()
        summary["secure_qber_threshold"] = secure_qber_threshold(
            self.scenario.require_calibration().error_correction_efficiency)
        self.report_generator.generate_run_report("sweep-budget", self.parameters(), summary, notes)
        return summary

    def sweep_power(self, powers: Optional[Sequence[float]] = None,
                    budget_db: Optional[float] = None) -> Dict[str, Any]:
        """Розгортка за потужністю класичних каналів та план каналів"""
        powers = list(powers) if powers else list(self.scenario.sweep.powers_dbm)
        reports = sweep_classical_power(self.scenario, powers, budget_db)
        self.report_generator.write_table("sweep_power", ["power_dbm"] + SWEEP_COLUMNS,
                                          [r.to_row("classical_power_dbm") for r in reports])

        plan = self.scenario.channel_plan
        self.report_generator.write_table("channel_plan",
                                          ["index", "wavelength_nm", "detuning_ghz", "role"],
                                          plan.to_rows())
        low, high = plan.detuning_range_hz()
        summary = {
            "points": len(reports),
            "budget_db": reports[0].budget_db,
            "min_detuning_ghz": low / 1e9,
            "max_detuning_ghz": high / 1e9,
            "qber_at_max_power": reports[-1].qber,
            "per_channel_launch_dbm_at_max_power": per_channel_launch_dbm(plan, powers[-1]),
        }
        self.report_generator.generate_run_report("sweep-power", self.parameters(), summary)
        return summary

    def montecarlo(self, duration_s: Optional[float] = None, budget_db: Optional[float] = None,
                   tags_csv: bool = False) -> Dict[str, Any]:
        """Прогін Монте-Карло з порівнянням з аналітичною моделлю"""
        duration_s = duration_s or self.scenario.sweep.duration_s
        run = generate_tags(self.scenario, duration_s, self.seed, budget_db)
        estimate = sift_and_estimate(run)
        analytic = evaluate(self.scenario, run.budget_db)

        write_tag_file(run, self.report_generator.path_for("tags.bin"))
        if tags_csv:
            write_tag_csv(run, self.report_generator.path_for("tags.csv"))

        payload = {
            "seed": self.seed,
            "duration_s": duration_s,
            "budget_db": run.budget_db,
            "tags": len(run),
            "estimate": estimate.to_dict(),
            "analytic": analytic.to_dict(),
        }
        if self.report_generator.output_format == "json":
            self.report_generator.write_json("montecarlo", payload)
        else:
            header = ["quantity", "montecarlo", "analytic"]
            rows = [
                ["sifted_hz", f"{estimate.sifted_rate_hz:.6g}", f"{analytic.sifted_rate_hz:.6g}"],
                ["qber", "" if estimate.qber is None else f"{estimate.qber:.6g}",
                 f"{analytic.qber:.6g}"],
            ]
            self.report_generator.write_table("montecarlo", header, rows)

        summary = {
            "tags": len(run),
            "sifted_hz": estimate.sifted_rate_hz,
            "qber": estimate.qber if estimate.qber is not None else "n/a",
            "analytic_sifted_hz": analytic.sifted_rate_hz,
            "analytic_qber": analytic.qber,
        }
        self.report_generator.generate_run_report("montecarlo", self.parameters(), summary)
        return summary

    def capacity(self, skr_bps: float) -> Dict[str, Any]:
        """Пропускна здатність, захищена AES-GCM для заданої швидкості ключа"""
        capacity = aes_gcm_secured_capacity(skr_bps)
        self.report_generator.write_table("capacity", ["skr_bps", "capacity_bps"],
                                          [[f"{skr_bps:.6g}", f"{capacity:.6g}"]])
        summary = {"skr_bps": skr_bps, "capacity_bps": capacity}
        self.report_generator.generate_run_report("capacity", self.parameters(), summary)
        return summary

    def calibrate(self, write: bool = True) -> Dict[str, Any]:
        """Підгонка констант і (за замовчуванням) запис у файл сценарію"""
        result = calibrate(self.scenario)
        self.scenario = result.apply(self.scenario)

        if write:
            updated = result.update_config(dict(self.config_manager.raw_data))
            self.config_manager.save_config(updated)
            self.logger.info(f"Калібрування записано у {self.scenario_path}")

        self.report_generator.write_json("calibration", {
            "calibration": result.calibration.to_dict(),
            "tx_excess_loss_db": result.tx_excess_loss_db,
            "rx_excess_loss_db": result.rx_excess_loss_db,
            "extra_loss_db": result.extra_loss_db,
            "notch_insertion_loss_db": result.notch_insertion_loss_db,
            "background_rates_hz": None if result.background_rates_hz is None
            else list(result.background_rates_hz),
        })
        operating = evaluate(self.scenario)
        summary = {
            "operating_budget_db": operating.budget_db,
            "sifted_hz": operating.sifted_rate_hz,
            "qber": operating.qber,
            "skr_hz": operating.secure_rate_hz,
        }
        self.report_generator.generate_run_report("calibrate", self.parameters(), summary)
        return summary
