import os
import logging
from typing import Any, Dict, List, Optional, Sequence

from src.utils.file_utils import (create_directory, write_csv_rows, write_json_file,
                                  write_text_lines)

FORMATS = ("csv", "json")


class ReportGenerator:
    """Клас для запису результатів прогону у директорію виводу"""

    def __init__(self, report_dir: str = "results", output_format: str = "csv"):
        """Ініціалізація генератора звітів"""
        if output_format not in FORMATS:
            raise ValueError(f"Невідомий формат виводу: {output_format}")
        self.logger = logging.getLogger(__name__)
        self.report_dir = report_dir
        self.output_format = output_format
        self.written: List[str] = []
        create_directory(self.report_dir)

    def _path(self, name: str) -> str:
        return os.path.join(self.report_dir, name)

    def write_table(self, name: str, header: Sequence[str], rows: List[List[str]]) -> str:
        """
        Запис таблиці у вибраному форматі

        Args:
            name (str): Ім'я файлу без розширення
            header (list): Заголовок таблиці
            rows (list): Рядки значень (вже відформатовані)

        Returns:
            str: Шлях до записаного файлу
        """
        if self.output_format == "csv":
            path = write_csv_rows(self._path(f"{name}.csv"), header, rows)
        else:
            records = [dict(zip(header, row)) for row in rows]
            path = write_json_file(self._path(f"{name}.json"), records)
        return self._record(path)

    def write_json(self, name: str, payload: Any) -> str:
        return self._record(write_json_file(self._path(f"{name}.json"), payload))

    def write_lines(self, name: str, lines: List[str]) -> str:
        return self._record(write_text_lines(self._path(name), lines))

    def path_for(self, name: str) -> str:
        """Шлях для файлу, який записує інший модуль"""
        return self._record(self._path(name))

    def _record(self, path: str) -> str:
        self.written.append(path)
        self.logger.info(f"Записано {path}")
        return path

    def generate_run_report(self, command: str, parameters: Dict[str, Any],
                            results: Dict[str, Any], notes: Optional[List[str]] = None) -> str:
        """
        Створення підсумку прогону в Markdown (без часових позначок)

        Args:
            command (str): Назва підкоманди
            parameters (dict): Сценарій, зерно та калібрування
            results (dict): Основні результати
            notes (list): Додаткові зауваження

        Returns:
            str: Шлях до summary.md
        """
        path = self._path("summary.md")
        with open(path, 'w', encoding='utf-8') as f:
            f.write(f"# Підсумок: {command}\n\n")

            f.write("## Параметри\n\n")
            for key, value in parameters.items():
                f.write(f"- {key}: {self._format_value(value)}\n")
            f.write("\n")

            f.write("## Результати\n\n")
            for key, value in results.items():
                f.write(f"- {key}: {self._format_value(value)}\n")
            f.write("\n")

            if notes:
                f.write("## Зауваження\n\n")
                for note in notes:
                    f.write(f"- {note}\n")
                f.write("\n")

            files = [os.path.basename(p) for p in self.written]
            if files:
                f.write("## Файли\n\n")
                for name in files:
                    f.write(f"- `{name}`\n")

        return self._record(path)

    @staticmethod
    def _format_value(value: Any) -> str:
        """Форматування значення для підсумку"""
        if isinstance(value, float):
            return f"{value:.6g}"
        if isinstance(value, (list, tuple)):
            return "[" + ", ".join(ReportGenerator._format_value(v) for v in value) + "]"
        return str(value)
