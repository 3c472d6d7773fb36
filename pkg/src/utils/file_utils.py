import csv
import json
import os
from pathlib import Path
from typing import Any, Iterable, List, Sequence


def create_directory(path: str) -> None:
    """Створення директорії, якщо її не існує

    Args:
        path: Шлях до директорії
    """
    Path(path).mkdir(parents=True, exist_ok=True)


def write_csv_rows(file_path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Запис таблиці у CSV з фіксованим закінченням рядків

    Args:
        file_path: Шлях до файлу
        header: Заголовок таблиці
        rows: Рядки таблиці

    Returns:
        Шлях до записаного файлу
    """
    create_directory(os.path.dirname(file_path) or ".")
    with open(file_path, 'w', newline='', encoding='utf-8') as file:
        writer = csv.writer(file, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)
    return file_path


def write_json_file(file_path: str, payload: Any) -> str:
    """Запис JSON з відсортованими ключами (детермінований вивід)

    Args:
        file_path: Шлях до файлу
        payload: Дані для запису

    Returns:
        Шлях до записаного файлу
    """
    create_directory(os.path.dirname(file_path) or ".")
    with open(file_path, 'w', encoding='utf-8') as file:
        json.dump(payload, file, indent=2, sort_keys=True, ensure_ascii=False)
        file.write("\n")
    return file_path


def write_text_lines(file_path: str, lines: List[str]) -> str:
    """Запис рядків тексту (наприклад JSON-lines)"""
    create_directory(os.path.dirname(file_path) or ".")
    with open(file_path, 'w', encoding='utf-8') as file:
        for line in lines:
            file.write(line + "\n")
    return file_path
