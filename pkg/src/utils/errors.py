from typing import Optional


class DomainError(ValueError):
    """Аргумент поза областю визначення операції"""


class ConfigError(ValueError):
    """Помилка конфігу сценарію з контекстом файл/рядок"""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{location}{message}")


class NumericalError(RuntimeError):
    """Збій підгонки або нескінченний результат обчислення"""
