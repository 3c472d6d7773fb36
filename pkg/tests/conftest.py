import shutil
from pathlib import Path

import pytest

from src.calibration import calibrate
from src.scenario import LinkScenario

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def scenario_path(name: str) -> Path:
    return SCENARIO_DIR / f"{name}.yaml"


@pytest.fixture(scope="session")
def b2b_scenario() -> LinkScenario:
    return LinkScenario.from_file(str(scenario_path("b2b")))


@pytest.fixture(scope="session")
def indoor_scenario() -> LinkScenario:
    return LinkScenario.from_file(str(scenario_path("fso_indoor_6m")))


@pytest.fixture(scope="session")
def outdoor_scenario() -> LinkScenario:
    return LinkScenario.from_file(str(scenario_path("fso_outdoor_63m")))


@pytest.fixture(scope="session")
def coexistence_scenario() -> LinkScenario:
    return LinkScenario.from_file(str(scenario_path("coexistence")))


@pytest.fixture(scope="session")
def fitted(b2b_scenario):
    """Калібрування, підігнане заново (без значень з файлу)"""
    return calibrate(b2b_scenario)


@pytest.fixture
def scenario_copy(tmp_path):
    """Копія сценарію у тимчасовій директорії"""
    def _copy(name: str) -> Path:
        target = tmp_path / f"{name}.yaml"
        shutil.copy(scenario_path(name), target)
        return target
    return _copy


@pytest.fixture
def write_yaml(tmp_path):
    def _write(text: str, name: str = "scenario.yaml") -> Path:
        target = tmp_path / name
        target.write_text(text, encoding="utf-8")
        return target
    return _write
