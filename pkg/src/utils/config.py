import copy
from typing import Any, Dict, Optional, Tuple

import yaml

from src.utils.errors import ConfigError


class ConfigManager:
    def __init__(self, config_path=None):
        """Ініціалізує конфіг сценарію завдяки config path"""
        self.config_path = config_path
        self._lines: Dict[str, int] = {}
        self.raw_data: Dict[str, Any] = {}

    def get_config(self) -> Dict[str, Any]:
        """Повертає сценарій за замовчуванням (без калібрування)"""
        return copy.deepcopy(DEFAULT_SCENARIO)

    def load_config(self) -> Dict[str, Any]:
        """Завантаження сценарію з YAML файлу поверх значень за замовчуванням"""
        if not self.config_path:
            return self.get_config()

        try:
            with open(self.config_path, 'r', encoding='utf-8') as f:
                text = f.read()
        except FileNotFoundError:
            raise ConfigError("файл сценарію не знайдено", path=self.config_path)

        try:
            root = yaml.compose(text)
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            line = None
            mark = getattr(e, 'problem_mark', None)
            if mark is not None:
                line = mark.line + 1
            raise ConfigError(f"неправильний YAML: {getattr(e, 'problem', e)}",
                              path=self.config_path, line=line)

        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError("корінь сценарію має бути словником", path=self.config_path, line=1)

        self._lines = {}
        self._check_node(root, SCENARIO_SCHEMA, "")
        self.raw_data = copy.deepcopy(data)
        return _merge(self.get_config(), data)

    def line_of(self, dotted_key: str) -> Optional[int]:
        """Номер рядка ключа у файлі (або найближчого батьківського розділу)"""
        key = dotted_key
        while key:
            if key in self._lines:
                return self._lines[key]
            key = key.rpartition('.')[0]
        return None

    def error(self, dotted_key: str, message: str) -> ConfigError:
        """Створює ConfigError з контекстом файл/рядок для ключа"""
        return ConfigError(f"{dotted_key}: {message}", path=self.config_path,
                           line=self.line_of(dotted_key))

    def save_config(self, config: Dict[str, Any], path: Optional[str] = None) -> str:
        """Запис сценарію назад у YAML (порядок розділів зберігається)"""
        target = path or self.config_path
        if not target:
            raise ConfigError("не вказано шлях для запису сценарію")
        with open(target, 'w', encoding='utf-8') as f:
            yaml.safe_dump(config, f, sort_keys=False, allow_unicode=True,
                           default_flow_style=None)
        return target

    def _check_node(self, node, schema, prefix: str) -> None:
        """Рекурсивна перевірка ключів: невідомі ключі відхиляються"""
        if node is None or not isinstance(node, yaml.MappingNode):
            return
        for key_node, value_node in node.value:
            key = key_node.value
            dotted = f"{prefix}.{key}" if prefix else key
            self._lines[dotted] = key_node.start_mark.line + 1
            if key not in schema:
                section = prefix or "корінь"
                raise ConfigError(f"невідомий ключ '{key}' у розділі '{section}'",
                                  path=self.config_path,
                                  line=key_node.start_mark.line + 1)
            if isinstance(schema[key], dict):
                if not isinstance(value_node, yaml.MappingNode):
                    raise ConfigError(f"розділ '{dotted}' має бути словником",
                                      path=self.config_path,
                                      line=value_node.start_mark.line + 1)
                self._check_node(value_node, schema[key], dotted)

    @staticmethod
    def get_default_paths() -> Tuple[str, str]:
        """Повертає директорії виводу та логів за замовчуванням"""
        return DEFAULT_OUT_DIR, DEFAULT_LOG_DIR


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            base[key] = _merge(base[key], value)
        else:
            base[key] = value
    return base


DEFAULT_OUT_DIR = "results"
DEFAULT_LOG_DIR = "logs"

#Фізичні константи та параметри установки
QUANTUM_WAVELENGTH_M = 1550.12e-9
FIBER_LOSS_DB_PER_KM = 0.277
AES_GCM_KEY_BITS = 256
AES_GCM_BYTES_PER_KEY = 64e9
C_BAND_MIN_WAVELENGTH_M = 1530.25e-9
L_BAND_MAX_WAVELENGTH_M = 1618.63e-9
QBER_LIMIT = 0.11

DEFAULT_SCENARIO: Dict[str, Any] = {
    'name': 'default',
    'seed': 20240101,
    'wavelength_m': QUANTUM_WAVELENGTH_M,
    'link': {
        'kind': 'fso',
        'distance_m': 6.0,
        'budget_db': 0.0,
        'extra_loss_db': 0.0,
    },
    'lattice': {
        'pitch_m': 36.9e-6,
        'rings': 4,
        'mode_field_diameter_m': 8.4e-6,
    },
    'collimator': {
        'focal_length_m': 0.150,
        'aperture_diameter_m': 0.0508,
    },
    'tx': {
        'position_m': [0.0, 0.0, 0.0],
        'boresight_error_rad': [0.0, 0.0],
        'excess_loss_db': 2.0,
        'subset_size': 31,
    },
    'rx': {
        'position_m': [0.0, 0.0, 6.0],
        'boresight_error_rad': [0.0, 0.0],
        'excess_loss_db': 2.0,
        'subset_size': None,
    },
    'source': {
        'symbol_rate_hz': 1.0e9,
        'mean_photon_number': 0.1,
        'duty_cycle': 0.5,
    },
    'detector': {
        'efficiency': 0.10,
        'dead_time_s': 25e-6,
        'dark_rates_hz': [559.0, 599.0, 559.0, 599.0],
        'timestamp_resolution_s': 82.3e-12,
        'topology': 'per_output',
    },
    'environment': {
        'irradiance_lux': 0.0,
        'classical_power_dbm': None,
        'background_rates_hz': None,
    },
    'channel_plan': {
        'data_channels': 47,
        'channels_above': 24,
        'spacing_hz': 100e9,
        'guard_hz': 155.5e9,
        'supervisory_wavelength_m': L_BAND_MAX_WAVELENGTH_M,
        'wavelengths_m': None,
    },
    'notch_filter': {
        'suppression_db_at_quantum': 132.3,
        'insertion_loss_db': 0.0,
    },
    'sounding': {
        'dwell_time_s': 1e-3,
        'power_meter_noise_db': 0.2,
        'resound_period_s': 60.0,
        'fade_trigger_db': 3.0,
        'margin_db': 0.5,
        'budget_db': 26.0,
        'launch_power_dbm': 0.0,
    },
    'sweep': {
        'budgets_db': [float(b) for b in range(0, 32, 2)],
        'powers_dbm': [-20.0, -10.0, -5.0, 0.0, 3.0, 6.0, 9.0, 11.2, 13.0],
        'duration_s': 10.0,
    },
    'anchors': {
        'b2b_sifted_hz': 54300.0,
        'b2b_qber': 0.0207,
        'fso_budget_db': 15.5,
        'fso_sifted_hz': 23500.0,
        'fso_irradiance_lux': 800.0,
        'coexistence_power_dbm': 11.2,
        'coexistence_qber': 0.103,
        'coexistence_sifted_hz': 17500.0,
        'solar_irradiance_lux': 61000.0,
        'solar_counts_hz': [1204.0, 980.0],
        'best_pair_loss_db': None,
        'insertion_loss_floor_db': 2.0,
        'link_qber': None,
        'link_sifted_hz': None,
    },
}

#Дозволені ключі сценарію: None означає скалярне значення або список
SCENARIO_SCHEMA: Dict[str, Any] = {
    'name': None,
    'seed': None,
    'wavelength_m': None,
    'link': {k: None for k in DEFAULT_SCENARIO['link']},
    'lattice': {k: None for k in DEFAULT_SCENARIO['lattice']},
    'collimator': {k: None for k in DEFAULT_SCENARIO['collimator']},
    'tx': {k: None for k in DEFAULT_SCENARIO['tx']},
    'rx': {k: None for k in DEFAULT_SCENARIO['rx']},
    'source': {k: None for k in DEFAULT_SCENARIO['source']},
    'detector': {k: None for k in DEFAULT_SCENARIO['detector']},
    'environment': {k: None for k in DEFAULT_SCENARIO['environment']},
    'channel_plan': {k: None for k in DEFAULT_SCENARIO['channel_plan']},
    'notch_filter': {k: None for k in DEFAULT_SCENARIO['notch_filter']},
    'sounding': {k: None for k in DEFAULT_SCENARIO['sounding']},
    'sweep': {k: None for k in DEFAULT_SCENARIO['sweep']},
    'anchors': {k: None for k in DEFAULT_SCENARIO['anchors']},
    'calibration': {
        'system_efficiency': None,
        'evaluation_efficiency': None,
        'intrinsic_error': None,
        'raman_coefficient': None,
        'solar_slope_hz_per_lux': None,
        'error_correction_efficiency': None,
    },
}

REQUIRED_CALIBRATION_KEYS = (
    'system_efficiency',
    'evaluation_efficiency',
    'intrinsic_error',
    'raman_coefficient',
    'solar_slope_hz_per_lux',
)
