import click
import sys
from functools import wraps
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

#Корінь проекту до шляху пошуку модулів
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

# Імпорти модулів
from src.link_simulator import LinkSimulator
from src.utils.config import DEFAULT_LOG_DIR, DEFAULT_OUT_DIR
from src.utils.errors import ConfigError, DomainError, NumericalError

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def run_options(func: Callable) -> Callable:
    """Спільні опції всіх підкоманд"""
    func = click.option('--log-dir', default=DEFAULT_LOG_DIR, show_default=True,
                        help='Directory for log files (kept apart from results)')(func)
    func = click.option('--format', 'output_format', type=click.Choice(['csv', 'json']),
                        default='csv', show_default=True, help='Output table format')(func)
    func = click.option('--out-dir', default=DEFAULT_OUT_DIR, show_default=True,
                        help='Directory for result files')(func)
    func = click.option('--seed', type=int, default=None,
                        help='Random seed (default: seed from the scenario)')(func)
    return func


def handle_errors(func: Callable) -> Callable:
    """Перетворення помилок на кольорові повідомлення та коди виходу"""
    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ConfigError, DomainError, FileNotFoundError) as e:
            click.echo(click.style(f"Помилка конфігурації: {e}", fg='red'), err=True)
            sys.exit(EXIT_CONFIG)
        except (NumericalError, FloatingPointError) as e:
            click.echo(click.style(f"Числова помилка: {e}", fg='red'), err=True)
            sys.exit(EXIT_NUMERICAL)
    return wrapper


def parse_floats(_ctx, _param, value: Optional[str]) -> Optional[List[float]]:
    """Розбір списку чисел через кому"""
    if value is None:
        return None
    try:
        return [float(v) for v in value.split(',') if v.strip()]
    except ValueError:
        raise click.BadParameter(f"очікується список чисел через кому: {value}")


def show_run_header(simulator: LinkSimulator) -> None:
    """Вивід зерна та калібрування для відтворюваності"""
    click.echo(click.style(f"Сценарій: {simulator.scenario.name}", fg='blue', bold=True))
    click.echo(f"Зерно: {simulator.seed}")
    calibration = simulator.scenario.calibration
    if calibration is None:
        click.echo(click.style("Калібрування: відсутнє", fg='yellow'))
        return
    click.echo(click.style("Калібрування:", fg='blue'))
    for key, value in calibration.to_dict().items():
        click.echo(f"  {key}: {value}")


def show_summary(title: str, summary: Dict[str, Any]) -> None:
    click.echo(click.style(f"\n{title}:", fg='green', bold=True))
    for key, value in summary.items():
        if isinstance(value, float):
            value = f"{value:.6g}"
        click.echo(f"  {key}: {value}")


def make_simulator(scenario: Optional[str], seed: Optional[int], out_dir: str,
                   output_format: str, log_dir: str) -> LinkSimulator:
    simulator = LinkSimulator(scenario, out_dir, seed, output_format, log_dir)
    show_run_header(simulator)
    return simulator


@click.command(name='map')
@click.argument('scenario', type=click.Path(dir_okay=False))
@run_options
@handle_errors
def map_command(scenario: str, seed: Optional[int], out_dir: str, output_format: str,
                log_dir: str) -> None:
    """Карта зв'язку елементів та зондування пар"""
    simulator = make_simulator(scenario, seed, out_dir, output_format, log_dir)
    show_summary("Карта зв'язку", simulator.build_map())


@click.command(name='sweep-budget')
@click.argument('scenario', type=click.Path(dir_okay=False))
@click.option('--budgets', callback=parse_floats, default=None,
              help='Comma separated loss budgets in dB (default: from scenario)')
@run_options
@handle_errors
def sweep_budget_command(scenario: str, budgets: Optional[List[float]], seed: Optional[int],
                         out_dir: str, output_format: str, log_dir: str) -> None:
    """Швидкості ключа та QBER залежно від бюджету втрат"""
    simulator = make_simulator(scenario, seed, out_dir, output_format, log_dir)
    show_summary("Розгортка за бюджетом", simulator.sweep_budget(budgets))


@click.command(name='sweep-power')
@click.argument('scenario', type=click.Path(dir_okay=False))
@click.option('--powers', callback=parse_floats, default=None,
              help='Comma separated aggregate classical powers in dBm')
@click.option('--budget-db', type=float, default=None,
              help='Loss budget in dB (default: scenario operating point)')
@run_options
@handle_errors
def sweep_power_command(scenario: str, powers: Optional[List[float]], budget_db: Optional[float],
                        seed: Optional[int], out_dir: str, output_format: str,
                        log_dir: str) -> None:
    """QBER та швидкості при співіснуванні з класичними каналами"""
    simulator = make_simulator(scenario, seed, out_dir, output_format, log_dir)
    show_summary("Розгортка за потужністю", simulator.sweep_power(powers, budget_db))


@click.command(name='montecarlo')
@click.argument('scenario', type=click.Path(dir_okay=False))
@click.option('--duration', type=float, default=None,
              help='Simulated duration in seconds (default: from scenario)')
@click.option('--budget-db', type=float, default=None,
              help='Loss budget in dB (default: scenario operating point)')
@click.option('--tags-csv', is_flag=True, help='Also export the time tags as CSV')
@run_options
@handle_errors
def montecarlo_command(scenario: str, duration: Optional[float], budget_db: Optional[float],
                       tags_csv: bool, seed: Optional[int], out_dir: str, output_format: str,
                       log_dir: str) -> None:
    """Монте-Карло часових міток з офлайн-просіюванням"""
    simulator = make_simulator(scenario, seed, out_dir, output_format, log_dir)
    show_summary("Монте-Карло", simulator.montecarlo(duration, budget_db, tags_csv))


@click.command(name='capacity')
@click.argument('skr', type=float)
@click.option('--scenario', type=click.Path(dir_okay=False), default=None,
              help='Scenario file for the run summary (optional)')
@run_options
@handle_errors
def capacity_command(skr: float, scenario: Optional[str], seed: Optional[int], out_dir: str,
                     output_format: str, log_dir: str) -> None:
    """Пропускна здатність, захищена оновленням ключа AES-GCM"""
    simulator = make_simulator(scenario, seed, out_dir, output_format, log_dir)
    summary = simulator.capacity(skr)
    show_summary("Захищена пропускна здатність", summary)
    click.echo(click.style(f"\n{summary['capacity_bps'] / 1e12:.3g} Тб/с", fg='green'))


@click.command(name='calibrate')
@click.argument('scenario', type=click.Path(dir_okay=False))
@click.option('--write/--no-write', default=True,
              help='Write fitted values back into the scenario file (default: write)')
@run_options
@handle_errors
def calibrate_command(scenario: str, write: bool, seed: Optional[int], out_dir: str,
                      output_format: str, log_dir: str) -> None:
    """Підгонка констант моделі до опорних вимірювань"""
    simulator = make_simulator(scenario, seed, out_dir, output_format, log_dir)
    summary = simulator.calibrate(write)
    show_run_header(simulator)
    show_summary("Робоча точка після калібрування", summary)
    if write:
        click.echo(click.style(f"\nКалібрування записано у {scenario}", fg='green'))
