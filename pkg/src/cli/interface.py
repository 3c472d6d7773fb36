import click
from .commands import (calibrate_command, capacity_command, map_command, montecarlo_command,
                       sweep_budget_command, sweep_power_command)


@click.group()
def cli():
    """Симулятор FSO лінії квантового розподілу ключа з фокальними решітками

    Команди:
    - Карта зв'язку елементів і зондування пар
    - Розгортки за бюджетом втрат та потужністю класичних каналів
    - Монте-Карло часових міток і калібрування моделі
    """
    pass

cli.add_command(map_command)
cli.add_command(sweep_budget_command)
cli.add_command(sweep_power_command)
cli.add_command(montecarlo_command)
cli.add_command(capacity_command)
cli.add_command(calibrate_command)

if __name__ == '__main__':
    cli()
