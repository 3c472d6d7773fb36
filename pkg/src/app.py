from src.cli.interface import cli


def main() -> None:
    """Точка входу консольної команди fsoqkd"""
    cli(prog_name="fsoqkd")


if __name__ == '__main__':
    main()
