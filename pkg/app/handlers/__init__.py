"""
Обработчики команд
"""
import argparse
from typing import Optional, Sequence

from app.handlers import (
    ablate,
    bench,
    evaluate,
    export_simmaps,
    gen_data,
    gradcheck,
    infer,
    train,
)
from app.middlewares import LoggingMiddleware

COMMANDS = (gen_data, train, evaluate, infer, gradcheck, bench, export_simmaps, ablate)


def setup_parser() -> argparse.ArgumentParser:
    """Настройка парсера со всеми подкомандами"""
    parser = argparse.ArgumentParser(
        prog="reid",
        description="Сиамская сеть повторной идентификации с многоуровневым сходством",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    # Порядок регистрации задаёт порядок в справке
    for module in COMMANDS:
        module.register(subparsers)

    return parser


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """Разбор аргументов и запуск команды; возвращает код выхода"""
    parser = setup_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # 2 при ошибке использования, 0 для --help
        return e.code if isinstance(e.code, int) else 2
    return LoggingMiddleware()(args.handler, args)
