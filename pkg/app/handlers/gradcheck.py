"""
Команда gradcheck: конечно-разностная проверка градиентов
"""
import argparse

from app.config import settings
from app.services import GradcheckService


def gradcheck(args: argparse.Namespace) -> int:
    service = GradcheckService(
        eps=settings.GRADCHECK_EPS,
        tolerance=settings.GRADCHECK_TOLERANCE,
        chain_tolerance=settings.GRADCHECK_CHAIN_TOLERANCE,
    )
    names = None if args.op == "all" else [args.op]
    if names and names[0] not in service.names:
        print(f"неизвестная проверка {args.op!r}; доступны: all, {', '.join(service.names)}")
        return 2

    table = service.run(names)
    print(table.to_string(index=False))
    failed = table[~table["passed"]]
    return 0 if failed.empty else 1


def register(subparsers) -> None:
    parser = subparsers.add_parser("gradcheck", help="проверить градиенты")
    parser.add_argument("--op", default="all", help="имя проверки или all")
    parser.set_defaults(handler=gradcheck)
