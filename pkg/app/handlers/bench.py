"""
Команда bench: число параметров, FLOPs и формы стадий
"""
import argparse

from app.handlers.common import add_architecture_flags, architecture_overrides
from app.network import ModelConfig, count_flops, count_params_closed_form, flops_breakdown, shape_ledger
from app.utils import Formatters


def bench(args: argparse.Namespace) -> int:
    config = ModelConfig(**architecture_overrides(args))
    params = count_params_closed_form(config)
    flops = count_flops(config)

    print(f"config={config.label}")
    print(f"params={params} ({Formatters.format_number(params)})")
    print(f"flops={flops} ({Formatters.format_number(flops)})")
    if args.verbose:
        for stage, value in flops_breakdown(config).items():
            print(f"  flops.{stage}={value}")
        for stage, shape in shape_ledger(config).items():
            print(f"  shape.{stage}={Formatters.format_shape(shape)}")
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("bench", help="размер и сложность модели")
    add_architecture_flags(parser)
    parser.add_argument("-v", "--verbose", action="store_true", help="разбивка по стадиям и формы")
    parser.set_defaults(handler=bench)
