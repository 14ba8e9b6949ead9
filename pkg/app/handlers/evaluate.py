"""
Команда eval: CMC single-shot на тестовой части
"""
import argparse
from pathlib import Path

import pandas as pd

from app.config import settings
from app.data import load_dataset
from app.services import CheckpointService, EvaluationService
from app.services.evaluation_service import REPORT_COLUMNS


def evaluate(args: argparse.Namespace) -> int:
    network = CheckpointService.load(args.ckpt)
    config = network.config
    split = load_dataset(
        args.data, config.split_fractions, seed=config.split_seed,
        image_size=(config.input_height, config.input_width),
    )
    service = EvaluationService(network, settings.EVAL_BATCH)
    curve = service.evaluate(split, args.part, seed=args.seed)

    report = pd.DataFrame([service.report_row(curve, args.seed)], columns=REPORT_COLUMNS)
    if args.report:
        args.report.parent.mkdir(parents=True, exist_ok=True)
        report.to_csv(args.report, index=False)
    print(report.to_csv(index=False), end="")
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("eval", help="оценить чекпоинт")
    parser.add_argument("--ckpt", type=Path, required=True)
    parser.add_argument("--data", type=Path, required=True)
    parser.add_argument("--report", type=Path, default=None, help="CSV отчёта")
    parser.add_argument("--part", choices=("test", "val"), default="test")
    parser.add_argument("--seed", type=int, default=settings.SEED, help="зерно выбора галереи")
    parser.set_defaults(handler=evaluate)
