"""
Команда ablate: серия абляций с отчётом CSV
"""
import argparse
from pathlib import Path

from app.config import settings
from app.data import load_dataset
from app.handlers.common import batch_type, int_list, positive_int
from app.services import ablation_grid, direction_summary, run_ablation
from app.services.evaluation_service import ABLATION_PRESETS, EXPECTED_DIRECTIONS


def ablate(args: argparse.Namespace) -> int:
    split = load_dataset(args.data, settings.SPLIT_FRACTIONS, seed=settings.SEED)
    report = run_ablation(
        ablation_grid(args.preset),
        split,
        seeds=args.seeds,
        epochs=args.epochs,
        batch_size=args.batch,
        lr=settings.LEARNING_RATE,
        weight_decay=settings.WEIGHT_DECAY,
        eval_batch=settings.EVAL_BATCH,
    )
    if args.report:
        args.report.parent.mkdir(parents=True, exist_ok=True)
        report.to_csv(args.report, index=False)
    print(report.to_csv(index=False), end="")
    print(direction_summary(report, EXPECTED_DIRECTIONS[args.preset]).to_string(index=False))
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("ablate", help="абляционные эксперименты")
    parser.add_argument("--data", type=Path, required=True)
    parser.add_argument("--preset", choices=sorted(ABLATION_PRESETS), default="levels")
    parser.add_argument("--seeds", type=int_list, default=(0, 1, 2, 3, 4))
    parser.add_argument("--epochs", type=positive_int, default=settings.EPOCHS)
    parser.add_argument("--batch", type=batch_type, default=24)
    parser.add_argument("--report", type=Path, default=None)
    parser.set_defaults(handler=ablate)
