"""
Команда train: обучение и сохранение чекпоинта
"""
import argparse
from pathlib import Path

from app.config import settings
from app.data import load_dataset
from app.handlers.common import add_architecture_flags, architecture_overrides, batch_type, positive_int
from app.services import CheckpointService, TrainingService


def train(args: argparse.Namespace) -> int:
    split = load_dataset(args.data, settings.SPLIT_FRACTIONS, seed=args.seed)
    trainer = TrainingService(
        split,
        epochs=args.epochs,
        batch_size=args.batch,
        lr=args.lr,
        weight_decay=args.weight_decay,
        seed=args.seed,
        prefetch_batches=settings.PREFETCH_BATCHES,
    )
    config = trainer.build_config(precision=args.precision, **architecture_overrides(args))
    result = trainer.train(config)
    CheckpointService.save(result.network, args.out)
    if args.curve:
        result.save_curve(args.curve)

    final = result.epoch_losses[-1] if result.epoch_losses else float("nan")
    print(f"config={config.label} epochs={args.epochs} final_loss={final:.6f} ckpt={args.out}")
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("train", help="обучить модель")
    parser.add_argument("--data", type=Path, required=True)
    add_architecture_flags(parser)
    parser.add_argument("--epochs", type=positive_int, default=settings.EPOCHS)
    parser.add_argument("--batch", type=batch_type, default=settings.BATCH_SIZE)
    parser.add_argument("--lr", type=float, default=settings.LEARNING_RATE)
    parser.add_argument("--weight-decay", type=float, default=settings.WEIGHT_DECAY)
    parser.add_argument("--seed", type=int, default=settings.SEED)
    parser.add_argument("--precision", choices=("float32", "float64"), default=settings.PRECISION)
    parser.add_argument("--out", type=Path, required=True, help="путь чекпоинта")
    parser.add_argument("--curve", type=Path, default=None, help="CSV кривой потерь")
    parser.set_defaults(handler=train)
