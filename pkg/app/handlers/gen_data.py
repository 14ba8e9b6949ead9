"""
Команда gen-data: синтетический набор данных
"""
import argparse
from pathlib import Path

from app.config import settings
from app.data import write_synthetic_dataset
from app.handlers.common import positive_int


def gen_data(args: argparse.Namespace) -> int:
    """Генерация личностей и запись видов в каталог"""
    summary = write_synthetic_dataset(
        args.out,
        identities=args.identities,
        cameras=args.cameras,
        views_per_camera=args.views_per_camera,
        seed=args.seed,
    )
    print(f"identities={summary['identities']} images={summary['images']} out={args.out}")
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("gen-data", help="сгенерировать синтетический набор")
    parser.add_argument("--identities", type=positive_int, default=30)
    parser.add_argument("--views-per-camera", type=positive_int, default=4)
    parser.add_argument("--cameras", type=positive_int, default=2)
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--seed", type=int, default=settings.SEED)
    parser.set_defaults(handler=gen_data)
