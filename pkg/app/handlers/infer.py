"""
Команда infer: оценка сходства двух изображений
"""
import argparse
from pathlib import Path

from app.autograd import precision
from app.handlers.common import load_images
from app.services import CheckpointService


def infer(args: argparse.Namespace) -> int:
    network = CheckpointService.load(args.ckpt)
    with precision(network.config.precision):
        images = load_images([args.first, args.second], network.config)
        scores, probs = network.score(images[:1], images[1:])
    print(f"simi_score={float(scores[0]):.6f} match_probability={float(probs[0]):.6f}")
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("infer", help="сходство пары изображений")
    parser.add_argument("--ckpt", type=Path, required=True)
    parser.add_argument("first", type=Path)
    parser.add_argument("second", type=Path)
    parser.set_defaults(handler=infer)
