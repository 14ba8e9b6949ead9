"""
Команда export-simmaps: карты сходства пары в PGM
"""
import argparse
from pathlib import Path

from app.autograd import no_grad, precision
from app.handlers.common import int_list, load_images
from app.services import CheckpointService


def export_simmaps(args: argparse.Namespace) -> int:
    network = CheckpointService.load(args.ckpt)
    with precision(network.config.precision), no_grad():
        images = load_images([args.first, args.second], network.config)
        out = network.forward_pair(images[:1], images[1:])
    written = out.simmaps.export(args.out, args.channels)
    print(f"written={len(written)} out={args.out}")
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("export-simmaps", help="выгрузить карты сходства")
    parser.add_argument("--ckpt", type=Path, required=True)
    parser.add_argument("first", type=Path)
    parser.add_argument("second", type=Path)
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--channels", type=int_list, default=(0, 1, 2), help="номера каналов в группе")
    parser.set_defaults(handler=export_simmaps)
