"""
Общие типы аргументов и помощники обработчиков
"""
import argparse
from pathlib import Path
from typing import Sequence, Tuple

import numpy as np

from app.data import read_ppm, resize_bilinear
from app.network import ModelConfig
from app.utils import Validators


def levels_type(text: str) -> Tuple[int, ...]:
    """Тип argparse для --levels"""
    try:
        return Validators.parse_levels(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def batch_type(text: str) -> int:
    """Тип argparse для --batch"""
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"ожидалось целое число, получено {text!r}") from None
    is_valid, error = Validators.validate_batch_size(value)
    if not is_valid:
        raise argparse.ArgumentTypeError(error)
    return value


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"ожидалось целое число, получено {text!r}") from None
    is_valid, error = Validators.validate_positive(value, "Значение")
    if not is_valid:
        raise argparse.ArgumentTypeError(error)
    return value


def int_list(text: str) -> Tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"ожидался список целых через запятую: {text!r}") from None


def add_architecture_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--levels", type=levels_type, default=(2, 3), help="уровни: l2,l3[,l4]")
    parser.add_argument("--no-stn", action="store_true", help="центральный кадр вместо трансформера")
    parser.add_argument("--no-ranking-loss", action="store_true", help="только классификационная потеря")
    parser.add_argument("--no-dividing", action="store_true", help="одна полоса на уровень")


def architecture_overrides(args: argparse.Namespace) -> dict:
    return {
        "levels": args.levels,
        "use_stn": not args.no_stn,
        "use_ranking_loss": not args.no_ranking_loss,
        "use_dividing": not args.no_dividing,
    }


def load_images(paths: Sequence[Path], config: ModelConfig) -> np.ndarray:
    """PPM-файлы -> пакет (N, 3, H, W) под размер входа модели"""
    images = []
    for path in paths:
        image = read_ppm(path)
        if image.shape[1:] != (config.input_height, config.input_width):
            image = resize_bilinear(image, config.input_height, config.input_width)
        images.append(image)
    return np.stack(images)
