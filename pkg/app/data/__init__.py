"""
Данные: изображения, синтетические личности, разбиение и пары
"""
from app.data.dataset import DatasetSplit, ImageRecord, build_single_shot, channel_statistics, load_dataset
from app.data.imageio import read_ppm, resize_bilinear, write_pgm, write_ppm
from app.data.pairs import PairBatch, augment, flip, make_pairs, prefetch
from app.data.synthetic import Identity, generate_identities, render_view, write_synthetic_dataset

__all__ = [
    "DatasetSplit",
    "Identity",
    "ImageRecord",
    "PairBatch",
    "augment",
    "build_single_shot",
    "channel_statistics",
    "flip",
    "generate_identities",
    "load_dataset",
    "make_pairs",
    "prefetch",
    "read_ppm",
    "render_view",
    "resize_bilinear",
    "write_pgm",
    "write_ppm",
    "write_synthetic_dataset",
]
