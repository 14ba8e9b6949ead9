"""
Загрузка набора данных из каталога и разбиение по личностям
"""
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger

from app.data.imageio import read_ppm, resize_bilinear
from app.exceptions import DatasetError

FILE_PATTERN = re.compile(r"^(?P<camera>[A-Za-z0-9]+)_(?P<index>\d+)\.ppm$")
PARTS = ("train", "val", "test")


@dataclass(frozen=True)
class ImageRecord:
    path: Path
    identity: int
    camera: str
    index: int


@dataclass
class LoadReport:
    """Что пропущено при разборе каталога"""
    skipped: List[str] = field(default_factory=list)
    train_only: List[int] = field(default_factory=list)

    @property
    def skipped_count(self) -> int:
        return len(self.skipped)


@dataclass
class DatasetSplit:
    """Разбиение по личностям: train / val / test"""
    train: Dict[int, List[ImageRecord]]
    val: Dict[int, List[ImageRecord]]
    test: Dict[int, List[ImageRecord]]
    report: LoadReport = field(default_factory=LoadReport)
    image_size: Tuple[int, int] = (160, 60)
    seed: int = 0
    fractions: Tuple[float, float, float] = (0.8, 0.1, 0.1)
    _cache: Dict[Path, np.ndarray] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        train, val, test = set(self.train), set(self.val), set(self.test)
        if train & val or train & test or val & test:
            raise DatasetError("личности пересекаются между частями разбиения")
        for ident, records in self.test.items():
            if len(records) < 2:
                raise DatasetError(f"у тестовой личности {ident} меньше двух изображений")

    def part(self, name: str) -> Dict[int, List[ImageRecord]]:
        if name not in PARTS:
            raise ValueError(f"неизвестная часть {name!r}")
        return getattr(self, name)

    def records(self, name: str) -> List[ImageRecord]:
        return [r for ident in sorted(self.part(name)) for r in self.part(name)[ident]]

    def load(self, record: ImageRecord) -> np.ndarray:
        """Изображение (3, H, W) в [0, 1], приведённое к размеру входа"""
        image = self._cache.get(record.path)
        if image is None:
            image = read_ppm(record.path)
            if image.shape[1:] != self.image_size:
                image = resize_bilinear(image, *self.image_size)
            self._cache[record.path] = image
        return image

    def summary(self) -> pd.DataFrame:
        rows = [
            {"part": name, "identity": ident, "images": len(recs), "cameras": len({r.camera for r in recs})}
            for name in PARTS for ident, recs in sorted(self.part(name).items())
        ]
        return pd.DataFrame(rows, columns=["part", "identity", "images", "cameras"])


def _scan(root: Path, report: LoadReport) -> Dict[int, List[ImageRecord]]:
    found: Dict[int, List[ImageRecord]] = {}
    for directory in sorted(p for p in root.iterdir() if p.is_dir()):
        if not directory.name.isdigit():
            logger.warning(f"⚠️ Пропущен каталог без номера личности: {directory}")
            report.skipped.append(str(directory))
            continue
        ident = int(directory.name)
        for path in sorted(directory.iterdir()):
            match = FILE_PATTERN.match(path.name)
            if not path.is_file() or match is None:
                logger.warning(f"⚠️ Пропущен файл с некорректным именем: {path}")
                report.skipped.append(str(path))
                continue
            found.setdefault(ident, []).append(
                ImageRecord(path, ident, match.group("camera"), int(match.group("index")))
            )
    return found


def load_dataset(
    root: Union[str, Path],
    fractions: Sequence[float] = (0.8, 0.1, 0.1),
    seed: int = 0,
    image_size: Tuple[int, int] = (160, 60)
) -> DatasetSplit:
    """
    Разбор root/<личность>/<камера>_<номер>.ppm и разбиение по личностям
    перемешиванием с заданным зерном. Личности с одним изображением
    попадают только в train.
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetError("каталог набора данных не найден", str(root))
    if len(fractions) != 3 or min(fractions) < 0 or sum(fractions) <= 0:
        raise DatasetError(f"некорректные доли разбиения {tuple(fractions)}")

    report = LoadReport()
    found = _scan(root, report)
    if not found:
        raise DatasetError("в каталоге нет изображений", str(root))

    total = float(sum(fractions))
    eligible = sorted(ident for ident, recs in found.items() if len(recs) >= 2)
    report.train_only = sorted(set(found) - set(eligible))

    order = np.random.default_rng(seed).permutation(len(eligible))
    shuffled = [eligible[i] for i in order]
    n_val = int(round(fractions[1] / total * len(shuffled)))
    n_test = int(round(fractions[2] / total * len(shuffled)))
    n_train = max(len(shuffled) - n_val - n_test, 0)

    train_ids = shuffled[:n_train] + report.train_only
    val_ids = shuffled[n_train:n_train + n_val]
    test_ids = shuffled[n_train + n_val:]

    split = DatasetSplit(
        train={i: found[i] for i in sorted(train_ids)},
        val={i: found[i] for i in sorted(val_ids)},
        test={i: found[i] for i in sorted(test_ids)},
        report=report,
        image_size=image_size,
        seed=seed,
        fractions=tuple(float(f) for f in fractions),
    )
    logger.info(
        f"📂 Набор {root}: train {len(split.train)}, val {len(split.val)}, test {len(split.test)} личностей, "
        f"пропущено файлов {report.skipped_count}"
    )
    return split


def channel_statistics(split: DatasetSplit, part: str = "train") -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    """Среднее и СКО каждого канала по изображениям части"""
    records = split.records(part)
    if not records:
        raise DatasetError(f"часть {part!r} пуста")
    stacked = np.stack([split.load(r) for r in records])
    mean = stacked.mean(axis=(0, 2, 3))
    std = np.maximum(stacked.std(axis=(0, 2, 3)), 1e-3)
    return tuple(float(v) for v in mean), tuple(float(v) for v in std)


def build_single_shot(
    records: Dict[int, List[ImageRecord]],
    seed: int = 0
) -> Tuple[List[ImageRecord], List[ImageRecord]]:
    """
    По одному запросу и одному изображению галереи на личность;
    при наличии нескольких камер они берутся с разных камер.
    """
    rng = np.random.default_rng(seed)
    queries: List[ImageRecord] = []
    gallery: List[ImageRecord] = []
    for ident in sorted(records):
        recs = records[ident]
        if len(recs) < 2:
            raise DatasetError(f"личности {ident} не хватает изображений для single-shot")
        query = recs[int(rng.integers(len(recs)))]
        others = [r for r in recs if r.camera != query.camera] or [r for r in recs if r is not query]
        queries.append(query)
        gallery.append(others[int(rng.integers(len(others)))])
    return queries, gallery
