"""
Пары изображений для обучения: аугментация, сэмплирование, предвыборка
"""
import itertools
import queue
import threading
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Tuple, Union

import numpy as np
from loguru import logger

from app.data.dataset import DatasetSplit, ImageRecord
from app.data.imageio import resize_bilinear
from app.exceptions import ContractError, DatasetError

NEGATIVES_PER_POSITIVE = 2
MIN_CROP_AREA = 0.9

SeedLike = Union[int, np.random.Generator]


@dataclass
class PairBatch:
    """Пакет пар: изображения (B, 3, H, W), метки 1 = одна личность"""
    first: np.ndarray
    second: np.ndarray
    labels: np.ndarray
    ids1: np.ndarray
    ids2: np.ndarray

    def __post_init__(self):
        if self.first.shape != self.second.shape or self.first.shape[0] != self.labels.shape[0]:
            raise ContractError("PairBatch: размеры изображений и меток не согласованы")
        if not np.array_equal(self.labels, (self.ids1 == self.ids2).astype(self.labels.dtype)):
            raise ContractError("PairBatch: метки не соответствуют личностям")

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def positives(self) -> int:
        return int(self.labels.sum())


def flip(image: np.ndarray) -> np.ndarray:
    """Горизонтальное отражение"""
    return image[..., ::-1].copy()


def augment(image: np.ndarray, seed: SeedLike) -> np.ndarray:
    """Случайный кадр 90-100% площади, возврат к исходному размеру и отражение с вероятностью 1/2"""
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    _, h, w = image.shape
    side = np.sqrt(rng.uniform(MIN_CROP_AREA, 1.0))
    ch, cw = max(1, int(round(h * side))), max(1, int(round(w * side)))
    top = int(rng.integers(0, h - ch + 1))
    left = int(rng.integers(0, w - cw + 1))
    out = resize_bilinear(image[:, top:top + ch, left:left + cw], h, w)
    return flip(out) if rng.random() < 0.5 else out


def positive_pairs(split: DatasetSplit, part: str = "train") -> List[Tuple[ImageRecord, ImageRecord]]:
    """Все пары изображений одной личности"""
    return [
        pair
        for ident, records in sorted(split.part(part).items())
        for pair in itertools.combinations(records, 2)
    ]


def make_pairs(
    split: DatasetSplit,
    epoch_seed: int,
    batch_size: int = 128,
    part: str = "train",
    use_augment: bool = True
) -> Iterator[PairBatch]:
    """
    Эпоха: все положительные пары в случайном порядке, к каждой — две
    отрицательные с равновероятно выбранной другой личностью.
    В каждом пакете отрицательных ровно вдвое больше положительных.
    """
    if batch_size < 3 or batch_size % 3:
        raise ContractError(f"размер пакета должен делиться на 3, получено {batch_size}")
    records = split.part(part)
    identities = sorted(records)
    if len(identities) < 2:
        raise DatasetError(f"для отрицательных пар нужны минимум две личности в {part!r}")

    rng = np.random.default_rng(epoch_seed)
    positives = positive_pairs(split, part)
    order = rng.permutation(len(positives))
    per_batch = batch_size // 3

    for start in range(0, len(order), per_batch):
        chosen = [positives[i] for i in order[start:start + per_batch]]
        pairs: List[Tuple[ImageRecord, ImageRecord]] = []
        for anchor, match in chosen:
            pairs.append((anchor, match))
            others = [i for i in identities if i != anchor.identity]
            for _ in range(NEGATIVES_PER_POSITIVE):
                other = records[others[int(rng.integers(len(others)))]]
                pairs.append((anchor, other[int(rng.integers(len(other)))]))
        pairs = [pairs[i] for i in rng.permutation(len(pairs))]

        def image(record: ImageRecord) -> np.ndarray:
            loaded = split.load(record)
            return augment(loaded, rng) if use_augment else loaded

        first = np.stack([image(a) for a, _ in pairs])
        second = np.stack([image(b) for _, b in pairs])
        ids1 = np.array([a.identity for a, _ in pairs])
        ids2 = np.array([b.identity for _, b in pairs])
        yield PairBatch(first, second, (ids1 == ids2).astype(np.int64), ids1, ids2)


_DONE = object()
POLL_SECONDS = 0.05


def prefetch(batches: Iterable[PairBatch], depth: int) -> Iterator[PairBatch]:
    """Подготовка пакетов в фоновом потоке через ограниченную очередь; depth <= 0 — без потока"""
    if depth <= 0:
        yield from batches
        return

    buffer: "queue.Queue" = queue.Queue(maxsize=depth)
    stop = threading.Event()

    def offer(item) -> bool:
        """Помещение в очередь; False, если потребитель уже остановился"""
        while not stop.is_set():
            try:
                buffer.put(item, timeout=POLL_SECONDS)
                return True
            except queue.Full:
                continue
        return False

    def worker():
        try:
            for batch in batches:
                if not offer(batch):
                    return
            offer(_DONE)
        except Exception as e:
            offer(e)

    thread = threading.Thread(target=worker, name="pair-prefetch", daemon=True)
    thread.start()
    logger.debug(f"🧵 Предвыборка пар запущена, глубина очереди {depth}")
    try:
        while True:
            item = buffer.get()
            if item is _DONE:
                return
            if isinstance(item, Exception):
                raise item
            yield item
    finally:
        stop.set()
        thread.join()
