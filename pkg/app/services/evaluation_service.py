"""
Сервис оценки: матрица сходства, CMC single-shot, абляции
"""
import itertools
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from app.autograd import precision
from app.data import DatasetSplit, build_single_shot
from app.exceptions import ContractError, DatasetError
from app.network import SiameseNetwork, count_flops, count_params
from app.services.training_service import TrainingService
from app.utils import Formatters

REPORT_COLUMNS = ["config", "seed", "rank1", "rank5", "rank10", "params", "flops"]


@dataclass
class CmcCurve:
    """Точность rank-k для k = 1..G"""
    accuracies: np.ndarray
    gallery_size: int
    query_count: int
    ranks: np.ndarray

    def __post_init__(self):
        if self.accuracies.shape != (self.gallery_size,):
            raise ContractError("CmcCurve: длина кривой не равна размеру галереи")
        if np.any(np.diff(self.accuracies) < 0):
            raise ContractError("CmcCurve: кривая должна быть неубывающей")
        if self.gallery_size and self.accuracies[-1] != 1.0:
            raise ContractError("CmcCurve: при k = G точность должна быть 1")

    def rank(self, k: int) -> float:
        """Точность rank-k; k больше галереи даёт 1"""
        if k < 1:
            raise ValueError("k начинается с 1")
        if not self.gallery_size:
            raise DatasetError("CMC: галерея пуста, в оцениваемой части нет личностей")
        return float(self.accuracies[min(k, self.gallery_size) - 1])


def cmc(scores: np.ndarray, query_ids: Sequence[int], gallery_ids: Sequence[int]) -> CmcCurve:
    """
    Ранг верного совпадения по убыванию оценки; при равенстве
    выше стоит элемент галереи с меньшим индексом.
    """
    scores = np.asarray(scores, dtype=np.float64)
    query_ids = np.asarray(query_ids)
    gallery_ids = np.asarray(gallery_ids)
    if scores.shape != (len(query_ids), len(gallery_ids)):
        raise ContractError(f"cmc: матрица {scores.shape} не соответствует {len(query_ids)}x{len(gallery_ids)}")

    gallery_size = len(gallery_ids)
    ranks = np.empty(len(query_ids), dtype=np.int64)
    for q, ident in enumerate(query_ids):
        matches = np.flatnonzero(gallery_ids == ident)
        if len(matches) != 1:
            raise ContractError(f"cmc: у запроса {q} (личность {ident}) {len(matches)} совпадений в галерее")
        g = matches[0]
        row = scores[q]
        ranks[q] = 1 + np.count_nonzero(row > row[g]) + np.count_nonzero(row[:g] == row[g])

    ks = np.arange(1, gallery_size + 1)
    accuracies = (ranks[None, :] <= ks[:, None]).mean(axis=1) if len(ranks) else np.ones(gallery_size)
    return CmcCurve(accuracies, gallery_size, len(query_ids), ranks)


class EvaluationService:
    """Сервис для оценки обученной модели"""

    def __init__(self, network: SiameseNetwork, batch_size: int = 64):
        self.network = network
        self.batch_size = max(1, batch_size)

    def score_matrix(self, queries: np.ndarray, gallery: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """SimiScore и вероятность совпадения для всех пар запрос x галерея"""
        self.network.eval()
        n_q, n_g = len(queries), len(gallery)
        scores = np.empty((n_q, n_g))
        probs = np.empty((n_q, n_g))
        with precision(self.network.config.precision):
            for q in range(n_q):
                for start in range(0, n_g, self.batch_size):
                    chunk = gallery[start:start + self.batch_size]
                    repeated = np.repeat(queries[q:q + 1], len(chunk), axis=0)
                    s, p = self.network.score(repeated, chunk)
                    scores[q, start:start + len(chunk)] = s
                    probs[q, start:start + len(chunk)] = p
        return scores, probs

    def evaluate(self, split: DatasetSplit, part: str = "test", seed: int = 0) -> CmcCurve:
        """Single-shot CMC на части разбиения"""
        if not split.part(part):
            raise DatasetError(f"часть {part!r} не содержит личностей, оценка невозможна")
        queries, gallery = build_single_shot(split.part(part), seed)
        q_images = np.stack([split.load(r) for r in queries])
        g_images = np.stack([split.load(r) for r in gallery])
        scores, _ = self.score_matrix(q_images, g_images)
        curve = cmc(scores, [r.identity for r in queries], [r.identity for r in gallery])
        ranks = ", ".join(f"rank-{k} {Formatters.format_percent(curve.rank(k))}" for k in (1, 5, 10))
        logger.info(f"🎯 CMC {self.network.config.label}: {ranks} (галерея {curve.gallery_size})")
        return curve

    def report_row(self, curve: CmcCurve, seed: int) -> Dict:
        config = self.network.config
        return {
            "config": config.label,
            "seed": seed,
            "rank1": curve.rank(1),
            "rank5": curve.rank(5),
            "rank10": curve.rank(10),
            "params": count_params(self.network.weights),
            "flops": count_flops(config),
        }


# === Абляции ===

ABLATION_PRESETS: Dict[str, List[Dict]] = {
    "levels": [
        {"levels": (2,)},
        {"levels": (3,)},
        {"levels": (4,)},
        {"levels": (2, 3)},
        {"levels": (2, 3, 4)},
    ],
    "loss": [
        {"levels": (2, 3), "use_ranking_loss": False},
        {"levels": (2, 3)},
    ],
    "stn": [
        {"levels": (2, 3), "use_stn": False},
        {"levels": (2, 3)},
    ],
    "dividing": [
        {"levels": (2, 3), "use_dividing": False},
        {"levels": (2, 3)},
    ],
}

# Ожидаемые направления: (лучше, хуже)
EXPECTED_DIRECTIONS: Dict[str, List[Tuple[str, str]]] = {
    "levels": [("L2+L3", "L2"), ("L2+L3", "L3")],
    "loss": [("L2+L3", "L2+L3-cls")],
    "stn": [("L2+L3", "L2+L3-crop")],
    "dividing": [("L2+L3", "L2+L3-nodiv")],
}


def ablation_grid(preset: str) -> List[Dict]:
    try:
        return [dict(cell) for cell in ABLATION_PRESETS[preset]]
    except KeyError:
        raise ContractError(f"неизвестный набор абляций {preset!r}, доступны: {sorted(ABLATION_PRESETS)}") from None


def run_ablation(
    grid: Sequence[Dict],
    split: DatasetSplit,
    seeds: Sequence[int],
    epochs: int = 5,
    batch_size: int = 24,
    lr: float = 0.0005,
    weight_decay: float = 0.0005,
    eval_batch: int = 64
) -> pd.DataFrame:
    """Обучение каждой ячейки с одинаковыми зёрнами и данными, строка отчёта на (конфигурация, зерно)"""
    rows = []
    for seed in seeds:
        trainer = TrainingService(split, epochs=epochs, batch_size=batch_size, lr=lr, weight_decay=weight_decay, seed=seed)
        for cell in grid:
            config = trainer.build_config(**cell)
            result = trainer.train(config)
            evaluator = EvaluationService(result.network, eval_batch)
            rows.append(evaluator.report_row(evaluator.evaluate(split, "test", seed), seed))
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def direction_summary(
    report: pd.DataFrame,
    pairs: Optional[Sequence[Tuple[str, str]]] = None,
    metric: str = "rank1"
) -> pd.DataFrame:
    """Знаковый тест: в скольких зёрнах первая конфигурация не хуже второй"""
    table = report.pivot_table(index="seed", columns="config", values=metric, aggfunc="first")
    if pairs is None:
        pairs = list(itertools.permutations(table.columns, 2))
    rows = []
    for better, worse in pairs:
        if better not in table.columns or worse not in table.columns:
            continue
        diff = (table[better] - table[worse]).dropna()
        rows.append({
            "better": better,
            "worse": worse,
            "wins": int((diff >= 0).sum()),
            "seeds": int(diff.size),
            "mean_gap": float(diff.mean()) if diff.size else float("nan"),
        })
    return pd.DataFrame(rows, columns=["better", "worse", "wins", "seeds", "mean_gap"])
