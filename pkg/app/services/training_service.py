"""
Сервис обучения сиамской сети
"""
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd
from loguru import logger

from app.autograd import backward, fresh_graph, precision
from app.data import DatasetSplit, PairBatch, channel_statistics, make_pairs, prefetch
from app.network import (
    ModelConfig,
    SiameseNetwork,
    classification_loss,
    combined_loss,
    contrastive_loss,
)
from app.nn import Adam
from app.utils import Formatters


@dataclass
class TrainingResult:
    """Обученная сеть и кривая потерь"""
    network: SiameseNetwork
    curve: pd.DataFrame
    epoch_losses: List[float] = field(default_factory=list)
    seconds: float = 0.0

    def save_curve(self, path) -> None:
        self.curve.to_csv(path, index=False)


def epoch_seed(seed: int, epoch: int) -> int:
    return int(np.random.SeedSequence([seed, epoch]).generate_state(1)[0])


class TrainingService:
    """Сервис для обучения модели на парах изображений"""

    def __init__(
        self,
        split: DatasetSplit,
        epochs: int = 5,
        batch_size: int = 128,
        lr: float = 0.0005,
        weight_decay: float = 0.0005,
        seed: int = 0,
        prefetch_batches: int = 0,
        use_augment: bool = True
    ):
        self.split = split
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.weight_decay = weight_decay
        self.seed = seed
        self.prefetch_batches = prefetch_batches
        self.use_augment = use_augment

    def build_config(self, **overrides) -> ModelConfig:
        """Конфигурация со статистикой пикселей обучающей части"""
        mean, std = channel_statistics(self.split, "train")
        height, width = self.split.image_size
        values = {
            "pixel_mean": mean,
            "pixel_std": std,
            "input_height": height,
            "input_width": width,
            "split_seed": self.split.seed,
            "split_fractions": self.split.fractions,
        }
        values.update(overrides)
        return ModelConfig(**values)

    @staticmethod
    def train_step(network: SiameseNetwork, optimizer: Adam, batch: PairBatch) -> float:
        """Прямой и обратный проход по пакету и шаг оптимизатора"""
        config = network.config
        with fresh_graph():
            out = network.forward_pair(batch.first, batch.second)
            cls = classification_loss(out.logits, batch.labels)
            ctr = None
            if config.use_ranking_loss:
                ctr = contrastive_loss(out.r1, out.r2, batch.labels, config.margin)
            loss = combined_loss(cls, ctr, out.rot_penalty)
            optimizer.zero_grad()
            backward(loss)
        optimizer.step()
        return loss.item()

    def train(self, config: ModelConfig, network: Optional[SiameseNetwork] = None) -> TrainingResult:
        """Полный цикл обучения: эпохи x пары, ADAM, журнал потерь"""
        started = time.perf_counter()
        with precision(config.precision):
            network = network or SiameseNetwork.create(config, seed=self.seed)
            network.train()
            optimizer = Adam(network.parameters(), lr=self.lr, weight_decay=self.weight_decay)
            logger.info(
                f"🚀 Обучение {config.label}: {self.epochs} эп., пакет {self.batch_size}, "
                f"параметров {Formatters.format_number(network.weights.count_params())}"
            )

            rows = []
            epoch_losses: List[float] = []
            for epoch in range(1, self.epochs + 1):
                stream = make_pairs(
                    self.split, epoch_seed(self.seed, epoch), self.batch_size, use_augment=self.use_augment
                )
                losses = []
                for step, batch in enumerate(prefetch(stream, self.prefetch_batches), start=1):
                    loss = self.train_step(network, optimizer, batch)
                    losses.append(loss)
                    rows.append({"epoch": epoch, "step": step, "loss": loss})
                    logger.debug(f"эпоха {epoch} шаг {step}: loss {loss:.5f}")
                mean_loss = float(np.mean(losses)) if losses else float("nan")
                epoch_losses.append(mean_loss)
                logger.info(
                    f"📉 Эпоха {epoch}/{self.epochs} {Formatters.format_progress_bar(epoch, self.epochs)} "
                    f"средняя потеря {mean_loss:.4f}"
                )
            network.eval()

        seconds = time.perf_counter() - started
        logger.info(f"✅ Обучение завершено за {Formatters.format_duration(seconds)}")
        curve = pd.DataFrame(rows, columns=["epoch", "step", "loss"])
        return TrainingResult(network, curve, epoch_losses, seconds)
