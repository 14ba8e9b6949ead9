"""
Сиамская сеть: общий экстрактор, сети сходства по уровням,
классификационная голова и сеть ранжирования
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from app.autograd import Tensor, concat, get_dtype, no_grad
from app.exceptions import ShapeError
from app.network.architecture import EXTRACTOR, ModelConfig
from app.network.csn import SimMaps, extract_parts, similarity_maps
from app.network.losses import MATCH, descriptor_distance, simi_score
from app.network.stn import AffineParams, rotation_l1_penalty
from app.network.weights import NetworkWeights
from app.nn import (
    activate,
    batch_norm,
    conv2d,
    dense,
    global_avg_pool,
    l2_normalize,
    maxpool2x2,
    softmax,
)

ImageBatch = Union[np.ndarray, Tensor]


@dataclass
class PairOutput:
    """Результат прямого прохода по пакету пар"""
    logits: Tensor
    r1: Optional[Tensor]
    r2: Optional[Tensor]
    rot_penalty: Tensor
    simmaps: SimMaps
    affine: List[AffineParams]

    def probabilities(self) -> np.ndarray:
        with no_grad():
            return softmax(self.logits.detach()).data

    def distances(self) -> Optional[np.ndarray]:
        if self.r1 is None:
            return None
        return descriptor_distance(self.r1.data, self.r2.data)


class SiameseNetwork:
    """Модель многоуровневого сходства"""

    def __init__(self, config: ModelConfig, weights: NetworkWeights):
        self.config = config
        self.weights = weights

    @classmethod
    def create(cls, config: ModelConfig, seed: int = 0) -> "SiameseNetwork":
        return cls(config, NetworkWeights.initialize(config, seed))

    def train(self) -> "SiameseNetwork":
        self.weights.set_mode("train")
        return self

    def eval(self) -> "SiameseNetwork":
        self.weights.set_mode("infer")
        return self

    def parameters(self):
        return self.weights.trainable()

    # === Вход ===

    def standardize(self, images: ImageBatch) -> Tensor:
        """Пиксели [0, 1] -> (x - mean) / std по каналам, константа графа"""
        data = images.data if isinstance(images, Tensor) else np.asarray(images)
        if data.ndim == 3:
            data = data[None]
        expected = (3, self.config.input_height, self.config.input_width)
        if data.ndim != 4 or data.shape[1:] != expected:
            raise ShapeError("standardize", data.shape, expected)
        mean = np.asarray(self.config.pixel_mean).reshape(1, 3, 1, 1)
        std = np.asarray(self.config.pixel_std).reshape(1, 3, 1, 1)
        return Tensor(((data - mean) / std).astype(get_dtype()))

    def _block(self, x: Tensor, name: str) -> Tensor:
        return activate(batch_norm(conv2d(x, self.weights.conv(name)), self.weights.bn(name)), self.config.activation)

    # === Стадии ===

    def feature_extract(self, x: Tensor) -> Dict[int, Tensor]:
        """Стандартизованный пакет (N, 3, H, W) -> {уровень: (N, 96, h, w)}"""
        expected = (3, self.config.input_height, self.config.input_width)
        if x.ndim != 4 or x.shape[1:] != expected:
            raise ShapeError("feature_extract", x.shape, expected)
        features: Dict[int, Tensor] = {}
        h = x
        for name, _, _, level in EXTRACTOR:
            if level > self.config.depth:
                break
            h = maxpool2x2(self._block(h, name))
            if level >= 2:
                features[level] = h
        return features

    def extract(self, features: Dict[int, Tensor]) -> Tuple[Dict[int, List[Tensor]], List[AffineParams]]:
        """Части всех полос используемых уровней"""
        loc_weights = self.weights if self.config.use_stn else None
        parts: Dict[int, List[Tensor]] = {}
        affine: List[AffineParams] = []
        for level in self.config.levels:
            parts[level], params = extract_parts(
                features[level], self.config.stripes(level), loc_weights, self.config.activation
            )
            affine.extend(params)
        return parts, affine

    def head(self, fused: Tensor) -> Tensor:
        """conv4 -> conv5 + pool -> conv6 + GAP -> логиты (N, 2)"""
        h = self._block(fused, "conv4")
        h = maxpool2x2(self._block(h, "conv5"))
        h = global_avg_pool(self._block(h, "conv6"))
        return dense(h, *self.weights.dense("classifier"))

    def ranking_descriptor(self, parts: Dict[int, List[Tensor]]) -> Tensor:
        """
        Части каждой полосы: conv_a + pool; склейка полос по вертикали;
        conv_b уровня; GAP; склейка уровней по каналам; dense -> 256; нормировка.
        """
        pooled = []
        for level in self.config.levels:
            stripes = [maxpool2x2(self._block(part, "rank.conv_a")) for part in parts[level]]
            column = self._block(concat(stripes, axis=2), f"rank.conv_b{level}")
            pooled.append(global_avg_pool(column))
        h = concat(pooled, axis=1)
        descriptor, _ = l2_normalize(dense(h, *self.weights.dense("rank.fc")))
        return descriptor

    # === Пары ===

    def forward_pair(self, img1: ImageBatch, img2: ImageBatch) -> PairOutput:
        """Обе ветви идут одним пакетом 2N через общие веса"""
        x1, x2 = self.standardize(img1), self.standardize(img2)
        if x1.shape != x2.shape:
            raise ShapeError("forward_pair", x1.shape, x2.shape)
        n = x1.shape[0]

        features = self.feature_extract(concat([x1, x2], axis=0))
        parts, affine = self.extract(features)

        per_level = {}
        for level in self.config.levels:
            f1, f2 = features[level][:n], features[level][n:]
            p1 = [part[:n] for part in parts[level]]
            p2 = [part[n:] for part in parts[level]]
            per_level[level] = similarity_maps(f1, f2, p1, p2)
        simmaps = SimMaps.build(self.config, per_level)

        logits = self.head(simmaps.fused)
        r1 = r2 = None
        if self.config.use_ranking_loss:
            descriptors = self.ranking_descriptor(parts)
            r1, r2 = descriptors[:n], descriptors[n:]
        penalty = rotation_l1_penalty(affine, self.config.lambda_rot)
        return PairOutput(logits, r1, r2, penalty, simmaps, affine)

    def score(self, img1: ImageBatch, img2: ImageBatch) -> Tuple[np.ndarray, np.ndarray]:
        """SimiScore и вероятность совпадения для пакета пар (без графа)"""
        with no_grad():
            out = self.forward_pair(img1, img2)
        probs = out.probabilities()[:, MATCH]
        distances = out.distances()
        if distances is None:
            return probs.copy(), probs
        scores = simi_score(probs, distances, self.config.lambda_score, self.config.epsilon)
        return scores, probs
