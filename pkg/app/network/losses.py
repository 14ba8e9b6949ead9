"""
Функции потерь и итоговая оценка сходства
"""
from typing import Optional, Union

import numpy as np

from app.autograd import Tensor, record
from app.exceptions import ContractError, ShapeError
from app.nn import softmax_cross_entropy


# Индекс класса "одна личность" в логитах
MATCH = 1

ArrayLike = Union[float, np.ndarray]


def classification_loss(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Средняя NLL верного класса"""
    return softmax_cross_entropy(logits, labels)


def contrastive_loss(r1: Tensor, r2: Tensor, labels: np.ndarray, margin: float = 1.0) -> Tensor:
    """
    (1/2m) * sum[y*d^2 + (1-y)*max(0, margin - d)^2], d = ||r1 - r2||.
    При d = 0 у несовпадающей пары градиент нулевой.
    """
    labels = np.asarray(labels)
    if r1.shape != r2.shape or r1.ndim != 2 or labels.shape != (r1.shape[0],):
        raise ShapeError("contrastive_loss", r1.shape, r2.shape, labels.shape)
    if r1.shape[0] == 0:
        raise ContractError("contrastive_loss: пустой пакет")
    if margin <= 0:
        raise ContractError("contrastive_loss: margin должен быть положительным")

    def forward(ad, bd):
        m = ad.shape[0]
        y = labels.astype(ad.dtype)
        diff = ad - bd
        d = np.sqrt(np.sum(diff * diff, axis=1))
        hinge = np.maximum(margin - d, 0.0)
        loss = np.sum(y * d * d + (1.0 - y) * hinge * hinge) / (2.0 * m)

        def backward_fn(g):
            safe = np.where(d > 0, d, 1.0)
            pull = y[:, None] * diff
            push = np.where(d > 0, -(1.0 - y) * hinge / safe, 0.0)[:, None] * diff
            grad = (pull + push) * (g / m)
            return grad, -grad

        return np.asarray(loss, dtype=ad.dtype), backward_fn

    return record("contrastive_loss", [r1, r2], forward)


def combined_loss(cls: Tensor, ctr: Optional[Tensor], rot_penalty: Tensor) -> Tensor:
    """L_cls + L_ctr + штраф поворота; без сети ранжирования L_ctr опускается"""
    total = cls if ctr is None else cls + ctr
    return total + rot_penalty


def descriptor_distance(r1: np.ndarray, r2: np.ndarray) -> np.ndarray:
    return np.linalg.norm(np.asarray(r1) - np.asarray(r2), axis=-1)


def simi_score(probs: ArrayLike, d: ArrayLike, lambda_score: float = 0.2, epsilon: float = 1e-4) -> ArrayLike:
    """p(match) + lambda / (d + eps)"""
    d = np.asarray(d, dtype=np.float64)
    if np.any(d < 0):
        raise ContractError("simi_score: расстояние не может быть отрицательным")
    score = np.asarray(probs, dtype=np.float64) + lambda_score / (d + epsilon)
    return float(score) if score.ndim == 0 else score
