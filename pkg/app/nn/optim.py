"""
ADAM с раздельным затуханием весов
"""
from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np

from app.autograd import Tensor
from app.exceptions import ContractError


# Смещения и параметры нормализации не затухают
NO_DECAY_SUFFIXES: Tuple[str, ...] = (".bias", ".gamma", ".beta")


@dataclass
class AdamState:
    """Моменты по каждому параметру и счётчик шагов"""
    lr: float = 0.0005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0005
    step: int = 0
    exp_avg: Dict[str, np.ndarray] = field(default_factory=dict)
    exp_avg_sq: Dict[str, np.ndarray] = field(default_factory=dict)


def decays(name: str) -> bool:
    return not name.endswith(NO_DECAY_SUFFIXES)


def adam_step(params: Mapping[str, Tensor], state: AdamState) -> None:
    """
    Один шаг ADAM со смещённой коррекцией моментов.
    Затухание lr*wd*theta вычитается после адаптивного шага.
    """
    missing = [name for name, p in params.items() if p.grad is None]
    if missing:
        raise ContractError(f"adam_step: нет градиента для {missing[0]!r}")

    state.step += 1
    bias1 = 1.0 - state.beta1 ** state.step
    bias2 = 1.0 - state.beta2 ** state.step

    for name, p in params.items():
        grad = p.grad
        if grad.shape != p.shape:
            raise ContractError(f"adam_step: градиент {name!r} формы {grad.shape}, параметр {p.shape}")
        m = state.exp_avg.get(name)
        v = state.exp_avg_sq.get(name)
        if m is None:
            m = np.zeros_like(p.data)
            v = np.zeros_like(p.data)

        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        state.exp_avg[name] = m
        state.exp_avg_sq[name] = v

        m_hat = m / bias1
        v_hat = v / bias2
        p.data -= (state.lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(p.data.dtype)
        if decays(name) and state.weight_decay:
            p.data -= (state.lr * state.weight_decay * p.data).astype(p.data.dtype)


class Adam:
    """Обёртка над AdamState для набора именованных параметров"""

    def __init__(
        self,
        params: Mapping[str, Tensor],
        lr: float = 0.0005,
        weight_decay: float = 0.0005,
        betas: Tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8
    ):
        self.params = dict(params)
        self.state = AdamState(lr=lr, beta1=betas[0], beta2=betas[1], eps=eps, weight_decay=weight_decay)

    def step(self) -> None:
        adam_step(self.params, self.state)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None
