"""
Параметры слоёв: свёртка и пакетная нормализация
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from app.autograd import Tensor
from app.exceptions import ContractError


PADDING_MODES = ("same", "valid")
BN_MODES = ("train", "infer")


@dataclass
class Conv2dParams:
    """Фильтры (out, in, kh, kw), смещение (out,), шаг и режим дополнения"""
    weight: Tensor
    bias: Tensor
    stride: int = 1
    padding: str = "same"

    def __post_init__(self):
        if self.weight.ndim != 4:
            raise ContractError(f"conv2d: фильтры должны быть 4-мерными, форма {self.weight.shape}")
        if self.bias.shape != (self.weight.shape[0],):
            raise ContractError(f"conv2d: смещение {self.bias.shape} не соответствует {self.weight.shape[0]} фильтрам")
        if self.stride < 1:
            raise ContractError("conv2d: шаг должен быть положительным")
        if self.padding not in PADDING_MODES:
            raise ContractError(f"conv2d: неизвестный режим дополнения {self.padding!r}")
        kh, kw = self.kernel_size
        if self.padding == "same" and (kh % 2 == 0 or kw % 2 == 0):
            raise ContractError(f"conv2d: режим same требует нечётного ядра, получено {kh}x{kw}")

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1]

    @property
    def kernel_size(self) -> Tuple[int, int]:
        return self.weight.shape[2], self.weight.shape[3]


@dataclass
class BatchNormState:
    """
    Пакетная нормализация по каналам.
    running_mean / running_var обновляются на месте, чтобы оставаться
    общими с тензорами чекпоинта.
    """
    gamma: Tensor
    beta: Tensor
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.9
    eps: float = 1e-5
    mode: str = "train"

    def __post_init__(self):
        if not 0.0 < self.momentum < 1.0:
            raise ContractError("batch_norm: momentum должен лежать в (0, 1)")
        if self.eps <= 0:
            raise ContractError("batch_norm: eps должен быть положительным")
        if self.mode not in BN_MODES:
            raise ContractError(f"batch_norm: неизвестный режим {self.mode!r}")
        if np.any(self.running_var <= 0):
            raise ContractError("batch_norm: running_var должна быть строго положительной")

    @property
    def channels(self) -> int:
        return self.gamma.shape[0]

    @classmethod
    def create(cls, channels: int) -> "BatchNormState":
        """Начальное состояние: gamma=1, beta=0, статистики 0/1"""
        return cls(
            gamma=Tensor(np.ones(channels), requires_grad=True),
            beta=Tensor(np.zeros(channels), requires_grad=True),
            running_mean=Tensor(np.zeros(channels)).data,
            running_var=Tensor(np.ones(channels)).data,
        )
