"""
Именованные веса сети
"""
from collections import OrderedDict
from typing import Dict, Iterator, Mapping, Tuple

import numpy as np

from app.autograd import Tensor
from app.exceptions import MissingTensorError, TensorShapeMismatchError, UnknownTensorError
from app.network.architecture import ModelConfig, buffer_shapes, parameter_shapes, tensor_shapes
from app.nn import BatchNormState, Conv2dParams


class NetworkWeights:
    """Все тензоры модели по именам плюс состояния нормализации"""

    def __init__(self, config: ModelConfig, tensors: Mapping[str, Tensor]):
        expected = tensor_shapes(config)
        for name in tensors:
            if name not in expected:
                raise UnknownTensorError(name)
        for name, shape in expected.items():
            if name not in tensors:
                raise MissingTensorError(name)
            if tuple(tensors[name].shape) != shape:
                raise TensorShapeMismatchError(name, shape, tensors[name].shape)

        self.config = config
        self.tensors: "OrderedDict[str, Tensor]" = OrderedDict((name, tensors[name]) for name in expected)
        self._trainable = list(parameter_shapes(config))
        for name in self._trainable:
            self.tensors[name].requires_grad = True
            self.tensors[name].name = name
        self._bn: Dict[str, BatchNormState] = {}

    @classmethod
    def initialize(cls, config: ModelConfig, seed: int = 0) -> "NetworkWeights":
        """
        Свёртки — нормальное распределение Хе, полносвязные — 1/sqrt(in),
        голова локализации нулевая (старт с центрального кадра половинного масштаба).
        """
        rng = np.random.default_rng(seed)
        tensors: Dict[str, Tensor] = {}
        for name, shape in parameter_shapes(config).items():
            if name.endswith(".bn.gamma"):
                value = np.ones(shape)
            elif name.endswith(".bias") or name.endswith(".bn.beta"):
                value = np.zeros(shape)
            elif name.startswith("loc") and ".fc." in name:
                value = np.zeros(shape)
            elif len(shape) == 4:
                fan_in = shape[1] * shape[2] * shape[3]
                value = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)
            else:
                value = rng.normal(0.0, np.sqrt(1.0 / shape[0]), size=shape)
            tensors[name] = Tensor(value)
        for name, shape in buffer_shapes(config).items():
            fill = 1.0 if name.endswith("running_var") else 0.0
            tensors[name] = Tensor(np.full(shape, fill))
        return cls(config, tensors)

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self.tensors

    def __iter__(self) -> Iterator[str]:
        return iter(self.tensors)

    def items(self) -> Iterator[Tuple[str, Tensor]]:
        return iter(self.tensors.items())

    def trainable(self) -> "OrderedDict[str, Tensor]":
        return OrderedDict((name, self.tensors[name]) for name in self._trainable)

    def conv(self, name: str) -> Conv2dParams:
        return Conv2dParams(self.tensors[f"{name}.weight"], self.tensors[f"{name}.bias"])

    def bn(self, name: str) -> BatchNormState:
        """Состояние нормализации, общее с тензорами running_*"""
        state = self._bn.get(name)
        if state is None:
            state = BatchNormState(
                gamma=self.tensors[f"{name}.bn.gamma"],
                beta=self.tensors[f"{name}.bn.beta"],
                running_mean=self.tensors[f"{name}.bn.running_mean"].data,
                running_var=self.tensors[f"{name}.bn.running_var"].data,
            )
            self._bn[name] = state
        return state

    def dense(self, name: str) -> Tuple[Tensor, Tensor]:
        return self.tensors[f"{name}.weight"], self.tensors[f"{name}.bias"]

    def set_mode(self, mode: str) -> None:
        """train / infer для всех слоёв нормализации"""
        for key in self.tensors:
            if key.endswith(".bn.gamma"):
                self.bn(key[: -len(".bn.gamma")]).mode = mode

    def zero_grad(self) -> None:
        for tensor in self.tensors.values():
            tensor.grad = None

    def count_params(self) -> int:
        """Число обучаемых скаляров"""
        return int(sum(self.tensors[name].size for name in self._trainable))
