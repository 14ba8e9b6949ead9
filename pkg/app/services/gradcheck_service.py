"""
Сервис проверки градиентов: именованный набор проверок в float64
"""
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger

from app.autograd import Tensor, finite_diff_check, precision, sample_indices
from app.network import (
    ModelConfig,
    SamplingGrid,
    SiameseNetwork,
    affine_grid,
    bilinear_sample,
    classification_loss,
    combined_loss,
    constrain_params,
    contrastive_loss,
    localization_forward,
)
from app.nn import (
    BatchNormState,
    Conv2dParams,
    batch_norm,
    conv2d,
    dense,
    depthwise_corr,
    global_avg_pool,
    maxpool2x2,
    softmax_cross_entropy,
)


@dataclass
class CheckResult:
    name: str
    target: str
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.error) and self.error <= self.tolerance)


def micro_config() -> ModelConfig:
    """Минимальная модель для сквозной проверки: вход 64x24"""
    return ModelConfig(
        levels=(2, 3),
        input_height=64,
        input_width=24,
        sampler_sizes={2: 3, 3: 2, 4: 1},
        precision="float64",
    )


def micro_network(seed: int = 0) -> SiameseNetwork:
    """Микромодель с ненулевой головой локализации (нецелые координаты выборки)"""
    network = SiameseNetwork.create(micro_config(), seed=seed)
    rng = np.random.default_rng(seed + 1)
    for name, tensor in network.weights.trainable().items():
        if name.startswith("loc") and ".fc." in name:
            tensor.data[...] = rng.normal(0.0, 0.1, size=tensor.shape)
    return network.train()


class GradcheckService:
    """Сервис для проверки аналитических градиентов конечными разностями"""

    def __init__(
        self,
        eps: float = 1e-5,
        tolerance: float = 1e-4,
        chain_tolerance: float = 1e-3,
        max_indices: int = 24,
        seed: int = 0
    ):
        self.eps = eps
        self.tolerance = tolerance
        self.chain_tolerance = chain_tolerance
        self.max_indices = max_indices
        self.seed = seed
        self._checks: Dict[str, Callable[[], List[CheckResult]]] = {
            "conv2d": self._conv2d,
            "depthwise_corr": self._depthwise_corr,
            "bilinear_sample": self._bilinear_sample,
            "affine_grid": self._affine_grid,
            "batch_norm": self._batch_norm,
            "dense": self._dense,
            "maxpool": self._maxpool,
            "gap": self._gap,
            "softmax_nll": self._softmax_nll,
            "contrastive": self._contrastive,
            "localization": self._localization_chain,
            "combined": self._combined,
        }

    @property
    def names(self) -> List[str]:
        return list(self._checks)

    # === Общее ===

    def _check(self, name: str, target: str, fn, x: Tensor, tolerance: Optional[float] = None) -> CheckResult:
        indices = sample_indices(x.size, self.max_indices, self.seed)
        error = finite_diff_check(fn, x, self.eps, indices)
        return CheckResult(name, target, error, tolerance or self.tolerance)

    def run(self, names: Optional[Sequence[str]] = None) -> pd.DataFrame:
        """Запуск проверок; результат — таблица name/target/error/tolerance/passed"""
        names = list(names) if names else self.names
        unknown = [n for n in names if n not in self._checks]
        if unknown:
            raise KeyError(f"неизвестные проверки: {unknown}; доступны: {self.names}")

        results: List[CheckResult] = []
        started = time.perf_counter()
        with precision("float64"):
            for name in names:
                for result in self._checks[name]():
                    results.append(result)
                    mark = "✅" if result.passed else "❌"
                    logger.info(f"{mark} {name}[{result.target}]: ошибка {result.error:.2e} (допуск {result.tolerance:.0e})")
        logger.debug(f"Проверка градиентов заняла {time.perf_counter() - started:.1f} с")
        return pd.DataFrame(
            [{**r.__dict__, "passed": r.passed} for r in results],
            columns=["name", "target", "error", "tolerance", "passed"],
        )

    # === Элементарные операции ===

    def _conv2d(self) -> List[CheckResult]:
        rng = np.random.default_rng(self.seed)
        x = Tensor(rng.normal(size=(2, 3, 5, 4)))
        w = Tensor(rng.normal(size=(4, 3, 3, 3)))
        b = Tensor(rng.normal(size=4))
        r = np.random.default_rng(self.seed + 1)
        proj = Tensor(r.normal(size=(2, 4, 3, 2)))

        def loss(_):
            return (conv2d(x, Conv2dParams(w, b, stride=2)) * proj).sum()

        return [self._check("conv2d", t, loss, v) for t, v in (("x", x), ("weight", w), ("bias", b))]

    def _depthwise_corr(self) -> List[CheckResult]:
        rng = np.random.default_rng(self.seed)
        signal = Tensor(rng.normal(size=(2, 3, 6, 5)))
        filt = Tensor(rng.normal(size=(2, 3, 4, 3)))
        proj = Tensor(rng.normal(size=(2, 3, 6, 5)))

        def loss(_):
            return (depthwise_corr(signal, filt) * proj).sum()

        return [self._check("depthwise_corr", t, loss, v) for t, v in (("signal", signal), ("filter", filt))]

    def _bilinear_sample(self) -> List[CheckResult]:
        rng = np.random.default_rng(self.seed)
        source = Tensor(rng.normal(size=(2, 3, 7, 5)))
        coords = Tensor(rng.uniform(-0.9, 0.9, size=(2, 4, 3, 2)))
        proj = Tensor(rng.normal(size=(2, 3, 4, 3)))

        def loss(_):
            return (bilinear_sample(source, SamplingGrid(coords)) * proj).sum()

        return [self._check("bilinear_sample", t, loss, v) for t, v in (("input", source), ("grid", coords))]

    def _affine_grid(self) -> List[CheckResult]:
        rng = np.random.default_rng(self.seed)
        raw = Tensor(rng.uniform(-0.3, 0.3, size=(2, 6)))
        proj = Tensor(rng.normal(size=(2, 3, 4, 2)))

        def loss(_):
            return (affine_grid(constrain_params(raw), 3, 4).coords * proj).sum()

        return [self._check("affine_grid", "raw6", loss, raw)]

    def _batch_norm(self) -> List[CheckResult]:
        rng = np.random.default_rng(self.seed)
        x = Tensor(rng.normal(size=(4, 3, 3, 2)))
        state = BatchNormState.create(3)
        state.gamma.data[...] = rng.normal(size=3)
        state.beta.data[...] = rng.normal(size=3)
        proj = Tensor(rng.normal(size=(4, 3, 3, 2)))

        def loss(_):
            return (batch_norm(x, state) * proj).sum()

        targets = (("x", x), ("gamma", state.gamma), ("beta", state.beta))
        return [self._check("batch_norm", t, loss, v) for t, v in targets]

    def _dense(self) -> List[CheckResult]:
        rng = np.random.default_rng(self.seed)
        x = Tensor(rng.normal(size=(3, 5)))
        w = Tensor(rng.normal(size=(5, 4)))
        b = Tensor(rng.normal(size=4))
        proj = Tensor(rng.normal(size=(3, 4)))

        def loss(_):
            return (dense(x, w, b) * proj).sum()

        return [self._check("dense", t, loss, v) for t, v in (("x", x), ("weight", w), ("bias", b))]

    def _maxpool(self) -> List[CheckResult]:
        rng = np.random.default_rng(self.seed)
        # Перестановка исключает равенства внутри окна
        x = Tensor(rng.permutation(2 * 2 * 5 * 3).reshape(2, 2, 5, 3) * 0.1)
        proj = Tensor(rng.normal(size=(2, 2, 3, 2)))
        return [self._check("maxpool", "x", lambda _: (maxpool2x2(x) * proj).sum(), x)]

    def _gap(self) -> List[CheckResult]:
        rng = np.random.default_rng(self.seed)
        x = Tensor(rng.normal(size=(2, 3, 4, 3)))
        proj = Tensor(rng.normal(size=(2, 3)))
        return [self._check("gap", "x", lambda _: (global_avg_pool(x) * proj).sum(), x)]

    def _softmax_nll(self) -> List[CheckResult]:
        rng = np.random.default_rng(self.seed)
        logits = Tensor(rng.normal(size=(5, 2)))
        labels = rng.integers(0, 2, size=5)
        return [self._check("softmax_nll", "logits", lambda _: softmax_cross_entropy(logits, labels), logits)]

    def _contrastive(self) -> List[CheckResult]:
        rng = np.random.default_rng(self.seed)
        r1 = Tensor(rng.normal(size=(4, 6)) * 0.2)
        r2 = Tensor(rng.normal(size=(4, 6)) * 0.2)
        labels = np.array([1, 0, 0, 1])

        def loss(_):
            return contrastive_loss(r1, r2, labels, margin=1.0)

        return [self._check("contrastive", t, loss, v) for t, v in (("r1", r1), ("r2", r2))]

    # === Составные цепочки ===

    def _localization_chain(self) -> List[CheckResult]:
        """локализация -> ограничение -> сетка -> выборка -> сумма по весам loc conv1"""
        network = micro_network(self.seed)
        weights = network.weights
        rng = np.random.default_rng(self.seed)
        region = Tensor(rng.normal(size=(2, 96, 8, 6)))
        proj = Tensor(rng.normal(size=(2, 96, 3, 3)))

        def loss(_):
            params = constrain_params(localization_forward(region, weights, 2))
            return (bilinear_sample(region, affine_grid(params, 3, 3)) * proj).sum()

        targets = ("loc2.conv1.weight", "loc2.fc.weight")
        return [self._check("localization", t, loss, weights[t], self.chain_tolerance) for t in targets]

    def _combined(self) -> List[CheckResult]:
        """Полная потеря микромодели на пакете из двух пар"""
        network = micro_network(self.seed)
        config = network.config
        rng = np.random.default_rng(self.seed)
        img1 = rng.uniform(0.0, 1.0, size=(2, 3, config.input_height, config.input_width))
        img2 = rng.uniform(0.0, 1.0, size=(2, 3, config.input_height, config.input_width))
        labels = np.array([1, 0])

        def loss(_):
            out = network.forward_pair(img1, img2)
            return combined_loss(
                classification_loss(out.logits, labels),
                contrastive_loss(out.r1, out.r2, labels, config.margin),
                out.rot_penalty,
            )

        targets = ("conv1.weight", "conv4.weight", "classifier.weight", "rank.fc.weight", "loc3.fc.weight")
        return [self._check("combined", t, loss, network.weights[t], self.chain_tolerance) for t in targets]
