"""
Архитектура сети: конфигурация, полосы, таблица параметров, формы
"""
import json
import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, List, Tuple

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from app.exceptions import ContractError


FEATURE_CHANNELS = 96
LOC_CHANNELS = (32, 32, 128)
HEAD_CHANNELS = (32, 32, 500)
AFFINE_DIM = 6
DESCRIPTOR_DIM = 256
NUM_CLASSES = 2
LEVELS = (2, 3, 4)

# Каскад свёрток: (имя, выходные каналы, ядро, уровень выхода)
EXTRACTOR = (
    ("conv1", 32, 5, 1),
    ("conv2", FEATURE_CHANNELS, 3, 2),
    ("conv3", FEATURE_CHANNELS, 3, 3),
    ("conv3b", FEATURE_CHANNELS, 3, 4),
)


def pooled(extent: int, times: int = 1) -> int:
    """Размер после пулинга 2x2 в режиме ceil"""
    for _ in range(times):
        extent = math.ceil(extent / 2)
    return extent


@dataclass(frozen=True)
class StripeSpec:
    """Горизонтальные полосы карты признаков одного уровня"""
    level: int
    height: int
    rows: Tuple[Tuple[int, int], ...]  # включительно, с единицы
    sampler_size: int

    def __post_init__(self):
        for start, end in self.rows:
            if not 1 <= start <= end <= self.height:
                raise ContractError(f"полоса {start}-{end} вне карты высоты {self.height}")
        for (_, end), (start, _) in zip(self.rows, self.rows[1:]):
            if start > end:
                raise ContractError(f"уровень {self.level}: соседние полосы не перекрываются")

    @property
    def heights(self) -> List[int]:
        return [end - start + 1 for start, end in self.rows]

    @classmethod
    def for_level(
        cls,
        level: int,
        height: int,
        sampler_size: int,
        divided: bool = True
    ) -> "StripeSpec":
        """
        Верхняя, средняя и нижняя полосы: 1..H/2, H/4..3H/4, H/2..H
        (40 -> 1-20/10-30/20-40, 20 -> 1-10/5-15/10-20, 10 -> 1-5/3-8/5-10).
        Без деления — одна полоса на всю карту.
        """
        if not divided:
            return cls(level, height, ((1, height),), sampler_size)
        half = max(1, math.ceil(height / 2))
        quarter = max(1, math.ceil(height / 4))
        three_quarters = max(quarter, math.ceil(3 * height / 4))
        rows = ((1, half), (quarter, three_quarters), (half, height))
        return cls(level, height, rows, sampler_size)


class ModelConfig(BaseModel):
    """Конфигурация модели (уровни, размеры, переключатели абляций, веса потерь)"""

    model_config = ConfigDict(frozen=True)

    levels: Tuple[int, ...] = (2, 3)
    input_height: int = 160
    input_width: int = 60
    sampler_sizes: Dict[int, int] = {2: 10, 3: 5, 4: 3}
    use_stn: bool = True
    use_dividing: bool = True
    use_ranking_loss: bool = True
    activation: str = "relu"
    margin: float = 1.0
    lambda_score: float = 0.2
    epsilon: float = 1e-4
    lambda_rot: float = 0.01
    pixel_mean: Tuple[float, float, float] = (0.5, 0.5, 0.5)
    pixel_std: Tuple[float, float, float] = (0.25, 0.25, 0.25)
    precision: str = "float32"
    # Разбиение, на котором обучена модель; eval повторяет его
    split_seed: int = 0
    split_fractions: Tuple[float, float, float] = (0.8, 0.1, 0.1)

    @field_validator("levels")
    @classmethod
    def _check_levels(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if not value:
            raise ValueError("нужен хотя бы один уровень")
        if any(level not in LEVELS for level in value):
            raise ValueError(f"уровни должны быть из {LEVELS}")
        return tuple(sorted(set(value)))

    @field_validator("activation")
    @classmethod
    def _check_activation(cls, value: str) -> str:
        if value not in ("relu", "tanh"):
            raise ValueError("активация: relu или tanh")
        return value

    @field_validator("precision")
    @classmethod
    def _check_precision(cls, value: str) -> str:
        if value not in ("float32", "float64"):
            raise ValueError("точность: float32 или float64")
        return value

    @model_validator(mode="after")
    def _check_sizes(self) -> "ModelConfig":
        for level in self.levels:
            f = self.sampler_sizes.get(level)
            if f is None or f < 1:
                raise ValueError(f"не задан размер сэмплера для уровня {level}")
        if self.input_height < 8 or self.input_width < 4:
            raise ValueError("входное изображение слишком мало")
        if min(self.pixel_std) <= 0:
            raise ValueError("pixel_std должен быть положительным")
        return self

    # === Производные величины ===

    def feature_size(self, level: int) -> Tuple[int, int]:
        """Размер x^(level): уровень j получается после j пулингов"""
        return pooled(self.input_height, level), pooled(self.input_width, level)

    def stripes(self, level: int) -> StripeSpec:
        height, _ = self.feature_size(level)
        return StripeSpec.for_level(level, height, self.sampler_sizes[level], self.use_dividing)

    @property
    def depth(self) -> int:
        """Глубина экстрактора: самый высокий используемый уровень"""
        return max(self.levels)

    @property
    def num_stripes(self) -> int:
        return 3 if self.use_dividing else 1

    @property
    def groups_per_level(self) -> int:
        return 2 * self.num_stripes

    @property
    def fused_channels(self) -> int:
        return FEATURE_CHANNELS * self.groups_per_level * len(self.levels)

    @property
    def label(self) -> str:
        text = "L" + "+L".join(str(level) for level in self.levels)
        if not self.use_ranking_loss:
            text += "-cls"
        if not self.use_stn:
            text += "-crop"
        if not self.use_dividing:
            text += "-nodiv"
        return text

    # === Сериализация key=value ===

    def to_kv(self) -> str:
        lines = []
        for key, value in sorted(self.model_dump().items()):
            if isinstance(value, dict):
                value = {str(k): v for k, v in sorted(value.items())}
            lines.append(f"{key}={json.dumps(value, sort_keys=True)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_kv(cls, text: str) -> "ModelConfig":
        values = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            key, sep, raw = line.partition("=")
            if not sep:
                raise ContractError(f"строка конфигурации без '=': {line!r}")
            values[key.strip()] = json.loads(raw)
        return cls.model_validate(values)


# === Таблица параметров ===

def conv_layers(config: ModelConfig) -> List[Tuple[str, int, int, int]]:
    """Все свёртки модели: (имя, выход, вход, ядро)"""
    layers = []
    in_c = 3
    for name, out_c, k, level in EXTRACTOR:
        if level > config.depth:
            break
        layers.append((name, out_c, in_c, k))
        in_c = out_c

    c4, c5, c6 = HEAD_CHANNELS
    layers += [
        ("conv4", c4, config.fused_channels, 1),
        ("conv5", c5, c4, 3),
        ("conv6", c6, c5, 1),
    ]

    if config.use_stn:
        l1, l2, l3 = LOC_CHANNELS
        for level in config.levels:
            layers += [
                (f"loc{level}.conv1", l1, FEATURE_CHANNELS, 3),
                (f"loc{level}.conv2", l2, l1, 3),
                (f"loc{level}.conv3", l3, l2, 1),
            ]

    if config.use_ranking_loss:
        layers.append(("rank.conv_a", FEATURE_CHANNELS, FEATURE_CHANNELS, 3))
        for level in config.levels:
            layers.append((f"rank.conv_b{level}", FEATURE_CHANNELS, FEATURE_CHANNELS, 3))
    return layers


def dense_layers(config: ModelConfig) -> List[Tuple[str, int, int]]:
    """Полносвязные слои: (имя, вход, выход)"""
    layers = [("classifier", HEAD_CHANNELS[2], NUM_CLASSES)]
    if config.use_stn:
        for level in config.levels:
            layers.append((f"loc{level}.fc", LOC_CHANNELS[2], AFFINE_DIM))
    if config.use_ranking_loss:
        layers.append(("rank.fc", FEATURE_CHANNELS * len(config.levels), DESCRIPTOR_DIM))
    return layers


def parameter_shapes(config: ModelConfig) -> "OrderedDict[str, Tuple[int, ...]]":
    """Обучаемые тензоры и их формы"""
    shapes: "OrderedDict[str, Tuple[int, ...]]" = OrderedDict()
    for name, out_c, in_c, k in conv_layers(config):
        shapes[f"{name}.weight"] = (out_c, in_c, k, k)
        shapes[f"{name}.bias"] = (out_c,)
        shapes[f"{name}.bn.gamma"] = (out_c,)
        shapes[f"{name}.bn.beta"] = (out_c,)
    for name, in_f, out_f in dense_layers(config):
        shapes[f"{name}.weight"] = (in_f, out_f)
        shapes[f"{name}.bias"] = (out_f,)
    return shapes


def buffer_shapes(config: ModelConfig) -> "OrderedDict[str, Tuple[int, ...]]":
    """Скользящие статистики нормализации (не обучаются, но сохраняются)"""
    shapes: "OrderedDict[str, Tuple[int, ...]]" = OrderedDict()
    for name, out_c, _, _ in conv_layers(config):
        shapes[f"{name}.bn.running_mean"] = (out_c,)
        shapes[f"{name}.bn.running_var"] = (out_c,)
    return shapes


def tensor_shapes(config: ModelConfig) -> "OrderedDict[str, Tuple[int, ...]]":
    shapes = parameter_shapes(config)
    shapes.update(buffer_shapes(config))
    return shapes


# === Журнал форм ===

def shape_ledger(config: ModelConfig) -> "OrderedDict[str, Tuple[int, ...]]":
    """Аналитические формы всех стадий для одного изображения / пары"""
    h, w = config.input_height, config.input_width
    ledger: "OrderedDict[str, Tuple[int, ...]]" = OrderedDict()
    ledger["input"] = (3, h, w)
    ledger["conv1"] = (32,) + (pooled(h), pooled(w))
    for level in range(2, config.depth + 1):
        ledger[f"x{level}"] = (FEATURE_CHANNELS,) + config.feature_size(level)
    for level in config.levels:
        f = config.sampler_sizes[level]
        ledger[f"parts{level}"] = (config.num_stripes, FEATURE_CHANNELS, f, f)
        ledger[f"sim{level}"] = (FEATURE_CHANNELS * config.groups_per_level,) + config.feature_size(level)

    fused_h, fused_w = config.feature_size(4)
    ledger["fused"] = (config.fused_channels, fused_h, fused_w)
    ledger["conv4"] = (HEAD_CHANNELS[0], fused_h, fused_w)
    ledger["conv5"] = (HEAD_CHANNELS[1], pooled(fused_h), pooled(fused_w))
    ledger["conv6"] = (HEAD_CHANNELS[2], pooled(fused_h), pooled(fused_w))
    ledger["logits"] = (NUM_CLASSES,)
    if config.use_ranking_loss:
        for level in config.levels:
            p = pooled(config.sampler_sizes[level])
            ledger[f"rank{level}"] = (FEATURE_CHANNELS, config.num_stripes * p, p)
        ledger["descriptor"] = (DESCRIPTOR_DIM,)
    return ledger
