"""
Сеть свёрточного сходства: полосы, выделение частей,
двусторонняя глубинная корреляция и слияние уровней
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Tuple, Union

from loguru import logger

from app.autograd import Tensor, concat
from app.exceptions import ContractError, ShapeError
from app.network.architecture import FEATURE_CHANNELS, ModelConfig, StripeSpec
from app.network.stn import (
    AffineParams,
    affine_grid,
    bilinear_sample,
    constrain_params,
    localization_forward,
)
from app.nn import depthwise_corr, maxpool2x2

if TYPE_CHECKING:
    from app.network.weights import NetworkWeights


TOP_LEVEL = 4
STRIPE_NAMES = ("upper", "middle", "bottom")


def split_stripes(featmap: Tensor, spec: StripeSpec) -> List[Tensor]:
    """Срезы строк (N, 96, H, W) по полосам уровня, ширина не меняется"""
    if featmap.ndim != 4 or featmap.shape[2] != spec.height:
        raise ShapeError(
            "split_stripes", featmap.shape, (spec.height,),
            detail=f"уровень {spec.level} ожидает высоту {spec.height}"
        )
    return [featmap[:, :, start - 1:end, :] for start, end in spec.rows]


def central_crop(region: Tensor, size: int) -> Tensor:
    """Фиксированный центральный кадр половинного масштаба вместо трансформера"""
    params = AffineParams.constant(region.shape[0])
    return bilinear_sample(region, affine_grid(params, size, size))


def extract_parts(
    featmap: Tensor,
    spec: StripeSpec,
    weights: Optional["NetworkWeights"],
    activation: str = "relu"
) -> Tuple[List[Tensor], List[AffineParams]]:
    """
    По полосе: локализация -> ограничение -> сетка f x f -> выборка.
    Все полосы уровня используют одну сеть локализации.
    Без весов (weights=None) — центральный кадр, список параметров пуст.
    """
    parts: List[Tensor] = []
    params_list: List[AffineParams] = []
    f = spec.sampler_size
    for region in split_stripes(featmap, spec):
        if weights is None:
            parts.append(central_crop(region, f))
            continue
        params = constrain_params(localization_forward(region, weights, spec.level, activation))
        parts.append(bilinear_sample(region, affine_grid(params, f, f)))
        params_list.append(params)
    return parts, params_list


def similarity_maps(
    x1: Tensor,
    x2: Tensor,
    parts1: Sequence[Tensor],
    parts2: Sequence[Tensor]
) -> Tensor:
    """
    Группы каналов: части второго изображения по карте первого
    (upper, middle, bottom), затем части первого по карте второго.
    """
    if x1.shape != x2.shape:
        raise ShapeError("similarity_maps", x1.shape, x2.shape)
    if len(parts1) != len(parts2):
        raise ContractError("similarity_maps: разное число частей у ветвей")
    forward = [depthwise_corr(x1, part) for part in parts2]
    backward = [depthwise_corr(x2, part) for part in parts1]
    return concat(forward + backward, axis=1)


def pool_times(x: Tensor, times: int) -> Tensor:
    for _ in range(times):
        x = maxpool2x2(x)
    return x


def fuse_levels(sims: Dict[int, Tensor]) -> Tensor:
    """
    Каскад по возрастанию уровня: накопленная карта пулится до размера
    следующего уровня и склеивается с ним по каналам; в конце — до уровня 4.
    Для {2, 3}: pool(sim2) ++ sim3, затем pool -> 1152 x 10 x 4.
    """
    if not sims:
        raise ContractError("fuse_levels: нет ни одного уровня")
    fused: Optional[Tensor] = None
    current = 0
    for level in sorted(sims):
        if fused is None:
            fused = sims[level]
        else:
            fused = concat([pool_times(fused, level - current), sims[level]], axis=1)
        current = level
    return pool_times(fused, TOP_LEVEL - current)


@dataclass
class SimMaps:
    """Карты сходства по уровням и итоговая склейка"""
    per_level: Dict[int, Tensor]
    fused: Tensor
    groups: int = 6
    labels: List[str] = field(default_factory=list)

    def __post_init__(self):
        expected = FEATURE_CHANNELS * self.groups * len(self.per_level)
        if self.fused.shape[1] != expected:
            raise ShapeError("SimMaps", self.fused.shape, (None, expected))
        if not self.labels:
            directions = ("1to2", "2to1")
            names = STRIPE_NAMES if self.groups == 6 else ("whole",)
            self.labels = [f"{d}_{n}" for d in directions for n in names]

    @classmethod
    def build(cls, config: ModelConfig, per_level: Dict[int, Tensor]) -> "SimMaps":
        return cls(per_level=per_level, fused=fuse_levels(per_level), groups=config.groups_per_level)

    def channel(self, source: Union[int, str], index: int, sample: int = 0):
        """Один канал уровня (int) или склейки ("fused") как массив H x W"""
        tensor = self.fused if source == "fused" else self.per_level.get(source)
        if tensor is None:
            raise ContractError(f"нет карт сходства уровня {source!r}")
        if not 0 <= index < tensor.shape[1]:
            raise ContractError(f"канал {index} вне диапазона 0..{tensor.shape[1] - 1}")
        return tensor.data[sample, index]

    def export(self, out_dir: Path, channels: Sequence[int], sample: int = 0) -> List[Path]:
        """Запись выбранных каналов каждой группы в PGM"""
        from app.data.imageio import write_pgm

        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written: List[Path] = []
        for level, tensor in sorted(self.per_level.items()):
            for group, label in enumerate(self.labels):
                for channel in channels:
                    index = group * FEATURE_CHANNELS + channel
                    path = out_dir / f"L{level}_{label}_c{channel:02d}.pgm"
                    write_pgm(path, self.channel(level, index, sample))
                    written.append(path)
        for channel in channels:
            path = out_dir / f"fused_c{channel:04d}.pgm"
            write_pgm(path, self.channel("fused", channel, sample))
            written.append(path)
        logger.info(f"🖼 Записано карт сходства: {len(written)} в {out_dir}")
        return written
