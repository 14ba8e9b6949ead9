"""
Размер модели и вычислительная сложность
"""
from collections import OrderedDict
from typing import Dict

from app.network.architecture import (
    AFFINE_DIM,
    DESCRIPTOR_DIM,
    EXTRACTOR,
    FEATURE_CHANNELS,
    HEAD_CHANNELS,
    LOC_CHANNELS,
    NUM_CLASSES,
    ModelConfig,
    conv_layers,
    dense_layers,
    pooled,
)
from app.network.weights import NetworkWeights


def conv_param_count(out_c: int, in_c: int, k: int, with_bn: bool = True) -> int:
    """k*k*in*out + out, плюс gamma/beta нормализации"""
    count = k * k * in_c * out_c + out_c
    return count + 2 * out_c if with_bn else count


def count_params(weights: NetworkWeights) -> int:
    return weights.count_params()


def count_params_closed_form(config: ModelConfig) -> int:
    """Сумма по таблице слоёв без создания тензоров"""
    total = sum(conv_param_count(out_c, in_c, k) for _, out_c, in_c, k in conv_layers(config))
    total += sum(in_f * out_f + out_f for _, in_f, out_f in dense_layers(config))
    return total


def _conv(k: int, in_c: int, out_c: int, h: int, w: int) -> int:
    return 2 * k * k * in_c * out_c * h * w


def flops_breakdown(config: ModelConfig) -> "OrderedDict[str, int]":
    """
    FLOPs (умножение-сложение = 2) одного прямого прохода пары в режиме
    вывода, по стадиям. Нормализация, активации и пулинг не учитываются.
    """
    images = 2
    stages: "OrderedDict[str, int]" = OrderedDict()

    h, w = config.input_height, config.input_width
    in_c = 3
    extractor = 0
    for _, out_c, k, level in EXTRACTOR:
        if level > config.depth:
            break
        extractor += _conv(k, in_c, out_c, h, w)
        h, w, in_c = pooled(h), pooled(w), out_c
    stages["extractor"] = images * extractor

    loc = sample = rank = corr = 0
    l1, l2, l3 = LOC_CHANNELS
    for level in config.levels:
        fh, fw = config.feature_size(level)
        spec = config.stripes(level)
        f = spec.sampler_size
        for height in spec.heights:
            if config.use_stn:
                loc += _conv(3, FEATURE_CHANNELS, l1, height, fw)
                loc += _conv(3, l1, l2, pooled(height), pooled(fw))
                loc += _conv(1, l2, l3, pooled(height, 2), pooled(fw, 2))
                loc += 2 * l3 * AFFINE_DIM
            sample += 2 * 4 * FEATURE_CHANNELS * f * f
            if config.use_ranking_loss:
                rank += _conv(3, FEATURE_CHANNELS, FEATURE_CHANNELS, f, f)
        if config.use_ranking_loss:
            p = pooled(f)
            rank += _conv(3, FEATURE_CHANNELS, FEATURE_CHANNELS, config.num_stripes * p, p)
        # Каждая ветвь коррелирует свою карту со всеми частями соседа
        corr += config.groups_per_level * 2 * FEATURE_CHANNELS * f * f * fh * fw

    stages["localization"] = images * loc
    stages["sampling"] = images * sample
    stages["correlation"] = corr

    fh, fw = config.feature_size(4)
    c4, c5, c6 = HEAD_CHANNELS
    head = _conv(1, config.fused_channels, c4, fh, fw)
    head += _conv(3, c4, c5, fh, fw)
    head += _conv(1, c5, c6, pooled(fh), pooled(fw))
    stages["head"] = head + 2 * c6 * NUM_CLASSES

    if config.use_ranking_loss:
        embed = 2 * FEATURE_CHANNELS * len(config.levels) * DESCRIPTOR_DIM
        stages["ranking"] = images * (rank + embed)
    return stages


def count_flops(config: ModelConfig) -> int:
    return int(sum(flops_breakdown(config).values()))


def complexity_summary(config: ModelConfig) -> Dict[str, int]:
    return {"params": count_params_closed_form(config), "flops": count_flops(config)}
