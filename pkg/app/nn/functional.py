"""
Примитивы нейросети: свёртки, пулинг, нормализация, активации
"""
import math
from typing import Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from app.autograd import Tensor, record
from app.exceptions import ContractError, ShapeError
from app.nn.layers import BatchNormState, Conv2dParams


# === Свёртка (im2col) ===

def _im2col(xp: np.ndarray, kh: int, kw: int, stride: int) -> np.ndarray:
    """(N, C, H, W) с дополнением -> (N*Ho*Wo, C*kh*kw)"""
    n, c = xp.shape[:2]
    windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    ho, wo = windows.shape[2], windows.shape[3]
    return windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * ho * wo, c * kh * kw)


def _col2im(
    dcols: np.ndarray,
    padded_shape: Tuple[int, ...],
    kh: int,
    kw: int,
    stride: int,
    ho: int,
    wo: int
) -> np.ndarray:
    n, c = padded_shape[:2]
    dc = dcols.reshape(n, ho, wo, c, kh, kw)
    out = np.zeros(padded_shape, dtype=dcols.dtype)
    for i in range(kh):
        for j in range(kw):
            out[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride] += dc[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    return out


def conv2d(x: Tensor, params: Conv2dParams) -> Tensor:
    """Взаимная корреляция NCHW плюс смещение"""
    if x.ndim != 4 or x.shape[1] != params.in_channels:
        raise ShapeError("conv2d", x.shape, params.weight.shape)

    kh, kw = params.kernel_size
    stride = params.stride
    ph, pw = ((kh - 1) // 2, (kw - 1) // 2) if params.padding == "same" else (0, 0)
    need_x = x.requires_grad

    def forward(xd, wd, bd):
        n, _, h, w = xd.shape
        out_c = wd.shape[0]
        xp = np.pad(xd, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
        ho = (h + 2 * ph - kh) // stride + 1
        wo = (w + 2 * pw - kw) // stride + 1
        if ho < 1 or wo < 1:
            raise ShapeError("conv2d", xd.shape, wd.shape, detail="ядро больше входа")
        wmat = wd.reshape(out_c, -1)
        cols = _im2col(xp, kh, kw, stride)
        out = (cols @ wmat.T + bd).reshape(n, ho, wo, out_c).transpose(0, 3, 1, 2)

        def backward_fn(g):
            gm = g.transpose(0, 2, 3, 1).reshape(-1, out_c)
            gb = gm.sum(axis=0)
            # Окна пересчитываются в backward, граф их не хранит
            cols_b = _im2col(xp, kh, kw, stride)
            gw = (gm.T @ cols_b).reshape(wd.shape)
            gx = None
            if need_x:
                gxp = _col2im(gm @ wmat, xp.shape, kh, kw, stride, ho, wo)
                gx = gxp[:, :, ph:ph + h, pw:pw + w]
            return gx, gw, gb

        return np.ascontiguousarray(out), backward_fn

    return record("conv2d", [x, params.weight, params.bias], forward)


# === Глубинная корреляция ===

def _corr_padding(fh: int, fw: int) -> Tuple[int, int, int, int]:
    # Несимметричное дополнение нулями: выход ровно H x W при любом размере фильтра
    return (fh - 1) // 2, fh // 2, (fw - 1) // 2, fw // 2


def depthwise_corr(signal: Tensor, filt: Tensor) -> Tensor:
    """
    Поканальная взаимная корреляция: канал c выхода — корреляция канала c
    сигнала с каналом c фильтра. Фильтр — активация сети, градиент идёт
    в оба операнда. Формы (N, C, H, W) и (N, C, f, f) либо без оси N.
    """
    if signal.ndim == 3 and filt.ndim == 3:
        out = depthwise_corr(signal.reshape((1,) + signal.shape), filt.reshape((1,) + filt.shape))
        return out.reshape(out.shape[1:])
    if signal.ndim != 4 or filt.ndim != 4 or signal.shape[:2] != filt.shape[:2]:
        raise ShapeError("depthwise_corr", signal.shape, filt.shape)

    fh, fw = filt.shape[2], filt.shape[3]
    top, bottom, left, right = _corr_padding(fh, fw)
    need_signal = signal.requires_grad
    need_filt = filt.requires_grad

    def forward(sd, fd):
        n, c, h, w = sd.shape
        sp = np.pad(sd, ((0, 0), (0, 0), (top, bottom), (left, right)))
        out = np.zeros_like(sd)
        for i in range(fh):
            for j in range(fw):
                out += sp[:, :, i:i + h, j:j + w] * fd[:, :, i:i + 1, j:j + 1]

        def backward_fn(g):
            gs = gf = None
            if need_signal:
                gsp = np.zeros_like(sp)
                for i in range(fh):
                    for j in range(fw):
                        gsp[:, :, i:i + h, j:j + w] += g * fd[:, :, i:i + 1, j:j + 1]
                gs = gsp[:, :, top:top + h, left:left + w]
            if need_filt:
                gf = np.empty_like(fd)
                for i in range(fh):
                    for j in range(fw):
                        gf[:, :, i, j] = np.sum(g * sp[:, :, i:i + h, j:j + w], axis=(2, 3))
            return gs, gf

        return out, backward_fn

    return record("depthwise_corr", [signal, filt], forward)


# === Пулинг ===

def maxpool2x2(x: Tensor) -> Tensor:
    """
    Макс-пулинг 2x2 с шагом 2 в режиме ceil: нечётные размеры
    дополняются -inf (15 -> 8). При равенстве побеждает первый
    элемент окна в построчном порядке.
    """
    if x.ndim != 4:
        raise ShapeError("maxpool2x2", x.shape)

    def forward(xd):
        n, c, h, w = xd.shape
        ho, wo = math.ceil(h / 2), math.ceil(w / 2)
        xp = np.pad(xd, ((0, 0), (0, 0), (0, 2 * ho - h), (0, 2 * wo - w)), constant_values=-np.inf)
        win = xp.reshape(n, c, ho, 2, wo, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, ho, wo, 4)
        idx = np.argmax(win, axis=-1)[..., None]
        out = np.take_along_axis(win, idx, axis=-1)[..., 0]

        def backward_fn(g):
            gw = np.zeros((n, c, ho, wo, 4), dtype=g.dtype)
            np.put_along_axis(gw, idx, g[..., None], axis=-1)
            gp = gw.reshape(n, c, ho, wo, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, 2 * ho, 2 * wo)
            return (gp[:, :, :h, :w],)

        return out, backward_fn

    return record("maxpool2x2", [x], forward)


def global_avg_pool(x: Tensor) -> Tensor:
    """(N, C, H, W) -> (N, C)"""
    if x.ndim != 4:
        raise ShapeError("global_avg_pool", x.shape)

    def forward(xd):
        h, w = xd.shape[2], xd.shape[3]
        out = xd.mean(axis=(2, 3))
        return out, lambda g: (np.broadcast_to(g[:, :, None, None] / (h * w), xd.shape),)

    return record("global_avg_pool", [x], forward)


# === Пакетная нормализация ===

def batch_norm(x: Tensor, state: BatchNormState) -> Tensor:
    """
    Нормализация по каналам (ось 1) для (N, C) и (N, C, H, W).
    В режиме train используется статистика пакета и обновляются
    скользящие средние, в режиме infer — только скользящие средние.
    """
    if x.ndim not in (2, 4) or x.shape[1] != state.channels:
        raise ShapeError("batch_norm", x.shape, state.gamma.shape)
    if state.mode == "train" and x.shape[0] < 2:
        raise ContractError("batch_norm: в режиме train размер пакета должен быть не меньше 2")

    axes = (0,) if x.ndim == 2 else (0, 2, 3)
    view = (1, -1) if x.ndim == 2 else (1, -1, 1, 1)
    eps = state.eps

    if state.mode == "infer":
        mean = state.running_mean.reshape(view)
        inv_std = 1.0 / np.sqrt(state.running_var.reshape(view) + eps)

        def forward_infer(xd, gd, bd):
            xhat = (xd - mean) * inv_std
            out = gd.reshape(view) * xhat + bd.reshape(view)

            def backward_fn(g):
                return g * gd.reshape(view) * inv_std, np.sum(g * xhat, axis=axes), np.sum(g, axis=axes)

            return out, backward_fn

        return record("batch_norm", [x, state.gamma, state.beta], forward_infer)

    def forward_train(xd, gd, bd):
        m = xd.size // xd.shape[1]
        mean = xd.mean(axis=axes, keepdims=True)
        var = xd.var(axis=axes, keepdims=True)
        inv_std = 1.0 / np.sqrt(var + eps)
        xhat = (xd - mean) * inv_std
        out = gd.reshape(view) * xhat + bd.reshape(view)

        momentum = state.momentum
        unbiased = var.reshape(-1) * (m / max(m - 1, 1))
        state.running_mean[...] = momentum * state.running_mean + (1.0 - momentum) * mean.reshape(-1)
        state.running_var[...] = momentum * state.running_var + (1.0 - momentum) * unbiased

        def backward_fn(g):
            dxhat = g * gd.reshape(view)
            sum_d = np.sum(dxhat, axis=axes, keepdims=True)
            sum_dx = np.sum(dxhat * xhat, axis=axes, keepdims=True)
            gx = inv_std / m * (m * dxhat - sum_d - xhat * sum_dx)
            return gx, np.sum(g * xhat, axis=axes), np.sum(g, axis=axes)

        return out, backward_fn

    return record("batch_norm", [x, state.gamma, state.beta], forward_train)


# === Полносвязный слой и активации ===

def dense(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """(N, in) @ (in, out) + (out,)"""
    if x.ndim != 2 or weight.ndim != 2 or x.shape[1] != weight.shape[0]:
        raise ShapeError("dense", x.shape, weight.shape)
    if bias.shape != (weight.shape[1],):
        raise ShapeError("dense", weight.shape, bias.shape)

    def forward(xd, wd, bd):
        return xd @ wd + bd, lambda g: (g @ wd.T, xd.T @ g, g.sum(axis=0))

    return record("dense", [x, weight, bias], forward)


def relu(x: Tensor) -> Tensor:
    def forward(xd):
        mask = xd > 0
        return xd * mask, lambda g: (g * mask,)

    return record("relu", [x], forward)


def tanh(x: Tensor) -> Tensor:
    def forward(xd):
        out = np.tanh(xd)
        return out, lambda g: (g * (1.0 - out * out),)

    return record("tanh", [x], forward)


ACTIVATIONS = {"relu": relu, "tanh": tanh}


def activate(x: Tensor, name: str) -> Tensor:
    try:
        return ACTIVATIONS[name](x)
    except KeyError:
        raise ContractError(f"неизвестная активация {name!r}") from None


def softmax(logits: Tensor) -> Tensor:
    """Softmax по последней оси с вычитанием максимума"""
    def forward(xd):
        z = np.exp(xd - xd.max(axis=-1, keepdims=True))
        out = z / z.sum(axis=-1, keepdims=True)
        return out, lambda g: (out * (g - np.sum(g * out, axis=-1, keepdims=True)),)

    return record("softmax", [logits], forward)


def softmax_cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Средняя отрицательная лог-вероятность верного класса"""
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeError("softmax_cross_entropy", logits.shape, labels.shape)
    if logits.shape[0] == 0:
        raise ContractError("softmax_cross_entropy: пустой пакет")
    if np.any(labels < 0) or np.any(labels >= logits.shape[1]):
        raise ContractError("softmax_cross_entropy: метка вне диапазона классов")

    def forward(xd):
        m = xd.shape[0]
        shifted = xd - xd.max(axis=-1, keepdims=True)
        log_z = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
        log_p = shifted - log_z
        rows = np.arange(m)
        loss = -log_p[rows, labels].mean()

        def backward_fn(g):
            grad = np.exp(log_p)
            grad[rows, labels] -= 1.0
            return (grad * (g / m),)

        return np.asarray(loss, dtype=xd.dtype), backward_fn

    return record("softmax_cross_entropy", [logits], forward)


def l2_normalize(v: Tensor) -> Tuple[Tensor, np.ndarray]:
    """
    Нормировка строк (N, D) на единичную евклидову длину.
    Нулевые строки возвращаются без изменений, второй результат — их маска.
    """
    if v.ndim != 2:
        raise ShapeError("l2_normalize", v.shape)
    degenerate = np.linalg.norm(v.data, axis=1) == 0

    def forward(vd):
        norm = np.linalg.norm(vd, axis=1, keepdims=True)
        safe = np.where(norm > 0, norm, 1.0)
        out = vd / safe

        def backward_fn(g):
            proj = np.sum(g * out, axis=1, keepdims=True)
            grad = (g - out * proj) / safe
            return (np.where(norm > 0, grad, g),)

        return out, backward_fn

    return record("l2_normalize", [v], forward), degenerate
