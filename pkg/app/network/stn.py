"""
Пространственный трансформер: сеть локализации, ограниченное
аффинное преобразование, сетка выборки и билинейная интерполяция
"""
from dataclasses import dataclass
from typing import TYPE_CHECKING, Dict, Sequence

import numpy as np

from app.autograd import Tensor, absolute, clip, maximum, minimum, record, stack
from app.exceptions import ContractError, ShapeError
from app.network.architecture import AFFINE_DIM, FEATURE_CHANNELS
from app.nn import activate, batch_norm, conv2d, dense, global_avg_pool, maxpool2x2, tanh

if TYPE_CHECKING:
    from app.network.weights import NetworkWeights


SCALE_FLOOR = 0.05
ROTATION_RANGE = 0.25
BOUND_TOLERANCE = 1e-6
# Порядок компонент сырого вектора локализации
RAW_ORDER = ("s_w", "r_w", "t_w", "r_h", "s_h", "t_h")


@dataclass
class AffineParams:
    """Параметры (N,) для каждого из шести коэффициентов матрицы 2x3"""
    s_w: Tensor
    r_w: Tensor
    t_w: Tensor
    r_h: Tensor
    s_h: Tensor
    t_h: Tensor

    def __post_init__(self):
        shapes = {t.shape for t in self.fields()}
        if len(shapes) != 1 or len(next(iter(shapes))) != 1:
            raise ShapeError("AffineParams", *sorted(shapes))

    def fields(self) -> Sequence[Tensor]:
        return [getattr(self, name) for name in RAW_ORDER]

    @property
    def batch(self) -> int:
        return self.s_w.shape[0]

    def theta(self) -> Tensor:
        """Матрица (N, 2, 3): [[s_w, r_w, t_w], [r_h, s_h, t_h]]"""
        top = stack([self.s_w, self.r_w, self.t_w], axis=1)
        bottom = stack([self.r_h, self.s_h, self.t_h], axis=1)
        return stack([top, bottom], axis=1)

    def values(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name).data.copy() for name in RAW_ORDER}

    def corners(self) -> np.ndarray:
        """Образы углов выходной сетки (N, 4, 2)"""
        theta = self.theta().data
        base = np.array([[-1, -1, 1], [1, -1, 1], [-1, 1, 1], [1, 1, 1]], dtype=theta.dtype)
        return np.einsum("nij,pj->npi", theta, base)

    @classmethod
    def constant(cls, batch: int, scale: float = 0.5) -> "AffineParams":
        """Фиксированный центральный кадр заданного масштаба"""
        s = Tensor(np.full(batch, scale))
        zero = Tensor(np.zeros(batch))
        return cls(s_w=s, r_w=zero, t_w=zero, r_h=zero, s_h=s, t_h=zero)


@dataclass
class SamplingGrid:
    """Нормированные координаты источника (N, out_h, out_w, 2), последняя ось — (x, y)"""
    coords: Tensor

    def __post_init__(self):
        if self.coords.ndim != 4 or self.coords.shape[-1] != 2:
            raise ShapeError("SamplingGrid", self.coords.shape)

    @property
    def out_size(self):
        return self.coords.shape[1], self.coords.shape[2]


# === Сеть локализации ===

def localization_forward(
    region: Tensor,
    weights: "NetworkWeights",
    level: int,
    activation: str = "relu"
) -> Tensor:
    """Полоса (N, 96, h, w) -> сырые параметры (N, 6) в (-1, 1)"""
    if region.ndim != 4 or region.shape[1] != FEATURE_CHANNELS:
        raise ShapeError("localization_forward", region.shape, (None, FEATURE_CHANNELS, None, None))

    prefix = f"loc{level}"
    h = region
    for name, pool in (("conv1", True), ("conv2", True), ("conv3", False)):
        layer = f"{prefix}.{name}"
        h = activate(batch_norm(conv2d(h, weights.conv(layer)), weights.bn(layer)), activation)
        if pool:
            h = maxpool2x2(h)
    h = global_avg_pool(h)
    return tanh(dense(h, *weights.dense(f"{prefix}.fc")))


def constrain_params(raw6: Tensor) -> AffineParams:
    """
    Масштаб: 0.5*(raw+1), ограниченный [0.05, 1].
    Поворот: 0.25*raw, ограниченный ±(1 - s).
    Сдвиг: raw, ограниченный ±(1 - s - |r|), так что все углы остаются в [-1, 1]².
    """
    if raw6.ndim != 2 or raw6.shape[1] != AFFINE_DIM:
        raise ShapeError("constrain_params", raw6.shape, (None, AFFINE_DIM))

    raw = {name: raw6[:, i] for i, name in enumerate(RAW_ORDER)}
    out: Dict[str, Tensor] = {}
    for axis, rot in (("w", "r_w"), ("h", "r_h")):
        s = clip((raw[f"s_{axis}"] + 1.0) * 0.5, SCALE_FLOOR, 1.0)
        room = 1.0 - s
        r = minimum(maximum(raw[rot] * ROTATION_RANGE, -room), room)
        bound = room - absolute(r)
        t = minimum(maximum(raw[f"t_{axis}"], -bound), bound)
        out[f"s_{axis}"], out[rot], out[f"t_{axis}"] = s, r, t
    return AffineParams(**out)


# === Сетка и выборка ===

def lattice(n: int) -> np.ndarray:
    """Равномерная решётка на [-1, 1]; для n = 1 — единственная точка 0"""
    if n < 1:
        raise ContractError(f"размер сетки должен быть положительным, получено {n}")
    return np.zeros(1) if n == 1 else np.linspace(-1.0, 1.0, n)


def affine_grid(params: AffineParams, out_h: int, out_w: int) -> SamplingGrid:
    """x_s = s_w*x + r_w*y + t_w, y_s = r_h*x + s_h*y + t_h"""
    ys, xs = np.meshgrid(lattice(out_h), lattice(out_w), indexing="ij")
    theta = params.theta()
    base = np.stack([xs.ravel(), ys.ravel(), np.ones(out_h * out_w)], axis=1).astype(theta.dtype)

    def forward(td):
        n = td.shape[0]
        coords = np.einsum("nij,pj->npi", td, base).reshape(n, out_h, out_w, 2)
        return coords, lambda g: (np.einsum("npi,pj->nij", g.reshape(n, -1, 2), base),)

    return SamplingGrid(record("affine_grid", [theta], forward))


def _to_pixels(coord: np.ndarray, extent: int) -> np.ndarray:
    """-1 -> 0, +1 -> extent-1; почти целые координаты притягиваются к целым"""
    px = (coord + 1.0) * (extent - 1) / 2.0
    nearest = np.rint(px)
    tolerance = 64 * np.finfo(px.dtype).eps * max(extent, 1)
    return np.where(np.abs(px - nearest) <= tolerance, nearest, px)


def _cell(px: np.ndarray, extent: int):
    lo = np.clip(np.floor(px), 0, max(extent - 2, 0)).astype(np.int64)
    hi = np.minimum(lo + 1, extent - 1)
    return lo, hi, px - lo


def bilinear_sample(source: Tensor, grid: SamplingGrid) -> Tensor:
    """(N, C, H, W) x сетка (N, oh, ow, 2) -> (N, C, oh, ow); градиент в оба входа"""
    if source.ndim != 4 or grid.coords.shape[0] != source.shape[0]:
        raise ShapeError("bilinear_sample", source.shape, grid.coords.shape)

    def forward(xd, gd):
        n, c, h, w = xd.shape
        _, oh, ow, _ = gd.shape
        excess = np.max(np.abs(gd)) - 1.0 if gd.size else 0.0
        if excess > BOUND_TOLERANCE:
            raise ContractError(f"bilinear_sample: координата сетки вне [-1, 1] на {excess:.3g}")
        coords = np.clip(gd, -1.0, 1.0).reshape(n, -1, 2)
        px = _to_pixels(coords[..., 0], w)
        py = _to_pixels(coords[..., 1], h)
        x0, x1, wx = _cell(px, w)
        y0, y1, wy = _cell(py, h)

        flat = xd.reshape(n, c, h * w)
        corners = (y0 * w + x0, y0 * w + x1, y1 * w + x0, y1 * w + x1)
        values = [np.take_along_axis(flat, idx[:, None, :].repeat(c, axis=1), axis=2) for idx in corners]
        v00, v01, v10, v11 = values
        wx_, wy_ = wx[:, None, :], wy[:, None, :]
        mix = ((1 - wx_) * (1 - wy_), wx_ * (1 - wy_), (1 - wx_) * wy_, wx_ * wy_)
        out = sum(m * v for m, v in zip(mix, values)).reshape(n, c, oh, ow)

        def backward_fn(g):
            gp = g.reshape(n, c, -1)
            # Вход: рассеивание весов по четырём соседям
            offsets = ((np.arange(n)[:, None] * c + np.arange(c)[None, :]) * (h * w))[:, :, None]
            index = np.concatenate([(offsets + idx[:, None, :]).ravel() for idx in corners])
            amount = np.concatenate([(gp * m).ravel() for m in mix])
            gx = np.bincount(index, weights=amount, minlength=n * c * h * w)
            gx = gx.reshape(n, c, h, w).astype(xd.dtype)

            # Сетка: производные по пиксельным координатам
            dpx = np.sum(gp * ((v01 - v00) * (1 - wy_) + (v11 - v10) * wy_), axis=1)
            dpy = np.sum(gp * ((v10 - v00) * (1 - wx_) + (v11 - v01) * wx_), axis=1)
            ggrid = np.stack([dpx * (w - 1) / 2.0, dpy * (h - 1) / 2.0], axis=-1)
            return gx, ggrid.reshape(gd.shape).astype(gd.dtype)

        return out.astype(xd.dtype), backward_fn

    return record("bilinear_sample", [source, grid.coords], forward)


def rotation_l1_penalty(params_list: Sequence[AffineParams], lambda_rot: float = 0.01) -> Tensor:
    """lambda_rot * сумма (|r_w| + |r_h|) по всем вызовам трансформера"""
    total = Tensor(0.0)
    for params in params_list:
        total = total + (absolute(params.r_w) + absolute(params.r_h)).sum()
    return total * lambda_rot
