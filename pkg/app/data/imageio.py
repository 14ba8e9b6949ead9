"""
Чтение и запись изображений PPM (P6) и PGM (P5), 8 бит
"""
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from app.exceptions import DatasetError

PathLike = Union[str, Path]


def _read_header(data: bytes, path: PathLike) -> Tuple[List[bytes], int]:
    """Четыре токена заголовка (магия, ширина, высота, maxval) и смещение данных"""
    tokens: List[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise DatasetError("обрезанный заголовок PPM", str(path))
        if data[pos:pos + 1] == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    # Ровно один пробельный символ после maxval
    return tokens, pos + 1


def read_ppm(path: PathLike) -> np.ndarray:
    """Файл P6 -> массив (3, H, W) в [0, 1]"""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise DatasetError(f"не удалось прочитать файл ({e.strerror})", str(path)) from e

    tokens, offset = _read_header(data, path)
    if tokens[0] != b"P6":
        raise DatasetError(f"ожидался PPM P6, получено {tokens[0][:8]!r}", str(path))
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise DatasetError("некорректный заголовок PPM", str(path)) from None
    if width < 1 or height < 1 or not 0 < maxval <= 255:
        raise DatasetError(f"неподдерживаемый PPM {width}x{height}, maxval {maxval}", str(path))

    expected = width * height * 3
    body = np.frombuffer(data[offset:offset + expected], dtype=np.uint8)
    if body.size != expected:
        raise DatasetError(f"данных меньше ожидаемого ({body.size} из {expected} байт)", str(path))
    return body.reshape(height, width, 3).transpose(2, 0, 1).astype(np.float64) / maxval


def to_uint8(image: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.asarray(image, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def write_ppm(path: PathLike, image: np.ndarray) -> Path:
    """Массив (3, H, W) в [0, 1] -> P6"""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[0] != 3:
        raise DatasetError(f"ожидалось изображение (3, H, W), форма {image.shape}", str(path))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    _, h, w = image.shape
    header = f"P6\n{w} {h}\n255\n".encode("ascii")
    path.write_bytes(header + to_uint8(image).transpose(1, 2, 0).tobytes())
    return path


def write_pgm(path: PathLike, values: np.ndarray) -> Path:
    """2D-массив -> P5 с нормировкой min-max (константа даёт нули)"""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise DatasetError(f"PGM ожидает 2D-массив, форма {values.shape}", str(path))
    low, high = values.min(), values.max()
    scaled = (values - low) / (high - low) if high > low else np.zeros_like(values)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    h, w = values.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    path.write_bytes(header + to_uint8(scaled).tobytes())
    return path


def resize_bilinear(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """(C, H, W) -> (C, out_h, out_w), крайние пиксели совпадают с крайними"""
    c, h, w = image.shape

    def axis(n_out: int, n_in: int):
        if n_out == 1 or n_in == 1:
            pos = np.zeros(n_out)
        else:
            pos = np.linspace(0.0, n_in - 1, n_out)
        lo = np.clip(np.floor(pos).astype(np.int64), 0, max(n_in - 2, 0))
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, pos - lo

    y0, y1, wy = axis(out_h, h)
    x0, x1, wx = axis(out_w, w)
    wy = wy[None, :, None]
    wx = wx[None, None, :]
    top = image[:, y0][:, :, x0] * (1 - wx) + image[:, y0][:, :, x1] * wx
    bottom = image[:, y1][:, :, x0] * (1 - wx) + image[:, y1][:, :, x1] * wx
    return top * (1 - wy) + bottom * wy
