"""
Сервис чекпоинтов: бинарный формат с конфигурацией и CRC32

Раскладка (little-endian):
    "MLSC" | u32 версия | u32 длина + конфигурация key=value (UTF-8)
    | u32 число тензоров | на тензор: u32 длина + имя, u32 ранг,
    u64 размеры, данные float32 | u32 CRC32 всех предыдущих байт
"""
import struct
import zlib
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from loguru import logger

from app.autograd import Tensor, precision
from app.exceptions import (
    BadMagicError,
    CheckpointError,
    CrcMismatchError,
    VersionMismatchError,
)
from app.network import ModelConfig, NetworkWeights, SiameseNetwork

MAGIC = b"MLSC"
VERSION = 1

PathLike = Union[str, Path]


def encode_checkpoint(weights: NetworkWeights, config: ModelConfig) -> bytes:
    """Сериализация весов в байты формата чекпоинта"""
    chunks = [MAGIC, struct.pack("<I", VERSION)]
    text = config.to_kv().encode("utf-8")
    chunks += [struct.pack("<I", len(text)), text]
    chunks.append(struct.pack("<I", len(weights.tensors)))
    for name, tensor in weights.items():
        encoded = name.encode("utf-8")
        data = np.ascontiguousarray(tensor.data, dtype="<f4")
        chunks += [struct.pack("<I", len(encoded)), encoded, struct.pack("<I", data.ndim)]
        chunks += [struct.pack("<Q", extent) for extent in data.shape]
        chunks.append(data.tobytes())
    body = b"".join(chunks)
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


class _Reader:
    """Последовательное чтение с проверкой границ"""

    def __init__(self, data: bytes, offset: int = 0):
        self.data = data
        self.offset = offset

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.data):
            raise CheckpointError(f"чекпоинт обрывается на смещении {self.offset}")
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]


def decode_checkpoint(
    data: bytes,
    expected_config: Optional[ModelConfig] = None
) -> Tuple[NetworkWeights, ModelConfig]:
    """Разбор байтов чекпоинта; тензоры сверяются с архитектурой конфигурации"""
    if len(data) >= len(MAGIC) and data[:len(MAGIC)] != MAGIC:
        raise BadMagicError(f"неверная сигнатура {data[:len(MAGIC)]!r}")
    if len(data) < len(MAGIC) + 8:
        raise CrcMismatchError("чекпоинт обрезан")
    body, stored = data[:-4], struct.unpack("<I", data[-4:])[0]
    actual = zlib.crc32(body) & 0xFFFFFFFF
    if actual != stored:
        raise CrcMismatchError(f"CRC32 {actual:08x} не совпадает с записанным {stored:08x}")

    reader = _Reader(body, len(MAGIC))
    version = reader.u32()
    if version != VERSION:
        raise VersionMismatchError(f"версия формата {version}, поддерживается {VERSION}")

    stored_config = ModelConfig.from_kv(reader.take(reader.u32()).decode("utf-8"))
    config = expected_config or stored_config

    # Тензоры создаются в точности сохранённой конфигурации
    with precision(config.precision):
        tensors = {}
        for _ in range(reader.u32()):
            name = reader.take(reader.u32()).decode("utf-8")
            shape = tuple(reader.u64() for _ in range(reader.u32()))
            count = int(np.prod(shape, dtype=np.int64))
            values = np.frombuffer(reader.take(4 * count), dtype="<f4").reshape(shape)
            if name in tensors:
                raise CheckpointError(f"тензор {name!r} записан дважды")
            tensors[name] = Tensor(values.copy())
        if reader.offset != len(body):
            raise CheckpointError("лишние байты после тензоров")
        return NetworkWeights(config, tensors), config


def save_checkpoint(weights: NetworkWeights, config: ModelConfig, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(weights, config))
    return path


def load_checkpoint(path: PathLike, expected_config: Optional[ModelConfig] = None) -> Tuple[NetworkWeights, ModelConfig]:
    return decode_checkpoint(Path(path).read_bytes(), expected_config)


class CheckpointService:
    """Сервис для сохранения и загрузки моделей"""

    @staticmethod
    def save(network: SiameseNetwork, path: PathLike) -> Path:
        """Сохранение сети в файл"""
        path = save_checkpoint(network.weights, network.config, path)
        logger.info(f"💾 Чекпоинт {network.config.label} сохранён: {path} ({path.stat().st_size} байт)")
        return path

    @staticmethod
    def load(path: PathLike, expected_config: Optional[ModelConfig] = None) -> SiameseNetwork:
        """Загрузка сети в режиме вывода"""
        weights, config = load_checkpoint(path, expected_config)
        logger.info(f"📦 Загружен чекпоинт {config.label}: {path}")
        return SiameseNetwork(config, weights).eval()
