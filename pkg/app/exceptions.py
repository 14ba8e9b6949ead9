"""
Исключения приложения
"""
from typing import Optional, Sequence


class ReidError(Exception):
    """Базовое исключение проекта"""


class ShapeError(ReidError, ValueError):
    """Несовместимые формы тензоров"""

    def __init__(self, op: str, *shapes: Sequence[int], detail: Optional[str] = None):
        self.op = op
        self.shapes = tuple(tuple(s) for s in shapes)
        text = f"{op}: несовместимые формы " + " и ".join(str(s) for s in self.shapes)
        if detail:
            text += f" ({detail})"
        super().__init__(text)


class ContractError(ReidError):
    """Нарушено предусловие операции"""


class DatasetError(ReidError):
    """Ошибка чтения набора данных"""

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        super().__init__(f"{message}: {path}" if path else message)


class CheckpointError(ReidError):
    """Базовая ошибка чекпоинта"""


class BadMagicError(CheckpointError):
    """Файл не является чекпоинтом"""


class CrcMismatchError(CheckpointError):
    """Контрольная сумма не сошлась"""


class VersionMismatchError(CheckpointError):
    """Неподдерживаемая версия формата"""


class MissingTensorError(CheckpointError):
    """В чекпоинте нет обязательного тензора"""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"нет тензора {name!r}")


class UnknownTensorError(CheckpointError):
    """Тензор не относится к архитектуре"""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"неизвестный тензор {name!r}")


class TensorShapeMismatchError(CheckpointError):
    """Форма тензора не совпадает с архитектурой"""

    def __init__(self, name: str, expected: Sequence[int], actual: Sequence[int]):
        self.name = name
        self.expected = tuple(expected)
        self.actual = tuple(actual)
        super().__init__(f"тензор {name!r}: ожидалась форма {self.expected}, получена {self.actual}")
