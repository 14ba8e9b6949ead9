"""
Валидаторы аргументов командной строки
"""
import re
from typing import Optional, Tuple


LEVEL_NAMES = {"l2": 2, "l3": 3, "l4": 4}


class Validators:
    """Класс с методами валидации"""

    @staticmethod
    def validate_levels(text: str) -> Tuple[bool, Optional[str]]:
        """
        Валидация списка уровней
        Форматы: l2,l3 / L2,L3,L4 / 2,3
        Returns: (is_valid, error_message)
        """
        items = [x.strip().lower() for x in text.split(",") if x.strip()]
        if not items:
            return False, "Укажите хотя бы один уровень (l2, l3, l4)"

        for item in items:
            if item not in LEVEL_NAMES and item not in ("2", "3", "4"):
                return False, f"Неизвестный уровень {item!r}. Допустимо: l2, l3, l4"

        if len(set(items)) != len(items):
            return False, "Уровни не должны повторяться"

        return True, None

    @staticmethod
    def parse_levels(text: str) -> Tuple[int, ...]:
        """l2,l3 -> (2, 3)"""
        is_valid, error = Validators.validate_levels(text)
        if not is_valid:
            raise ValueError(error)
        items = [x.strip().lower() for x in text.split(",") if x.strip()]
        return tuple(sorted(LEVEL_NAMES.get(x, int(x) if x.isdigit() else 0) for x in items))

    @staticmethod
    def validate_batch_size(batch: int) -> Tuple[bool, Optional[str]]:
        """Пакет должен делиться на 3: одна положительная пара на две отрицательные"""
        if batch < 3:
            return False, "Размер пакета должен быть не меньше 3"
        if batch % 3:
            return False, f"Размер пакета должен делиться на 3, получено {batch}"
        return True, None

    @staticmethod
    def validate_positive(value: float, name: str) -> Tuple[bool, Optional[str]]:
        if value <= 0:
            return False, f"{name}: ожидалось положительное число, получено {value}"
        return True, None

    @staticmethod
    def validate_split(text: str) -> Tuple[bool, Optional[str]]:
        """Доли train/val/test через запятую"""
        if not re.match(r"^\s*[\d.]+\s*,\s*[\d.]+\s*,\s*[\d.]+\s*$", text):
            return False, "Формат долей: 0.8,0.1,0.1"
        try:
            parts = [float(x) for x in text.split(",")]
        except ValueError:
            return False, "Доли должны быть числами"
        if sum(parts) <= 0:
            return False, "Сумма долей должна быть положительной"
        return True, None
