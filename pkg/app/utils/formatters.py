"""
Форматтеры для вывода данных
"""
from typing import Sequence


class Formatters:
    """Класс с методами форматирования"""

    @staticmethod
    def format_number(num: int) -> str:
        """Форматирование больших чисел"""
        if num >= 1_000_000_000:
            return f"{num / 1_000_000_000:.2f}G"
        elif num >= 1_000_000:
            return f"{num / 1_000_000:.2f}M"
        elif num >= 1000:
            return f"{num / 1000:.1f}K"
        return str(num)

    @staticmethod
    def format_duration(seconds: float) -> str:
        """Форматирование длительности"""
        if seconds < 1:
            return f"{seconds * 1000:.0f} мс"
        seconds = int(round(seconds))
        if seconds < 60:
            return f"{seconds} сек."
        elif seconds < 3600:
            return f"{seconds // 60} мин. {seconds % 60} сек."
        return f"{seconds // 3600} ч. {seconds % 3600 // 60} мин."

    @staticmethod
    def format_progress_bar(current: int, total: int, length: int = 10) -> str:
        """Форматирование прогресс-бара"""
        if total == 0:
            return "░" * length

        filled = min(length, int(length * current / total))
        empty = length - filled

        return "█" * filled + "░" * empty

    @staticmethod
    def format_shape(shape: Sequence[int]) -> str:
        """(96, 40, 15) -> 96×40×15"""
        return "×".join(str(s) for s in shape) if len(shape) else "скаляр"

    @staticmethod
    def format_percent(value: float) -> str:
        return f"{value * 100:.2f}%"
