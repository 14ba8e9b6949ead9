"""
Конфигурация приложения
"""
from functools import lru_cache
from typing import Tuple

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.utils.validators import Validators


DEFAULT_SPLIT: Tuple[float, float, float] = (0.8, 0.1, 0.1)


class Settings(BaseSettings):
    """Настройки приложения"""
    
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )
    
    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_DIR: str = "logs"
    
    # Вычисления
    PRECISION: str = "float32"
    SEED: int = 0
    
    # Обучение (значения по умолчанию из статьи)
    EPOCHS: int = 5
    BATCH_SIZE: int = 128
    LEARNING_RATE: float = 0.0005
    WEIGHT_DECAY: float = 0.0005
    PREFETCH_BATCHES: int = 0
    
    # Данные
    SPLIT_FRACTIONS_STR: str = Field(default="0.8,0.1,0.1", alias="SPLIT_FRACTIONS")
    
    # Оценка
    EVAL_BATCH: int = 64
    
    # Проверка градиентов
    GRADCHECK_EPS: float = 1e-5
    GRADCHECK_TOLERANCE: float = 1e-4
    GRADCHECK_CHAIN_TOLERANCE: float = 1e-3
    
    @property
    def SPLIT_FRACTIONS(self) -> Tuple[float, float, float]:
        """Парсинг долей train/val/test"""
        is_valid, _ = Validators.validate_split(self.SPLIT_FRACTIONS_STR or "")
        if not is_valid:
            return DEFAULT_SPLIT
        parts = [float(x) for x in self.SPLIT_FRACTIONS_STR.split(",")]
        total = sum(parts)
        return (parts[0] / total, parts[1] / total, parts[2] / total)


@lru_cache
def get_settings() -> Settings:
    """Получение настроек (с кэшированием)"""
    return Settings()


settings = get_settings()
