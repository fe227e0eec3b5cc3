"""
Configuration module.

This module provides a class for configuration values.
"""

from functools import lru_cache

from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()


class Settings(BaseSettings):
    """
    Настройки приложения, загружаемые из переменных окружения (префикс ATTRDIM_).
    """

    # Базовые настройки приложения
    APP_NAME: str = "attrdim"
    APP_VERSION: str = "1.0.0"

    # Логирование
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    LOG_FILE: str = ""  # пустая строка отключает запись в файл

    # Параллелизм: ATTRDIM_THREADS ограничивает все параллельные проходы
    THREADS: int = Field(1, ge=1)

    # Каталоги артефактов
    OUTPUT_DIR: str = "out"
    CACHE_DIR: str = ".attrdim-cache"

    # Численные значения по умолчанию
    DEFAULT_STEP: float = Field(1e-3, gt=0)
    DEFAULT_WARMUP: float = Field(100.0, ge=0)
    DEFAULT_REORTH_EVERY: int = Field(10, ge=1)
    DIVERGENCE_THRESHOLD: float = Field(1e8, gt=0)
    CURVE_VERTEX_BUDGET: int = Field(10_000_000, ge=2)

    model_config = SettingsConfigDict(
        env_prefix="ATTRDIM_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )


@lru_cache()
def get_settings() -> Settings:
    """
    Возвращает настройки приложения с кешированием.

    Returns:
        Экземпляр настроек
    """
    return Settings()
