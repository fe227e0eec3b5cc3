import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from config import Settings  # noqa: E402
from services.dynsys import lorenz  # noqa: E402
from services.storage.base import ArtifactStore  # noqa: E402
from services.storage.trajectories import TrajectoryCache  # noqa: E402
from utils.service_factory import ServiceFactory  # noqa: E402


@pytest.fixture
def rng():
    """Генератор случайных чисел с фиксированным зерном."""
    return np.random.default_rng(12345)


@pytest.fixture
def lorenz_standard():
    return lorenz(10.0, 28.0, 8.0 / 3.0)


@pytest.fixture
def settings(tmp_path):
    """Настройки с кешем во временном каталоге."""
    return Settings(CACHE_DIR=str(tmp_path / "cache"), OUTPUT_DIR=str(tmp_path / "out"))


@pytest.fixture
def store(tmp_path):
    return ArtifactStore(str(tmp_path / "out"))


@pytest.fixture
def cache(tmp_path):
    return TrajectoryCache(str(tmp_path / "cache"))


@pytest.fixture
def services(settings):
    """Фабрика сервисов; пул потоков закрывается после теста."""
    factory = ServiceFactory(settings.OUTPUT_DIR, settings)
    yield factory
    factory.close()
