"""
Module for service factory.

This module provides a class for creating and managing services.
The services are created on demand and stored in the instance.
"""

from typing import Optional

from config import Settings, get_settings
from services.analysis_service import AnalysisService
from services.storage.base import ArtifactStore
from services.storage.trajectories import TrajectoryCache


class ServiceFactory:
    """
    Класс для создания сервисов.

    Используется для создания сервисов на основе каталога артефактов.
    """

    def __init__(self, out_dir: str, settings: Optional[Settings] = None):
        """
        Инициализирует сервис-фабрику.

        Args:
            out_dir: Каталог артефактов запуска
            settings: Настройки приложения (по умолчанию get_settings())
        """
        self.out_dir = out_dir
        self.settings = settings or get_settings()
        self._store = None
        self._cache = None
        self._analysis_service = None

    def get_store(self) -> ArtifactStore:
        """
        Returns an instance of ArtifactStore rooted at the output directory.

        Returns:
            ArtifactStore: The instance of the artifact store.
        """
        if not self._store:
            self._store = ArtifactStore(self.out_dir)
        return self._store

    def get_cache(self) -> TrajectoryCache:
        """
        Returns an instance of TrajectoryCache rooted at Settings.CACHE_DIR.

        Returns:
            TrajectoryCache: The instance of the trajectory cache.
        """
        if not self._cache:
            self._cache = TrajectoryCache(self.settings.CACHE_DIR)
        return self._cache

    def get_analysis_service(self) -> AnalysisService:
        """
        Returns the analysis service instance.

        Returns:
            AnalysisService: The instance of the analysis service.
        """
        if not self._analysis_service:
            self._analysis_service = AnalysisService(
                self.get_store(), self.get_cache(), self.settings
            )
        return self._analysis_service

    def close(self) -> None:
        if self._analysis_service:
            self._analysis_service.close()
