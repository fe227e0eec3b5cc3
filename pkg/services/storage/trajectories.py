import hashlib
import json
import logging
from typing import Any, Dict, Optional, Sequence

from core.models import SystemDef, Trajectory

from .base import ArtifactStore

logger = logging.getLogger("trajectory_cache")


class TrajectoryCache(ArtifactStore):
    """
    Кеш траекторий: CSV (t, x1..xn) плюс JSON-заголовок с параметрами запуска.

    Ключ: sha256 от (system, params, x0, step, t, seed).
    """

    @staticmethod
    def key(
        sys: SystemDef, x0: Sequence[float], step: float, t: float, seed: int = 0
    ) -> str:
        payload = {
            "system": sys.name,
            "params": {k: repr(float(v)) for k, v in sorted(sys.params.items())},
            "x0": [repr(float(v)) for v in x0],
            "step": repr(float(step)),
            "t": repr(float(t)),
            "seed": int(seed),
        }
        raw = json.dumps(payload, sort_keys=True).encode("utf-8")
        return hashlib.sha256(raw).hexdigest()

    def header(
        self, sys: SystemDef, x0: Sequence[float], step: float, t: float, seed: int = 0
    ) -> Dict[str, Any]:
        return {
            "system": sys.name,
            "params": dict(sys.params),
            "x0": [float(v) for v in x0],
            "step": step,
            "t": t,
            "seed": seed,
        }

    def get(
        self, sys: SystemDef, x0: Sequence[float], step: float, t: float, seed: int = 0
    ) -> Optional[Trajectory]:
        """
        Возвращает траекторию из кеша или None.

        Args:
            sys: Система
            x0: Начальное состояние
            step: Шаг интегрирования
            t: Длительность
            seed: Зерно генератора

        Returns:
            Trajectory или None, если записи нет
        """
        key = self.key(sys, x0, step, t, seed)
        if not (self.exists(f"{key}.csv") and self.exists(f"{key}.json")):
            return None
        try:
            trajectory = Trajectory.from_frame(self.read_frame(f"{key}.csv"))
            logger.info("Траектория %s взята из кеша", key[:12])
            return trajectory
        except Exception as e:
            logger.error("Ошибка при чтении кеша траектории %s: %s", key[:12], e)
            return None

    def put(
        self,
        sys: SystemDef,
        x0: Sequence[float],
        step: float,
        t: float,
        trajectory: Trajectory,
        seed: int = 0,
    ) -> str:
        """
        Сохраняет траекторию и её заголовок.

        Returns:
            Ключ записи
        """
        key = self.key(sys, x0, step, t, seed)
        self.write_frame(f"{key}.csv", trajectory.to_frame())
        self.write_json(f"{key}.json", self.header(sys, x0, step, t, seed))
        return key
