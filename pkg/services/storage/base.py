import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Optional

import pandas as pd

from core.exceptions import DependencyError

logger = logging.getLogger("artifact_store")


class ArtifactStore:
    """
    Файловое хранилище артефактов (CSV, JSON, SVG) в каталоге ``root``.

    Все записи атомарны: данные пишутся во временный файл в том же каталоге,
    затем переименовываются поверх цели.
    """

    def __init__(self, root: Optional[str]):
        if not root:
            raise ValueError("root каталога артефактов не задан!")
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.root / name

    def exists(self, name: str) -> bool:
        return self.path(name).is_file()

    def require(self, name: str, produced_by: str = "") -> Path:
        """
        Возвращает путь к артефакту или сообщает, какого артефакта не хватает.

        Args:
            name: Имя артефакта
            produced_by: Подкоманда, которая его создает

        Raises:
            DependencyError: Если артефакт отсутствует
        """
        target = self.path(name)
        if not target.is_file():
            hint = f" (run '{produced_by}' first)" if produced_by else ""
            raise DependencyError(f"missing artifact {name}{hint}", missing=name)
        return target

    def write_text(self, name: str, text: str) -> Path:
        """
        Атомарно записывает текст.

        Args:
            name: Имя артефакта (относительно root)
            text: Содержимое

        Returns:
            Путь к записанному файлу
        """
        target = self.path(name)
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
                handle.write(text)
            os.replace(tmp, target)
        except Exception as e:
            logger.error("Ошибка при записи артефакта %s: %s", name, e)
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        logger.debug("Записан артефакт %s", target)
        return target

    def write_json(self, name: str, payload: Dict[str, Any]) -> Path:
        return self.write_text(name, json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def write_frame(self, name: str, frame: pd.DataFrame) -> Path:
        return self.write_text(name, frame.to_csv(index=False, float_format="%.17g"))

    def read_json(self, name: str) -> Dict[str, Any]:
        return json.loads(self.require(name).read_text(encoding="utf-8"))

    def read_frame(self, name: str) -> pd.DataFrame:
        return pd.read_csv(self.require(name))
