"""
Модуль для определения моделей данных, используемых в библиотеке.

Модели основаны на Pydantic и используются для валидации и преобразования данных:

- Системы и множества точек (SystemDef, PointSet)
- Траектории и касательные отображения (Trajectory, TangentResult)
- Спектры и локальная размерность (SingularSpectrum, LocalDim)
- Покрытия (GridCovering, CountTable, DimensionFit, AdditivityResult)
- Результаты по системе Лоренца и растяжению кривых (LorenzVerdict, RateEstimate, Curve)
- Конфигурация запуска (RunConfig)
"""

import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from core.exceptions import ArgumentError, ConfigError

# --- Системы ---


class SystemKind(str, Enum):
    FLOW = "flow"
    MAP = "map"


class SystemDef(BaseModel):
    """Continuous-time flow or discrete-time map with its Jacobian.

    ``field`` and ``jacobian`` accept stacked states of shape ``(..., n)`` and
    return ``(..., n)`` and ``(..., n, n)`` respectively.
    """

    name: str
    kind: SystemKind
    state_dim: int = Field(..., ge=1)
    params: Dict[str, float] = Field(default_factory=dict)
    field: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    default_state: Optional[Tuple[float, ...]] = None
    warnings: List[str] = Field(default_factory=list)

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @property
    def is_flow(self) -> bool:
        return self.kind == SystemKind.FLOW


class PointSet(BaseModel):
    """Finite non-empty set of points in R^n, stored row-wise."""

    points: np.ndarray
    label: str = ""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @field_validator("points", mode="before")
    @classmethod
    def validate_points(cls, v: Any) -> np.ndarray:
        arr = np.asarray(v, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValueError("point set must be a non-empty (N, n) array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("point set contains non-finite coordinates")
        return arr

    @property
    def n(self) -> int:
        return int(self.points.shape[1])

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def union(self, other: "PointSet", label: str = "") -> "PointSet":
        if other.n != self.n:
            raise ArgumentError("ambient dimensions differ", left=self.n, right=other.n)
        return PointSet(points=np.vstack([self.points, other.points]), label=label)


# --- Траектории и касательные отображения ---


class Trajectory(BaseModel):
    """Sampled trajectory: strictly increasing times with matching states."""

    times: np.ndarray
    states: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def validate_shapes(self) -> "Trajectory":
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if self.times.ndim != 1 or self.states.shape[0] != self.times.shape[0]:
            raise ValueError("times and states must have the same length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        return self

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def to_frame(self) -> pd.DataFrame:
        """Returns the trajectory as a frame with columns t, x1..xn."""
        frame = pd.DataFrame(
            self.states, columns=[f"x{i + 1}" for i in range(self.states.shape[1])]
        )
        frame.insert(0, "t", self.times)
        return frame

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "Trajectory":
        return cls(times=frame["t"].to_numpy(), states=frame.drop(columns="t").to_numpy())


class TangentResult(BaseModel):
    """Finite-time tangent map data of T_{x0} F^t."""

    x0: Tuple[float, ...]
    t: float = Field(..., ge=0)
    log_svals: Tuple[float, ...]
    final_state: Tuple[float, ...]

    @field_validator("log_svals")
    @classmethod
    def validate_descending(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if any(a < b for a, b in zip(v, v[1:])):
            raise ValueError("log singular values must be sorted descending")
        return v

    @property
    def spectrum(self) -> "SingularSpectrum":
        return SingularSpectrum(log_svals=self.log_svals)


# --- Спектры ---


class SingularSpectrum(BaseModel):
    """Singular values alpha_1 >= ... >= alpha_n >= 0, kept in the log domain.

    Zero singular values are stored as ``-inf``.
    """

    log_svals: Tuple[float, ...]

    @field_validator("log_svals")
    @classmethod
    def validate_logs(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if not v:
            raise ValueError("spectrum must be non-empty")
        if any(math.isnan(x) or x == math.inf for x in v):
            raise ValueError("log singular values must be finite or -inf")
        if any(a < b for a, b in zip(v, v[1:])):
            raise ValueError("singular values must be sorted descending")
        return v

    @classmethod
    def from_values(cls, svals) -> "SingularSpectrum":
        values = np.asarray(svals, dtype=float)
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ArgumentError("singular values must be finite and non-negative")
        with np.errstate(divide="ignore"):
            logs = np.log(values)
        return cls(log_svals=tuple(float(x) for x in logs))

    @property
    def svals(self) -> np.ndarray:
        return np.exp(np.asarray(self.log_svals))

    @property
    def n(self) -> int:
        return len(self.log_svals)


class LocalDim(BaseModel):
    """Local Lyapunov dimension j + s."""

    j: int = Field(..., ge=0)
    s: float = Field(..., ge=0, le=1)

    @property
    def value(self) -> float:
        return self.j + self.s


class LyapunovDimResult(BaseModel):
    """Lyapunov dimension on a sample set plus the (sample x horizon) table."""

    value: float
    n_samples: int
    horizons: List[float]
    table: pd.DataFrame  # sample_index, horizon, j, s, dim
    final_logs: Optional[np.ndarray] = None  # (samples, n) на последнем горизонте

    model_config = ConfigDict(arbitrary_types_allowed=True)


class ContractionCheck(BaseModel):
    d: float
    sup_log_omega: float
    satisfied: bool


# --- Покрытия ---


class GridCovering(BaseModel):
    """Occupied half-open cubes of side 2*eps on a grid anchored at ``anchor``."""

    eps: float = Field(..., gt=0)
    anchor: Tuple[float, ...]
    indices: np.ndarray  # unique integer rows, shape (N, n)

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @property
    def n(self) -> int:
        return len(self.anchor)

    @property
    def side(self) -> float:
        return 2.0 * self.eps

    @property
    def count(self) -> int:
        return int(self.indices.shape[0])

    @property
    def occupied(self) -> set:
        return {tuple(int(k) for k in row) for row in self.indices}


class CountTable(BaseModel):
    """(eps, N) rows with eps strictly decreasing."""

    eps: Tuple[float, ...]
    counts: Tuple[int, ...]
    anchor: Tuple[float, ...]

    @model_validator(mode="after")
    def validate_rows(self) -> "CountTable":
        if len(self.eps) != len(self.counts):
            raise ValueError("eps and counts must have equal length")
        if any(a <= b for a, b in zip(self.eps, self.eps[1:])):
            raise ValueError("eps must be strictly decreasing")
        return self

    def to_frame(self, ds: Tuple[float, ...] = ()) -> pd.DataFrame:
        """Returns columns eps, side, N and one N_eps_<d> column per requested d."""
        eps = np.asarray(self.eps)
        counts = np.asarray(self.counts)
        frame = pd.DataFrame({"eps": eps, "side": 2.0 * eps, "N": counts})
        for d in ds:
            frame[f"N_eps_{d:g}"] = counts * eps**d
        return frame


class DimensionFit(BaseModel):
    """Least-squares fit of ln N against ln(1/eps)."""

    slope: float
    intercept: float
    r2: float = Field(..., ge=0, le=1)
    eps_min: float
    eps_max: float
    n_scales: int = Field(..., ge=3)
    anchors: List[Tuple[float, ...]] = Field(default_factory=list)


class Relation(str, Enum):
    LE = "<="
    EQ = "="


class AdditivityResult(BaseModel):
    lhs: float
    rhs: float
    relation: Relation


# --- Система Лоренца и растяжение кривых ---


class Outcome(str, Enum):
    STABLE = "Stable"
    DIM = "Dim"


class LorenzVerdict(BaseModel):
    """Stability/dimension dichotomy for the Lorenz system."""

    ratio: float
    outcome: Outcome
    value: Optional[float] = None
    warnings: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_outcome(self) -> "LorenzVerdict":
        if (self.outcome == Outcome.STABLE) != (self.ratio > 1):
            raise ValueError("outcome must be Stable iff ratio > 1")
        if self.outcome == Outcome.DIM and self.value is None:
            raise ValueError("Dim outcome requires a value")
        return self


class RateEstimate(BaseModel):
    """Finite-horizon growth-rate estimate with its provenance."""

    value: float
    horizon: float
    n_samples: int
    seed: int
    reduction: str  # max | min
    exclude_radius: float = 0.0
    equilibrium_distance: Optional[float] = None  # min over samples, Lorenz only


class ReferenceComparison(BaseModel):
    """A measured value against a published one: within iff |value - reference| <= tolerance."""

    name: str
    value: float
    reference: float
    tolerance: float = Field(..., ge=0)
    deviation: float
    within: bool


class Curve(BaseModel):
    """Polyline with its curve parameters in [0, 1] and a refinement resolution."""

    points: np.ndarray
    resolution: float = Field(..., gt=0)
    t_param: Optional[np.ndarray] = None

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def validate_curve(self) -> "Curve":
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.t_param is None:
            # по умолчанию: нормированная длина дуги
            gaps = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
            arc = np.concatenate([[0.0], np.cumsum(gaps)])
            self.t_param = arc / arc[-1] if arc[-1] > 0 else np.zeros(len(arc))
        self.t_param = np.asarray(self.t_param, dtype=float)
        if self.t_param.shape[0] != self.points.shape[0]:
            raise ValueError("t_param must match the number of vertices")
        return self

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(
            self.points, columns=[f"x{i + 1}" for i in range(self.points.shape[1])]
        )
        frame.insert(0, "t_param", self.t_param)
        return frame


class StretchConditions(BaseModel):
    """Sampled check of the gap and growth conditions at one time."""

    k: int
    tau: float
    n_samples: int
    min_gap: float
    min_log_omega: float
    gap_holds: bool
    omega_grows: bool


class RateFit(BaseModel):
    """Log-linear growth fit of a length series."""

    rate: float
    intercept: float
    r2: float
    taus: List[float]
    lengths: List[float]


# --- Конфигурация запуска ---


class AnalysisKind(str, Enum):
    SIMULATE = "simulate"
    LYAP_DIM = "lyap-dim"
    BOX_DIM = "box-dim"
    LORENZ_BOUND = "lorenz-bound"
    STRETCH = "stretch"
    REPORT = "report"


class RunConfig(BaseModel):
    """Per-run configuration. Every run is reproducible from it (seed included)."""

    analysis: AnalysisKind
    system: str = "lorenz"
    params: Dict[str, float] = Field(default_factory=dict)
    x0: Optional[List[float]] = None

    step: float = Field(1e-3, gt=0)
    warmup: float = Field(100.0, ge=0)
    t: float = Field(10.0, ge=0)
    reorth_every: int = Field(10, ge=1)
    horizons: List[float] = Field(default_factory=lambda: [5.0, 10.0, 20.0])
    horizon: float = Field(20.0, gt=0)
    samples: int = Field(200, ge=1)
    stride: float = Field(1.0, gt=0)
    seed: int = 0

    # покрытия
    n_points: int = Field(1_000_000, ge=1)
    chains: int = Field(1000, ge=1)
    levels: int = Field(10, ge=0)
    eps_max: Optional[float] = Field(None, gt=0)  # None: по уровню префрактала или 4.0
    eps_ratio: float = Field(0.5, gt=0, lt=1)
    n_scales: int = Field(8, ge=3)
    anchors: int = Field(3, ge=1)
    ds: List[float] = Field(default_factory=list)

    # растяжение
    taus: List[float] = Field(default_factory=lambda: [1.0, 2.0, 3.0, 4.0, 5.0])
    segment_length: float = Field(0.1, gt=0)
    resolution: float = Field(1e-3, gt=0)
    a: Optional[float] = Field(None, ge=0)
    estimate_a: bool = False
    exclude_radius: float = Field(0.0, ge=0)  # отбрасывать выборки у равновесий
    compute_missing: bool = False

    out: str = "out"
    plot: bool = True

    @field_validator("horizons", "taus")
    @classmethod
    def validate_increasing(cls, v: List[float]) -> List[float]:
        if not v or any(x <= 0 for x in v) or any(a >= b for a, b in zip(v, v[1:])):
            raise ValueError("must be a non-empty strictly increasing list of positive values")
        return v

    @classmethod
    def from_sources(
        cls,
        path: Optional[str] = None,
        defaults: Optional[Dict[str, Any]] = None,
        **overrides: Any,
    ) -> "RunConfig":
        """
        Builds a config from defaults, an optional JSON file and CLI flags.

        Later sources win: defaults < file < non-None flags. ``params`` dicts
        are merged key by key.

        Args:
            path: Path to the JSON file
            defaults: Values taken from Settings
            overrides: Values taken from command-line flags

        Returns:
            Validated RunConfig

        Raises:
            ConfigError: the file is missing or is not a JSON object
        """
        data: Dict[str, Any] = dict(defaults or {})
        if path:
            try:
                loaded = json.loads(Path(path).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as e:
                raise ConfigError(f"cannot read config file {path}: {e}") from e
            if not isinstance(loaded, dict):
                raise ConfigError(f"config file {path} must contain a JSON object")
            data.update(loaded)
        flags = {key: value for key, value in overrides.items() if value is not None}
        params = {**data.get("params", {}), **flags.pop("params", {})}
        data.update(flags)
        data["params"] = params
        return cls(**data)

    def provenance(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", exclude={"out", "plot"})
