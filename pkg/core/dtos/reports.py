"""
Модели ответов подкоманд (JSON-артефакты).

Каждый ответ несет ``provenance``: настройки запуска, включая seed.
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from core.models import (
    ContractionCheck,
    DimensionFit,
    LorenzVerdict,
    Outcome,
    RateEstimate,
    RateFit,
    ReferenceComparison,
    StretchConditions,
)


class SimulateResponseDTO(BaseModel):
    """Модель ответа simulate"""

    provenance: Dict[str, Any]
    rows: int
    final_time: float
    final_state: List[float]
    cache_key: str
    cached: bool


class LyapDimResponseDTO(BaseModel):
    """Модель ответа lyap-dim"""

    provenance: Dict[str, Any]
    dim: float
    n_samples: int
    horizons: List[float]
    by_horizon: Dict[str, float]
    kaplan_yorke_mean: float
    contraction: ContractionCheck


class BoxDimResponseDTO(BaseModel):
    """Модель ответа box-dim"""

    provenance: Dict[str, Any]
    point_set: str
    n_points: int
    fit: DimensionFit
    sampling_floor: Optional[float] = None
    max_anchor_spread: float
    measure_limsup: Dict[str, float] = Field(default_factory=dict)


class LorenzBoundResponseDTO(BaseModel):
    """Модель ответа lorenz-bound"""

    provenance: Dict[str, Any]
    params: Dict[str, float]
    ratio: float
    outcome: Outcome
    verdict: LorenzVerdict
    dim: Optional[float] = None
    a: Optional[float] = None
    a_estimate: Optional[RateEstimate] = None
    horizon: float
    hl_bound: Optional[float] = None
    hl_bound_reference: Optional[ReferenceComparison] = None
    # тождество объема в точке identity_x0 за время identity_t
    identity_residual: float
    identity_x0: List[float]
    identity_t: float


class StretchResponseDTO(BaseModel):
    """Модель ответа stretch"""

    provenance: Dict[str, Any]
    fit: RateFit
    inf_rate: RateEstimate
    inf_rate_reference: ReferenceComparison
    conditions: StretchConditions
    lower_bound: float
    vertices: List[int]


class ReportEntry(BaseModel):
    """Строка сводного отчета: значение плюс настройки, при которых оно получено."""

    name: str
    value: Optional[float] = None
    status: str = "ok"  # ok | not-applicable
    source: str
    settings: Dict[str, Any] = Field(default_factory=dict)


class ReportCheck(BaseModel):
    name: str
    lhs: float
    rhs: float
    tolerance: float
    passed: bool


class ReportResponseDTO(BaseModel):
    """Модель сводного отчета"""

    provenance: Dict[str, Any]
    entries: List[ReportEntry]
    checks: List[ReportCheck]
    measure_decay: List[Dict[str, float]] = Field(default_factory=list)
