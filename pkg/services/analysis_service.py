"""
Модуль сервиса анализа: оркестрация подкоманд и запись артефактов.

Численная работа выполняется в пуле потоков через ``run_in_executor``;
внутренние свипы распараллеливаются на ``Settings.THREADS`` потоков.
"""

import asyncio
import functools
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from config import Settings
from core.dtos.reports import (
    BoxDimResponseDTO,
    LorenzBoundResponseDTO,
    LyapDimResponseDTO,
    ReportCheck,
    ReportEntry,
    ReportResponseDTO,
    SimulateResponseDTO,
    StretchResponseDTO,
)
from core.exceptions import ArgumentError
from core.models import AnalysisKind, CountTable, PointSet, RunConfig, SystemDef
from services.covering import (
    anchor_spread,
    count_scales,
    dim_fit,
    eps_ladder,
    image_measure_decay,
    limsup_tail,
    measure_sequence,
    sampling_floor,
)
from services.dynsys import fractal_points, get_system, henon
from services.flow import integrate, sample_attractor
from services.lorenz_analysis import (
    REFERENCE_HL_BOUND,
    REFERENCE_HL_BOUND_TOLERANCE,
    REFERENCE_INF_RATE,
    REFERENCE_INF_RATE_TOLERANCE,
    attractor_samples,
    compare_to_reference,
    estimate_a,
    hl_bound_from_a,
    lorenz_dim_formula,
    volume_identity_residual,
)
from services.spectra import (
    contraction_check,
    kaplan_yorke_dim,
    lyapunov_dim_on_set,
    spectra_from_logs,
)
from services.storage.base import ArtifactStore
from services.storage.trajectories import TrajectoryCache
from services.stretch import (
    curve_length,
    default_segment,
    inf_alpha1_rate,
    length_growth,
    stretch_conditions,
    stretch_lower_bound,
)
from utils.plotting import loglog_fit_svg, rate_fit_svg

logger = logging.getLogger("analysis_service")

# имя в CLI -> вид префрактала и основание шкалы
POINT_SETS: Dict[str, Tuple[str, int]] = {
    "square-grid": ("square", 2),
    "interval": ("interval", 2),
    "cantor": ("cantor", 3),
    "sierpinski": ("sierpinski", 2),
}

# допуск проверок упорядочения размерностей в отчете
ORDERING_TOLERANCE = 0.05


def _with_reference(provenance: Dict[str, Any], reference: Dict[str, Any]) -> Dict[str, Any]:
    """Настройки запуска плюс опубликованное значение, допуск и признак попадания."""
    return {
        **provenance,
        "reference": reference["reference"],
        "tolerance": reference["tolerance"],
        "within": reference["within"],
    }


class AnalysisService:
    """
    Сервис анализа размерностей аттракторов
    """

    def __init__(self, store: ArtifactStore, cache: TrajectoryCache, settings: Settings):
        """
        Инициализирует сервис.

        Args:
            store: Хранилище артефактов (каталог --out)
            cache: Кеш траекторий
            settings: Настройки приложения
        """
        self.store = store
        self.cache = cache
        self.settings = settings
        self.workers = settings.THREADS
        self._executor = ThreadPoolExecutor(max_workers=1, thread_name_prefix="attrdim")

    def close(self) -> None:
        self._executor.shutdown(wait=True)

    async def _run(self, fn: Callable, *args: Any, **kwargs: Any) -> Any:
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(self._executor, functools.partial(fn, *args, **kwargs))

    @property
    def threshold(self) -> float:
        return self.settings.DIVERGENCE_THRESHOLD

    # --- вспомогательные ---

    @staticmethod
    def is_point_set(config: RunConfig) -> bool:
        return config.system in POINT_SETS

    def _system(self, config: RunConfig) -> SystemDef:
        if self.is_point_set(config):
            raise ArgumentError(
                f"'{config.system}' is a point set, not a dynamical system",
                analysis=config.analysis.value,
            )
        return get_system(config.system, config.params)

    def _lorenz(self, config: RunConfig) -> SystemDef:
        if config.system != "lorenz":
            raise ArgumentError(
                f"{config.analysis.value} needs the lorenz system", system=config.system
            )
        return self._system(config)

    @staticmethod
    def _x0(config: RunConfig, sys: SystemDef) -> List[float]:
        if config.x0 is not None:
            return list(config.x0)
        return list(sys.default_state or [1.0] * sys.state_dim)

    def _write(self, name: str, dto) -> None:
        self.store.write_text(name, dto.model_dump_json(indent=2) + "\n")

    def _sampling(self, config: RunConfig) -> Dict[str, Any]:
        """Настройки выборки и касательных отображений для оценок скоростей."""
        return {
            "reorth_every": config.reorth_every,
            "threshold": self.threshold,
            "stride": config.stride,
            "x0": config.x0,
            "exclude_radius": config.exclude_radius,
        }

    def _identity_point(self, config: RunConfig, sys: SystemDef) -> List[float]:
        """--x0, иначе конец переходного участка длины warmup."""
        if config.x0 is not None:
            return list(config.x0)
        start = integrate(
            sys, self._x0(config, sys), config.warmup, config.step, threshold=self.threshold
        )
        return start.final_state.tolist()

    # --- подкоманды ---

    async def simulate(self, config: RunConfig) -> SimulateResponseDTO:
        """
        Интегрирует траекторию (с кешем) и пишет trajectory.csv и simulate.json.
        """
        try:
            sys = self._system(config)
            x0 = self._x0(config, sys)
            trajectory = self.cache.get(sys, x0, config.step, config.t, config.seed)
            cached = trajectory is not None
            if trajectory is None:
                trajectory = await self._run(
                    integrate, sys, x0, config.t, config.step, threshold=self.threshold
                )
            key = self.cache.put(sys, x0, config.step, config.t, trajectory, config.seed)
            self.store.write_frame("trajectory.csv", trajectory.to_frame())
            response = SimulateResponseDTO(
                provenance=config.provenance(),
                rows=len(trajectory.times),
                final_time=float(trajectory.times[-1]),
                final_state=trajectory.final_state.tolist(),
                cache_key=key,
                cached=cached,
            )
            self._write("simulate.json", response)
            return response
        except Exception as e:
            logger.error("Ошибка при интегрировании траектории: %s", str(e))
            raise

    async def lyap_dim(self, config: RunConfig) -> LyapDimResponseDTO:
        """
        Размерность Ляпунова на выборке с аттрактора; пишет lyap-dim.csv/json.
        """
        try:
            sys = self._system(config)
            samples = await self._run(
                sample_attractor,
                sys,
                config.samples,
                warmup=config.warmup,
                stride=config.stride,
                step=config.step,
                seed=config.seed,
                x0=config.x0,
                threshold=self.threshold,
            )
            result = await self._run(
                lyapunov_dim_on_set,
                sys,
                samples,
                config.horizons,
                config.step,
                config.reorth_every,
                self.threshold,
                self.workers,
            )
            by_horizon = result.table.groupby("horizon")["dim"].max()
            exponents = np.mean(result.final_logs, axis=0) / result.horizons[-1]
            d = min(result.value + ORDERING_TOLERANCE, float(sys.state_dim))
            response = LyapDimResponseDTO(
                provenance=config.provenance(),
                dim=result.value,
                n_samples=result.n_samples,
                horizons=result.horizons,
                by_horizon={f"{h:g}": float(v) for h, v in by_horizon.items()},
                kaplan_yorke_mean=kaplan_yorke_dim(exponents),
                contraction=contraction_check(spectra_from_logs(result.final_logs), d),
            )
            self.store.write_frame("lyap-dim.csv", result.table)
            self._write("lyap-dim.json", response)
            logger.info("Размерность Ляпунова %s: %.4f", sys.name, result.value)
            return response
        except Exception as e:
            logger.error("Ошибка при оценке размерности Ляпунова: %s", str(e))
            raise

    def _box_points(self, config: RunConfig) -> Tuple[PointSet, List[float], bool]:
        """Точки, шкала eps и признак выборки с аттрактора."""
        if self.is_point_set(config):
            kind, base = POINT_SETS[config.system]
            points = fractal_points(kind, config.levels)
            if config.eps_max is None:
                eps = [0.5 * float(base) ** -i for i in range(config.levels + 1)]
            else:
                eps = eps_ladder(config.eps_max, config.eps_ratio, config.n_scales)
            return points, eps, False
        sys = self._system(config)
        points = sample_attractor(
            sys,
            config.n_points,
            warmup=config.warmup,
            stride=config.stride,
            step=config.step,
            seed=config.seed,
            chains=config.chains,
            x0=config.x0,
            threshold=self.threshold,
        )
        eps = eps_ladder(config.eps_max or 4.0, config.eps_ratio, config.n_scales)
        return points, eps, True

    async def box_dim(self, config: RunConfig) -> BoxDimResponseDTO:
        """
        Оценка размерности покрытиями; пишет counts.csv, anchor-spread.csv,
        box-dim.json и box-dim.svg.
        """
        try:
            points, eps, sampled = await self._run(self._box_points, config)
            table: CountTable = await self._run(count_scales, points, eps, None, self.workers)
            floor = sampling_floor(table, len(points)) if sampled else None
            eps_range = (floor, max(eps)) if floor is not None else None
            spread = await self._run(
                anchor_spread, points, eps, config.anchors, config.seed, self.workers
            )
            fit = dim_fit(table, eps_range, anchors=spread.attrs["anchors"])
            in_range = spread if floor is None else spread[spread["eps"] >= floor]
            response = BoxDimResponseDTO(
                provenance=config.provenance(),
                point_set=points.label,
                n_points=len(points),
                fit=fit,
                sampling_floor=floor,
                max_anchor_spread=float(in_range["spread"].max()),
                measure_limsup={
                    f"{d:g}": limsup_tail(measure_sequence(table, d)) for d in config.ds
                },
            )
            self.store.write_frame("counts.csv", table.to_frame(tuple(config.ds)))
            self.store.write_frame("anchor-spread.csv", spread)
            self._write("box-dim.json", response)
            if config.plot:
                self.store.write_text(
                    "box-dim.svg",
                    loglog_fit_svg(table.eps, table.counts, fit.slope, fit.intercept, points.label),
                )
            logger.info("Наклон для %s: %.4f (r2=%.4f)", points.label, fit.slope, fit.r2)
            return response
        except Exception as e:
            logger.error("Ошибка при оценке размерности покрытиями: %s", str(e))
            raise

    async def lorenz_bound(self, config: RunConfig) -> LorenzBoundResponseDTO:
        """
        Замкнутая формула для системы Лоренца, проверка тождества объема и
        оценка 2 + a/(sigma+b+1+a) по заданному --a или по собственной оценке a.
        """
        try:
            sys = self._lorenz(config)
            sigma, r, b = (sys.params[k] for k in ("sigma", "r", "b"))
            verdict = lorenz_dim_formula(sigma, r, b)
            a, estimate = config.a, None
            if a is None and config.estimate_a:
                estimate = await self._run(
                    estimate_a,
                    sigma,
                    r,
                    b,
                    config.samples,
                    config.horizon,
                    config.step,
                    config.seed,
                    warmup=config.warmup,
                    workers=self.workers,
                    **self._sampling(config),
                )
                a = max(estimate.value, 0.0)
            point = await self._run(self._identity_point, config, sys)
            residual = await self._run(
                volume_identity_residual,
                sigma,
                r,
                b,
                point,
                config.t,
                config.step,
                config.reorth_every,
                self.threshold,
            )
            hl_bound = hl_bound_from_a(a, sigma, b) if a is not None else None
            response = LorenzBoundResponseDTO(
                provenance=config.provenance(),
                params=dict(sys.params),
                ratio=verdict.ratio,
                outcome=verdict.outcome,
                verdict=verdict,
                dim=verdict.value,
                a=a,
                a_estimate=estimate,
                horizon=config.horizon,
                hl_bound=hl_bound,
                hl_bound_reference=(
                    compare_to_reference(
                        "hl_bound", hl_bound, REFERENCE_HL_BOUND, REFERENCE_HL_BOUND_TOLERANCE
                    )
                    if hl_bound is not None
                    else None
                ),
                identity_residual=residual,
                identity_x0=point,
                identity_t=config.t,
            )
            self._write("lorenz-bound.json", response)
            return response
        except Exception as e:
            logger.error("Ошибка при вычислении оценок для системы Лоренца: %s", str(e))
            raise

    async def stretch(self, config: RunConfig) -> StretchResponseDTO:
        """
        Растяжение трансверсального отрезка; пишет stretch-lengths.csv,
        stretch-curve.csv, stretch.json и stretch.svg.
        """
        try:
            sys = self._lorenz(config)
            sigma, r, b = (sys.params[k] for k in ("sigma", "r", "b"))
            curve = default_segment(sigma, r, b, config.segment_length, config.resolution)
            curves, fit = await self._run(
                length_growth,
                sys,
                curve,
                config.taus,
                config.step,
                self.settings.CURVE_VERTEX_BUDGET,
                self.threshold,
                self.workers,
            )
            sampling = self._sampling(config)
            samples = await self._run(
                attractor_samples,
                sys,
                config.samples,
                config.seed,
                config.step,
                config.warmup,
                **{k: sampling[k] for k in ("stride", "x0", "threshold", "exclude_radius")},
            )
            inf_rate = await self._run(
                inf_alpha1_rate,
                sigma,
                r,
                b,
                len(samples),
                config.horizon,
                config.step,
                config.seed,
                system=sys,
                samples=samples,
                workers=self.workers,
                **sampling,
            )
            conditions = await self._run(
                stretch_conditions,
                sys,
                samples,
                1,
                config.taus[-1],
                config.step,
                config.reorth_every,
                self.workers,
                self.threshold,
            )
            nu = math.exp(inf_rate.value * config.taus[-1])
            response = StretchResponseDTO(
                provenance=config.provenance(),
                fit=fit,
                inf_rate=inf_rate,
                inf_rate_reference=compare_to_reference(
                    "inf_alpha1_rate",
                    inf_rate.value,
                    REFERENCE_INF_RATE,
                    REFERENCE_INF_RATE_TOLERANCE,
                ),
                conditions=conditions,
                lower_bound=stretch_lower_bound(
                    nu, curve_length(curve), 1, sys.state_dim
                ),
                vertices=[int(c.points.shape[0]) for c in curves],
            )
            lengths = pd.DataFrame(
                {"tau": fit.taus, "length": fit.lengths, "vertices": response.vertices}
            )
            self.store.write_frame("stretch-lengths.csv", lengths)
            self.store.write_frame("stretch-curve.csv", curves[-1].to_frame())
            self._write("stretch.json", response)
            if config.plot:
                self.store.write_text(
                    "stretch.svg",
                    rate_fit_svg(fit.taus, fit.lengths, fit.rate, fit.intercept, "curve length"),
                )
            return response
        except Exception as e:
            logger.error("Ошибка в эксперименте с растяжением кривой: %s", str(e))
            raise

    # --- сводный отчет ---

    async def _artifact(
        self, config: RunConfig, name: str, kind: AnalysisKind, **updates: Any
    ) -> Dict[str, Any]:
        """JSON-артефакт подкоманды; при compute_missing считается на месте."""
        if not self.store.exists(name) and config.compute_missing:
            logger.info("Артефакт %s отсутствует, запускаю %s", name, kind.value)
            runner = getattr(self, kind.value.replace("-", "_"))
            await runner(config.model_copy(update={"analysis": kind, **updates}))
        self.store.require(name, produced_by=kind.value)
        return self.store.read_json(name)

    def _henon_entry(self, config: RunConfig) -> ReportEntry:
        sys = henon()
        samples = sample_attractor(sys, 100, warmup=1000, stride=1, seed=config.seed)
        result = lyapunov_dim_on_set(sys, samples, [20.0], reorth_every=1)
        return ReportEntry(
            name="henon_lyapunov_dim",
            value=result.value,
            source="lyapunov_dim_on_set",
            settings={"system": "henon", **sys.params, "samples": 100, "horizon": 20,
                      "warmup": 1000, "seed": config.seed},
        )

    @staticmethod
    def _measure_decay() -> Tuple[pd.DataFrame, ReportEntry]:
        """N(F^m K) eps^2 for a small square K in the trapping region of the Hénon map."""
        sys = henon()
        axis = np.linspace(-0.1, 0.1, 101)
        gx, gy = np.meshgrid(axis, axis, indexing="ij")
        square = PointSet(points=np.column_stack([gx.ravel(), gy.ravel()]), label="square")
        frame = image_measure_decay(sys, square, eps=0.005, d=2.0, iterations=5)
        entry = ReportEntry(
            name="henon_measure_decay_ratio",
            value=float(frame["N_eps_d"].iloc[-1] / frame["N_eps_d"].iloc[0]),
            source="image_measure_decay",
            settings={"system": "henon", **sys.params, "square": [-0.1, 0.1], "grid": 101,
                      "eps": 0.005, "d": 2.0, "iterations": 5},
        )
        return frame, entry

    async def report(self, config: RunConfig) -> ReportResponseDTO:
        """
        Сводный отчет по имеющимся (или досчитанным) артефактам; пишет
        report.json и report.csv. Отметок времени нет: одинаковые настройки
        дают побайтно одинаковый отчет.
        """
        try:
            entries: List[ReportEntry] = []
            values: Dict[str, Optional[float]] = {}

            def add(name: str, value: Optional[float], source: str, settings: Dict[str, Any]):
                status = "ok" if value is not None else "not-computed"
                entries.append(ReportEntry(
                    name=name, value=value, status=status, source=source, settings=settings
                ))
                values[name] = value

            box = await self._artifact(config, "box-dim.json", AnalysisKind.BOX_DIM)
            add("box_dim_slope", box["fit"]["slope"], "box-dim", box["provenance"])

            if self.is_point_set(config):
                entries.append(ReportEntry(
                    name="lyapunov_dim",
                    status="not-applicable",
                    source="lyap-dim",
                    settings={"system": config.system},
                ))
            else:
                lyap = await self._artifact(config, "lyap-dim.json", AnalysisKind.LYAP_DIM)
                add("lyapunov_dim", lyap["dim"], "lyap-dim", lyap["provenance"])

            if config.system == "lorenz":
                bound = await self._artifact(
                    config, "lorenz-bound.json", AnalysisKind.LORENZ_BOUND, estimate_a=True
                )
                add("lorenz_closed_form", bound["dim"], "lorenz-bound", bound["provenance"])
                add("a_estimate", bound["a"], "lorenz-bound", bound["provenance"])
                add("hl_bound", bound["hl_bound"], "lorenz-bound", bound["provenance"])
                add("identity_residual", bound["identity_residual"], "lorenz-bound",
                    {**bound["provenance"], "x0": bound["identity_x0"], "t": bound["identity_t"]})
                reference = bound["hl_bound_reference"]
                if reference is not None:
                    add("hl_bound_reference_deviation", reference["deviation"], "lorenz-bound",
                        _with_reference(bound["provenance"], reference))
                stretch = await self._artifact(config, "stretch.json", AnalysisKind.STRETCH)
                add("stretch_rate", stretch["fit"]["rate"], "stretch", stretch["provenance"])
                add("inf_alpha1_rate", stretch["inf_rate"]["value"], "stretch",
                    stretch["provenance"])
                reference = stretch["inf_rate_reference"]
                add("inf_rate_reference_deviation", reference["deviation"], "stretch",
                    _with_reference(stretch["provenance"], reference))

            entries.append(await self._run(self._henon_entry, config))
            decay, decay_entry = await self._run(self._measure_decay)
            entries.append(decay_entry)

            checks = [
                self._check(name, values.get(lhs), values.get(rhs), tol)
                for name, lhs, rhs, tol in (
                    ("box_dim <= lyapunov_dim", "box_dim_slope", "lyapunov_dim", ORDERING_TOLERANCE),
                    ("lyapunov_dim <= closed_form", "lyapunov_dim", "lorenz_closed_form",
                     ORDERING_TOLERANCE),
                    ("box_dim <= closed_form", "box_dim_slope", "lorenz_closed_form",
                     ORDERING_TOLERANCE),
                    ("hl_bound <= closed_form", "hl_bound", "lorenz_closed_form", 0.0),
                )
            ]
            response = ReportResponseDTO(
                provenance=config.provenance(),
                entries=entries,
                checks=[c for c in checks if c is not None],
                measure_decay=[
                    {k: float(v) for k, v in row.items()} for row in decay.to_dict(orient="records")
                ],
            )
            frame = pd.DataFrame(
                [
                    {
                        "name": e.name,
                        "value": e.value,
                        "status": e.status,
                        "source": e.source,
                        "settings": json.dumps(e.settings, sort_keys=True),
                    }
                    for e in entries
                ]
            )
            self.store.write_frame("report.csv", frame)
            self._write("report.json", response)
            return response
        except Exception as e:
            logger.error("Ошибка при построении отчета: %s", str(e))
            raise

    @staticmethod
    def _check(
        name: str, lhs: Optional[float], rhs: Optional[float], tolerance: float
    ) -> Optional[ReportCheck]:
        if lhs is None or rhs is None:
            return None
        return ReportCheck(
            name=name, lhs=lhs, rhs=rhs, tolerance=tolerance, passed=lhs <= rhs + tolerance
        )
