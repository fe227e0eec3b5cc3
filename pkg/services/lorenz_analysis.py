"""
Module for Lorenz-specific closed forms and numeric bounds.

- the stability/dimension dichotomy and the closed-form Lyapunov dimension
- the volume identity omega_3(T_x F^t) = exp(-(sigma + b + 1) t)
- the finite-horizon estimate of a in sup alpha_1(T_x F^t) <= exp(a t)
- the upper bound 2 + a / (sigma + b + 1 + a)
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import ArgumentError, InsufficientDataError
from core.models import (
    LorenzVerdict,
    Outcome,
    PointSet,
    RateEstimate,
    ReferenceComparison,
    SystemDef,
)
from services.dynsys import lorenz, lorenz_range_warnings
from services.flow import DIVERGENCE_THRESHOLD, sample_attractor, tangent_map, tangent_sweep_batch

logger = logging.getLogger("lorenz_analysis")

# опубликованные значения для сравнения: 2 + a/(sigma+b+1+a) в [2.05, 2.07] и inf-скорость 0.788
REFERENCE_HL_BOUND = 2.06
REFERENCE_HL_BOUND_TOLERANCE = 0.01
REFERENCE_INF_RATE = 0.788
REFERENCE_INF_RATE_TOLERANCE = 0.15

# во сколько раз траектория длиннее n_samples при отбрасывании выборок
MAX_OVERSAMPLING = 4


def lorenz_ratio(sigma: float, r: float, b: float) -> float:
    """2(sigma + b + 1) / (sigma + 1 + sqrt((sigma - 1)^2 + 4 sigma r))."""
    return 2.0 * (sigma + b + 1.0) / (sigma + 1.0 + math.sqrt((sigma - 1.0) ** 2 + 4.0 * sigma * r))


def lorenz_dim_formula(sigma: float, r: float, b: float) -> LorenzVerdict:
    """
    Stability/dimension dichotomy for the Lorenz system.

    ratio > 1: every solution tends to an equilibrium (Stable); otherwise the
    global attractor has Lyapunov dimension 3 - ratio.

    Args:
        sigma, r, b: Lorenz parameters; out-of-range values only add warnings

    Returns:
        LorenzVerdict
    """
    warnings = lorenz_range_warnings(sigma, r, b)
    for message in warnings:
        logger.warning("Lorenz parameters out of range: %s", message)
    ratio = lorenz_ratio(sigma, r, b)
    if ratio > 1:
        return LorenzVerdict(ratio=ratio, outcome=Outcome.STABLE, warnings=warnings)
    return LorenzVerdict(ratio=ratio, outcome=Outcome.DIM, value=3.0 - ratio, warnings=warnings)


def volume_identity_residual(
    sigma: float,
    r: float,
    b: float,
    x0: Sequence[float],
    t: float,
    step: float = 1e-3,
    reorth_every: int = 10,
    threshold: float = DIVERGENCE_THRESHOLD,
) -> float:
    """
    |sum(log_svals) + (sigma + b + 1) t| / ((sigma + b + 1) t) for T_{x0} F^t.
    """
    if not t > 0:
        raise ArgumentError("t must be > 0", t=t)
    result = tangent_map(lorenz(sigma, r, b), x0, t, step, reorth_every, threshold)
    trace = sigma + b + 1.0
    return abs(math.fsum(result.log_svals) + trace * t) / (trace * t)


def lorenz_equilibria(sigma: float, r: float, b: float) -> List[Tuple[float, float, float]]:
    """The origin and, for r > 1, C+- = (+-sqrt(b(r-1)), +-sqrt(b(r-1)), r-1)."""
    points = [(0.0, 0.0, 0.0)]
    if r > 1 and b >= 0:
        c = math.sqrt(b * (r - 1.0))
        points += [(c, c, r - 1.0), (-c, -c, r - 1.0)]
    return points


def equilibrium_distances(sys: SystemDef, samples: PointSet) -> np.ndarray:
    """Distance from every sample to the nearest Lorenz equilibrium."""
    if sys.name != "lorenz":
        raise ArgumentError("equilibrium distances need the lorenz system", system=sys.name)
    centers = np.asarray(lorenz_equilibria(sys.params["sigma"], sys.params["r"], sys.params["b"]))
    diffs = samples.points[:, None, :] - centers[None, :, :]
    return np.min(np.linalg.norm(diffs, axis=-1), axis=1)


def attractor_samples(
    sys: SystemDef,
    n_samples: int,
    seed: int,
    step: float = 1e-3,
    warmup: float = 100.0,
    stride: float = 1.0,
    x0: Optional[Sequence[float]] = None,
    threshold: float = DIVERGENCE_THRESHOLD,
    exclude_radius: float = 0.0,
) -> PointSet:
    """
    One long trajectory after warmup, sampled every ``stride`` time units.

    With ``exclude_radius > 0`` samples closer than that to a Lorenz
    equilibrium are dropped and the trajectory is extended until
    ``n_samples`` remain.
    """
    if exclude_radius < 0:
        raise ArgumentError("exclude_radius must be >= 0", exclude_radius=exclude_radius)
    if exclude_radius == 0:
        return sample_attractor(
            sys, n_samples, warmup=warmup, stride=stride, step=step, seed=seed, chains=1,
            x0=x0, threshold=threshold,
        )
    points = sample_attractor(
        sys, MAX_OVERSAMPLING * n_samples, warmup=warmup, stride=stride, step=step, seed=seed,
        chains=1, x0=x0, threshold=threshold,
    )
    kept = points.points[equilibrium_distances(sys, points) >= exclude_radius]
    if kept.shape[0] < n_samples:
        raise InsufficientDataError(
            f"only {kept.shape[0]} samples lie farther than {exclude_radius} from the equilibria",
            n_samples=n_samples,
        )
    logger.info(
        "Отброшено %d выборок ближе %g к равновесиям",
        len(points) - kept.shape[0],
        exclude_radius,
    )
    return PointSet(points=kept[:n_samples], label=f"{points.label}-r{exclude_radius:g}")


def alpha1_rates(
    sys: SystemDef,
    samples: PointSet,
    horizon: float,
    step: float = 1e-3,
    reorth_every: int = 10,
    threshold: float = DIVERGENCE_THRESHOLD,
    workers: int = 1,
) -> np.ndarray:
    """(1 / horizon) log alpha_1(T_x F^horizon) for every sample."""
    if not horizon > 0:
        raise ArgumentError("horizon must be > 0", horizon=horizon)
    logs, _ = tangent_sweep_batch(
        sys, samples.points, [horizon], step, reorth_every, threshold, workers
    )
    return logs[0][:, 0] / horizon


def reduced_rate(
    sigma: float,
    r: float,
    b: float,
    n_samples: int,
    horizon: float,
    reduction: str,
    step: float = 1e-3,
    seed: int = 0,
    system: Optional[SystemDef] = None,
    samples: Optional[PointSet] = None,
    warmup: float = 100.0,
    workers: int = 1,
    reorth_every: int = 10,
    threshold: float = DIVERGENCE_THRESHOLD,
    stride: float = 1.0,
    x0: Optional[Sequence[float]] = None,
    exclude_radius: float = 0.0,
) -> RateEstimate:
    """max or min over attractor samples of (1 / horizon) log alpha_1(T_x F^horizon)."""
    if n_samples < 1:
        raise ArgumentError("n_samples must be >= 1", n_samples=n_samples)
    if reduction not in ("max", "min"):
        raise ArgumentError("reduction must be max or min", reduction=reduction)
    if not horizon > 0:
        raise ArgumentError("horizon must be > 0", horizon=horizon)
    sys = system or lorenz(sigma, r, b)
    points = samples or attractor_samples(
        sys, n_samples, seed, step, warmup, stride, x0, threshold, exclude_radius
    )
    rates = alpha1_rates(sys, points, horizon, step, reorth_every, threshold, workers)
    value = float(np.max(rates) if reduction == "max" else np.min(rates))
    distance = float(np.min(equilibrium_distances(sys, points))) if sys.name == "lorenz" else None
    logger.info("%s rate = %.4f (horizon=%g, samples=%d)", reduction, value, horizon, len(points))
    return RateEstimate(
        value=value,
        horizon=horizon,
        n_samples=len(points),
        seed=seed,
        reduction=reduction,
        exclude_radius=exclude_radius,
        equilibrium_distance=distance,
    )


def estimate_a(
    sigma: float,
    r: float,
    b: float,
    n_samples: int,
    horizon: float,
    step: float = 1e-3,
    seed: int = 0,
    system: Optional[SystemDef] = None,
    samples: Optional[PointSet] = None,
    warmup: float = 100.0,
    workers: int = 1,
    **sampling,
) -> RateEstimate:
    """
    Finite-horizon estimate of a: max over attractor samples of
    (1 / horizon) log alpha_1(T_x F^horizon).

    Args:
        sigma, r, b: Lorenz parameters (ignored when ``system`` is given)
        n_samples: number of attractor samples
        horizon: tangent-map horizon; the estimate depends on it
        step: RK4 step
        seed: seed of the initial jitter
        system: substitute system, e.g. a linear test flow
        samples: precomputed samples (shared with ``inf_alpha1_rate``)
        warmup: transient discarded before sampling
        workers: threads
        sampling: reorth_every, threshold, stride, x0, exclude_radius

    Returns:
        RateEstimate with the horizon and sample count
    """
    return reduced_rate(
        sigma, r, b, n_samples, horizon, "max", step, seed, system, samples, warmup, workers,
        **sampling,
    )


def hl_bound_from_a(a: float, sigma: float, b: float) -> float:
    """2 + a / (sigma + b + 1 + a)."""
    if a < 0:
        raise ArgumentError("a must be >= 0", a=a)
    return 2.0 + a / (sigma + b + 1.0 + a)


def compare_to_reference(
    name: str, value: float, reference: float, tolerance: float
) -> ReferenceComparison:
    deviation = abs(value - reference)
    return ReferenceComparison(
        name=name,
        value=value,
        reference=reference,
        tolerance=tolerance,
        deviation=deviation,
        within=deviation <= tolerance,
    )
