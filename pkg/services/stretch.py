"""
Module for the curve-stretching lower-bound experiment.

A short segment is pushed forward by the flow; its length grows like
inf omega_1(T_x F^tau), which rules out a smooth compact manifold as the
attractor. Refinement always re-integrates from the original curve
parameterization: interpolating evolved vertices would cut across folds.
"""

import logging
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from core.exceptions import ArgumentError, BudgetError, InsufficientDataError
from core.models import Curve, PointSet, RateEstimate, RateFit, StretchConditions, SystemDef
from services.dynsys import lorenz
from services.flow import DIVERGENCE_THRESHOLD, advance_batch, tangent_sweep_batch
from services.lorenz_analysis import reduced_rate
from utils.parallel import parallel_map

logger = logging.getLogger("stretch")

VERTEX_BUDGET = 10_000_000


def curve_length(curve: Curve) -> float:
    """Sum of Euclidean gaps between consecutive vertices."""
    if curve.points.shape[0] < 2:
        raise ArgumentError("a curve needs at least 2 vertices", vertices=int(curve.points.shape[0]))
    return float(np.sum(np.linalg.norm(np.diff(curve.points, axis=0), axis=1)))


def _base_at(curve: Curve, params: np.ndarray) -> np.ndarray:
    """Points of the input polyline at curve parameters ``params``."""
    return np.column_stack(
        [np.interp(params, curve.t_param, curve.points[:, axis]) for axis in range(curve.points.shape[1])]
    )


def _advance_chunked(sys, xs, tau, step, threshold, workers):
    if workers <= 1 or xs.shape[0] < 2 * workers:
        return advance_batch(sys, xs, tau, step, threshold)
    chunks = np.array_split(xs, workers)
    return np.concatenate(
        parallel_map(lambda c: advance_batch(sys, c, tau, step, threshold), chunks, workers)
    )


def evolve_curve(
    sys: SystemDef,
    curve: Curve,
    tau: float,
    step: float = 1e-3,
    budget: int = VERTEX_BUDGET,
    threshold: float = DIVERGENCE_THRESHOLD,
    workers: int = 1,
) -> Curve:
    """
    Image F^tau of a polyline, refined until every gap is <= curve.resolution.

    New vertices are obtained by integrating the input curve's point at the
    parameter midpoint of the offending gap.

    Args:
        sys: flow
        curve: input curve
        tau: time
        step: RK4 step
        budget: maximum vertex count
        threshold: divergence threshold
        workers: threads for vertex advancement

    Returns:
        Evolved Curve; t_param holds the input-curve parameters of its vertices

    Raises:
        BudgetError: refinement would exceed ``budget`` vertices
    """
    if tau < 0:
        raise ArgumentError("tau must be >= 0", tau=tau)
    if tau == 0:
        return curve.model_copy(deep=True)

    params = curve.t_param.copy()
    points = _advance_chunked(sys, curve.points, tau, step, threshold, workers)
    passes = 0
    while True:
        gaps = np.linalg.norm(np.diff(points, axis=0), axis=1)
        wide = np.flatnonzero(gaps > curve.resolution)
        if wide.size == 0:
            break
        if points.shape[0] + wide.size > budget:
            raise BudgetError(
                f"curve refinement exceeds the vertex budget {budget}",
                vertices=int(points.shape[0] + wide.size),
            )
        mids = 0.5 * (params[wide] + params[wide + 1])
        if np.any(mids <= params[wide]) or np.any(mids >= params[wide + 1]):
            raise BudgetError("curve parameter resolution exhausted", vertices=int(points.shape[0]))
        fresh = _advance_chunked(sys, _base_at(curve, mids), tau, step, threshold, workers)
        params = np.insert(params, wide + 1, mids)
        points = np.insert(points, wide + 1, fresh, axis=0)
        passes += 1
    logger.debug("evolve_curve tau=%g: %d vertices after %d passes", tau, points.shape[0], passes)
    return Curve(points=points, resolution=curve.resolution, t_param=params)


def default_segment(
    sigma: float = 10.0,
    r: float = 28.0,
    b: float = 8.0 / 3.0,
    length: float = 0.1,
    resolution: float = 1e-3,
    center: Sequence[float] = (-10.0, -10.0, 25.0),
    vertices: int = 11,
) -> Curve:
    """Straight segment of ``length`` through ``center``, transverse to the Lorenz field."""
    c = np.asarray(center, dtype=float)
    velocity = lorenz(sigma, r, b).field(c)
    direction = np.cross(velocity, [0.0, 0.0, 1.0])
    if np.linalg.norm(direction) < 1e-12:
        direction = np.array([1.0, 0.0, 0.0])
    direction /= np.linalg.norm(direction)
    offsets = np.linspace(-0.5 * length, 0.5 * length, vertices)
    return Curve(points=c + offsets[:, None] * direction, resolution=resolution)


def length_growth(
    sys: SystemDef,
    curve: Curve,
    taus: Sequence[float],
    step: float = 1e-3,
    budget: int = VERTEX_BUDGET,
    threshold: float = DIVERGENCE_THRESHOLD,
    workers: int = 1,
):
    """
    Lengths of F^tau(curve) for each tau and the log-linear growth-rate fit.

    Returns:
        (curves, RateFit): the evolved curves in tau order and the fit of
        ln length against tau
    """
    taus = [float(t) for t in taus]
    if len(taus) < 2:
        raise InsufficientDataError("need at least 2 times for a rate fit", taus=taus)
    curves = [evolve_curve(sys, curve, tau, step, budget, threshold, workers) for tau in taus]
    lengths = [curve_length(c) for c in curves]
    fit = stats.linregress(taus, np.log(lengths))
    logger.info("Скорость роста длины: %.4f (r2=%.4f)", fit.slope, fit.rvalue**2)
    return curves, RateFit(
        rate=float(fit.slope),
        intercept=float(fit.intercept),
        r2=float(fit.rvalue**2),
        taus=taus,
        lengths=lengths,
    )


def inf_alpha1_rate(
    sigma: float,
    r: float,
    b: float,
    n_samples: int,
    tau: float,
    step: float = 1e-3,
    seed: int = 0,
    system: Optional[SystemDef] = None,
    samples: Optional[PointSet] = None,
    warmup: float = 100.0,
    workers: int = 1,
    **sampling,
) -> RateEstimate:
    """
    min over attractor samples of (1 / tau) log alpha_1(T_x F^tau), the
    min-reduction companion of ``estimate_a``. ``sampling`` takes the same
    reorth_every, threshold, stride, x0 and exclude_radius.
    """
    if not tau > 0:
        raise ArgumentError("tau must be > 0", tau=tau)
    return reduced_rate(
        sigma, r, b, n_samples, tau, "min", step, seed, system, samples, warmup, workers,
        **sampling,
    )


def stretch_lower_bound(nu: float, R: float, k: int, n: int) -> float:
    """R nu / (2^k n^(k/2))."""
    if not nu > 0 or not R > 0:
        raise ArgumentError("nu and R must be > 0", nu=nu, R=R)
    if not 1 <= k <= n:
        raise ArgumentError("need 1 <= k <= n", k=k, n=n)
    return R * nu / (2.0**k * n ** (k / 2.0))


def stretch_conditions(
    sys: SystemDef,
    samples: PointSet,
    k: int,
    tau: float,
    step: float = 1e-3,
    reorth_every: int = 10,
    workers: int = 1,
    threshold: float = DIVERGENCE_THRESHOLD,
) -> StretchConditions:
    """
    Sampled spot-check of the gap condition alpha_k - 2 alpha_{k+1} > 0 and of
    the growth of omega_k at time tau. Says nothing about unsampled points.
    """
    if not 1 <= k < sys.state_dim:
        raise ArgumentError(f"k must lie in [1, {sys.state_dim - 1}]", k=k)
    logs, _ = tangent_sweep_batch(
        sys, samples.points, [tau], step, reorth_every, threshold, workers
    )
    logs = logs[0]
    gaps = np.exp(logs[:, k - 1]) - 2.0 * np.exp(logs[:, k])
    log_omega_k = np.sum(logs[:, :k], axis=1)
    return StretchConditions(
        k=k,
        tau=tau,
        n_samples=len(samples),
        min_gap=float(np.min(gaps)),
        min_log_omega=float(np.min(log_omega_k)),
        gap_holds=bool(np.min(gaps) > 0),
        omega_grows=bool(np.min(log_omega_k) > 0),
    )
