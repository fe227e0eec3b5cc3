"""
Module for disjoint-cube grid coverings.

A covering at mesh ``eps`` uses half-open cubes of side 2*eps anchored at
``anchor``: [anchor + 2 eps k, anchor + 2 eps (k + 1)) per axis. A point on a
face shared by two cubes belongs to the upper one. The top face of the covered
domain (the ``upper`` corner, by default the coordinate-wise max of the
points) is closed like the last bin of a histogram, so a closed grid such as
[0, 1] is covered without an extra cube beyond 1. Axes with zero extent are not
closed.

Counts N(eps), the sums N(eps) eps^d and log-log fits estimate the fractal
measure and dimension of the covered set.
"""

import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from core.exceptions import ArgumentError, InsufficientDataError, UnboundedError
from core.models import (
    AdditivityResult,
    CountTable,
    DimensionFit,
    GridCovering,
    PointSet,
    Relation,
    SingularSpectrum,
    SystemDef,
)
from utils.parallel import parallel_map

logger = logging.getLogger("covering")

# координаты в пределах этой доли ячейки от грани считаются лежащими на грани
BOUNDARY_SNAP = 1e-9


def _anchor(points: PointSet, anchor: Optional[Sequence[float]]) -> np.ndarray:
    if anchor is None:
        return np.zeros(points.n)
    origin = np.asarray(anchor, dtype=float).reshape(-1)
    if origin.shape[0] != points.n:
        raise ArgumentError("anchor dimension does not match the points", n=points.n)
    return origin


def _snap(q: np.ndarray) -> np.ndarray:
    nearest = np.rint(q)
    close = np.abs(q - nearest) <= BOUNDARY_SNAP * np.maximum(1.0, np.abs(q))
    return np.where(close, nearest, q)


Domain = Tuple[np.ndarray, np.ndarray]


def bounding_domain(points: PointSet) -> Domain:
    return points.points.min(axis=0), points.points.max(axis=0)


def cube_indices(
    points: PointSet,
    eps: float,
    anchor: Optional[Sequence[float]] = None,
    domain: Optional[Domain] = None,
) -> np.ndarray:
    """Per-point cube index rows (N, n), before de-duplication."""
    if not eps > 0:
        raise ArgumentError("eps must be > 0", eps=eps)
    origin = _anchor(points, anchor)
    side = 2.0 * eps
    q = _snap((points.points - origin) / side)
    idx = np.floor(q).astype(np.int64)

    lower, upper = bounding_domain(points) if domain is None else domain
    q_top = _snap((np.asarray(upper, dtype=float) - origin) / side)
    on_grid = (q_top == np.floor(q_top)) & (np.asarray(upper) > np.asarray(lower))
    for axis in np.flatnonzero(on_grid):
        idx[q[:, axis] == q_top[axis], axis] -= 1
    return idx


def grid_cover(
    points: PointSet,
    eps: float,
    anchor: Optional[Sequence[float]] = None,
    domain: Optional[Domain] = None,
) -> GridCovering:
    """
    Covers a point set by half-open cubes of side 2*eps.

    Args:
        points: point set
        eps: half-side of the cubes
        anchor: grid origin (default 0)
        domain: (lower, upper) corners of the covered domain; defaults to the
            bounding box of the points

    Returns:
        GridCovering with the unique occupied indices
    """
    idx = cube_indices(points, eps, anchor, domain)
    unique = np.unique(idx, axis=0)
    return GridCovering(
        eps=eps, anchor=tuple(float(v) for v in _anchor(points, anchor)), indices=unique
    )


def count_scales(
    points: PointSet,
    eps_list: Sequence[float],
    anchor: Optional[Sequence[float]] = None,
    workers: int = 1,
) -> CountTable:
    """
    N(eps) for each eps of a strictly decreasing ladder.

    Args:
        points: point set
        eps_list: strictly decreasing half-sides
        anchor: grid origin
        workers: threads (scales are independent)

    Returns:
        CountTable
    """
    eps_list = [float(e) for e in eps_list]
    if not eps_list or any(e <= 0 for e in eps_list):
        raise ArgumentError("eps values must be > 0", eps=eps_list)
    if any(a <= b for a, b in zip(eps_list, eps_list[1:])):
        raise ArgumentError("eps values must be strictly decreasing", eps=eps_list)
    origin = _anchor(points, anchor)
    counts = parallel_map(lambda e: grid_cover(points, e, origin).count, eps_list, workers)
    logger.debug("count_scales %s: %s", points.label, counts)
    return CountTable(
        eps=tuple(eps_list), counts=tuple(int(c) for c in counts), anchor=tuple(origin.tolist())
    )


def eps_ladder(eps_max: float, ratio: float, n_scales: int) -> List[float]:
    """eps_max, eps_max*ratio, ... (n_scales values)."""
    if not 0 < ratio < 1 or eps_max <= 0 or n_scales < 1:
        raise ArgumentError("need eps_max > 0, 0 < ratio < 1, n_scales >= 1")
    return [eps_max * ratio**i for i in range(n_scales)]


def fhl_measure_estimate(
    points: PointSet, eps: float, d: float, anchor: Optional[Sequence[float]] = None
) -> float:
    """One term N(eps) eps^d of the fractal-measure sequence."""
    if d < 0:
        raise ArgumentError("d must be >= 0", d=d)
    return grid_cover(points, eps, anchor).count * eps**d


def measure_sequence(table: CountTable, d: float) -> List[float]:
    """N(eps) eps^d for every row of the table."""
    return [n * e**d for e, n in zip(table.eps, table.counts)]


def limsup_tail(values: Sequence[float], tail: int = 3) -> float:
    """Max over the last ``tail`` terms: the reported stand-in for the limsup."""
    if not values:
        raise InsufficientDataError("empty sequence")
    return float(max(values[-tail:]))


def hausdorff_ball_bound(
    points: PointSet, eps: float, d: float, anchor: Optional[Sequence[float]] = None
) -> float:
    """
    Upper bound N(eps) eps^d n^(d/2) for the ball-covering sum at radius
    sqrt(n) eps: each cube of side 2 eps sits in a ball of that radius.
    """
    return fhl_measure_estimate(points, eps, d, anchor) * points.n ** (d / 2.0)


def dim_fit(
    table: CountTable,
    eps_range: Optional[Tuple[float, float]] = None,
    anchors: Optional[List[Tuple[float, ...]]] = None,
) -> DimensionFit:
    """
    Least squares of ln N against ln(1/eps) over rows with eps in range.

    Args:
        table: count table
        eps_range: (eps_min, eps_max), inclusive; all rows when None
        anchors: anchors recorded in the fit

    Returns:
        DimensionFit; the slope estimates the fractal dimension

    Raises:
        InsufficientDataError: fewer than 3 usable rows
    """
    eps = np.asarray(table.eps)
    counts = np.asarray(table.counts, dtype=float)
    mask = counts > 0
    if eps_range is not None:
        lo, hi = sorted(eps_range)
        tol = 1e-12 * hi
        mask &= (eps >= lo - tol) & (eps <= hi + tol)
    if mask.sum() < 3:
        raise InsufficientDataError(
            f"need >= 3 scales in range, got {int(mask.sum())}", eps_range=list(eps_range or [])
        )
    x = np.log(1.0 / eps[mask])
    y = np.log(counts[mask])
    if np.ptp(y) == 0:
        slope, intercept, r2 = 0.0, float(y[0]), 1.0
    else:
        fit = stats.linregress(x, y)
        slope, intercept, r2 = float(fit.slope), float(fit.intercept), float(fit.rvalue**2)
    return DimensionFit(
        slope=slope,
        intercept=intercept,
        r2=min(max(r2, 0.0), 1.0),
        eps_min=float(eps[mask].min()),
        eps_max=float(eps[mask].max()),
        n_scales=int(mask.sum()),
        anchors=anchors or [table.anchor],
    )


def sampling_floor(table: CountTable, n_points: int, min_per_cube: float = 10.0) -> float:
    """
    Smallest eps of the table whose average occupancy n_points / N(eps) is at
    least ``min_per_cube``.
    """
    usable = [e for e, n in zip(table.eps, table.counts) if n and n_points / n >= min_per_cube]
    if not usable:
        raise InsufficientDataError(
            "no scale reaches the requested occupancy", min_per_cube=min_per_cube
        )
    return float(min(usable))


def anchor_spread(
    points: PointSet,
    eps_list: Sequence[float],
    n_anchors: int = 3,
    seed: int = 0,
    workers: int = 1,
) -> pd.DataFrame:
    """
    Counts for the default anchor plus ``n_anchors - 1`` jittered anchors.

    Each jittered anchor shifts the grid by a seeded uniform offset of up to
    one cube side of the coarsest scale.

    Returns:
        Frame with eps, side, one N_anchor<i> column per anchor, N_min, N_max, spread
    """
    if n_anchors < 1:
        raise ArgumentError("n_anchors must be >= 1")
    rng = np.random.default_rng(seed)
    side = 2.0 * max(eps_list)
    anchors = [np.zeros(points.n)] + [
        -rng.uniform(0.0, side, size=points.n) for _ in range(n_anchors - 1)
    ]
    tables = [count_scales(points, eps_list, a, workers) for a in anchors]
    frame = pd.DataFrame({"eps": list(eps_list), "side": [2.0 * e for e in eps_list]})
    for i, table in enumerate(tables):
        frame[f"N_anchor{i}"] = table.counts
    columns = [f"N_anchor{i}" for i in range(n_anchors)]
    frame["N_min"] = frame[columns].min(axis=1)
    frame["N_max"] = frame[columns].max(axis=1)
    frame["spread"] = frame["N_max"] / frame["N_min"]
    frame.attrs["anchors"] = [tuple(float(v) for v in a) for a in anchors]
    return frame


def additivity_check(
    parts: Sequence[PointSet], eps: float, anchor: Optional[Sequence[float]] = None
) -> AdditivityResult:
    """
    Compares N(union of parts) with the sum of N(part) at mesh eps.

    The union always satisfies lhs <= rhs; parts pairwise separated by more
    than 2 eps sqrt(n) give equality. All parts share the union's domain so a
    point gets the same cube in the union and in its part.
    """
    if not parts:
        raise ArgumentError("need at least one part")
    union = parts[0]
    for part in parts[1:]:
        union = union.union(part)
    domain = bounding_domain(union)
    covers = [grid_cover(part, eps, anchor, domain) for part in parts]
    # кубы объединения = объединение кубов частей
    lhs = float(len(set().union(*(c.occupied for c in covers))))
    rhs = float(sum(c.count for c in covers))
    separated = _pairwise_separated(parts, 2.0 * eps * math.sqrt(union.n))
    relation = Relation.EQ if separated else Relation.LE
    if separated and lhs != rhs:
        logger.warning("separated parts but N(union)=%g != sum=%g", lhs, rhs)
    return AdditivityResult(lhs=lhs, rhs=rhs, relation=relation)


def _pairwise_separated(parts: Sequence[PointSet], gap: float) -> bool:
    for i, a in enumerate(parts):
        for b in parts[i + 1 :]:
            # разделение по ограничивающим параллелепипедам
            lo = np.maximum(a.points.min(axis=0) - b.points.max(axis=0), 0)
            hi = np.maximum(b.points.min(axis=0) - a.points.max(axis=0), 0)
            if np.linalg.norm(np.maximum(lo, hi)) <= gap:
                return False
    return True


def theorem1_cube_bound(spec: SingularSpectrum, k: int) -> float:
    """
    Number of cubes of side proportional to alpha_{k+1} needed to cover a
    parallelepiped with semi-axes proportional to alpha_1..alpha_k:
    prod_{i <= k} (alpha_i / alpha_{k+1} + 1).

    Raises:
        UnboundedError: alpha_{k+1} = 0 (flat image)
    """
    if not 1 <= k < spec.n:
        raise ArgumentError(f"k must lie in [1, {spec.n - 1}]", k=k)
    logs = spec.log_svals
    if logs[k] == -math.inf:
        raise UnboundedError("alpha_{k+1} = 0: the image is flat", k=k)
    return math.prod(math.exp(logs[i] - logs[k]) + 1.0 for i in range(k))


def image_measure_decay(
    sys: SystemDef,
    points: PointSet,
    eps: float,
    d: float,
    iterations: int,
    anchor: Optional[Sequence[float]] = None,
    transform: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> pd.DataFrame:
    """
    N(F^m K) eps^d for m = 0..iterations, the numerical picture of measure
    decay of iterated images under a map contracting d-volumes.

    Args:
        sys: map system (or any system when ``transform`` is supplied)
        points: the set K
        eps: mesh
        d: exponent
        iterations: number of images
        anchor: grid origin
        transform: replaces sys.field as the map F

    Returns:
        Frame with columns m, N, N_eps_d
    """
    if transform is None and sys.is_flow:
        raise ArgumentError("image_measure_decay needs a map system or a transform")
    step = transform or sys.field
    current = points.points
    rows = []
    for m in range(iterations + 1):
        cloud = PointSet(points=current, label=f"{points.label}-F{m}")
        count = grid_cover(cloud, eps, anchor).count
        rows.append({"m": m, "N": count, "N_eps_d": count * eps**d})
        if m < iterations:
            current = step(current)
    return pd.DataFrame(rows)
