"""
Module for the dynamical systems catalog.

Provides the Lorenz flow, the Hénon map and linear test systems as
``SystemDef`` instances, evaluation helpers with dimension checks, and
prefractal point-set generators with known dimensions.

Fields and Jacobians are vectorized: they accept stacked states ``(..., n)``.
"""

import logging
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from core.exceptions import ArgumentError
from core.models import PointSet, SystemDef, SystemKind

logger = logging.getLogger("dynsys")

LORENZ_STANDARD = {"sigma": 10.0, "r": 28.0, "b": 8.0 / 3.0}
HENON_STANDARD = {"a": 1.4, "b": 0.3}


def lorenz(sigma: float = 10.0, r: float = 28.0, b: float = 8.0 / 3.0) -> SystemDef:
    """
    Builds the Lorenz flow x' = -sigma(x - y), y' = r x - y - x z, z' = -b z + x y.

    Parameters outside sigma > 0, r > 1, b in [0, 4] are accepted with a warning.

    Args:
        sigma: Prandtl number
        r: Rayleigh ratio
        b: geometric factor

    Returns:
        SystemDef of kind flow
    """
    warnings = lorenz_range_warnings(sigma, r, b)
    for message in warnings:
        logger.warning("Lorenz parameters out of range: %s", message)

    def field(x: np.ndarray) -> np.ndarray:
        u, v, w = x[..., 0], x[..., 1], x[..., 2]
        return np.stack([-sigma * (u - v), r * u - v - u * w, -b * w + u * v], axis=-1)

    def jacobian(x: np.ndarray) -> np.ndarray:
        u, v, w = x[..., 0], x[..., 1], x[..., 2]
        jac = np.zeros(x.shape[:-1] + (3, 3))
        jac[..., 0, 0] = -sigma
        jac[..., 0, 1] = sigma
        jac[..., 1, 0] = r - w
        jac[..., 1, 1] = -1.0
        jac[..., 1, 2] = -u
        jac[..., 2, 0] = v
        jac[..., 2, 1] = u
        jac[..., 2, 2] = -b
        return jac

    return SystemDef(
        name="lorenz",
        kind=SystemKind.FLOW,
        state_dim=3,
        params={"sigma": sigma, "r": r, "b": b},
        field=field,
        jacobian=jacobian,
        default_state=(1.0, 1.0, 1.0),
        warnings=warnings,
    )


def lorenz_range_warnings(sigma: float, r: float, b: float) -> list:
    warnings = []
    if not sigma > 0:
        warnings.append(f"sigma={sigma} violates sigma > 0")
    if not r > 1:
        warnings.append(f"r={r} violates r > 1")
    if not 0 <= b <= 4:
        warnings.append(f"b={b} violates b in [0, 4]")
    return warnings


def henon(a: float = 1.4, b: float = 0.3) -> SystemDef:
    """Hénon map (x, y) -> (1 - a x^2 + y, b x)."""

    def field(x: np.ndarray) -> np.ndarray:
        u, v = x[..., 0], x[..., 1]
        return np.stack([1.0 - a * u**2 + v, b * u], axis=-1)

    def jacobian(x: np.ndarray) -> np.ndarray:
        u = x[..., 0]
        jac = np.zeros(x.shape[:-1] + (2, 2))
        jac[..., 0, 0] = -2.0 * a * u
        jac[..., 0, 1] = 1.0
        jac[..., 1, 0] = b
        return jac

    return SystemDef(
        name="henon",
        kind=SystemKind.MAP,
        state_dim=2,
        params={"a": a, "b": b},
        field=field,
        jacobian=jacobian,
        default_state=(0.1, 0.1),
    )


def linear(matrix, kind: SystemKind = SystemKind.FLOW, name: str = "linear") -> SystemDef:
    """
    Builds x' = A x (flow) or x -> A x (map).

    Args:
        matrix: square matrix A
        kind: flow or map
        name: system name recorded in outputs

    Returns:
        SystemDef with the constant Jacobian A
    """
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ArgumentError("linear system requires a square matrix", shape=list(a.shape))
    n = a.shape[0]

    def field(x: np.ndarray) -> np.ndarray:
        return x @ a.T

    def jacobian(x: np.ndarray) -> np.ndarray:
        return np.broadcast_to(a, x.shape[:-1] + (n, n)).copy()

    params = {f"a{i + 1}{j + 1}": float(a[i, j]) for i in range(n) for j in range(n)}
    return SystemDef(
        name=name,
        kind=kind,
        state_dim=n,
        params=params,
        field=field,
        jacobian=jacobian,
        default_state=tuple([1.0] * n),
    )


def linear_diag(diagonal: Sequence[float], kind: SystemKind = SystemKind.FLOW) -> SystemDef:
    """Diagonal linear system, e.g. x' = diag(0.5, -1) x."""
    name = "linear-diag" if kind == SystemKind.FLOW else "linear-diag-map"
    return linear(np.diag(np.asarray(diagonal, dtype=float)), kind=kind, name=name)


def _diag_from_params(params: Dict[str, float]) -> list:
    keys = sorted((k for k in params if k.startswith("d")), key=lambda k: int(k[1:]))
    if not keys:
        raise ArgumentError("linear-diag requires parameters d1..dn")
    return [params[k] for k in keys]


# Каталог систем: имя -> построитель из словаря параметров
_CATALOG: Dict[str, Callable[[Dict[str, float]], SystemDef]] = {
    "lorenz": lambda p: lorenz(**{**LORENZ_STANDARD, **p}),
    "henon": lambda p: henon(**{**HENON_STANDARD, **p}),
    "linear-diag": lambda p: linear_diag(_diag_from_params(p)),
    "linear-diag-map": lambda p: linear_diag(_diag_from_params(p), kind=SystemKind.MAP),
}


def system_names() -> list:
    return sorted(_CATALOG)


def get_system(name: str, params: Optional[Dict[str, float]] = None) -> SystemDef:
    """
    Looks up a system in the catalog.

    Args:
        name: catalog name (lorenz, henon, linear-diag, linear-diag-map)
        params: parameter overrides

    Returns:
        SystemDef

    Raises:
        ArgumentError: unknown name or unexpected parameter
    """
    builder = _CATALOG.get(name)
    if builder is None:
        raise ArgumentError(f"unknown system '{name}'", known=system_names())
    try:
        return builder(dict(params or {}))
    except TypeError as e:
        raise ArgumentError(f"bad parameters for system '{name}': {e}") from e


def _as_state(sys: SystemDef, x) -> np.ndarray:
    state = np.asarray(x, dtype=float)
    if state.shape[-1:] != (sys.state_dim,):
        raise ArgumentError(
            f"state has dimension {state.shape[-1:]} but {sys.name} expects {sys.state_dim}",
            expected=sys.state_dim,
        )
    return state


def eval_field(sys: SystemDef, x) -> np.ndarray:
    """Returns f(x): the derivative for flows, the image for maps."""
    return sys.field(_as_state(sys, x))


def eval_jacobian(sys: SystemDef, x) -> np.ndarray:
    """Returns the Jacobian df/dx at x."""
    return sys.jacobian(_as_state(sys, x))


def check_jacobian(sys: SystemDef, x, h: float = 1e-6) -> float:
    """
    Max relative error between the analytic Jacobian and central differences.

    Args:
        sys: system under test
        x: state
        h: relative step; the absolute step is h * max(1, |x|_inf)

    Returns:
        max_j |fd_j - J e_j| / max(1, |J|_inf)
    """
    state = _as_state(sys, x)
    step = h * max(1.0, float(np.max(np.abs(state))))
    jac = eval_jacobian(sys, state)
    basis = np.eye(sys.state_dim)
    fd = np.stack(
        [(sys.field(state + step * e) - sys.field(state - step * e)) / (2 * step) for e in basis],
        axis=-1,
    )
    scale = max(1.0, float(np.max(np.abs(jac))))
    return float(np.max(np.abs(fd - jac)) / scale)


# --- Префракталы ---


def fractal_points(kind: str, level: int, n: Optional[int] = None) -> PointSet:
    """
    Level-``level`` prefractal vertex sets with known dimensions.

    - cantor: left endpoints of the surviving middle-thirds intervals (2^level points)
    - sierpinski: lower-left corners of the sub-triangles of the right Sierpinski
      triangle with vertices (0,0), (1,0), (0,1) (3^level points)
    - square: uniform grid {0, 1/2^level, ..., 1}^2 ((2^level + 1)^2 points)
    - interval: uniform grid on [0, 1] (2^level + 1 points)

    Args:
        kind: cantor | sierpinski | square | interval
        level: refinement level >= 0
        n: ambient dimension; extra coordinates are zero

    Returns:
        PointSet
    """
    if level < 0:
        raise ArgumentError("level must be >= 0", level=level)

    if kind == "cantor":
        ks = np.zeros(1, dtype=np.int64)
        for _ in range(level):
            ks = np.concatenate([3 * ks, 3 * ks + 2])
        points = (ks / 3.0**level).reshape(-1, 1)
    elif kind == "sierpinski":
        corners = np.zeros((1, 2), dtype=np.int64)
        for _ in range(level):
            corners = np.concatenate([2 * corners, 2 * corners + [1, 0], 2 * corners + [0, 1]])
        points = corners / 2.0**level
    elif kind == "square":
        axis = np.linspace(0.0, 1.0, 2**level + 1)
        gx, gy = np.meshgrid(axis, axis, indexing="ij")
        points = np.column_stack([gx.ravel(), gy.ravel()])
    elif kind == "interval":
        points = np.linspace(0.0, 1.0, 2**level + 1).reshape(-1, 1)
    else:
        raise ArgumentError(
            f"unknown fractal kind '{kind}'", known=["cantor", "sierpinski", "square", "interval"]
        )

    if n is not None:
        if n < points.shape[1]:
            raise ArgumentError(f"{kind} needs ambient dimension >= {points.shape[1]}", n=n)
        points = np.hstack([points, np.zeros((points.shape[0], n - points.shape[1]))])

    return PointSet(points=points, label=f"{kind}-L{level}")
