"""
Module for trajectory and tangent-map integration.

Flows are integrated with fixed-step classical Runge-Kutta (RK4); maps are
iterated. Tangent maps T_x F^t come from co-integrating the variational
equation Y' = J(x) Y, Y(0) = I, with periodic QR re-orthonormalization; the
accumulated log|R_ii| approximate the log singular values and their sum is
exactly log|det T_x F^t| of the discrete propagator.

All integrators work on stacked states ``(B, n)`` so many initial conditions
advance together.
"""

import logging
import math
from typing import List, Optional, Sequence

import numpy as np

from core.exceptions import ArgumentError, DivergenceError
from core.models import PointSet, SystemDef, TangentResult, Trajectory
from utils.parallel import parallel_map

logger = logging.getLogger("flow")

DIVERGENCE_THRESHOLD = 1e8


def _step_sizes(sys: SystemDef, duration: float, step: float) -> List[float]:
    """Splits ``duration`` into full steps plus one short final step (flows only)."""
    if duration < 0:
        raise ArgumentError("time must be >= 0", t=duration)
    if not sys.is_flow:
        if abs(duration - round(duration)) > 1e-9:
            raise ArgumentError("map systems need an integer number of iterations", t=duration)
        return [1.0] * int(round(duration))
    if step <= 0:
        raise ArgumentError("step must be > 0", step=step)
    n_full = int(math.floor(duration / step + 1e-9))
    sizes = [step] * n_full
    rest = duration - n_full * step
    if rest > 1e-9 * step:
        sizes.append(rest)
    return sizes


def _rk4(field, x: np.ndarray, h: float) -> np.ndarray:
    k1 = field(x)
    k2 = field(x + 0.5 * h * k1)
    k3 = field(x + 0.5 * h * k2)
    k4 = field(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _advance(sys: SystemDef, x: np.ndarray, h: float) -> np.ndarray:
    return _rk4(sys.field, x, h) if sys.is_flow else sys.field(x)


def _rk4_variational(sys: SystemDef, x: np.ndarray, y: np.ndarray, h: float):
    """One RK4 step of (x, Y) for x' = f(x), Y' = J(x) Y; x is (B, n), Y is (B, n, n)."""
    f, jac = sys.field, sys.jacobian
    k1x, k1y = f(x), jac(x) @ y
    x2, y2 = x + 0.5 * h * k1x, y + 0.5 * h * k1y
    k2x, k2y = f(x2), jac(x2) @ y2
    x3, y3 = x + 0.5 * h * k2x, y + 0.5 * h * k2y
    k3x, k3y = f(x3), jac(x3) @ y3
    x4, y4 = x + h * k3x, y + h * k3y
    k4x, k4y = f(x4), jac(x4) @ y4
    return (
        x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        y + (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
    )


def _diverged_rows(x: np.ndarray, threshold: float) -> np.ndarray:
    bad = ~np.all(np.isfinite(x), axis=-1)
    with np.errstate(invalid="ignore"):
        bad |= np.any(np.abs(x) > threshold, axis=-1)
    return np.flatnonzero(bad)


def _raise_divergence(last: np.ndarray, rows: np.ndarray, time: float, batched: bool):
    row = int(rows[0])
    error = DivergenceError(
        f"trajectory diverged at t={time:g}", last_state=last[row].tolist(), last_time=time
    )
    raise error.for_sample(row) if batched else error


def _check_state(sys: SystemDef, x0) -> np.ndarray:
    state = np.asarray(x0, dtype=float)
    if state.shape[-1:] != (sys.state_dim,):
        raise ArgumentError(
            f"initial state has dimension {state.shape[-1:]}, expected {sys.state_dim}",
            expected=sys.state_dim,
        )
    return state


def integrate(
    sys: SystemDef,
    x0: Sequence[float],
    t: float,
    step: float = 1e-3,
    record_every: int = 1,
    threshold: float = DIVERGENCE_THRESHOLD,
) -> Trajectory:
    """
    Integrates a flow with RK4 (or iterates a map) from x0 over [0, t].

    Args:
        sys: system
        x0: initial state
        t: duration (iteration count for maps; ``step`` is then ignored)
        step: RK4 step
        record_every: keep every k-th state (the final state is always kept)
        threshold: any |component| above it aborts with DivergenceError

    Returns:
        Trajectory with times[0] = 0 and times[-1] = t
    """
    x = _check_state(sys, x0).reshape(1, -1)
    sizes = _step_sizes(sys, t, step)
    times, states = [0.0], [x[0].copy()]
    clock = 0.0
    for i, h in enumerate(sizes, start=1):
        nxt = _advance(sys, x, h)
        clock += h
        rows = _diverged_rows(nxt, threshold)
        if rows.size:
            logger.error("Расходимость траектории %s при t=%g", sys.name, clock)
            _raise_divergence(x, rows, clock, batched=False)
        x = nxt
        if i % record_every == 0 or i == len(sizes):
            times.append(clock)
            states.append(x[0].copy())
    if sizes:
        times[-1] = float(t)
    return Trajectory(times=np.asarray(times), states=np.asarray(states))


def advance_batch(
    sys: SystemDef,
    xs: np.ndarray,
    duration: float,
    step: float = 1e-3,
    threshold: float = DIVERGENCE_THRESHOLD,
) -> np.ndarray:
    """Advances a stack of states ``(B, n)`` by ``duration``; returns the final states."""
    x = np.atleast_2d(_check_state(sys, xs)).copy()
    clock = 0.0
    for h in _step_sizes(sys, duration, step):
        nxt = _advance(sys, x, h)
        clock += h
        rows = _diverged_rows(nxt, threshold)
        if rows.size:
            _raise_divergence(x, rows, clock, batched=True)
        x = nxt
    return x


def _tangent_sweep(
    sys: SystemDef,
    x0s: np.ndarray,
    checkpoints: Sequence[float],
    step: float,
    reorth_every: int,
    threshold: float,
):
    """
    Co-integrates (x, Y) for a batch and snapshots the sorted log-spectra at
    each checkpoint time.

    Returns:
        (logs, states): arrays (C, B, n) and (C, B, n)
    """
    if reorth_every < 1:
        raise ArgumentError("reorth_every must be >= 1", reorth_every=reorth_every)
    x = np.atleast_2d(x0s).astype(float).copy()
    batch, n = x.shape
    y = np.broadcast_to(np.eye(n), (batch, n, n)).copy()
    acc = np.zeros((batch, n))
    snapshots, finals = [], []
    clock, since_qr, done = 0.0, 0, 0.0

    def reorthonormalize():
        nonlocal y, acc, since_qr
        q, r = np.linalg.qr(y)
        with np.errstate(divide="ignore"):
            acc = acc + np.log(np.abs(np.diagonal(r, axis1=-2, axis2=-1)))
        y = q
        since_qr = 0

    for target in checkpoints:
        if target < done:
            raise ArgumentError("checkpoints must be increasing", checkpoints=list(checkpoints))
        for h in _step_sizes(sys, target - done, step):
            if sys.is_flow:
                nx, ny = _rk4_variational(sys, x, y, h)
            else:
                nx, ny = sys.field(x), sys.jacobian(x) @ y
            clock += h
            rows = _diverged_rows(nx, threshold)
            if rows.size:
                _raise_divergence(x, rows, clock, batched=True)
            x, y = nx, ny
            since_qr += 1
            if since_qr >= reorth_every:
                reorthonormalize()
        done = target
        if since_qr:
            reorthonormalize()
        snapshots.append(-np.sort(-acc, axis=-1))
        finals.append(x.copy())
    return np.asarray(snapshots), np.asarray(finals)


def tangent_map_batch(
    sys: SystemDef,
    x0s,
    t: float,
    step: float = 1e-3,
    reorth_every: int = 10,
    threshold: float = DIVERGENCE_THRESHOLD,
    workers: int = 1,
) -> List[TangentResult]:
    """
    Tangent maps T_{x0} F^t for a stack of initial states.

    Args:
        sys: system
        x0s: initial states, shape (B, n)
        t: horizon (iteration count for maps)
        step: RK4 step
        reorth_every: steps between QR re-orthonormalizations
        threshold: divergence threshold
        workers: number of threads; the batch is split into contiguous chunks

    Returns:
        One TangentResult per initial state, in input order

    Raises:
        DivergenceError: tagged with the index of the failing sample
    """
    starts = np.atleast_2d(_check_state(sys, x0s))
    sweeps = tangent_sweep_batch(sys, starts, [t], step, reorth_every, threshold, workers)
    logs, finals = sweeps[0][0], sweeps[1][0]
    return [
        TangentResult(
            x0=tuple(float(v) for v in starts[i]),
            t=float(t),
            log_svals=tuple(float(v) for v in logs[i]),
            final_state=tuple(float(v) for v in finals[i]),
        )
        for i in range(starts.shape[0])
    ]


def tangent_sweep_batch(
    sys: SystemDef,
    x0s: np.ndarray,
    checkpoints: Sequence[float],
    step: float = 1e-3,
    reorth_every: int = 10,
    threshold: float = DIVERGENCE_THRESHOLD,
    workers: int = 1,
):
    """Chunked, optionally threaded ``_tangent_sweep``; sample indices stay global."""
    starts = np.atleast_2d(np.asarray(x0s, dtype=float))
    bounds = np.linspace(0, starts.shape[0], min(workers, starts.shape[0]) + 1).astype(int)
    chunks = [(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]

    def run(chunk):
        lo, hi = chunk
        try:
            return _tangent_sweep(sys, starts[lo:hi], checkpoints, step, reorth_every, threshold)
        except DivergenceError as e:
            local = e.sample_index or 0
            raise DivergenceError(
                f"sample {lo + local}: trajectory diverged at t={e.last_time:g}",
                e.last_state,
                e.last_time,
                sample_index=lo + local,
            ) from e

    parts = parallel_map(run, chunks, workers)
    logs = np.concatenate([p[0] for p in parts], axis=1)
    finals = np.concatenate([p[1] for p in parts], axis=1)
    return logs, finals


def tangent_map(
    sys: SystemDef,
    x0: Sequence[float],
    t: float,
    step: float = 1e-3,
    reorth_every: int = 10,
    threshold: float = DIVERGENCE_THRESHOLD,
) -> TangentResult:
    """
    Finite-time tangent map data for a single initial state.

    At t = 0 the log singular values are all zero.
    """
    state = _check_state(sys, x0)
    if state.ndim != 1:
        raise ArgumentError("tangent_map takes a single state; use tangent_map_batch")
    return tangent_map_batch(sys, state.reshape(1, -1), t, step, reorth_every, threshold)[0]


def lyapunov_spectrum(result: TangentResult) -> np.ndarray:
    """Finite-time Lyapunov exponents log_svals / t."""
    if result.t <= 0:
        raise ArgumentError("Lyapunov exponents need t > 0", t=result.t)
    return np.asarray(result.log_svals) / result.t


def sample_attractor(
    sys: SystemDef,
    n_points: int,
    warmup: float = 100.0,
    stride: float = 1.0,
    step: float = 1e-3,
    seed: int = 0,
    chains: int = 1,
    jitter: float = 1e-3,
    x0: Optional[Sequence[float]] = None,
    threshold: float = DIVERGENCE_THRESHOLD,
) -> PointSet:
    """
    Samples points on the attractor after discarding a transient.

    ``chains`` trajectories start at x0 (or the system default state) plus
    seeded Gaussian jitter, run for ``warmup`` and then record one point every
    ``stride`` until ``n_points`` are collected. Points are ordered by sampling
    round, then by chain.

    Args:
        sys: system
        n_points: number of points to return
        warmup: transient discarded before sampling
        stride: time (iterations for maps) between recorded points
        step: RK4 step
        seed: RNG seed for the jitter
        chains: number of parallel trajectories
        jitter: standard deviation of the initial jitter
        x0: base initial state

    Returns:
        PointSet of exactly n_points points
    """
    if n_points < 1 or chains < 1:
        raise ArgumentError("n_points and chains must be >= 1")
    if not sys.is_flow:
        warmup, stride = float(round(warmup)), float(max(1, round(stride)))
    base = np.asarray(x0 if x0 is not None else (sys.default_state or [1.0] * sys.state_dim))
    rng = np.random.default_rng(seed)
    chains = min(chains, n_points)
    x = base + rng.normal(scale=jitter, size=(chains, sys.state_dim))

    logger.info(
        "Сэмплирование аттрактора %s: %d точек, %d цепочек, warmup=%g",
        sys.name,
        n_points,
        chains,
        warmup,
    )
    x = advance_batch(sys, x, warmup, step, threshold)
    rounds = -(-n_points // chains)
    collected = []
    for _ in range(rounds):
        x = advance_batch(sys, x, stride, step, threshold)
        collected.append(x.copy())
    points = np.concatenate(collected, axis=0)[:n_points]
    return PointSet(points=points, label=f"{sys.name}-attractor-seed{seed}")
