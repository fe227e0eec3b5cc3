"""
Module for singular values and Lyapunov dimensions.

All dimension computations run on log-domain spectra, since long-horizon
tangent maps under- and overflow in the linear domain; the linear-domain
helpers are thin wrappers.
"""

import logging
import math
from typing import List, Sequence

import numpy as np
import pandas as pd

from core.exceptions import ArgumentError, UnboundedError
from core.models import (
    ContractionCheck,
    LocalDim,
    LyapunovDimResult,
    PointSet,
    SingularSpectrum,
    SystemDef,
)
from services.flow import DIVERGENCE_THRESHOLD, tangent_sweep_batch

logger = logging.getLogger("spectra")

JACOBI_MAX_N = 4
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 60


def _jacobi_singular_values(a: np.ndarray) -> np.ndarray:
    """
    One-sided Jacobi: plane rotations of the columns of A until they are
    mutually orthogonal, which diagonalizes A^T A without forming it.
    """
    m = a.astype(float).copy()
    n = m.shape[1]
    for _ in range(JACOBI_MAX_SWEEPS):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                alpha = float(m[:, i] @ m[:, i])
                beta = float(m[:, j] @ m[:, j])
                gamma = float(m[:, i] @ m[:, j])
                if abs(gamma) <= JACOBI_TOL * math.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                tan = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                cos = 1.0 / math.sqrt(1.0 + tan * tan)
                sin = cos * tan
                ci, cj = m[:, i].copy(), m[:, j].copy()
                m[:, i] = cos * ci - sin * cj
                m[:, j] = sin * ci + cos * cj
        if not rotated:
            break
    else:
        logger.warning("Jacobi SVD did not converge in %d sweeps", JACOBI_MAX_SWEEPS)
    return np.sort(np.linalg.norm(m, axis=0))[::-1]


def singular_values(matrix) -> SingularSpectrum:
    """
    Descending singular values of a square or rectangular matrix.

    Args:
        matrix: finite real matrix

    Returns:
        SingularSpectrum
    """
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    if a.ndim != 2 or not np.all(np.isfinite(a)):
        raise ArgumentError("matrix must be a finite 2-D array")
    if a.shape[1] <= JACOBI_MAX_N:
        svals = _jacobi_singular_values(a)
    else:
        svals = np.linalg.svd(a, compute_uv=False)
    return SingularSpectrum.from_values(svals)


def _split_d(d: float, n: int):
    if not 0 < d <= n:
        raise ArgumentError(f"d must lie in (0, {n}]", d=d)
    k = math.ceil(d) - 1
    return k, d - k


def log_omega_d(spec: SingularSpectrum, d: float) -> float:
    """log of omega_d = alpha_1 ... alpha_k alpha_{k+1}^s, d = k + s, k = ceil(d) - 1."""
    logs = spec.log_svals
    k, s = _split_d(d, spec.n)
    head = math.fsum(logs[:k])
    tail = logs[k]
    if tail == -math.inf:
        return -math.inf
    return head + s * tail


def omega_d(spec: SingularSpectrum, d: float) -> float:
    """Singular value function omega_d in the linear domain."""
    return math.exp(log_omega_d(spec, d))


def local_lyapunov_dim(spec: SingularSpectrum) -> LocalDim:
    """
    Local Lyapunov dimension j + s of a spectrum.

    - alpha_1 < 1 gives 0
    - alpha_1 ... alpha_n >= 1 gives n
    - otherwise j is the largest index with alpha_1 ... alpha_j >= 1 and s solves
      alpha_1 ... alpha_j alpha_{j+1}^s = 1; a zero alpha_{j+1} gives s = 0

    Args:
        spec: singular spectrum

    Returns:
        LocalDim
    """
    logs = spec.log_svals
    n = spec.n
    if logs[0] < 0:
        return LocalDim(j=0, s=0.0)
    partial = np.cumsum(logs)
    if partial[-1] >= 0:
        return LocalDim(j=n, s=0.0)
    j = int(np.flatnonzero(partial >= 0)[-1]) + 1
    nxt = logs[j]
    if nxt == -math.inf:
        return LocalDim(j=j, s=0.0)
    s = -float(partial[j - 1]) / nxt
    return LocalDim(j=j, s=min(max(s, 0.0), 1.0))


def kaplan_yorke_dim(exponents: Sequence[float]) -> float:
    """Lyapunov dimension from an exponent spectrum (sorted internally)."""
    ordered = sorted((float(e) for e in exponents), reverse=True)
    return local_lyapunov_dim(SingularSpectrum(log_svals=tuple(ordered))).value


def lyapunov_dim_on_set(
    sys: SystemDef,
    samples: PointSet,
    horizons: Sequence[float],
    step: float = 1e-3,
    reorth_every: int = 10,
    threshold: float = DIVERGENCE_THRESHOLD,
    workers: int = 1,
) -> LyapunovDimResult:
    """
    Lyapunov dimension of the maps F^t on a finite sample set.

    For every sample and horizon the local dimension of T_x F^t is computed;
    the result is the max over samples at the largest horizon, and the full
    (sample x horizon) table is returned for convergence checks.

    Args:
        sys: system
        samples: points on the set
        horizons: strictly increasing horizons
        step: RK4 step
        reorth_every: QR period
        threshold: divergence threshold
        workers: threads for the sample sweep

    Returns:
        LyapunovDimResult
    """
    horizons = [float(h) for h in horizons]
    if not horizons or any(a >= b for a, b in zip(horizons, horizons[1:])):
        raise ArgumentError("horizons must be non-empty and increasing", horizons=horizons)
    if samples.n != sys.state_dim:
        raise ArgumentError("sample dimension does not match the system", n=samples.n)

    logger.info(
        "Размерность Ляпунова: %d точек, горизонты %s", len(samples), horizons
    )
    logs, _ = tangent_sweep_batch(
        sys, samples.points, horizons, step, reorth_every, threshold, workers
    )
    rows = []
    for h_index, horizon in enumerate(horizons):
        for i in range(len(samples)):
            local = local_lyapunov_dim(
                SingularSpectrum(log_svals=tuple(float(v) for v in logs[h_index, i]))
            )
            rows.append(
                {"sample_index": i, "horizon": horizon, "j": local.j, "s": local.s,
                 "dim": local.value}
            )
    table = pd.DataFrame(rows, columns=["sample_index", "horizon", "j", "s", "dim"])
    final = table[table["horizon"] == horizons[-1]]
    return LyapunovDimResult(
        value=float(final["dim"].max()),
        n_samples=len(samples),
        horizons=horizons,
        table=table,
        final_logs=logs[-1],
    )


def contraction_check(spectra: Sequence[SingularSpectrum], d: float) -> ContractionCheck:
    """
    sup over samples of log omega_d; the sufficient condition for dim <= d
    holds when it is negative.
    """
    if not spectra:
        raise ArgumentError("need at least one spectrum")
    sup = max(log_omega_d(spec, d) for spec in spectra)
    return ContractionCheck(d=d, sup_log_omega=sup, satisfied=sup < 0)


def contraction_iterate(nu: float, d: float, n: int) -> int:
    """
    Smallest natural p with sqrt(n) nu^(p/d) <= 1 and 2^k n^(d/2) nu^p < 1/4,
    k = ceil(d) - 1, for a contraction bound sup omega_d(T_x F) <= nu < 1.

    Raises:
        UnboundedError: nu >= 1, no such p exists
    """
    if not 0 < nu < 1:
        if nu >= 1:
            raise UnboundedError("nu >= 1: the contraction condition never holds", nu=nu)
        raise ArgumentError("nu must be positive", nu=nu)
    k, _ = _split_d(d, n)
    log_nu = math.log(nu)
    p_side = 0.5 * math.log(n) * d / -log_nu
    p_count = (math.log(4.0) + k * math.log(2.0) + 0.5 * d * math.log(n)) / -log_nu
    p = max(1, math.ceil(p_side - 1e-12), math.floor(p_count) + 1)
    return int(p)


def spectra_from_logs(logs: np.ndarray) -> List[SingularSpectrum]:
    return [SingularSpectrum(log_svals=tuple(float(v) for v in row)) for row in np.atleast_2d(logs)]
