import math

import numpy as np
import pytest

from core.exceptions import ArgumentError, BudgetError, DivergenceError, InsufficientDataError
from core.models import Curve, PointSet
from services.dynsys import eval_field, linear_diag, lorenz
from services.flow import integrate
from services.lorenz_analysis import (
    REFERENCE_INF_RATE,
    REFERENCE_INF_RATE_TOLERANCE,
    attractor_samples,
    compare_to_reference,
    estimate_a,
)
from services.stretch import (
    curve_length,
    default_segment,
    evolve_curve,
    inf_alpha1_rate,
    length_growth,
    stretch_conditions,
    stretch_lower_bound,
)

HYPERBOLIC = linear_diag([1.0, -1.0])


def segment(length, resolution=1e-2):
    return Curve(points=[[0.0, 0.0], [length, 0.0]], resolution=resolution)


def test_curve_length_examples():
    assert curve_length(Curve(points=[[0.0, 0.0], [3.0, 4.0]], resolution=1.0)) == 5.0
    square = [[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]
    assert curve_length(Curve(points=square, resolution=1.0)) == 4.0
    with pytest.raises(ArgumentError):
        curve_length(Curve(points=[[1.0, 1.0]], resolution=1.0))


def test_default_parameterization_is_normalized_arc_length():
    curve = Curve(points=[[0.0, 0.0], [1.0, 0.0], [1.0, 3.0]], resolution=1.0)
    np.testing.assert_allclose(curve.t_param, [0.0, 0.25, 1.0])


def test_linear_stretching_along_expanding_axis():
    curve = evolve_curve(HYPERBOLIC, segment(0.5), 1.0)
    assert curve_length(curve) == pytest.approx(0.5 * math.e, abs=1e-6)
    gaps = np.linalg.norm(np.diff(curve.points, axis=0), axis=1)
    assert gaps.max() <= curve.resolution
    assert np.all(np.diff(curve.t_param) > 0)


@pytest.mark.parametrize("tau", [0.5, 1.0, 2.0, 3.0])
def test_linear_stretch_factor(tau):
    curve = evolve_curve(HYPERBOLIC, segment(0.1, 0.05), tau)
    assert curve_length(curve) / 0.1 == pytest.approx(math.exp(tau), rel=1e-5)


def test_zero_time_leaves_curve_unchanged():
    original = segment(0.5)
    evolved = evolve_curve(HYPERBOLIC, original, 0.0)
    np.testing.assert_array_equal(evolved.points, original.points)
    with pytest.raises(ArgumentError):
        evolve_curve(HYPERBOLIC, original, -1.0)


def test_refinement_never_shortens_the_image(lorenz_standard):
    start = default_segment(length=0.05, resolution=0.5)
    coarse = evolve_curve(lorenz_standard, start, 0.5, step=1e-2)
    fine = evolve_curve(lorenz_standard, start.model_copy(update={"resolution": 0.05}), 0.5, step=1e-2)
    assert fine.points.shape[0] >= coarse.points.shape[0]
    assert curve_length(fine) >= curve_length(coarse) * (1.0 - 1e-12)


def test_vertex_budget_is_enforced():
    with pytest.raises(BudgetError) as info:
        evolve_curve(HYPERBOLIC, segment(1.0, 1e-3), 1.0, budget=50)
    assert info.value.exit_code == 4


def test_evolve_curve_with_threads_matches_serial():
    serial = evolve_curve(HYPERBOLIC, segment(0.5), 1.0, workers=1)
    threaded = evolve_curve(HYPERBOLIC, segment(0.5), 1.0, workers=3)
    np.testing.assert_allclose(threaded.points, serial.points, rtol=1e-12)
    np.testing.assert_array_equal(threaded.t_param, serial.t_param)


def test_default_segment_is_transverse_to_the_flow():
    curve = default_segment()
    assert curve.points.shape == (11, 3)
    assert curve_length(curve) == pytest.approx(0.1)
    direction = curve.points[-1] - curve.points[0]
    velocity = eval_field(lorenz(), [-10.0, -10.0, 25.0])
    assert abs(np.dot(direction, velocity)) <= 1e-9 * np.linalg.norm(velocity)


def test_length_growth_rate_of_linear_flow():
    curves, fit = length_growth(HYPERBOLIC, segment(0.1, 0.05), [1.0, 2.0, 3.0])
    assert len(curves) == 3
    assert fit.rate == pytest.approx(1.0, abs=1e-6)
    assert fit.r2 == pytest.approx(1.0)
    assert fit.lengths == pytest.approx([0.1 * math.exp(t) for t in (1.0, 2.0, 3.0)], rel=1e-5)
    with pytest.raises(InsufficientDataError):
        length_growth(HYPERBOLIC, segment(0.1), [1.0])


def test_inf_rate_of_linear_stand_in():
    samples = PointSet(points=[[1.0, 1.0], [0.3, -2.0]])
    system = linear_diag([0.5, -1.0])
    estimate = inf_alpha1_rate(0, 0, 0, 2, 3.0, system=system, samples=samples)
    assert estimate.value == pytest.approx(0.5, abs=1e-6)
    assert estimate.reduction == "min"
    with pytest.raises(ArgumentError):
        inf_alpha1_rate(0, 0, 0, 2, 0.0, system=system, samples=samples)


def test_inf_rate_never_exceeds_sup_rate(lorenz_standard, rng):
    start = integrate(lorenz_standard, [1.0, 1.0, 1.0], 10.0, step=1e-2).final_state
    samples = PointSet(points=start + rng.normal(scale=1.0, size=(8, 3)))
    low = inf_alpha1_rate(0, 0, 0, 8, 1.0, step=1e-2, system=lorenz_standard, samples=samples)
    high = estimate_a(0, 0, 0, 8, 1.0, step=1e-2, system=lorenz_standard, samples=samples)
    assert low.value <= high.value


def test_stretch_lower_bound_examples():
    assert stretch_lower_bound(1.0, 8.0, 1, 2) == pytest.approx(8.0 / (2.0 * math.sqrt(2.0)))
    assert stretch_lower_bound(1.0, 24.0, 1, 2) == pytest.approx(3 * stretch_lower_bound(1.0, 8.0, 1, 2))
    assert stretch_lower_bound(3.0, 2.0, 1, 1) == pytest.approx(3.0)
    assert stretch_lower_bound(1.0, 1.0, 2, 3) == pytest.approx(1.0 / (4.0 * 3.0))


@pytest.mark.parametrize("nu, R, k, n", [(0.0, 1.0, 1, 2), (1.0, -1.0, 1, 2), (1.0, 1.0, 0, 2), (1.0, 1.0, 3, 2)])
def test_stretch_lower_bound_domain(nu, R, k, n):
    with pytest.raises(ArgumentError):
        stretch_lower_bound(nu, R, k, n)


def test_stretch_conditions_on_hyperbolic_flow():
    samples = PointSet(points=[[1.0, 1.0], [-2.0, 0.5]])
    check = stretch_conditions(HYPERBOLIC, samples, 1, 1.0)
    assert check.gap_holds and check.omega_grows
    assert check.min_gap == pytest.approx(math.e - 2.0 / math.e, abs=1e-5)
    assert check.min_log_omega == pytest.approx(1.0, abs=1e-6)
    assert check.n_samples == 2
    with pytest.raises(ArgumentError):
        stretch_conditions(HYPERBOLIC, samples, 2, 1.0)


def test_stretch_conditions_fail_for_contraction():
    samples = PointSet(points=[[1.0, 1.0]])
    check = stretch_conditions(linear_diag([-0.5, -1.0]), samples, 1, 1.0)
    assert not check.omega_grows


def test_stretch_conditions_honor_threshold():
    samples = PointSet(points=[[1.0, 1.0]])
    with pytest.raises(DivergenceError):
        stretch_conditions(HYPERBOLIC, samples, 1, 6.0, threshold=100.0)


def test_inf_rate_passes_sampling_settings():
    settings = dict(step=1e-2, warmup=5.0, stride=0.5, x0=[2.0, 1.0, 20.0])
    samples = attractor_samples(lorenz(), 4, seed=2, **settings)
    direct = inf_alpha1_rate(10.0, 28.0, 8.0 / 3.0, 4, 1.0, samples=samples, step=1e-2, reorth_every=2)
    sampled = inf_alpha1_rate(10.0, 28.0, 8.0 / 3.0, 4, 1.0, seed=2, reorth_every=2, **settings)
    assert sampled.value == pytest.approx(direct.value, rel=1e-12)
    assert sampled.equilibrium_distance == pytest.approx(direct.equilibrium_distance, rel=1e-12)


@pytest.mark.slow
def test_lorenz_segment_grows_exponentially(lorenz_standard):
    _, fit = length_growth(
        lorenz_standard, default_segment(), [1.0, 2.0, 3.0, 4.0, 5.0], step=1e-3, workers=2
    )
    assert fit.rate >= 0.7
    assert all(a < b for a, b in zip(fit.lengths, fit.lengths[1:]))


@pytest.mark.slow
@pytest.mark.parametrize("b, low, high", [(8.0 / 3.0, 0.5, REFERENCE_INF_RATE), (2.0 / 3.0, -1.0, 0.638)])
def test_inf_rate_at_published_settings(b, low, high):
    # tau=20, 200 выборок; сравнение с 0.788 +- 0.15
    samples = attractor_samples(lorenz(10.0, 28.0, b), 200, seed=0, step=1e-3)
    inf = inf_alpha1_rate(10.0, 28.0, b, 200, 20.0, step=1e-3, samples=samples, workers=2)
    sup = estimate_a(10.0, 28.0, b, 200, 20.0, step=1e-3, samples=samples, workers=2)
    assert inf.n_samples == 200
    assert low < inf.value < high
    assert inf.value <= sup.value
    comparison = compare_to_reference(
        "inf_alpha1_rate", inf.value, REFERENCE_INF_RATE, REFERENCE_INF_RATE_TOLERANCE
    )
    assert comparison.within == (abs(inf.value - REFERENCE_INF_RATE) <= REFERENCE_INF_RATE_TOLERANCE)
