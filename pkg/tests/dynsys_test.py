import numpy as np
import pytest

from core.exceptions import ArgumentError
from core.models import SystemKind
from services.dynsys import (
    HENON_STANDARD,
    check_jacobian,
    eval_field,
    eval_jacobian,
    fractal_points,
    get_system,
    henon,
    linear_diag,
    lorenz,
    system_names,
)


def test_lorenz_field_at_unit_state(lorenz_standard):
    value = eval_field(lorenz_standard, [1.0, 1.0, 1.0])
    np.testing.assert_allclose(value, [0.0, 26.0, 1.0 - 8.0 / 3.0])


def test_lorenz_field_is_batched(lorenz_standard, rng):
    states = rng.normal(size=(7, 3)) * 10
    stacked = eval_field(lorenz_standard, states)
    single = np.array([eval_field(lorenz_standard, x) for x in states])
    np.testing.assert_allclose(stacked, single)
    assert eval_jacobian(lorenz_standard, states).shape == (7, 3, 3)


@pytest.mark.parametrize("system", [lorenz(), lorenz(10.0, 28.0, 2.0 / 3.0), henon()])
def test_jacobian_matches_finite_differences(system, rng):
    for _ in range(100):
        x = rng.normal(size=system.state_dim) * 5
        assert check_jacobian(system, x) < 1e-6


def test_henon_jacobian_determinant_is_minus_b(rng):
    system = henon()
    for x in rng.normal(size=(10, 2)):
        assert np.linalg.det(eval_jacobian(system, x)) == pytest.approx(-HENON_STANDARD["b"])


@pytest.mark.parametrize("sigma, r, b", [(10.0, 28.0, 8.0 / 3.0), (16.0, 40.0, 4.0), (10.0, 28.0, 2.0 / 3.0)])
def test_lorenz_jacobian_trace_is_constant(sigma, r, b, rng):
    states = rng.normal(size=(100, 3)) * 20
    traces = np.trace(eval_jacobian(lorenz(sigma, r, b), states), axis1=-2, axis2=-1)
    np.testing.assert_allclose(traces, -(sigma + b + 1.0), rtol=1e-12)


def test_lorenz_origin_is_equilibrium(lorenz_standard):
    np.testing.assert_array_equal(eval_field(lorenz_standard, [0.0, 0.0, 0.0]), [0.0, 0.0, 0.0])


def test_lorenz_out_of_range_parameters_only_warn():
    system = lorenz(10.0, 0.5, 8.0 / 3.0)
    assert system.warnings
    assert "r=0.5" in system.warnings[0]
    assert lorenz().warnings == []


def test_state_dimension_mismatch_is_rejected(lorenz_standard):
    with pytest.raises(ArgumentError):
        eval_field(lorenz_standard, [1.0, 2.0])
    with pytest.raises(ArgumentError):
        eval_jacobian(lorenz_standard, np.zeros((4, 2)))


def test_catalog_lookup_with_overrides():
    system = get_system("lorenz", {"r": 20.0})
    assert system.params == {"sigma": 10.0, "r": 20.0, "b": 8.0 / 3.0}
    assert get_system("henon").kind == SystemKind.MAP
    assert set(system_names()) >= {"lorenz", "henon", "linear-diag", "linear-diag-map"}


def test_catalog_linear_diag_from_params():
    system = get_system("linear-diag-map", {"d2": -1.0, "d1": 0.5})
    assert system.kind == SystemKind.MAP
    np.testing.assert_allclose(eval_jacobian(system, [0.0, 0.0]), np.diag([0.5, -1.0]))


def test_catalog_errors():
    with pytest.raises(ArgumentError):
        get_system("rossler")
    with pytest.raises(ArgumentError):
        get_system("lorenz", {"rho": 1.0})
    with pytest.raises(ArgumentError):
        get_system("linear-diag", {})


def test_linear_diag_field():
    system = linear_diag([1.0, -1.0])
    np.testing.assert_allclose(eval_field(system, [2.0, 3.0]), [2.0, -3.0])


@pytest.mark.parametrize(
    "kind, level, count, dim",
    [
        ("cantor", 5, 2**5, 1),
        ("sierpinski", 4, 3**4, 2),
        ("square", 3, 81, 2),
        ("interval", 4, 17, 1),
    ],
)
def test_fractal_point_counts(kind, level, count, dim):
    points = fractal_points(kind, level)
    assert len(points) == count
    assert points.n == dim
    assert points.points.min() >= 0.0
    assert points.points.max() <= 1.0


def test_cantor_points_avoid_removed_middle_thirds():
    x = fractal_points("cantor", 6).points[:, 0]
    assert not np.any((x > 1.0 / 3.0) & (x < 2.0 / 3.0))
    assert np.all(np.abs(x * 3**6 - np.rint(x * 3**6)) < 1e-9)


def test_sierpinski_points_lie_in_triangle():
    pts = fractal_points("sierpinski", 5).points
    assert np.all(pts.sum(axis=1) < 1.0)
    ij = np.rint(pts * 2**5).astype(int)
    assert np.all((ij[:, 0] & ij[:, 1]) == 0)


def test_fractal_points_pad_ambient_dimension():
    points = fractal_points("cantor", 3, n=3)
    assert points.n == 3
    np.testing.assert_array_equal(points.points[:, 1:], 0.0)
    with pytest.raises(ArgumentError):
        fractal_points("square", 2, n=1)


def test_fractal_points_errors():
    with pytest.raises(ArgumentError):
        fractal_points("koch", 2)
    with pytest.raises(ArgumentError):
        fractal_points("cantor", -1)


def test_level_zero_sets():
    assert len(fractal_points("cantor", 0)) == 1
    assert len(fractal_points("square", 0)) == 4


@pytest.mark.parametrize("kind, level", [("cantor", 6), ("sierpinski", 5), ("square", 4), ("interval", 7)])
def test_fractal_points_are_deterministic(kind, level):
    first = fractal_points(kind, level)
    again = fractal_points(kind, level)
    np.testing.assert_array_equal(first.points, again.points)
    assert first.label == again.label
