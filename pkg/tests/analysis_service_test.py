import json

import pandas as pd
import pytest

from core.exceptions import ArgumentError, DependencyError
from core.models import AnalysisKind, RunConfig


def run_config(settings, analysis, **values):
    return RunConfig(analysis=analysis, out=settings.OUTPUT_DIR, **values)


@pytest.fixture
def service(services):
    return services.get_analysis_service()


@pytest.mark.asyncio
async def test_box_dim_on_square_grid(service, settings):
    """Плотная сетка квадрата: наклон 2, все артефакты записаны."""
    config = run_config(settings, AnalysisKind.BOX_DIM, system="square-grid", levels=3, ds=[2.0])
    response = await service.box_dim(config)

    assert response.fit.slope == pytest.approx(2.0)
    assert response.fit.r2 == pytest.approx(1.0)
    assert response.n_points == 81
    assert response.sampling_floor is None
    assert response.measure_limsup == {"2": pytest.approx(0.25)}
    counts = service.store.read_frame("counts.csv")
    assert counts["N"].tolist() == [1, 4, 16, 64]
    assert list(counts.columns) == ["eps", "side", "N", "N_eps_2"]
    assert service.store.exists("anchor-spread.csv")
    assert service.store.path("box-dim.svg").read_text(encoding="utf-8").lstrip().startswith("<?xml")
    assert service.store.read_json("box-dim.json")["fit"]["slope"] == pytest.approx(2.0)
    assert len(response.fit.anchors) == config.anchors
    assert response.fit.anchors[0] == (0.0, 0.0)
    assert service.store.read_json("box-dim.json")["fit"]["anchors"][0] == [0.0, 0.0]


@pytest.mark.asyncio
async def test_box_dim_on_cantor_set(service, settings):
    config = run_config(settings, AnalysisKind.BOX_DIM, system="cantor", levels=6, plot=False)
    response = await service.box_dim(config)
    assert response.fit.slope == pytest.approx(0.6309, abs=0.01)
    assert not service.store.exists("box-dim.svg")


@pytest.mark.asyncio
async def test_box_dim_on_map_attractor_uses_sampling_floor(service, settings):
    config = run_config(
        settings,
        AnalysisKind.BOX_DIM,
        system="henon",
        n_points=20_000,
        chains=20,
        warmup=100,
        eps_max=0.125,
        n_scales=5,
        plot=False,
    )
    response = await service.box_dim(config)
    assert response.sampling_floor is not None
    assert response.fit.eps_min >= response.sampling_floor
    assert 1.0 < response.fit.slope < 1.5


@pytest.mark.asyncio
async def test_simulate_uses_the_trajectory_cache(service, settings):
    config = run_config(settings, AnalysisKind.SIMULATE, system="henon", t=25)
    first = await service.simulate(config)
    again = await service.simulate(config)

    assert first.rows == 26
    assert first.final_time == 25.0
    assert not first.cached
    assert again.cached
    assert again.cache_key == first.cache_key
    assert again.final_state == first.final_state
    trajectory = service.store.read_frame("trajectory.csv")
    assert list(trajectory.columns) == ["t", "x1", "x2"]


@pytest.mark.asyncio
async def test_simulate_zero_time(service, settings):
    config = run_config(settings, AnalysisKind.SIMULATE, system="lorenz", t=0.0, x0=[1.0, 2.0, 3.0])
    response = await service.simulate(config)
    assert response.rows == 1
    assert response.final_state == [1.0, 2.0, 3.0]


@pytest.mark.asyncio
async def test_point_sets_are_not_dynamical_systems(service, settings):
    config = run_config(settings, AnalysisKind.LYAP_DIM, system="cantor")
    with pytest.raises(ArgumentError):
        await service.lyap_dim(config)


@pytest.mark.asyncio
async def test_lyap_dim_of_henon_map(service, settings):
    config = run_config(
        settings,
        AnalysisKind.LYAP_DIM,
        system="henon",
        samples=20,
        horizons=[5.0, 10.0],
        reorth_every=1,
    )
    response = await service.lyap_dim(config)

    assert 1.0 < response.dim < 1.6
    assert set(response.by_horizon) == {"5", "10"}
    assert response.dim == pytest.approx(max(response.by_horizon.values()))
    assert 1.0 < response.kaplan_yorke_mean < 1.5
    table = service.store.read_frame("lyap-dim.csv")
    assert len(table) == 40
    assert service.store.read_json("lyap-dim.json")["provenance"]["seed"] == 0


@pytest.mark.asyncio
async def test_lorenz_bound_with_given_a(service, settings):
    config = run_config(
        settings, AnalysisKind.LORENZ_BOUND, params={"b": 8.0 / 3.0}, a=0.829, warmup=2.0, t=1.0
    )
    response = await service.lorenz_bound(config)
    assert response.dim == pytest.approx(2.4013, abs=5e-4)
    assert response.hl_bound == pytest.approx(2.0572, abs=5e-4)
    assert response.a_estimate is None
    assert response.identity_residual <= 1e-4
    assert len(response.identity_x0) == 3
    assert response.hl_bound_reference.deviation == pytest.approx(0.0028, abs=5e-4)
    assert response.hl_bound_reference.within

    payload = service.store.read_json("lorenz-bound.json")
    assert payload["verdict"]["outcome"] == "Dim"
    assert payload["outcome"] == "Dim"
    assert payload["horizon"] == config.horizon
    assert payload["ratio"] == pytest.approx(response.ratio)
    assert payload["params"]["b"] == pytest.approx(8.0 / 3.0)
    assert payload["identity_residual"] == pytest.approx(response.identity_residual)
    assert payload["identity_t"] == 1.0
    assert payload["hl_bound_reference"]["reference"] == 2.06


@pytest.mark.asyncio
async def test_lorenz_bound_residual_at_given_point(service, settings):
    config = run_config(
        settings, AnalysisKind.LORENZ_BOUND, x0=[0.0, 0.0, 0.0], t=1.0, warmup=0.0
    )
    response = await service.lorenz_bound(config)
    assert response.identity_x0 == [0.0, 0.0, 0.0]
    assert response.identity_residual <= 1e-6
    assert response.hl_bound is None
    assert response.hl_bound_reference is None


@pytest.mark.asyncio
async def test_lorenz_bound_with_estimated_a(service, settings):
    config = run_config(
        settings,
        AnalysisKind.LORENZ_BOUND,
        estimate_a=True,
        samples=3,
        horizon=1.0,
        step=1e-2,
        warmup=20.0,
        stride=0.5,
        exclude_radius=1.0,
        t=1.0,
    )
    response = await service.lorenz_bound(config)
    assert response.a_estimate.n_samples == 3
    assert response.a_estimate.horizon == 1.0
    assert response.a_estimate.exclude_radius == 1.0
    assert response.a_estimate.equilibrium_distance >= 1.0
    assert response.hl_bound == pytest.approx(2.0 + response.a / (10.0 + 8.0 / 3.0 + 1.0 + response.a))
    assert response.hl_bound_reference.value == response.hl_bound


@pytest.mark.asyncio
async def test_lorenz_bound_without_a(service, settings):
    config = run_config(settings, AnalysisKind.LORENZ_BOUND, params={"r": 2.0}, warmup=2.0, t=1.0)
    response = await service.lorenz_bound(config)
    assert response.verdict.outcome.value == "Stable"
    assert response.dim is None
    assert response.hl_bound is None


@pytest.mark.asyncio
async def test_lorenz_bound_needs_lorenz(service, settings):
    with pytest.raises(ArgumentError):
        await service.lorenz_bound(run_config(settings, AnalysisKind.LORENZ_BOUND, system="henon"))


@pytest.mark.asyncio
async def test_stretch_reports_reference_comparison(service, settings):
    config = run_config(
        settings,
        AnalysisKind.STRETCH,
        taus=[0.5, 1.0],
        step=1e-2,
        resolution=1e-2,
        samples=3,
        horizon=1.0,
        warmup=5.0,
        plot=False,
    )
    response = await service.stretch(config)
    reference = service.store.read_json("stretch.json")["inf_rate_reference"]
    assert reference["reference"] == 0.788
    assert reference["tolerance"] == 0.15
    assert reference["value"] == pytest.approx(response.inf_rate.value)
    assert reference["within"] == (abs(response.inf_rate.value - 0.788) <= 0.15)
    assert response.inf_rate.equilibrium_distance is not None


@pytest.mark.asyncio
async def test_report_needs_prior_artifacts(service, settings):
    config = run_config(settings, AnalysisKind.REPORT, system="square-grid", levels=3)
    with pytest.raises(DependencyError) as info:
        await service.report(config)
    assert info.value.missing == "box-dim.json"


@pytest.mark.asyncio
async def test_report_on_point_set(service, settings):
    config = run_config(
        settings, AnalysisKind.REPORT, system="square-grid", levels=3, compute_missing=True
    )
    response = await service.report(config)

    entries = {e.name: e for e in response.entries}
    assert entries["box_dim_slope"].value == pytest.approx(2.0)
    assert entries["lyapunov_dim"].status == "not-applicable"
    assert 1.1 < entries["henon_lyapunov_dim"].value < 1.6
    assert entries["henon_measure_decay_ratio"].value < 1.0
    assert response.checks == []
    assert [row["m"] for row in response.measure_decay] == [0, 1, 2, 3, 4, 5]
    frame = pd.read_csv(service.store.path("report.csv"))
    assert frame["name"].tolist() == [e.name for e in response.entries]
    assert json.loads(frame["settings"].iloc[0])["system"] == "square-grid"


@pytest.mark.asyncio
async def test_report_is_byte_identical_for_identical_settings(service, settings):
    config = run_config(
        settings, AnalysisKind.REPORT, system="square-grid", levels=3, compute_missing=True
    )
    await service.report(config)
    first = service.store.path("report.json").read_bytes(), service.store.path("report.csv").read_bytes()
    await service.report(config)
    again = service.store.path("report.json").read_bytes(), service.store.path("report.csv").read_bytes()
    assert first == again


@pytest.mark.slow
@pytest.mark.asyncio
async def test_report_on_lorenz_passes_all_checks(service, settings):
    config = run_config(
        settings,
        AnalysisKind.REPORT,
        system="lorenz",
        compute_missing=True,
        samples=200,
        horizons=[10.0, 20.0],
        n_points=200_000,
        chains=2000,
        t=5.0,
        plot=False,
    )
    response = await service.report(config)

    entries = {e.name: e for e in response.entries}
    assert entries["lorenz_closed_form"].value == pytest.approx(2.4013, abs=5e-4)
    assert entries["identity_residual"].value <= 1e-4
    assert entries["hl_bound_reference_deviation"].status == "ok"
    assert entries["inf_rate_reference_deviation"].status == "ok"
    assert {c.name for c in response.checks} == {
        "box_dim <= lyapunov_dim",
        "lyapunov_dim <= closed_form",
        "box_dim <= closed_form",
        "hl_bound <= closed_form",
    }
    assert all(c.passed for c in response.checks)
