import dataclasses

import numpy as np
import pytest

from rcspatial.data import SiteGrid, gen_synthetic, make_split
from rcspatial.errors import ConfigError
from rcspatial.experiment import (
    ExperimentConfig,
    MemoryStore,
    build_models,
    run_single,
    run_sweep,
)
from rcspatial.pipeline import predict_esn, predict_var, score_historical_average

OFFSETS = (-6.0, -2.0, 2.0, 6.0)


@pytest.fixture(scope="module")
def field():
    grid = SiteGrid.cross((35.0, 139.0), lon_offsets=OFFSETS)
    return gen_synthetic(grid, driver_seed=2, lag_per_degree=0.5, years=7, start_year=2015)


def cfg(**kw):
    base = dict(variable="synthetic", sweep_axis="longitude", offsets=OFFSETS, years=(2020, 2021), n_reservoir=100)
    base.update(kw)
    return ExperimentConfig(**base)


def test_self_prediction_beats_baseline(field):
    out = run_single(cfg(n_reservoir=400), 0.0, 2021, MemoryStore(field))
    by = {r.method: r for r in out.records}
    assert by["esn"].io_correlation == 1.0
    assert by["esn"].nrmse_target < 0.3 * by["historical_average"].nrmse_target
    assert [f.method for f in out.failures] == ["var"]  # identical channels are collinear
    assert out.failures[0].error == "CollinearRegressors"


def test_historical_average_record_is_definitional(field):
    c = cfg()
    out = run_single(c, 2.0, 2021, MemoryStore(field))
    ha = next(r for r in out.records if r.method == "historical_average")
    sp = make_split(field[(35.0, 141.0)], field[(35.0, 139.0)], 2021)
    assert (ha.nrmse, ha.nrmse_target) == score_historical_average(sp)


def test_test_phase_ignores_target_channel(field):
    c = cfg()
    res = build_models(c)["esn"]
    sp = make_split(field[(35.0, 137.0)], field[(35.0, 139.0)], 2021)
    y_test = np.array(sp.y_test)
    y_test[1] = 1e3 * np.random.default_rng(0).standard_normal(y_test.shape[1])
    bad = dataclasses.replace(sp, y_test=y_test)
    assert np.array_equal(predict_esn(res, 1.0, sp), predict_esn(res, 1.0, bad))
    assert np.array_equal(predict_var(sp)[0], predict_var(bad)[0])


def test_single_offset_sweep_reduces_to_run_single(field):
    c = cfg(offsets=(2.0,), years=(2021,))
    rep = run_sweep(c, MemoryStore(field))
    direct = run_single(c, 2.0, 2021, MemoryStore(field)).records + run_single(c, 0.0, 2021, MemoryStore(field)).records
    assert sorted(rep.records, key=lambda r: r.sort_key) == sorted(direct, key=lambda r: r.sort_key)


def test_every_record_has_one_cell(field):
    rep = run_sweep(cfg(), MemoryStore(field))
    keys = [(r.method, r.offset, r.year) for r in rep.records] + [(f.method, f.offset, f.year) for f in rep.failures]
    assert len(keys) == len(set(keys)) == 3 * 5 * 2


def test_missing_site_is_isolated(field):
    partial = {k: v for k, v in field.items() if k != (35.0, 145.0)}
    rep = run_sweep(cfg(), MemoryStore(partial))
    assert {f.offset for f in rep.failures if f.error == "MissingSeries"} == {6.0}
    assert any(r.offset == -6.0 and r.method == "esn" for r in rep.records)


def test_parallel_matches_serial(field):
    serial = run_sweep(cfg(), MemoryStore(field))
    parallel = run_sweep(cfg(workers=2), MemoryStore(field))
    assert serial.records == parallel.records
    assert serial.failures == parallel.failures


def test_variants_run(field):
    c = cfg(methods=("esn", "li_esn", "dts_esn"), years=(2021,), offsets=(2.0,))
    rep = run_sweep(c, MemoryStore(field))
    scores = {r.method: r.nrmse_target for r in rep.records if r.offset == 2.0}
    assert set(scores) == {"esn", "li_esn", "dts_esn", "historical_average"}
    assert all(0 < v < 2 for v in scores.values())


def test_config_validation_and_round_trip():
    c = cfg(esn=None)
    assert ExperimentConfig.from_dict(c.to_dict()) == c
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"bogus": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig(variable="humidity")
    with pytest.raises(ConfigError):
        ExperimentConfig(methods=("esn", "lstm"))
    with pytest.raises(ConfigError):
        ExperimentConfig(years=())
    assert ExperimentConfig(sweep_extent=3).sweep_offsets() == [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]
    assert ExperimentConfig(target_lat=80, sweep_extent=15).sweep_offsets()[-1] == 10.0
    lon = ExperimentConfig(sweep_axis="longitude", target_lon=175)
    assert lon.obs_location(10.0) == (35.0, -175.0)


def test_defaults_match_calibrated_settings():
    c = ExperimentConfig()
    p = c.reservoir_params("esn")
    assert (p.n_reservoir, p.density, p.input_scaling, p.spectral_radius) == (400, 0.02, 0.2, 0.5)
    assert c.esn_settings.ridge_beta == 1.0
    q = ExperimentConfig(variable="pres").reservoir_params("esn")
    assert (q.density, q.input_scaling, q.spectral_radius) == (0.07, 0.05, 0.2)
    d = c.reservoir_params("dts_esn")
    assert (d.leak.log10_min, d.leak.log10_max) == (-3.0, 0.0)
    assert c.t_trans == 300 and c.years == (2017, 2018, 2019, 2020, 2021)


def test_predictable_range_envelope_over_seeds():
    """Mixing length 10 degrees: the eastward extent lands between 5 and 20 degrees."""
    offsets = tuple(float(o) for o in range(2, 27, 2))
    his = []
    for seed in range(10):
        grid = SiteGrid.cross((35.0, 139.0), lon_offsets=offsets)
        f = gen_synthetic(grid, driver_seed=100 + seed, mixing_length=10.0, years=6, start_year=2016)
        c = cfg(offsets=offsets, years=(2021,), methods=("esn",), n_reservoir=400, seed=seed)
        his.append(run_sweep(c, MemoryStore(f)).predictable_ranges["esn"].hi)
    assert all(5.0 <= h <= 20.0 for h in his), his
