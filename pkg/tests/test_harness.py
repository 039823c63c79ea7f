import math

import numpy as np
import pytest

from hartree_scattering.config import SMOKE, RunConfig
from hartree_scattering.estimators import (
    PowerLawRegressor,
    ScatteringProfileEstimator,
    WavepacketTransformer,
)
from hartree_scattering.harness import (
    COLUMNS,
    TIMING,
    analyze,
    compare,
    config_from_manifest,
    load_run,
    read_diagnostics,
    read_manifest,
    run,
)
from hartree_scattering.spectral import ComplexField, GridSpec


@pytest.fixture(scope="module")
def smoke_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("smoke")
    res = run(SMOKE, output_dir=out)
    return out, res


def test_run_directory_contents(smoke_dir):
    out, res = smoke_dir
    names = {p.name for p in out.iterdir()}
    assert {"manifest.txt", "config.txt", "diagnostics.csv", "profile.bin", "gamma_history.bin",
            "gamma_free.bin", "reconstruction.csv"} <= names
    assert sum(n.startswith("snapshot_t") for n in names) == len(SMOKE.snapshot_times)
    header = (out / "diagnostics.csv").read_text().splitlines()[0].split(",")
    assert header == list(COLUMNS)


def test_manifest(smoke_dir):
    out, _ = smoke_dir
    man = read_manifest(out / "manifest.txt")
    assert config_from_manifest(man) == SMOKE.with_updates(output_dir=SMOKE.output_dir)
    assert man["config_hash"] == SMOKE.hash()
    assert not any("hostname" in k for k in man)


def test_in_run_rows_are_consistent(smoke_dir):
    _, res = smoke_dir
    m0 = res.mass0
    assert all(abs(r["mass"] - m0) <= 1e-10 * m0 for r in res.rows)
    assert all(abs(r["energy"] - res.energy0) <= 1e-6 * abs(res.energy0) for r in res.rows)
    # residuals need both neighbours, the first and last rows have none
    assert math.isnan(res.rows[0]["residual"]) and math.isnan(res.rows[-1]["residual"])
    assert all(np.isfinite(r["residual"]) for r in res.rows[1:-1])


def test_analyze_matches_in_run(smoke_dir):
    out, res = smoke_dir
    rows = analyze(out)
    assert (out / "analysis.csv").exists()
    in_run = {round(r["t"], 9): r for r in res.rows}
    for r in rows:
        ref = in_run[round(r["t"], 9)]
        for c in COLUMNS:
            if c in TIMING or c in ("residual", "residual_alt", "tail"):
                continue
            assert r[c] == pytest.approx(ref[c], rel=1e-12, abs=1e-300), c


def test_load_run_rebuilds_gauge(smoke_dir):
    out, res = smoke_dir
    back = load_run(out)
    assert back.cfg == SMOKE
    assert np.allclose(back.G, res.G, rtol=0, atol=1e-15)
    assert back.profile.T == res.profile.T
    assert np.array_equal(back.profile.W, res.profile.W)


def test_rerun_is_deterministic(smoke_dir, tmp_path):
    out, _ = smoke_dir
    run(SMOKE, output_dir=tmp_path)
    diff = compare(out, tmp_path)
    assert diff.pop("_matched") == len(read_diagnostics(out / "diagnostics.csv"))
    assert max(diff.values()) == 0.0


def test_run_without_writing():
    res = run(SMOKE, write=False)
    assert res.output_dir is None and res.profile is not None and res.reconstruction


def test_power_law_regressor():
    t = np.linspace(1, 10, 12)
    est = PowerLawRegressor().fit(t[:, None], 2 * t**-1.5)
    assert est.slope_ == pytest.approx(-1.5, abs=1e-12)
    assert np.allclose(est.predict(t), 2 * t**-1.5)
    assert est.score(t, 2 * t**-1.5) == pytest.approx(1.0)
    assert est.get_params() == {"window": None, "min_samples": 8}


def test_wavepacket_transformer_matches_gamma_batch():
    from hartree_scattering.wavepacket import VelocityGrid, gamma_batch

    g = GridSpec(2, 64, 32.0)
    f = ComplexField(g, 2.0, np.exp(-g.r2 / 8))
    out = WavepacketTransformer(8, 1.0).fit_transform([f, f])
    assert out.shape == (2, 64)
    assert np.array_equal(out[0], gamma_batch(f, VelocityGrid(2, 8, 1.0)).values.ravel())
    with pytest.raises(TypeError):
        WavepacketTransformer().fit([np.zeros(3)])


def test_profile_estimator(smoke_dir):
    _, res = smoke_dir
    est = ScatteringProfileEstimator(SMOKE.n_velocities, SMOKE.velocity_max).fit(res.times, res.G)
    assert np.array_equal(est.profile_.W0, res.G[-1])
    with pytest.raises(ValueError):
        ScatteringProfileEstimator(SMOKE.n_velocities, SMOKE.velocity_max).fit(res.times[:-1], res.G[:-1])


def test_config_text_round_trip_and_hash():
    cfg = SMOKE.with_updates(center=(1.0, -2.0), boost=(0.1, 0.0), coupling="paper")
    back = RunConfig.from_text(cfg.to_text())
    assert back == cfg
    assert back.hash() == cfg.hash()
    assert cfg.hash() != SMOKE.hash()
    assert cfg.with_updates(output_dir="elsewhere").hash() == cfg.hash()
