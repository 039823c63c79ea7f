"""End-to-end acceptance criteria at their stated tolerances.

The runs are the configs under ``configs/`` evolved fresh into a temporary
directory (about ten minutes on one core).  Each test prints one
``ACCEPTANCE <n> PASS|FAIL`` line; the lines are repeated in the terminal
summary.  Select with ``-m acceptance`` or skip with ``-m "not acceptance"``.
"""

from __future__ import annotations

import time
import warnings
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from hartree_scattering import oracles, selftest
from hartree_scattering.config import RunConfig
from hartree_scattering.harness import convergence_study, fit_quantity, run
from hartree_scattering.io import read_field
from hartree_scattering.norms import interpolation_bound
from hartree_scattering.propagator import free_propagate
from hartree_scattering.scattering import fit_log_phase, phase_variation, significant_mask
from hartree_scattering.spectral import ComplexField, GridSpec, hartree_potential
from hartree_scattering.wavepacket import gamma_batch, gamma_direct

pytestmark = pytest.mark.acceptance

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
BOUND_COLUMNS = ("bound_linf", "bound_l2", "bound_deriv", "bound_ray", "bound_freq")


def report(num: int, name: str, ok: bool, detail: str):
    line = f"ACCEPTANCE {num} {'PASS' if ok else 'FAIL'} {name}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def _timed_run(name, tmp_path_factory):
    cfg = RunConfig.from_file(CONFIGS / name)
    out = tmp_path_factory.mktemp(name.split(".")[0])
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = run(cfg, output_dir=out)
    return res, time.perf_counter() - t0


@pytest.fixture(scope="module")
def acc2d(tmp_path_factory):
    return _timed_run("acceptance_2d.txt", tmp_path_factory)


@pytest.fixture(scope="module")
def free2d(tmp_path_factory):
    return _timed_run("free_2d.txt", tmp_path_factory)


@pytest.fixture(scope="module")
def demo3d(tmp_path_factory):
    return _timed_run("demo_3d.txt", tmp_path_factory)


def test_1_free_flow_oracle():
    g = GridSpec(2, 256, 200.0)
    a = 1 / 8
    t0 = time.perf_counter()
    u = free_propagate(ComplexField(g, 0.0, np.exp(-a * g.r2)), 1.0)
    wall = time.perf_counter() - t0
    err = float(np.max(np.abs(u.values - oracles.free_gaussian(g, 1.0, a))))
    report(1, "free-flow oracle", err <= 1e-10 and wall <= 5.0,
           f"pointwise error {err:.2e} (<= 1e-10), {wall:.2f}s (<= 5s)")


def test_2_conservation(acc2d):
    res, wall = acc2d
    m = res.column("mass")
    e = res.column("energy")
    mass_drift = float(np.max(np.abs(m - res.mass0)) / res.mass0)
    energy_drift = float(np.max(np.abs(e - res.energy0)) / abs(res.energy0))
    rep = convergence_study(res.cfg, "tau", [0.04, 0.02, 0.01], t_end=2.0)
    order = rep.orders[0]
    ok = mass_drift <= 1e-10 and energy_drift <= 1e-6 and 1.8 <= order <= 2.2 and wall <= 900
    report(2, "conservation", ok,
           f"mass drift {mass_drift:.2e} (<= 1e-10), Hamiltonian drift {energy_drift:.2e} (<= 1e-6), "
           f"temporal order {order:.3f} in [1.8, 2.2], run {wall:.0f}s (<= 900s)")


def test_3_sharp_decay(acc2d, demo3d):
    s2 = fit_quantity(acc2d[0].rows, "linf", (5.0, 50.0)).slope
    s3 = fit_quantity(demo3d[0].rows, "linf", (4.0, 16.0)).slope
    ok = -1.1 <= s2 <= -0.9 and -1.7 <= s3 <= -1.3
    report(3, "sharp decay", ok, f"d=2 slope {s2:.4f} in [-1.1, -0.9]; d=3 slope {s3:.4f} in [-1.7, -1.3]")


def test_4_energy_growth(acc2d):
    s = fit_quantity(acc2d[0].rows, "h0beta", (5.0, 50.0)).slope
    report(4, "energy growth", -0.01 <= s <= 0.05, f"H^(0,beta) exponent {s:.3e} in [-0.01, 0.05]")


def test_5_gamma_bounds(acc2d, free2d, demo3d):
    worst = {}
    for res, _ in (acc2d, free2d, demo3d):
        for c in BOUND_COLUMNS:
            worst[c] = max(worst.get(c, 0.0), float(np.max(res.column(c))))
    free = free2d[0]
    beta, d = free.cfg.beta, free.cfg.d
    slope = fit_quantity(free.rows, "ray", (4.0, 50.0)).slope
    limit = -(beta / 2 + d / 4) + 0.1
    ok = all(v <= 1.0 for v in worst.values()) and slope <= limit
    worst_txt = ", ".join(f"{c[6:]} {v:.3f}" for c, v in worst.items())
    report(5, "gamma bounds", ok,
           f"max ratio to bound over all snapshots of all runs: {worst_txt} (<= 1); "
           f"free-run ray slope {slope:.3f} (<= {limit:.3f})")


def test_6_oracle_equivalence(acc2d):
    res, _ = acc2d
    vg = res.gammas[0].vgrid
    idx = np.linspace(0, vg.m - 1, 5).round().astype(int)
    worst_gamma = 0.0
    for path in sorted(res.snapshots.values()):
        u = read_field(path)
        batch = gamma_batch(u, vg, res.cfg.profile_width).values[np.ix_(idx, idx)]
        direct = np.array([[gamma_direct(u, [vg.nodes[i], vg.nodes[j]], res.cfg.profile_width)
                            for j in idx] for i in idx])
        worst_gamma = max(worst_gamma, float(np.max(np.abs(batch - direct)) / np.max(np.abs(direct))))
    worst_v = 0.0
    for d in (2, 3):
        g = GridSpec(d, 8, 8.0)
        rng = np.random.default_rng(d)
        u = ComplexField(g, 0, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fast = hartree_potential(u).values.real
        slow = oracles.hartree_direct(u.values, g)
        gap = fast - slow
        worst_v = max(worst_v, float(np.max(np.abs(gap - gap.mean())) / np.max(np.abs(slow))))
    report(6, "oracle equivalence", worst_gamma <= 1e-8 and worst_v <= 1e-8,
           f"gamma batch vs direct {worst_gamma:.2e} over {len(res.snapshots)} snapshots; "
           f"Hartree vs direct sum on 8^d {worst_v:.2e} (both <= 1e-8)")


def test_7_ode_remainder(acc2d):
    res, _ = acc2d
    s = fit_quantity(res.rows, "residual", (5.0, 50.0)).slope
    s_alt = fit_quantity([dict(t=r["t"], residual=r["residual_alt"]) for r in res.rows],
                         "residual", (5.0, 50.0)).slope
    report(7, "ODE remainder", s <= -1.05,
           f"slope {s:.3f} (<= -1.05) with coupling '{res.cfg.coupling}'; alternative coupling slope {s_alt:.3f}")


def test_8_log_phase(acc2d):
    res, _ = acc2d
    prof = res.profile
    mask = significant_mask(prof, 0.1)
    target = -0.5 * prof.H
    gt = res.true_gammas()
    free = np.array([g.values for g in res.free_gammas])
    coef = fit_log_phase(res.times, gt, prof, reference=free, window=(10.0, 50.0), nuisance=True)
    rel = float(np.max(np.abs(coef - target)[mask] / np.abs(target)[mask]))
    sel = res.times >= 25.0 - 1e-9
    g_var = float(np.max(phase_variation((res.G * np.conj(free))[sel])[mask]))
    raw_var = float(np.min(phase_variation((gt * np.conj(free))[sel])[mask]))
    g_var_plain = float(np.max(phase_variation(res.G[sel])[mask]))
    ok = rel <= 0.10 and g_var <= 0.05 and raw_var >= 5 * g_var
    report(8, "log phase correction", ok,
           f"coefficient vs -H/2 max rel error {rel:.3f} (<= 0.10) on {int(mask.sum())} nodes; "
           f"G variation on [25, 50] {g_var:.2e} rad (<= 0.05; {g_var_plain:.3f} without the free reference); "
           f"raw/gauged variation {raw_var / g_var:.2f} (>= 5)")


def test_9_reconstruction(acc2d):
    res, _ = acc2d
    T = res.times[-1]
    by_t = {round(r["t"], 9): r["scaled"] for r in res.reconstruction}
    vals = [by_t[round(T / 4, 9)], by_t[round(T / 2, 9)], by_t[round(T, 9)]]
    ok = vals[0] > vals[1] > vals[2]
    report(9, "reconstruction residual", ok,
           "t^(d/2) sup error at T/4, T/2, T: " + ", ".join(f"{v:.3e}" for v in vals) + " (strictly decreasing)")


def test_10_property_suites(acc2d, free2d, demo3d):
    t0 = time.perf_counter()
    outcomes = selftest.run_checks()
    wall = time.perf_counter() - t0
    failed = [o.name for o in outcomes if not o.passed]
    rho = {}
    for res, _ in (acc2d, free2d, demo3d):
        d = res.cfg.d
        rho[d] = max(rho.get(d, 0.0), float(np.max(res.column("ratio"))))
    bound_ok = all(r <= interpolation_bound(d) for d, r in rho.items())
    ok = not failed and wall <= 120 and bound_ok
    rho_txt = ", ".join(f"d={d}: {r:.4f} (<= {interpolation_bound(d):.4f})" for d, r in sorted(rho.items()))
    report(10, "property suites", ok,
           f"selftest {len(outcomes) - len(failed)}/{len(outcomes)} in {wall:.1f}s (<= 120s)"
           + (f", failed {failed}" if failed else "")
           + f"; interpolation ratio over all snapshots {rho_txt}")


def test_invariant_galilean_identity(acc2d):
    """Two discretisations of || |J|^beta u ||_2 on every diagnostic snapshot, 1e-8 relative."""
    res, _ = acc2d
    gap = np.abs(res.column("jbeta") - res.column("jbeta_free")) / res.column("jbeta_free")
    worst = float(np.max(gap))
    line = (f"INVARIANT galilean identity {'PASS' if worst <= 1e-8 else 'FAIL'}: worst relative gap "
            f"{worst:.2e} (<= 1e-8) at t = {res.times[int(np.argmax(gap))]:g}")
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert worst <= 1e-8, line
