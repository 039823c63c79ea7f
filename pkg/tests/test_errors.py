"""Documented rejection paths."""

import math
import warnings

import numpy as np
import pytest

from hartree_scattering.config import SMOKE, ConfigError, RunConfig
from hartree_scattering.harness import convergence_study, fit_power_law
from hartree_scattering.norms import interpolation_ratio, lp_norm, weighted_sobolev_norm
from hartree_scattering.propagator import EvolutionAbort, EvolveConfig, evolve, galilean_weight
from hartree_scattering.scattering import (
    Coupling,
    NonCauchyWarning,
    PhaseAccumulator,
    extract_profile,
    ode_residual,
    update_phase,
)
from hartree_scattering.spectral import (
    SPECTRAL,
    AliasingWarning,
    ComplexField,
    GridSpec,
    apply_multiplier,
    forward_transform,
    hartree_potential,
    inverse_transform,
)
from hartree_scattering.wavepacket import (
    GammaSlice,
    PacketOverflowError,
    VelocityGrid,
    gamma_direct,
    wavepacket_field,
    wavepacket_pde_residual,
)


@pytest.mark.parametrize("d,n,L", [(1, 8, 1.0), (4, 8, 1.0), (2, 12, 1.0), (2, 8, 0.0), (2, 8, -2.0)])
def test_bad_grids(d, n, L):
    with pytest.raises(ValueError):
        GridSpec(d, n, L)


def test_transform_space_checks():
    g = GridSpec(2, 8, 4.0)
    phys = ComplexField(g, 0, np.ones(g.shape))
    spec = ComplexField(g, 0, np.ones(g.shape), SPECTRAL)
    with pytest.raises(ValueError):
        forward_transform(spec)
    with pytest.raises(ValueError):
        inverse_transform(phys)
    with pytest.raises(ValueError):
        apply_multiplier(phys, lambda *xi: np.nan * xi[0])


def test_aliasing_warning():
    g = GridSpec(2, 16, 4.0)
    rng = np.random.default_rng(0)
    u = ComplexField(g, 0, rng.standard_normal(g.shape))
    with pytest.warns(AliasingWarning):
        hartree_potential(u)


def test_lp_and_norm_rejections():
    g = GridSpec(2, 8, 4.0)
    z = ComplexField(g, 0, np.zeros(g.shape))
    with pytest.raises(ValueError):
        lp_norm(z, 0.9)
    with pytest.raises(ValueError):
        interpolation_ratio(z)
    with pytest.raises(ValueError):
        weighted_sobolev_norm(z, -1.0, 1.1)


def test_galilean_rejections():
    g = GridSpec(2, 8, 4.0)
    u = ComplexField(g, 1.0, np.ones(g.shape))
    with pytest.raises(ValueError):
        galilean_weight(u, 0.0, 1.0)
    with pytest.raises(ValueError):
        galilean_weight(u, 1.0, 3.5)


def test_packet_overflow():
    g = GridSpec(2, 32, 16.0)
    with pytest.raises(PacketOverflowError):
        wavepacket_field([2.0, 0.0], 2.0, g)
    with pytest.raises(PacketOverflowError):
        gamma_direct(ComplexField(g, 2.0, np.ones(g.shape)), [2.0, 0.0])
    with pytest.raises(ValueError):
        wavepacket_pde_residual([0.0, 0.0], 0.5)


def test_evolution_aborts_with_record():
    g = GridSpec(2, 16, 8.0)
    # mass sitting in the boundary shell from the start
    u0 = np.zeros(g.shape, dtype=complex)
    u0[0, :] = 1.0
    cfg = EvolveConfig(g, u0, t_end=0.1, tau=0.01, diag_every=1, diag_start=0.0)
    with pytest.raises(EvolutionAbort) as info:
        list(evolve(cfg))
    assert "boundary" in str(info.value)
    assert "t" in info.value.record
    bad = np.full(g.shape, np.nan, dtype=complex)
    with pytest.raises(EvolutionAbort):
        list(evolve(EvolveConfig(g, bad, t_end=0.1, tau=0.01, diag_every=1, diag_start=0.0,
                                 check_boundary=False)))


def test_phase_rejections():
    vg = VelocityGrid(2, 4, 1.0)
    z = np.zeros(vg.shape)
    with pytest.raises(ValueError):
        PhaseAccumulator.start(GammaSlice(0.5, vg, z))
    acc = PhaseAccumulator.start(GammaSlice(1.0, vg, z))
    with pytest.raises(ValueError):
        update_phase(acc, GammaSlice(1.0, vg, z))
    with pytest.raises(ValueError):
        Coupling.get("other", 2)


def test_residual_rejects_uneven_spacing():
    vg = VelocityGrid(2, 4, 1.0)
    sl = [GammaSlice(t, vg, np.ones(vg.shape)) for t in (2.0, 2.1, 2.3)]
    with pytest.raises(ValueError):
        ode_residual(*sl)


def test_non_cauchy_flagged():
    vg = VelocityGrid(2, 4, 1.0)
    base = np.ones(vg.shape, dtype=complex)
    series = [base, 1.1 * base, 2.0 * base]
    with pytest.warns(NonCauchyWarning):
        prof = extract_profile([1.0, 2.0, 4.0], series, vg)
    assert not prof.accepted
    with pytest.raises(ValueError):
        extract_profile([1.0, 2.0], series[:2], vg)


def test_fit_rejections():
    t = np.arange(1.0, 11.0)
    with pytest.raises(ValueError):
        fit_power_law(t, np.zeros(10))
    with pytest.raises(ValueError):
        fit_power_law(t, t, window=(3.0, 5.0))
    with pytest.raises(ValueError):
        fit_power_law(t, t[:5])


@pytest.mark.parametrize("kw", [dict(beta=0.9), dict(beta=2.0), dict(epsilon=0.0), dict(d=3, beta=1.4),
                                dict(tau=0.0), dict(t_end=2.0), dict(n=48), dict(snapshot_times=(4.01,)),
                                dict(center=(1.0,)), dict(coupling="x")])
def test_config_rejections(kw):
    with pytest.raises(ConfigError):
        SMOKE.with_updates(**kw)


def test_config_text_errors():
    with pytest.raises(ConfigError, match="unknown key"):
        RunConfig.from_text("bogus = 1\n")
    with pytest.raises(ConfigError, match="expected"):
        RunConfig.from_text("d 2\n")
    with pytest.raises(ConfigError, match="bad value"):
        RunConfig.from_text("n = many\n")
    with pytest.raises(ConfigError):
        RunConfig.from_text("L = inf\n")
    with pytest.raises(ConfigError):
        RunConfig.from_text("linear = maybe\n")


def test_convergence_needs_three_members():
    with pytest.raises(ValueError):
        convergence_study(SMOKE, "tau", [0.02, 0.01], t_end=0.1)
    with pytest.raises(ValueError):
        convergence_study(SMOKE, "steps", [1, 2, 3], t_end=0.1)
