"""Pseudospectral Hartree NLS simulator with wavepacket diagnostics."""

__version__ = "0.1.0"

from .spectral import (  # noqa: E402
    ComplexField,
    GridSpec,
    apply_multiplier,
    coulomb_multiplier,
    forward_transform,
    hartree_potential,
    inverse_transform,
    make_grid,
)
from .propagator import EvolveConfig, evolve, free_propagate, galilean_weight, mdfm_check, strang_step  # noqa: E402
from .wavepacket import GammaSlice, VelocityGrid, gamma_batch, gamma_direct, wavepacket_field  # noqa: E402
from .norms import interpolation_ratio, lorentz_norm, lp_norm, weighted_sobolev_norm  # noqa: E402
from .scattering import (  # noqa: E402
    PhaseAccumulator,
    ScatteringProfile,
    extract_profile,
    gauged_amplitude,
    reconstruct,
    update_phase,
    velocity_coulomb,
)
from .config import RunConfig  # noqa: E402
