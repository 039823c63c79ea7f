"""Asymptotic pipeline: velocity Coulomb potential, integrating factor, gauged
amplitude, ODE remainder, profile extraction and reconstruction.

Two conventions for the amplitude ODE ``d_t gamma = i s k H[gamma] gamma / t``
are supported through :class:`Coupling`:

``derived`` (default)
    ``k = 2^{d-1}``, ``s = -1``.  Obtained by inserting the ray asymptotics
    ``u(t, 2tv) ~ t^{-d/2} e^{it|v|^2} gamma`` into the potential term.
``paper``
    ``k = 1/2``, ``s = +1``, the displayed form.

The accumulated phase is ``Phi = k int H(s)/s ds`` and the gauged amplitude
``G = exp(-i s Phi) gamma``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.signal import fftconvolve

from .spectral import BoundaryWarning, ComplexField, GridSpec
from .wavepacket import GammaSlice, VelocityGrid, nu


@dataclass(frozen=True)
class Coupling:
    name: str
    factor: float
    orientation: int

    @classmethod
    def get(cls, name: str, d: int) -> "Coupling":
        if name == "derived":
            return cls("derived", 2.0 ** (d - 1), -1)
        if name == "paper":
            return cls("paper", 0.5, 1)
        raise ValueError(f"unknown coupling {name!r}; use 'derived' or 'paper'")

    def rate(self, H: np.ndarray, t: float) -> np.ndarray:
        """The phase velocity ``s k H / t`` of the model ODE."""
        return self.orientation * self.factor * H / t


def self_cell_average(d: int, dv: float) -> float:
    """Mean of ``1/|x|`` over the cube ``[-dv/2, dv/2]^d``."""
    if d == 2:
        return 4 * math.log(1 + math.sqrt(2)) / dv
    if d == 3:
        r3 = math.sqrt(3)
        return (3 * math.log((r3 + 1) / (r3 - 1)) - math.pi / 2) / dv
    raise ValueError("dimension must be 2 or 3")


@lru_cache(maxsize=8)
def _velocity_kernel(d: int, m: int, dv: float) -> np.ndarray:
    off = np.arange(-(m - 1), m) * dv
    mesh = np.meshgrid(*([off] * d), indexing="ij", sparse=True)
    r = np.sqrt(sum(a**2 for a in mesh))
    with np.errstate(divide="ignore"):
        ker = 1.0 / r
    ker[(m - 1,) * d] = self_cell_average(d, dv)
    ker *= dv**d
    ker.flags.writeable = False
    return ker


def coulomb_density(rho: np.ndarray, vgrid: VelocityGrid) -> np.ndarray:
    """``dv^d sum_w rho(w) / |v - w|`` (zero-padded, no periodic images)."""
    rho = np.asarray(rho, dtype=float).reshape(vgrid.shape)
    if not rho.any():
        return np.zeros(vgrid.shape)
    ker = _velocity_kernel(vgrid.d, vgrid.m, vgrid.dv)
    out = fftconvolve(rho, ker, mode="same")
    return np.maximum(out, 0.0)


def velocity_coulomb(gslice: GammaSlice) -> np.ndarray:
    """``H(t, v) = (|.|^-1 *_v |gamma(t, .)|^2)(v)`` with the self cell averaged."""
    return coulomb_density(np.abs(gslice.values) ** 2, gslice.vgrid)


@dataclass(frozen=True, eq=False)
class PhaseAccumulator:
    """Trapezoid accumulation of ``Phi(t, v) = k int_{t0}^t H(s, v)/s ds``."""

    vgrid: VelocityGrid
    coupling: Coupling
    phi: np.ndarray
    t_last: float
    H_last: np.ndarray
    rule: str = "trapezoid"

    @classmethod
    def start(cls, gslice: GammaSlice, coupling: Coupling | str = "derived") -> "PhaseAccumulator":
        if isinstance(coupling, str):
            coupling = Coupling.get(coupling, gslice.vgrid.d)
        if gslice.t < 1 - 1e-12:
            raise ValueError("phase accumulation starts at t >= 1")
        return cls(gslice.vgrid, coupling, np.zeros(gslice.vgrid.shape), gslice.t,
                   np.array(gslice.H))


def update_phase(acc: PhaseAccumulator, gslice: GammaSlice, t_prev: float | None = None,
                 t: float | None = None) -> PhaseAccumulator:
    """Advance ``acc`` from ``t_prev`` to ``t`` with the slice taken at ``t``."""
    t_prev = acc.t_last if t_prev is None else t_prev
    t = gslice.t if t is None else t
    if abs(t_prev - acc.t_last) > 1e-12 * max(1.0, t_prev):
        raise ValueError("t_prev does not match the accumulator state")
    if not t > t_prev:
        raise ValueError("phase updates need increasing times")
    if abs(gslice.t - t) > 1e-12 * max(1.0, t):
        raise ValueError("slice time does not match t")
    H = gslice.H
    inc = 0.5 * (t - t_prev) * (acc.H_last / t_prev + H / t)
    return replace(acc, phi=acc.phi + acc.coupling.factor * inc, t_last=t, H_last=np.array(H))


def gauged_amplitude(gslice: GammaSlice, acc: PhaseAccumulator) -> np.ndarray:
    """``G = exp(-i s Phi) gamma`` (unimodular gauge)."""
    if abs(gslice.t - acc.t_last) > 1e-12 * max(1.0, gslice.t):
        raise ValueError("slice and accumulator are at different times")
    return np.exp(-1j * acc.coupling.orientation * acc.phi) * gslice.values


def ode_residual(prev: GammaSlice, cur: GammaSlice, nxt: GammaSlice, H: np.ndarray | None = None,
                 t: float | None = None, coupling: Coupling | str = "derived",
                 gauge_rate: float = 0.0) -> np.ndarray:
    """``|R| = |d_t gamma - i s k H gamma / t|`` by a centred difference.

    ``gauge_rate`` removes the torus gauge ``e^{-ict}`` from grid-gauge
    slices before differencing.
    """
    t = cur.t if t is None else t
    d1, d2 = cur.t - prev.t, nxt.t - cur.t
    if d1 <= 0 or abs(d1 - d2) > 1e-9 * max(d1, d2):
        raise ValueError("ode_residual needs three uniformly spaced slices")
    if isinstance(coupling, str):
        coupling = Coupling.get(coupling, cur.vgrid.d)
    H = cur.H if H is None else H

    def true(s: GammaSlice) -> np.ndarray:
        return s.values * np.exp(-1j * gauge_rate * s.t)

    dgamma = (true(nxt) - true(prev)) / (2 * d1)
    model = 1j * coupling.rate(H, t) * true(cur)
    return np.abs(dgamma - model)


@dataclass(frozen=True, eq=False)
class ScatteringProfile:
    """Asymptotic profile extracted at time ``T``.

    ``W`` is in the continuum gauge and the frequency normalisation (it
    stands in for the Fourier transform of the scattering state).  ``W0`` is
    the gauged amplitude ``G(T)``; ``tail`` and ``tail_prev`` are the Cauchy
    gaps ``sup|G(T) - G(T/2)|`` and ``sup|G(T/2) - G(T/4)|``.
    """

    vgrid: VelocityGrid
    T: float
    W: np.ndarray = field(repr=False)
    W0: np.ndarray = field(repr=False)
    tail: float
    tail_prev: float
    gauge_rate: float = 0.0
    coupling: str = "derived"

    @property
    def accepted(self) -> bool:
        return self.tail < self.tail_prev

    @property
    def H(self) -> np.ndarray:
        return coulomb_density(np.abs(self.W) ** 2, self.vgrid)


class NonCauchyWarning(UserWarning):
    pass


def extract_profile(times: Sequence[float], G: Sequence[np.ndarray], vgrid: VelocityGrid,
                    gamma_T: np.ndarray | None = None, coupling: Coupling | str = "derived",
                    gauge_rate: float = 0.0) -> ScatteringProfile:
    """Build the profile from gauged amplitudes sampled at least at ``T/4, T/2, T``.

    ``gamma_T`` is the grid-gauge amplitude at ``T``; when given, ``W`` is
    ``NU gamma_true(T) exp(-i s k log T H[gamma(T)])`` so the closed form
    log phase is removed exactly at ``T``.  Otherwise ``W = NU G(T)``.
    """
    times = np.asarray(times, dtype=float)
    if times.size < 3:
        raise ValueError("need G at three dyadic times at least")
    if isinstance(coupling, str):
        coupling = Coupling.get(coupling, vgrid.d)
    T = times[-1]

    def at(tq):
        idx = int(np.argmin(np.abs(times - tq)))
        if abs(times[idx] - tq) > 1e-9 * max(1.0, tq):
            raise ValueError(f"no G sample at t = {tq}")
        return np.asarray(G[idx])

    g_T, g_half, g_quarter = at(T), at(T / 2), at(T / 4)
    tail = float(np.max(np.abs(g_T - g_half)))
    tail_prev = float(np.max(np.abs(g_half - g_quarter)))
    if gamma_T is not None:
        gam = np.asarray(gamma_T) * np.exp(-1j * gauge_rate * T)
        H = coulomb_density(np.abs(gam) ** 2, vgrid)
        W = nu(vgrid.d) * gam * np.exp(-1j * math.log(T) * coupling.rate(H, 1.0))
    else:
        W = nu(vgrid.d) * g_T
    prof = ScatteringProfile(vgrid, T, W, g_T, tail, tail_prev, gauge_rate, coupling.name)
    if tail > tail_prev:
        warnings.warn(f"gauged amplitude is not Cauchy (tail {tail:.3g} > {tail_prev:.3g})",
                      NonCauchyWarning, stacklevel=2)
    return prof


def _interp(vgrid: VelocityGrid, values: np.ndarray, pts: list[np.ndarray]) -> np.ndarray:
    nodes = (vgrid.nodes,) * vgrid.d
    mesh = np.meshgrid(*pts, indexing="ij")
    flat = np.stack([m.ravel() for m in mesh], axis=-1)
    out = np.zeros(flat.shape[0], dtype=complex)
    lo, hi = vgrid.nodes[0], vgrid.nodes[-1]
    inside = np.all((flat >= lo) & (flat <= hi), axis=1)
    if inside.any():
        re = RegularGridInterpolator(nodes, values.real, method="linear")
        im = RegularGridInterpolator(nodes, values.imag, method="linear")
        out[inside] = re(flat[inside]) + 1j * im(flat[inside])
    return out.reshape(mesh[0].shape)


def reconstruct(profile: ScatteringProfile, t: float, grid: GridSpec,
                u: ComplexField | None = None, gauge: bool = True) -> ComplexField:
    """``(2it)^{-d/2} e^{i|x|^2/4t} W(x/2t) e^{-(i/2) log t H[W](x/2t)}``.

    ``W`` and ``H[W]`` are linearly interpolated in velocity and vanish
    outside the velocity grid.  With ``gauge=True`` the torus phase
    ``e^{ict}`` is applied so the result is comparable with grid solutions.
    """
    if not t > 0:
        raise ValueError("reconstruction needs t > 0")
    vg = profile.vgrid
    if vg.d != grid.d:
        raise ValueError("profile and grid dimensions differ")
    pts = [grid.x / (2 * t)] * grid.d
    W = _interp(vg, profile.W, pts)
    H = _interp(vg, profile.H.astype(complex), pts).real
    phase = -0.5 * math.log(t) * H
    if gauge:
        phase = phase + profile.gauge_rate * t
    pref = (2j * t) ** (-grid.d / 2)
    vals = pref * np.exp(1j * grid.r2 / (4 * t)) * W * np.exp(1j * phase)
    if u is not None:
        lo, hi = vg.nodes[0], vg.nodes[-1]
        mask = np.ones(grid.shape, dtype=bool)
        for axis in grid.axes("x"):
            v = axis / (2 * t)
            mask = mask & (v >= lo) & (v <= hi)
        dens = np.abs(u.values) ** 2
        outside = 1 - dens[mask].sum() / dens.sum() if dens.sum() else 0.0
        if outside > 0.01:
            warnings.warn(f"{outside:.1%} of the mass maps outside the velocity grid",
                          BoundaryWarning, stacklevel=2)
    return ComplexField(grid, t, vals)


def unwrap_series(phases: np.ndarray) -> np.ndarray:
    """Unwrap along the time axis (axis 0)."""
    return np.unwrap(phases, axis=0)


def phase_variation(values: np.ndarray) -> np.ndarray:
    """Peak-to-peak unwrapped phase along axis 0."""
    ph = unwrap_series(np.angle(values))
    return ph.max(axis=0) - ph.min(axis=0)


def fit_log_phase(times: Sequence[float], gammas: np.ndarray, profile: ScatteringProfile,
                  reference: np.ndarray | None = None, window: tuple[float, float] = (5.0, 50.0),
                  threshold: float = 0.1, nuisance: bool = True) -> np.ndarray:
    """Least-squares coefficient of ``log t`` in ``arg gamma(t, v)``.

    ``gammas`` are continuum-gauge slices stacked along axis 0.  With a
    ``reference`` (the free-flow amplitudes at the same times) the fit is
    applied to ``arg(gamma / gamma_free)``, which removes the linear
    dispersive transient.  ``nuisance`` adds a ``1/t`` column.
    """
    times = np.asarray(times, dtype=float)
    sel = (times >= window[0] - 1e-12) & (times <= window[1] + 1e-12)
    g = np.asarray(gammas)[sel]
    if reference is not None:
        g = g * np.conj(np.asarray(reference)[sel])
    ph = unwrap_series(np.angle(g))
    ts = times[sel]
    cols = [np.ones_like(ts), np.log(ts)]
    if nuisance:
        cols.append(1 / ts)
    A = np.stack(cols, axis=1)
    coef, *_ = np.linalg.lstsq(A, ph.reshape(ph.shape[0], -1), rcond=None)
    return coef[1].reshape(ph.shape[1:])


def significant_mask(profile: ScatteringProfile, threshold: float = 0.1) -> np.ndarray:
    mod = np.abs(profile.W)
    return mod >= threshold * mod.max()
