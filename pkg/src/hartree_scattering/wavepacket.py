"""Gaussian wavepackets ``Psi_v`` and the amplitude ``gamma(t, v) = <u, Psi_v>``.

The profile is ``theta(x) = (a/pi)^{d/2} exp(-a |x|^2)`` (unit integral) with
``a = 1`` by default.  Everything here is separable across axes, which is
what makes the batch evaluation exact: ``gamma`` on a tensor velocity grid
is a product of small matrices applied to ``w = M(-t) u``.

Normalisation facts used throughout (per axis, principal branches):

* ``gamma(t, v) -> (2i)^{-d/2} F[e^{-it Delta} u](v)`` for large ``t``, so
  ``NU * gamma`` tracks the profile where ``NU = (1 + i)^d``.
* ``u(t, 2tv) ~ t^{-d/2} e^{it|v|^2} gamma(t, v)`` along rays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import gamma as gamma_fn

from .spectral import (
    PHYSICAL,
    ComplexField,
    GridSpec,
    _contract,
    _fft_forward,
    evaluate_at,
    fourier_at,
)

DEFAULT_WIDTH = 1.0


class PacketOverflowError(ValueError):
    """Wavepacket does not fit inside the periodic box."""


def nu(d: int) -> complex:
    """``(1 + i)^d``, the factor mapping ``gamma`` onto the asymptotic profile."""
    return complex((1 + 1j) ** d)


def profile_1d(s, a: float = DEFAULT_WIDTH):
    return math.sqrt(a / math.pi) * np.exp(-a * np.asarray(s) ** 2)


def profile(x2, d: int, a: float = DEFAULT_WIDTH):
    """``theta`` as a function of ``|x|^2``."""
    return (a / math.pi) ** (d / 2) * np.exp(-a * np.asarray(x2))


@dataclass(frozen=True)
class WavepacketParams:
    t: float
    v: tuple
    a: float = DEFAULT_WIDTH

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("wavepackets need t > 0")
        object.__setattr__(self, "v", tuple(float(c) for c in np.atleast_1d(self.v)))

    @property
    def d(self) -> int:
        return len(self.v)

    @property
    def centre(self) -> np.ndarray:
        return 2 * self.t * np.asarray(self.v)

    def check_fits(self, grid: GridSpec):
        if len(self.v) != grid.d:
            raise ValueError(f"velocity must have {grid.d} components")
        reach = float(np.max(np.abs(self.centre))) + 4 * math.sqrt(self.t / self.a)
        if reach > grid.length / 2:
            raise PacketOverflowError(
                f"packet reaches {reach:.3g} but the half box is {grid.length / 2:.3g}")


def profile_mass(grid: GridSpec, a: float = DEFAULT_WIDTH) -> float:
    """Grid quadrature of ``theta`` at unit scale; should be 1."""
    return float(np.prod([grid.h * profile_1d(ax, a).sum() for ax in [grid.x] * grid.d]))


def wavepacket_field(v, t: float, grid: GridSpec, a: float = DEFAULT_WIDTH) -> ComplexField:
    """``Psi_v(t, x) = theta((x - 2tv) / sqrt t) e^{i |x|^2 / 4t}`` on the grid."""
    p = WavepacketParams(t, v, a)
    p.check_fits(grid)
    env = np.ones(())
    for axis, c in zip(grid.axes("x"), p.centre):
        env = env * profile_1d((axis - c) / math.sqrt(t), a)
    return ComplexField(grid, t, env * np.exp(1j * grid.r2 / (4 * t)))


def gamma_direct(u: ComplexField, v, a: float = DEFAULT_WIDTH) -> complex:
    """``h^d sum u conj(Psi_v)``, the ground truth for every cross-check."""
    if u.space != PHYSICAL:
        raise ValueError("gamma_direct expects a physical-space field")
    psi = wavepacket_field(v, u.t, u.grid, a)
    return complex(np.vdot(psi.values, u.values) * u.grid.cell_volume)


@dataclass(frozen=True)
class VelocityGrid:
    """Cell-centred uniform grid on ``[-vmax, vmax]^d`` with ``m`` nodes per axis."""

    d: int
    m: int
    vmax: float

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        if self.m < 2:
            raise ValueError("need at least two velocity nodes per axis")
        if not self.vmax > 0:
            raise ValueError("vmax must be positive")

    @property
    def dv(self) -> float:
        return 2 * self.vmax / self.m

    @cached_property
    def nodes(self) -> np.ndarray:
        return -self.vmax + (np.arange(self.m) + 0.5) * self.dv

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.m,) * self.d

    @property
    def cell_volume(self) -> float:
        return self.dv**self.d

    def axes(self) -> list[np.ndarray]:
        out = []
        for axis in range(self.d):
            shp = [1] * self.d
            shp[axis] = self.m
            out.append(self.nodes.reshape(shp))
        return out

    @cached_property
    def speed2(self) -> np.ndarray:
        return sum(a**2 for a in self.axes())

    def point(self, index) -> np.ndarray:
        return self.nodes[np.asarray(index)]


def velocity_grid_for(grid: GridSpec, t_end: float, m: int | None = None,
                      vmax: float | None = None) -> VelocityGrid:
    """Velocity grid whose rays ``2 t v`` stay within ``0.4 L`` up to ``t_end``."""
    vmax = 0.2 * grid.length / t_end if vmax is None else vmax
    m = grid.n // 4 if m is None else m
    return VelocityGrid(grid.d, int(m), float(vmax))


@dataclass(frozen=True, eq=False)
class GammaSlice:
    """``gamma(t, .)`` on a velocity grid; ``H`` is the velocity Coulomb potential."""

    t: float
    vgrid: VelocityGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.complex128).reshape(self.vgrid.shape)
        if not np.all(np.isfinite(vals)):
            raise FloatingPointError("gamma slice contains non-finite values")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @cached_property
    def H(self) -> np.ndarray:
        from .scattering import velocity_coulomb
        return velocity_coulomb(self)

    def l2(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.vgrid.cell_volume))

    def linf(self) -> float:
        return float(np.max(np.abs(self.values)))


def _packet_matrices(grid: GridSpec, vgrid: VelocityGrid, t: float, a: float) -> list[np.ndarray]:
    rt = math.sqrt(t)
    mat = profile_1d((grid.x[None, :] - 2 * t * vgrid.nodes[:, None]) / rt, a)
    return [mat] * grid.d


def check_velocity_grid(grid: GridSpec, vgrid: VelocityGrid, t: float, a: float = DEFAULT_WIDTH):
    if vgrid.d != grid.d:
        raise ValueError("velocity grid dimension does not match the spatial grid")
    reach = 2 * t * vgrid.vmax + 4 * math.sqrt(t / a)
    if reach > grid.length / 2:
        raise PacketOverflowError(
            f"outermost packet reaches {reach:.3g}; half box is {grid.length / 2:.3g}")


def gamma_batch(u: ComplexField, vgrid: VelocityGrid, a: float = DEFAULT_WIDTH) -> GammaSlice:
    """``gamma(t, v)`` on the whole velocity grid.

    ``gamma(v) = h^d sum_x w(x) theta((x - 2tv)/sqrt t)`` with ``w = M(-t) u``.
    The profile factorises over axes, so this is one small dense matrix per
    axis applied to ``w``: the same sum as :func:`gamma_direct`, reordered.
    """
    if u.space != PHYSICAL:
        raise ValueError("gamma_batch expects a physical-space field")
    grid, t = u.grid, u.t
    check_velocity_grid(grid, vgrid, t, a)
    w = np.exp(-1j * grid.r2 / (4 * t)) * u.values
    vals = grid.cell_volume * _contract(w, _packet_matrices(grid, vgrid, t, a))
    return GammaSlice(t, vgrid, vals)


def _packet_spectrum_1d(xi: np.ndarray, c: np.ndarray, t: float, a: float) -> np.ndarray:
    # F[theta_1((x - c)/sqrt t) e^{i x^2/4t}](xi), closed-form Gaussian integral
    alpha = (a - 0.25j) / t
    beta = 2 * a * c[:, None] / t
    expo = (beta - 1j * xi[None, :]) ** 2 / (4 * alpha) - a * c[:, None] ** 2 / t
    pref = math.sqrt(a / math.pi) / math.sqrt(2 * math.pi) * np.sqrt(np.pi / alpha)
    return pref * np.exp(expo)


def gamma_frequency(u: ComplexField, vgrid: VelocityGrid, a: float = DEFAULT_WIDTH) -> GammaSlice:
    """``gamma`` through Plancherel: ``sum_xi u_hat conj(Psi_v_hat)`` with the dual measure."""
    if u.space != PHYSICAL:
        raise ValueError("gamma_frequency expects a physical-space field")
    grid, t = u.grid, u.t
    check_velocity_grid(grid, vgrid, t, a)
    spec = _fft_forward(u.values, grid)
    mat = np.conj(_packet_spectrum_1d(grid.xi, 2 * t * vgrid.nodes, t, a))
    vals = grid.dual_volume * _contract(spec, [mat] * grid.d)
    return GammaSlice(t, vgrid, vals)


def wavepacket_pde_rhs(v, t: float, grid: GridSpec, a: float = DEFAULT_WIDTH) -> np.ndarray:
    """Closed form of ``(i d_t + Delta) Psi_v`` at time ``t``.

    With ``y = (x - 2vt)/sqrt t`` it equals
    ``e^{i|x|^2/4t} (1/2t) div_y{(i y + 2 grad_y) theta}(y)``.
    """
    p = WavepacketParams(t, v, a)
    p.check_fits(grid)
    ys = [(axis - c) / math.sqrt(t) for axis, c in zip(grid.axes("x"), p.centre)]
    y2 = sum(y**2 for y in ys)
    th = profile(y2, grid.d, a)
    lap = (4 * a**2 * y2 - 2 * a * grid.d) * th
    y_grad = -2 * a * y2 * th
    bracket = 0.5j * grid.d / t * th + 0.5j / t * y_grad + lap / t
    return np.exp(1j * grid.r2 / (4 * t)) * bracket


def packet_grid(v, t: float, d: int = 2, n: int = 128, a: float = DEFAULT_WIDTH) -> GridSpec:
    """A box that holds ``Psi_v(t)`` with room to spare and resolves its chirp."""
    reach = 2 * t * float(np.max(np.abs(v))) + 9 * math.sqrt(t / a)
    return GridSpec(d, n, 2 * reach)


def wavepacket_pde_residual(v, t: float, grid: GridSpec | None = None, a: float = DEFAULT_WIDTH,
                            dt: float = 1e-4) -> float:
    """Relative sup-norm gap between numerical ``(i d_t + Delta) Psi_v`` and its closed form.

    ``Delta`` is spectral and ``d_t`` a centred difference with step ``dt``.
    """
    if t < 1:
        raise ValueError("the residual check is defined for t >= 1")
    v = np.atleast_1d(np.asarray(v, dtype=float))
    grid = packet_grid(v, t + dt, len(v), a=a) if grid is None else grid
    plus = wavepacket_field(v, t + dt, grid, a).values
    minus = wavepacket_field(v, t - dt, grid, a).values
    here = wavepacket_field(v, t, grid, a).values
    lap = np.fft.ifftn(-grid.xi2 * np.fft.fftn(here))
    numeric = 1j * (plus - minus) / (2 * dt) + lap
    exact = wavepacket_pde_rhs(v, t, grid, a)
    scale = max(np.max(np.abs(numeric)), np.max(np.abs(exact)))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(numeric - exact)) / scale)


def ray_comparison(u: ComplexField, gslice: GammaSlice) -> float:
    """``sup_v |u(t, 2tv) - t^{-d/2} e^{it|v|^2} gamma(t, v)|``.

    ``u`` is evaluated on the rays by trigonometric interpolation; the phase
    uses ``|2tv|^2 / 4t = t |v|^2`` exactly.
    """
    t = u.t
    if abs(gslice.t - t) > 1e-12 * max(1.0, t):
        raise ValueError("slice and field are at different times")
    targets = [2 * t * gslice.vgrid.nodes] * u.grid.d
    on_rays = evaluate_at(u, targets)
    approx = t ** (-u.grid.d / 2) * np.exp(1j * t * gslice.vgrid.speed2) * gslice.values
    return float(np.max(np.abs(on_rays - approx)))


def freq_comparison(u: ComplexField, gslice: GammaSlice) -> float:
    """``sup_xi |u_hat(t, xi) - e^{-it|xi|^2} NU gamma(t, xi)|`` on the velocity nodes."""
    t = u.t
    if abs(gslice.t - t) > 1e-12 * max(1.0, t):
        raise ValueError("slice and field are at different times")
    nodes = gslice.vgrid.nodes
    uhat = fourier_at(u, [nodes] * u.grid.d)
    approx = np.exp(-1j * t * gslice.vgrid.speed2) * nu(u.grid.d) * gslice.values
    return float(np.max(np.abs(uhat - approx)))


def velocity_derivative_norm(gslice: GammaSlice, beta: float) -> float:
    """``|| |grad_v|^beta gamma ||_{L^2_v}`` with a velocity-grid Fourier multiplier."""
    vg = gslice.vgrid
    k = 2 * np.pi * np.fft.fftfreq(vg.m, d=vg.dv)
    k2 = sum(np.reshape(k, [vg.m if i == ax else 1 for i in range(vg.d)]) ** 2
             for ax in range(vg.d))
    spec = np.fft.fftn(gslice.values)
    # discrete Parseval: sum |f|^2 dv^d = sum |F|^2 dv^d / m^d
    energy = np.sum(k2**beta * np.abs(spec) ** 2) * vg.cell_volume / vg.m**vg.d
    return float(np.sqrt(energy))


# -- bound constants -------------------------------------------------------


def holder_constant(d: int, beta: float) -> float:
    """``C_S`` in ``|f(x) - f(x-y)| <= C_S |y|^{beta-d/2} || |grad|^beta f ||_2``."""
    s = beta - d / 2
    if not 0 < s < 1:
        raise ValueError("need d/2 < beta < 1 + d/2")
    integral = 2 * math.pi ** (d / 2) * gamma_fn(1 - s) / (s * 4**s * gamma_fn(d / 2 + s))
    return (2 * math.pi) ** (-d / 2) * math.sqrt(integral)


def profile_moment(d: int, s: float, a: float = DEFAULT_WIDTH) -> float:
    """``int |z|^s theta(z) dz``."""
    return a ** (-s / 2) * gamma_fn((d + s) / 2) / gamma_fn(d / 2)


@dataclass(frozen=True)
class LemmaConstants:
    """Explicit constants for the four amplitude bounds at fixed ``d, beta, a``.

    * ``linf``: ``||gamma||_inf <= linf * t^{d/2} ||u||_inf``
    * ``l2``: ``||gamma||_{L^2_v} <= l2 * ||u||_2``
    * ``deriv``: ``|| |grad_v|^beta gamma ||_2 <= deriv * || |J|^beta u ||_2``
    * ``ray``: ray gap ``<= ray * t^{-beta/2-d/4} || |J|^beta u ||_2``
    * ``freq``: frequency gap ``<= freq * t^{d/4-beta/2} || |J|^beta u ||_2``
    """

    d: int
    beta: float
    a: float
    linf: float
    l2: float
    deriv: float
    ray: float
    freq: float


def lemma_constants(d: int, beta: float, a: float = DEFAULT_WIDTH,
                    grid: GridSpec | None = None) -> LemmaConstants:
    s = beta - d / 2
    cs = holder_constant(d, beta)
    ray = 2.0 ** (-beta) * profile_moment(d, s, a) * cs
    alpha = abs(a - 0.25j)
    rho = a / (4 * alpha**2)
    kernel_moment = (2 * alpha) ** (d / 2) * rho ** (-s / 2) * gamma_fn((d + s) / 2) / gamma_fn(d / 2)
    freq = cs * abs(nu(d)) * kernel_moment
    linf = 1.0
    if grid is not None:
        # Poisson summation bounds the discrete kernel mass at any shift for t >= 1
        k = np.arange(1, 6)
        linf = float((1 + 2 * np.sum(np.exp(-(np.pi * k) ** 2 / (a * grid.h**2)))) ** d)
    return LemmaConstants(d, beta, a, linf, 2.0 ** (-d / 2), 2.0 ** (-d / 2), ray, freq)
