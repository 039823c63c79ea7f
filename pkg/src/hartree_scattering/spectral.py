"""Periodic grids, unitary Fourier transforms and the Coulomb potential.

Grid functions live on the cube ``[-L/2, L/2)^d`` sampled with ``N`` points
per axis.  Spectral values are stored in numpy FFT order on the lattice
``xi_k = 2 pi k / L``.  The discrete transforms

    F[f](xi)   = (2 pi)^{-d/2} h^d          sum_x e^{-i x.xi} f(x)
    F^-1[g](x) = (2 pi)^{-d/2} (2 pi / L)^d sum_xi e^{ i x.xi} g(xi)

are exact inverses of each other and converge to the unitary continuum
transform as ``h -> 0`` and ``L -> infinity``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import erfc, gamma as gamma_fn

PHYSICAL = "physical"
SPECTRAL = "spectral"

# fraction of the box (per axis, measured from the edge) treated as the
# boundary shell when monitoring wrap-around
BOUNDARY_SHELL = 0.05
# fraction of the Nyquist band treated as the outer frequency shell
FREQUENCY_SHELL = 0.10


class AliasingWarning(UserWarning):
    """Raised when a density carries noticeable weight near the Nyquist band."""


class BoundaryWarning(UserWarning):
    """Raised when a field leaks into the outer shell of the periodic box."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid in ``d`` dimensions with ``n`` points per axis."""

    d: int
    n: int
    length: float

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"points per axis must be a power of two >= 8, got {self.n}")
        if not self.length > 0:
            raise ValueError(f"box length must be positive, got {self.length}")
        object.__setattr__(self, "length", float(self.length))

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    @property
    def dual_volume(self) -> float:
        return (2 * np.pi / self.length) ** self.d

    @property
    def nyquist(self) -> float:
        return np.pi / self.h

    @cached_property
    def x(self) -> np.ndarray:
        """Cell coordinates along one axis, ``-L/2 + j h``."""
        return -self.length / 2 + self.h * np.arange(self.n)

    @cached_property
    def k(self) -> np.ndarray:
        """Integer wavenumbers along one axis in FFT order, in ``[-N/2, N/2)``."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).round().astype(int)

    @cached_property
    def xi(self) -> np.ndarray:
        """Angular frequencies along one axis in FFT order."""
        return 2 * np.pi * self.k / self.length

    def axes(self, which: str = "x") -> list[np.ndarray]:
        """Broadcastable (sparse) coordinate arrays, one per axis."""
        base = self.x if which == "x" else self.xi
        out = []
        for i in range(self.d):
            shape = [1] * self.d
            shape[i] = self.n
            out.append(base.reshape(shape))
        return out

    @cached_property
    def r2(self) -> np.ndarray:
        """``|x|^2`` on the grid."""
        return sum(a**2 for a in self.axes("x"))

    @cached_property
    def xi2(self) -> np.ndarray:
        """``|xi|^2`` on the frequency lattice (FFT order)."""
        return sum(a**2 for a in self.axes("xi"))

    @cached_property
    def _phase_sign(self) -> np.ndarray:
        # e^{-i x_0 xi_k} with x_0 = -L/2 reduces to (-1)^k per axis
        s = np.where(self.k % 2 == 0, 1.0, -1.0)
        out = np.ones(self.shape)
        for i in range(self.d):
            shape = [1] * self.d
            shape[i] = self.n
            out = out * s.reshape(shape)
        return out

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        edge = (0.5 - BOUNDARY_SHELL) * self.length
        mask = np.zeros(self.shape, dtype=bool)
        for a in self.axes("x"):
            mask = mask | (np.abs(a) >= edge)
        return mask

    @cached_property
    def frequency_shell_mask(self) -> np.ndarray:
        edge = (1 - FREQUENCY_SHELL) * self.nyquist
        mask = np.zeros(self.shape, dtype=bool)
        for a in self.axes("xi"):
            mask = mask | (np.abs(a) >= edge)
        return mask

    def describe(self) -> dict[str, object]:
        return {"d": self.d, "n": self.n, "length": self.length, "h": self.h}


def make_grid(d: int, n: int, length: float) -> GridSpec:
    return GridSpec(int(d), int(n), float(length))


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Immutable complex grid function tagged with its simulation time."""

    grid: GridSpec
    t: float
    values: np.ndarray = field(repr=False)
    space: str = PHYSICAL

    def __post_init__(self):
        if self.space not in (PHYSICAL, SPECTRAL):
            raise ValueError(f"unknown space {self.space!r}")
        vals = np.array(self.values, dtype=np.complex128)
        if vals.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} values, got {vals.size}")
        vals = vals.reshape(self.grid.shape)
        if not np.all(np.isfinite(vals)):
            raise FloatingPointError("field contains non-finite values")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "t", float(self.t))

    def with_values(self, values, t: float | None = None, space: str | None = None) -> ComplexField:
        return ComplexField(
            self.grid, self.t if t is None else t, values, self.space if space is None else space
        )

    @property
    def is_physical(self) -> bool:
        return self.space == PHYSICAL


def _fft_forward(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    scale = (2 * np.pi) ** (-grid.d / 2) * grid.cell_volume
    return scale * grid._phase_sign * np.fft.fftn(values)


def _fft_inverse(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    scale = (2 * np.pi) ** (-grid.d / 2) * grid.dual_volume * grid.size
    return scale * np.fft.ifftn(grid._phase_sign * values)


def forward_transform(f: ComplexField) -> ComplexField:
    if f.space != PHYSICAL:
        raise ValueError("forward_transform expects a physical-space field")
    return f.with_values(_fft_forward(f.values, f.grid), space=SPECTRAL)


def inverse_transform(g: ComplexField) -> ComplexField:
    if g.space != SPECTRAL:
        raise ValueError("inverse_transform expects a spectral-space field")
    return g.with_values(_fft_inverse(g.values, g.grid), space=PHYSICAL)


def multiplier_array(grid: GridSpec, m: Callable[..., np.ndarray]) -> np.ndarray:
    """Evaluate symbol ``m(xi_1, ..., xi_d)`` on the lattice (FFT order)."""
    vals = np.broadcast_to(np.asarray(m(*grid.axes("xi")), dtype=np.complex128), grid.shape)
    if not np.all(np.isfinite(vals)):
        raise ValueError("multiplier is not finite on the frequency lattice")
    return vals


def apply_multiplier(f: ComplexField, m: Callable[..., np.ndarray]) -> ComplexField:
    """Multiply the spectrum of ``f`` by ``m(xi)``; returns a field in ``f``'s space.

    ``m`` is called with one broadcastable array per axis.
    """
    sym = multiplier_array(f.grid, m)
    if f.space == SPECTRAL:
        return f.with_values(sym * f.values)
    # the phase and scale factors of the unitary transforms cancel here
    return f.with_values(np.fft.ifftn(sym * np.fft.fftn(f.values)))


def coulomb_constant(d: int) -> float:
    """Riesz constant with ``F[|x|^-1](xi) = c_d |xi|^{1-d}`` (unitary convention)."""
    alpha = 1.0
    return 2 ** (d / 2 - alpha) * gamma_fn((d - alpha) / 2) / gamma_fn(alpha / 2)


def coulomb_multiplier(xi, d: int) -> np.ndarray | float:
    """``c_d |xi|^{1-d}`` with the zero mode set to 0.

    ``xi`` is a frequency vector, or an array whose last axis has length ``d``.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != d:
        raise ValueError(f"frequency vectors must have {d} components")
    mod = np.sqrt(np.sum(xi**2, axis=-1))
    with np.errstate(divide="ignore"):
        out = np.where(mod > 0, coulomb_constant(d) * mod ** (1.0 - d), 0.0)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=16)
def _coulomb_symbol(grid: GridSpec, real: bool) -> np.ndarray:
    # convolution theorem for the unitary transform carries (2 pi)^{d/2}
    # built from integer wavenumbers so equal |k|^2 give bitwise equal values
    ks = []
    for i in range(grid.d):
        k = grid.k if not (real and i == grid.d - 1) else np.arange(grid.n // 2 + 1)
        shape = [1] * grid.d
        shape[i] = k.size
        ks.append(k.reshape(shape))
    k2 = sum(k**2 for k in ks)
    mod2 = (2 * np.pi / grid.length) ** 2 * k2.astype(float)
    with np.errstate(divide="ignore"):
        sym = np.where(k2 > 0, mod2 ** ((1.0 - grid.d) / 2), 0.0)
    sym = (2 * np.pi) ** (grid.d / 2) * coulomb_constant(grid.d) * sym
    sym.flags.writeable = False
    return sym


def coulomb_symbol(grid: GridSpec, real: bool = False) -> np.ndarray:
    """Full convolution symbol ``(2 pi)^{d/2} c_d |xi|^{1-d}`` on the lattice.

    With ``real=True`` the half lattice used by ``rfftn`` is returned.
    """
    return _coulomb_symbol(grid, real)


def potential_from_density(rho: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Fast real-to-real evaluation of ``|x|^-1 * rho`` (zero-mode gauge)."""
    sym = coulomb_symbol(grid, real=True)
    return np.fft.irfftn(sym * np.fft.rfftn(rho), s=grid.shape, axes=tuple(range(grid.d)))


def frequency_shell_fraction(rho: np.ndarray, grid: GridSpec) -> float:
    spec = np.abs(np.fft.fftn(rho)) ** 2
    total = spec.sum()
    if total == 0:
        return 0.0
    return float(spec[grid.frequency_shell_mask].sum() / total)


def boundary_mass_fraction(values: np.ndarray, grid: GridSpec) -> float:
    dens = np.abs(values) ** 2
    total = dens.sum()
    if total == 0:
        return 0.0
    return float(dens[grid.boundary_mask].sum() / total)


def hartree_potential(u: ComplexField, alias_threshold: float = 0.01) -> ComplexField:
    """Hartree potential ``|x|^-1 * |u|^2`` as a real physical-space field.

    The lattice zero mode is dropped, which fixes the potential up to the
    additive constant tracked by :func:`gauge_rate`.
    """
    if u.space != PHYSICAL:
        raise ValueError("hartree_potential expects a physical-space field")
    grid = u.grid
    rho = np.abs(u.values) ** 2
    shell = frequency_shell_fraction(rho, grid)
    if shell > alias_threshold:
        warnings.warn(
            f"{shell:.2%} of the density spectrum lies in the outer frequency shell",
            AliasingWarning,
            stacklevel=2,
        )
    sym = coulomb_symbol(grid)
    pot = np.fft.ifftn(sym * np.fft.fftn(rho))
    peak = np.max(np.abs(pot.real))
    if peak > 0 and np.max(np.abs(pot.imag)) > 1e-12 * peak:
        raise FloatingPointError("potential has a spurious imaginary part")
    return u.with_values(pot.real)


@lru_cache(maxsize=None)
def lattice_offset(d: int, alpha: float = 2.0, cutoff: int = 8) -> float:
    """Constant ``Z_d`` with ``K_per(x) = 1/|x| + Z_d / L + O(|x|^2)`` near 0.

    ``K_per`` is the mean-zero periodisation of ``1/|x|`` on a box of side
    ``L``.  Computed by Ewald splitting on the unit box.
    """
    rng = np.arange(-cutoff, cutoff + 1)
    mesh = np.meshgrid(*([rng] * d), indexing="ij")
    n = np.sqrt(sum(m.astype(float) ** 2 for m in mesh)).ravel()
    n = n[n > 0]
    real = np.sum(erfc(alpha * n) / n)
    k = 2 * np.pi * n
    if d == 3:
        recip = np.sum(4 * np.pi * np.exp(-(k**2) / (4 * alpha**2)) / k**2)
        background = np.pi / alpha**2
    else:
        recip = np.sum(2 * np.pi / k * erfc(k / (2 * alpha)))
        background = 2 * np.sqrt(np.pi) / alpha
    return float(real + recip - background - 2 * alpha / np.sqrt(np.pi))


def gauge_rate(mass: float, grid: GridSpec) -> float:
    """Constant ``c`` with ``V_continuum ~ V_grid + c`` on the support of ``u``.

    It enters the dynamics as the global phase ``exp(-i c t)``.
    """
    return -lattice_offset(grid.d) * mass / grid.length


def mass(values: np.ndarray, grid: GridSpec) -> float:
    return float(np.sum(np.abs(values) ** 2) * grid.cell_volume)


def _interp_matrix(grid: GridSpec, targets: np.ndarray) -> np.ndarray:
    # trigonometric interpolant on the symmetric band; Nyquist mode as a cosine
    targets = np.asarray(targets, dtype=float)
    arg = np.outer(targets - grid.x[0], grid.xi)
    mat = np.exp(1j * arg)
    nyq = np.nonzero(grid.k == -grid.n // 2)[0][0]
    mat[:, nyq] = np.cos(arg[:, nyq])
    return mat / grid.n


def _contract(values: np.ndarray, mats: Sequence[np.ndarray]) -> np.ndarray:
    out = values
    for axis, mat in enumerate(mats):
        out = np.moveaxis(np.tensordot(mat, out, axes=([1], [axis])), 0, axis)
    return out


def evaluate_at(u: ComplexField, targets: Sequence[np.ndarray]) -> np.ndarray:
    """Trigonometric interpolation of a physical field on a tensor grid.

    ``targets`` gives one coordinate array per axis; the result has shape
    ``(len(targets[0]), ..., len(targets[d-1]))``.
    """
    if u.space != PHYSICAL:
        raise ValueError("evaluate_at expects a physical-space field")
    mats = [_interp_matrix(u.grid, t) for t in targets]
    return _contract(np.fft.fftn(u.values), mats)


def fourier_at(u: ComplexField, targets: Sequence[np.ndarray]) -> np.ndarray:
    """Quadrature ``(2 pi)^{-d/2} h^d sum_x e^{-i x.xi} u(x)`` at arbitrary ``xi``.

    Evaluated on the tensor grid spanned by ``targets`` (one array per axis).
    """
    if u.space != PHYSICAL:
        raise ValueError("fourier_at expects a physical-space field")
    grid = u.grid
    w = grid.h / math.sqrt(2 * np.pi)
    mats = [w * np.exp(-1j * np.outer(np.asarray(t, dtype=float), grid.x)) for t in targets]
    return _contract(u.values, mats)
