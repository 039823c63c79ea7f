"""Time stepping for ``i u_t + Delta u = (|x|^-1 * |u|^2) u`` and the free-flow toolkit.

The integrator is potential-first Strang splitting.  Both sub-flows are
exact: the free flow is a Fourier multiplier and the potential flow is a
pointwise phase, because the potential only depends on ``|u|`` which the
phase preserves.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .spectral import (
    PHYSICAL,
    SPECTRAL,
    BoundaryWarning,
    ComplexField,
    GridSpec,
    _fft_forward,
    boundary_mass_fraction,
    fourier_at,
    gauge_rate,
    mass,
    potential_from_density,
)


class EvolutionAbort(RuntimeError):
    """The run cannot continue; ``record`` carries a machine-readable reason."""

    def __init__(self, reason: str, **record):
        super().__init__(f"{reason}: " + ", ".join(f"{k}={v}" for k, v in record.items()))
        self.reason = reason
        self.record = {"reason": reason, **record}


def free_propagate(u: ComplexField, dt: float) -> ComplexField:
    """Apply ``e^{i dt Delta}``, i.e. the multiplier ``e^{-i |xi|^2 dt}``."""
    grid = u.grid
    sym = np.exp(-1j * dt * grid.xi2)
    if u.space == SPECTRAL:
        return u.with_values(sym * u.values, t=u.t + dt)
    return u.with_values(np.fft.ifftn(sym * np.fft.fftn(u.values)), t=u.t + dt)


def modulate(u: ComplexField, t: float) -> ComplexField:
    """``M(t) u = e^{i |x|^2 / 4t} u``."""
    return u.with_values(np.exp(1j * u.grid.r2 / (4 * t)) * u.values)


class _Stepper:
    """Working-buffer Strang integrator shared by :func:`strang_step` and :func:`evolve`."""

    def __init__(self, grid: GridSpec, tau: float, nonlinear: float = 1.0):
        self.grid = grid
        self.tau = tau
        self.nonlinear = float(nonlinear)
        self._free = np.exp(-1j * tau * grid.xi2)

    def potential(self, u: np.ndarray) -> np.ndarray:
        if self.nonlinear == 0.0:
            return np.zeros(self.grid.shape)
        rho = u.real**2 + u.imag**2
        return self.nonlinear * potential_from_density(rho, self.grid)

    def kick(self, u: np.ndarray, pot: np.ndarray, dt: float) -> np.ndarray:
        if self.nonlinear == 0.0 or dt == 0.0:
            return u
        return u * np.exp(-1j * dt * pot)

    def drift(self, u: np.ndarray, dt: float | None = None) -> np.ndarray:
        sym = self._free if dt is None or dt == self.tau else np.exp(-1j * dt * self.grid.xi2)
        return np.fft.ifftn(sym * np.fft.fftn(u))

    def step(self, u: np.ndarray, dt: float | None = None) -> np.ndarray:
        dt = self.tau if dt is None else dt
        u = self.kick(u, self.potential(u), dt / 2)
        u = self.drift(u, dt)
        return self.kick(u, self.potential(u), dt / 2)


def strang_step(u: ComplexField, t: float | None = None, tau: float = 0.0,
                nonlinear: float = 1.0) -> ComplexField:
    """One potential-first Strang step of size ``tau`` starting at time ``t``."""
    if u.space != PHYSICAL:
        raise ValueError("strang_step expects a physical-space field")
    t = u.t if t is None else t
    if tau == 0:
        return u.with_values(u.values, t=t)
    stepper = _Stepper(u.grid, tau, nonlinear)
    return u.with_values(stepper.step(np.array(u.values)), t=t + tau)


def energy(u: ComplexField, nonlinear: float = 1.0) -> float:
    """Hamiltonian ``||grad u||^2 + 1/2 int (|x|^-1 * |u|^2) |u|^2`` in the grid gauge."""
    grid = u.grid
    spec = _fft_forward(u.values, grid)
    kinetic = float(np.sum(grid.xi2 * np.abs(spec) ** 2) * grid.dual_volume)
    if nonlinear == 0.0:
        return kinetic
    rho = np.abs(u.values) ** 2
    pot = potential_from_density(rho, grid)
    return kinetic + 0.5 * nonlinear * float(np.sum(pot * rho) * grid.cell_volume)


@dataclass
class EvolveConfig:
    """Parameters of one trajectory.

    Output cadences are in steps.  ``snapshot_times`` are converted to the
    nearest step and must lie on the step lattice.
    """

    grid: GridSpec
    datum: np.ndarray
    t0: float = 0.0
    t_end: float = 1.0
    tau: float = 0.01
    diag_every: int = 25
    diag_start: float = 1.0
    snapshot_times: Sequence[float] = ()
    nonlinear: float = 1.0
    mass_tol: float = 1e-8
    boundary_tol: float = 1e-6
    check_boundary: bool = True

    def __post_init__(self):
        if not self.t_end > self.t0:
            raise ValueError("t_end must exceed t0")
        if not self.tau > 0:
            raise ValueError("step must be positive")
        if self.diag_every < 1:
            raise ValueError("diagnostics cadence must be >= 1")
        self.datum = np.asarray(self.datum, dtype=np.complex128).reshape(self.grid.shape)

    def step_plan(self) -> tuple[int, float]:
        """Number of full steps and the length of a trailing partial step."""
        span = self.t_end - self.t0
        n_full = int(math.floor(span / self.tau + 1e-9))
        rest = span - n_full * self.tau
        if rest < 1e-9 * self.tau:
            rest = 0.0
        return n_full, rest

    def snapshot_steps(self) -> set[int]:
        steps = set()
        for ts in self.snapshot_times:
            n = round((ts - self.t0) / self.tau)
            if abs(self.t0 + n * self.tau - ts) > 1e-9 * max(1.0, abs(ts)):
                raise ValueError(f"snapshot time {ts} is not on the step lattice")
            steps.add(n)
        return steps


@dataclass
class Frame:
    step: int
    t: float
    field: ComplexField
    snapshot: bool
    diagnostic: bool
    mass: float
    gauge_rate: float
    extra: dict = field(default_factory=dict)


def evolve(cfg: EvolveConfig) -> Iterator[Frame]:
    """Integrate from ``t0`` to ``t_end`` and yield frames at the output cadences.

    Adjacent half kicks are fused between outputs.  The run aborts with
    :class:`EvolutionAbort` on non-finite values, mass drift beyond
    ``mass_tol`` or boundary-shell mass beyond ``boundary_tol``.
    """
    grid = cfg.grid
    stepper = _Stepper(grid, cfg.tau, cfg.nonlinear)
    n_full, rest = cfg.step_plan()
    n_total = n_full + (1 if rest else 0)
    snaps = cfg.snapshot_steps()
    u = cfg.datum.copy()
    m0 = mass(u, grid)

    def time_of(n: int) -> float:
        return cfg.t_end if (rest and n == n_total) else cfg.t0 + n * cfg.tau

    def wants_output(n: int) -> tuple[bool, bool]:
        t = time_of(n)
        is_snap = n in snaps or n == n_total
        is_diag = (t >= cfg.diag_start - 1e-12 and (n % cfg.diag_every == 0)) or n == n_total
        return is_snap, is_diag

    def frame(n: int, is_snap: bool, is_diag: bool) -> Frame:
        t = time_of(n)
        if not np.all(np.isfinite(u)):
            raise EvolutionAbort("non-finite values", t=t, step=n)
        m = mass(u, grid)
        drift = abs(m - m0) / m0 if m0 > 0 else 0.0
        if drift > cfg.mass_tol:
            raise EvolutionAbort("mass drift", t=t, step=n, drift=drift)
        if cfg.check_boundary:
            shell = boundary_mass_fraction(u, grid)
            if shell > cfg.boundary_tol:
                raise EvolutionAbort("boundary breach", t=t, step=n, shell_mass=shell)
        return Frame(n, t, ComplexField(grid, t, u), is_snap, is_diag, m, gauge_rate(m, grid) * cfg.nonlinear)

    is_snap, is_diag = wants_output(0)
    if is_snap or is_diag:
        yield frame(0, is_snap, is_diag)

    pot = stepper.potential(u)
    u = stepper.kick(u, pot, cfg.tau / 2 if n_full else rest / 2)
    for n in range(1, n_total + 1):
        dt = cfg.tau if n <= n_full else rest
        u = stepper.drift(u, dt)
        pot = stepper.potential(u)
        if n == n_total:
            u = stepper.kick(u, pot, dt / 2)
            yield frame(n, *wants_output(n))
            break
        next_dt = cfg.tau if n + 1 <= n_full else rest
        is_snap, is_diag = wants_output(n)
        if is_snap or is_diag:
            u = stepper.kick(u, pot, dt / 2)
            yield frame(n, is_snap, is_diag)
            u = stepper.kick(u, pot, next_dt / 2)
        else:
            u = stepper.kick(u, pot, (dt + next_dt) / 2)


def integrate(grid: GridSpec, datum: np.ndarray, t_end: float, tau: float,
              nonlinear: float = 1.0, t0: float = 0.0, check_boundary: bool = True) -> ComplexField:
    """Final state of :func:`evolve` without intermediate output."""
    cfg = EvolveConfig(grid, datum, t0=t0, t_end=t_end, tau=tau, diag_every=10**12,
                       diag_start=math.inf, nonlinear=nonlinear, check_boundary=check_boundary)
    last = None
    for last in evolve(cfg):
        pass
    return last.field


def galilean_weight(u: ComplexField, t: float, beta: float) -> ComplexField:
    """``|J|^beta(t) u = M(t) (-4 t^2 Delta)^{beta/2} M(-t) u``."""
    if not t > 0:
        raise ValueError("|J|^beta needs t > 0")
    if not 0 <= beta <= 3:
        raise ValueError("beta must lie in [0, 3]")
    if beta == 0:
        return u
    grid = u.grid
    chirp = np.exp(1j * grid.r2 / (4 * t))
    w = np.conj(chirp) * u.values
    sym = (2 * t * np.sqrt(grid.xi2)) ** beta
    return u.with_values(chirp * np.fft.ifftn(sym * np.fft.fftn(w)))


def _dilation_lookup(grid: GridSpec, t: float) -> int | None:
    # x_j / 2t hits the lattice exactly when h / 2t is an integer multiple of 2 pi / L
    ratio = grid.h * grid.length / (4 * np.pi * t)
    r = round(ratio)
    if r >= 1 and abs(ratio - r) < 1e-12 * ratio and r * (grid.n // 2) <= grid.n // 2:
        return r
    return None


def mdfm_apply(u: ComplexField, t: float) -> ComplexField:
    """Evaluate ``M(t) D(t) F M(t) u`` with ``D(t) f(x) = (2 i t)^{-d/2} f(x / 2t)``.

    When ``x / 2t`` lands on the frequency lattice the transform is read off
    directly; otherwise the Fourier quadrature is evaluated at the dilated
    points.
    """
    if not t > 0:
        raise ValueError("the factorisation needs t > 0")
    grid = u.grid
    g = modulate(u, t)
    if np.max(np.abs(grid.x)) / (2 * t) > grid.nyquist:
        warnings.warn("dilated grid exceeds the resolvable frequency band", BoundaryWarning,
                      stacklevel=2)
    if _dilation_lookup(grid, t) == 1:
        spec = np.fft.fftshift(_fft_forward(g.values, grid))
    else:
        pts = grid.x / (2 * t)
        spec = fourier_at(g, [pts] * grid.d)
    pref = (2j * t) ** (-grid.d / 2)
    out = pref * np.exp(1j * grid.r2 / (4 * t)) * spec
    return u.with_values(out, t=u.t + t)


def mdfm_check(u: ComplexField, t: float) -> float:
    """Sup-norm gap between ``e^{it Delta} u`` and its MDFM factorisation."""
    a = free_propagate(u, t).values
    b = mdfm_apply(u, t).values
    return float(np.max(np.abs(a - b))) if a.size else 0.0
