"""Independent reference computations.

Nothing here calls the FFT paths being checked: closed-form Gaussian chains,
direct trigonometric sums and one-dimensional quadrature only.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate
from scipy.special import erf, j0
from scipy.special import gamma as gamma_fn

from .spectral import GridSpec


def free_gaussian(grid: GridSpec, t: float, a: float) -> np.ndarray:
    """``e^{it Delta} e^{-a|x|^2} = (1 + 4iat)^{-d/2} e^{-a|x|^2/(1 + 4iat)}``."""
    z = 1 + 4j * a * t
    return z ** (-grid.d / 2) * np.exp(-a * grid.r2 / z)


def heat_residual_free_gaussian(t: float, a: float, x: float, d: int = 2, dt: float = 1e-5) -> complex:
    """``i u_t + Delta u`` for the closed form, by differences along one axis; should vanish."""
    def u(tt, xx):
        z = 1 + 4j * a * tt
        return z ** (-d / 2) * np.exp(-a * xx**2 / z)

    ut = (u(t + dt, x) - u(t - dt, x)) / (2 * dt)
    dx = 1e-4
    # radial Laplacian in d dimensions evaluated at |x| = x
    urr = (u(t, x + dx) - 2 * u(t, x) + u(t, x - dx)) / dx**2
    ur = (u(t, x + dx) - u(t, x - dx)) / (2 * dx)
    return 1j * ut + urr + (d - 1) / x * ur


def gaussian_moment(d: int, p: float, b: float) -> float:
    """``int |x|^p e^{-b|x|^2} dx`` over R^d."""
    return math.pi ** (d / 2) / gamma_fn(d / 2) * gamma_fn((p + d) / 2) * b ** (-(p + d) / 2)


def gaussian_h0beta(d: int, beta: float, amp: float = 1.0, a: float = 1.0) -> float:
    """``||amp e^{-a|x|^2}||_2 + || |x|^beta amp e^{-a|x|^2} ||_2``."""
    return amp * (math.sqrt(gaussian_moment(d, 0, 2 * a)) + math.sqrt(gaussian_moment(d, 2 * beta, 2 * a)))


def coulomb_constant_quadrature(d: int, deltas=(0.2, 0.1, 0.05, 0.025)) -> float:
    """``c_d`` from the transform of ``e^{-delta r}/r`` at ``|xi| = 1``, extrapolated to 0.

    The radial transforms are evaluated by oscillatory quadrature; the
    transform is even in ``delta``, so the extrapolation is a polynomial fit
    in ``delta^2``.
    """
    vals = []
    for dl in deltas:
        if d == 3:
            # (2 pi)^{-3/2} 4 pi int_0^inf sin(r) e^{-dl r} dr
            part, _ = integrate.quad(lambda r: math.exp(-dl * r), 0, np.inf, weight="sin", wvar=1.0)
            vals.append((2 * math.pi) ** -1.5 * 4 * math.pi * part)
        elif d == 2:
            # (2 pi)^{-1} 2 pi int_0^inf J0(r) e^{-dl r} dr
            part, _ = integrate.quad(lambda r: j0(r) * math.exp(-dl * r), 0, 400 / dl, limit=4000)
            vals.append(part)
        else:
            raise ValueError("dimension must be 2 or 3")
    coef = np.polyfit(np.asarray(deltas) ** 2, np.asarray(vals), len(deltas) - 1)
    return float(coef[-1])


def periodic_kernel_matrix(grid: GridSpec) -> np.ndarray:
    """Dense matrix of the band-limited mean-zero periodic ``1/|x|`` kernel.

    ``K[j, i] = L^{-d} sum_{k != 0} (2 pi)^{d/2} c_d |xi_k|^{1-d} e^{i xi_k (x_j - x_i)}``,
    assembled from explicit exponentials (no FFT).
    """
    d = grid.d
    cd = 2 ** (d / 2 - 1) * gamma_fn((d - 1) / 2) / gamma_fn(0.5)
    xs = np.stack([m.ravel() for m in np.meshgrid(*([grid.x] * d), indexing="ij")], axis=1)
    ks = np.stack([m.ravel() for m in np.meshgrid(*([grid.xi] * d), indexing="ij")], axis=1)
    mod = np.linalg.norm(ks, axis=1)
    sym = np.zeros_like(mod)
    nz = mod > 0
    sym[nz] = (2 * math.pi) ** (d / 2) * cd * mod[nz] ** (1 - d)
    E = np.exp(1j * xs @ ks.T)
    return (E * sym) @ E.conj().T / grid.length**d


def hartree_direct(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """``V(x_j) = h^d sum_i K(x_j - x_i) |u(x_i)|^2`` with the dense kernel."""
    rho = (np.abs(values) ** 2).ravel()
    K = periodic_kernel_matrix(grid)
    return (grid.cell_volume * (K @ rho)).real.reshape(grid.shape)


def newtonian_gaussian_potential(r, mass: float, s: float):
    """Free-space ``|x|^-1 * rho`` in 3D for ``rho`` Gaussian with per-axis std ``s``."""
    r = np.asarray(r, dtype=float)
    return mass * erf(r / (math.sqrt(2) * s)) / r


def free_gaussian_gamma(t: float, v, a0: float, a: float = 1.0) -> complex:
    """``gamma(t, v)`` for ``u = e^{it Delta} e^{-a0|x|^2}`` by per-axis Gaussian integrals.

    Each axis contributes ``int (1+4i a0 t)^{-1/2} e^{-a0 x^2/(1+4i a0 t)}
    sqrt(a/pi) e^{-a (x - c)^2 / t} e^{-i x^2/4t} dx`` with ``c = 2 t v``.
    """
    z = 1 + 4j * a0 * t
    out = 1.0 + 0j
    for vi in np.atleast_1d(v):
        c = 2 * t * vi
        A = a0 / z + a / t + 1j / (4 * t)
        B = 2 * a * c / t
        C = -a * c**2 / t
        val = z ** -0.5 * math.sqrt(a / math.pi) * np.sqrt(np.pi / A) * np.exp(B**2 / (4 * A) + C)
        out *= val
    return complex(out)


def gaussian_hat(xi2, d: int, a0: float):
    """Unitary Fourier transform of ``e^{-a0|x|^2}``."""
    return (2 * a0) ** (-d / 2) * np.exp(-np.asarray(xi2) / (4 * a0))


def lorentz_distribution_form(values: np.ndarray, cell: float, p: float, q: float) -> float:
    """Lorentz norm via the distribution function ``d(s) = |{|u| > s}|``.

    ``||u||_{p,q}^q = p int_0^inf s^{q-1} d(s)^{q/p} ds``.  For a grid
    function ``d`` is a step function, so the integral is a finite sum over
    the sorted levels.
    """
    a = np.sort(np.abs(values).ravel())[::-1]
    a_next = np.append(a[1:], 0.0)
    j = np.arange(1, a.size + 1, dtype=float)
    if math.isinf(q):
        return float(np.max(a * (j * cell) ** (1 / p)))
    # on (a_{j+1}, a_j) the distribution function equals j * cell
    total = p / q * np.sum((j * cell) ** (q / p) * (a**q - a_next**q))
    return float(total ** (1 / q))


def velocity_coulomb_direct(rho: np.ndarray, nodes: np.ndarray, self_value: float) -> np.ndarray:
    """Brute-force ``dv^d sum_w rho(w) / |v - w|`` with a given self-cell value."""
    d = rho.ndim
    dv = nodes[1] - nodes[0]
    pts = np.stack([m.ravel() for m in np.meshgrid(*([nodes] * d), indexing="ij")], axis=1)
    diff = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    with np.errstate(divide="ignore"):
        K = np.where(diff > 0, 1.0 / diff, self_value)
    return (dv**d * K @ rho.ravel()).reshape(rho.shape)


def cell_average_quadrature(d: int, dv: float = 1.0) -> float:
    """Mean of ``1/|x|`` over ``[-dv/2, dv/2]^d`` by nested quadrature."""
    h = dv / 2
    if d == 2:
        val, _ = integrate.dblquad(lambda y, x: 1 / math.hypot(x, y), 0, h, 0, h, epsabs=1e-13)
        return 4 * val / dv**2
    val, _ = integrate.tplquad(lambda z, y, x: 1 / math.sqrt(x * x + y * y + z * z),
                               0, h, 0, h, 0, h, epsabs=1e-13)
    return 8 * val / dv**3
