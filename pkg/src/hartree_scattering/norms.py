"""Grid norms: L^p, Lorentz L^{p,q} by rearrangement, H^{0,beta} and ||J^beta u||.

The Lorentz norm uses the standard rearrangement definition
``||u||_{p,q} = (int_0^inf (m^{1/p} u*(m))^q dm/m)^{1/q}``.  For a grid
function ``u*`` is a step function with steps of width ``mu = h^d``, which
makes the integral a finite sum.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .propagator import free_propagate, galilean_weight
from .spectral import PHYSICAL, BoundaryWarning, ComplexField, boundary_mass_fraction


def _physical(u: ComplexField):
    if u.space != PHYSICAL:
        raise ValueError("norms are evaluated on physical-space fields")


def lp_norm(u: ComplexField, p: float) -> float:
    _physical(u)
    if not p >= 1:
        raise ValueError("p must be >= 1")
    mod = np.abs(u.values)
    if math.isinf(p):
        return float(mod.max())
    if p == 2:
        return float(math.sqrt(np.sum(mod**2) * u.grid.cell_volume))
    return float((np.sum(mod**p) * u.grid.cell_volume) ** (1 / p))


def rearrangement(u: ComplexField) -> np.ndarray:
    """Cell values of ``|u|`` sorted in decreasing order."""
    return np.sort(np.abs(u.values), axis=None)[::-1]


def lorentz_norm(u: ComplexField, p: float, q: float) -> float:
    """Exact Lorentz (quasi)norm of the piecewise constant grid function.

    With ``a_j`` the sorted values and ``mu`` the cell measure,
    ``||u||^q = (p/q) mu^{q/p} sum_j a_j^q (j^{q/p} - (j-1)^{q/p})`` and the
    ``q = inf`` branch is ``max_j a_j (j mu)^{1/p}``.
    """
    _physical(u)
    if not 1 < p < math.inf:
        raise ValueError("p must lie in (1, inf)")
    if not q >= 1:
        raise ValueError("q must be >= 1")
    a = rearrangement(u)
    mu = u.grid.cell_volume
    j = np.arange(1, a.size + 1, dtype=float)
    if math.isinf(q):
        return float(np.max(a * (j * mu) ** (1 / p)))
    r = q / p
    weights = j**r - (j - 1) ** r
    total = (p / q) * mu**r * np.sum(a**q * weights)
    return float(total ** (1 / q))


def weighted_sobolev_norm(u: ComplexField, t: float, beta: float,
                          shell_tol: float = 1e-6) -> float:
    """``||e^{-it Delta} u||_{H^{0,beta}} = ||u||_2 + || |x|^beta e^{-it Delta} u ||_2``."""
    _physical(u)
    if t < 0:
        raise ValueError("t must be >= 0")
    back = free_propagate(u, -t) if t else u
    if t and boundary_mass_fraction(back.values, u.grid) > shell_tol:
        warnings.warn("back-propagated field reaches the boundary shell", BoundaryWarning,
                      stacklevel=2)
    grid = u.grid
    weight = grid.r2 ** (beta / 2)
    moment = math.sqrt(np.sum(np.abs(weight * back.values) ** 2) * grid.cell_volume)
    return lp_norm(u, 2) + moment


def jbeta_norm(u: ComplexField, t: float, beta: float) -> float:
    """``|| |J|^beta(t) u ||_2``."""
    return lp_norm(galilean_weight(u, t, beta), 2)


def jbeta_norm_free(u: ComplexField, t: float, beta: float) -> float:
    """Same quantity via ``|| |x|^beta e^{-it Delta} u ||_2``."""
    back = free_propagate(u, -t)
    return float(math.sqrt(np.sum(u.grid.r2**beta * np.abs(back.values) ** 2) * u.grid.cell_volume))


def interpolation_exponent(d: int) -> float:
    return 2 * d / (d - 1)


def interpolation_ratio(u: ComplexField, d: int | None = None) -> float:
    """``||u||_{L^{2d/(d-1),2}} / (||u||_2^{(d-1)/d} ||u||_inf^{1/d})``."""
    d = u.grid.d if d is None else d
    linf = lp_norm(u, math.inf)
    if linf == 0:
        raise ValueError("interpolation ratio of the zero field is undefined")
    num = lorentz_norm(u, interpolation_exponent(d), 2)
    return num / (lp_norm(u, 2) ** ((d - 1) / d) * linf ** (1 / d))


def interpolation_bound(d: int) -> float:
    """Sharp constant for the ratio: ``sqrt(d / (d - 1))``.

    For ``p = 2d/(d-1)``, ``q = 2`` the norm squared is ``int u*(m)^2
    m^{-1/d} dm``.  The weight decreases, so under ``u* <= ||u||_inf`` and
    fixed ``||u||_2`` the integral is largest when ``u*`` is the maximal
    value on ``[0, ||u||_2^2 / ||u||_inf^2]`` (bathtub principle).  Grid
    functions are a special case.
    """
    return math.sqrt(d / (d - 1))


@dataclass
class NormReport:
    t: float
    l2: float
    linf: float
    lorentz: float
    h0beta: float
    jbeta: float
    ratio: float
    boundary_mass: float
    gauge: float

    def as_dict(self) -> dict:
        return asdict(self)


def norm_report(u: ComplexField, beta: float, gauge: float = 0.0) -> NormReport:
    t = u.t
    d = u.grid.d
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryWarning)
        h0b = weighted_sobolev_norm(u, t, beta)
    linf = lp_norm(u, math.inf)
    return NormReport(
        t=t,
        l2=lp_norm(u, 2),
        linf=linf,
        lorentz=lorentz_norm(u, interpolation_exponent(d), 2),
        h0beta=h0b,
        jbeta=jbeta_norm(u, t, beta) if t > 0 else float("nan"),
        ratio=interpolation_ratio(u) if linf > 0 else float("nan"),
        boundary_mass=boundary_mass_fraction(u.values, u.grid),
        gauge=gauge,
    )
