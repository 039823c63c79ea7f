"""scikit-learn style wrappers around the fitting and extraction steps.

Only the stateless-in, fitted-attributes-out parts of the pipeline fit the
estimator shape.  Time integration stays a plain function (``harness.run``).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .harness import fit_power_law
from .scattering import extract_profile
from .spectral import ComplexField
from .wavepacket import DEFAULT_WIDTH, VelocityGrid, gamma_batch


class PowerLawRegressor(RegressorMixin, BaseEstimator):
    """``y ~ exp(intercept) t^slope`` by least squares in log-log coordinates.

    ``X`` is a column of times (shape ``(n, 1)`` or ``(n,)``).
    """

    def __init__(self, window=None, min_samples: int = 8):
        self.window = window
        self.min_samples = min_samples

    def fit(self, X, y):
        t = np.asarray(X, dtype=float).reshape(len(y), -1)[:, 0]
        fit = fit_power_law(t, y, self.window, self.min_samples)
        self.slope_ = fit.slope
        self.intercept_ = fit.intercept
        self.residual_ = fit.residual
        self.n_samples_fit_ = fit.n
        return self

    def predict(self, X):
        check_is_fitted(self, "slope_")
        t = np.asarray(X, dtype=float).reshape(-1)
        return np.exp(self.intercept_) * t**self.slope_

    def score(self, X, y, sample_weight=None):
        # R^2 in log space, which is what the fit minimises
        check_is_fitted(self, "slope_")
        t = np.asarray(X, dtype=float).reshape(-1)
        ly = np.log(np.asarray(y, dtype=float))
        pred = self.intercept_ + self.slope_ * np.log(t)
        ss = np.sum((ly - ly.mean()) ** 2)
        return 1.0 - np.sum((ly - pred) ** 2) / ss if ss > 0 else 1.0


class WavepacketTransformer(TransformerMixin, BaseEstimator):
    """Maps physical snapshots to flattened ``gamma(t, v)`` on a velocity grid."""

    def __init__(self, n_velocities: int = 32, v_max: float = 2.0, width: float = DEFAULT_WIDTH):
        self.n_velocities = n_velocities
        self.v_max = v_max
        self.width = width

    def fit(self, X, y=None):
        fields = list(X)
        if not fields:
            raise ValueError("need at least one snapshot")
        if not all(isinstance(f, ComplexField) for f in fields):
            raise TypeError("X must be a sequence of ComplexField snapshots")
        self.d_ = fields[0].grid.d
        self.vgrid_ = VelocityGrid(self.d_, self.n_velocities, self.v_max)
        return self

    def transform(self, X):
        check_is_fitted(self, "vgrid_")
        rows = []
        for f in X:
            if f.grid.d != self.d_:
                raise ValueError("snapshot dimension differs from the fitted one")
            rows.append(gamma_batch(f, self.vgrid_, self.width).values.ravel())
        return np.array(rows)


class ScatteringProfileEstimator(BaseEstimator):
    """Fits the asymptotic profile from a gauged-amplitude series.

    ``fit(times, G)`` takes increasing times and the matching gauged
    amplitudes (shape ``(n_times, M, ..., M)``); the last time is ``T`` and
    ``T/2``, ``T/4`` must be among the samples.
    """

    def __init__(self, n_velocities: int = 32, v_max: float = 2.0, coupling: str = "derived",
                 gauge_rate: float = 0.0):
        self.n_velocities = n_velocities
        self.v_max = v_max
        self.coupling = coupling
        self.gauge_rate = gauge_rate

    def fit(self, X, y):
        times = np.asarray(X, dtype=float).reshape(-1)
        G = np.asarray(y)
        if G.shape[0] != times.size:
            raise ValueError("one amplitude slice per time")
        vg = VelocityGrid(G.ndim - 1, self.n_velocities, self.v_max)
        if G.shape[1:] != vg.shape:
            raise ValueError(f"slices must have shape {vg.shape}")
        T = times[-1]
        idx = [int(np.argmin(np.abs(times - s))) for s in (T / 4, T / 2, T)]
        if any(abs(times[i] - s) > 1e-9 * T for i, s in zip(idx, (T / 4, T / 2, T))):
            raise ValueError("the series must contain T/4, T/2 and T")
        self.profile_ = extract_profile(times[idx], [G[i] for i in idx], vg,
                                        coupling=self.coupling, gauge_rate=self.gauge_rate)
        self.accepted_ = self.profile_.accepted
        return self

    def predict(self, X=None):
        check_is_fitted(self, "profile_")
        return self.profile_.W
