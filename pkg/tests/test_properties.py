import math

import numpy as np
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from hartree_scattering.harness import COLUMNS, csv_to_rows, rows_to_csv
from hartree_scattering.norms import (
    interpolation_bound,
    interpolation_ratio,
    lorentz_norm,
    lp_norm,
    rearrangement,
)
from hartree_scattering.scattering import PhaseAccumulator, gauged_amplitude, update_phase
from hartree_scattering.spectral import (
    SPECTRAL,
    ComplexField,
    GridSpec,
    forward_transform,
    inverse_transform,
)
from hartree_scattering.wavepacket import GammaSlice, VelocityGrid

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def complex_arrays(shape):
    return st.tuples(arrays(float, shape, elements=finite), arrays(float, shape, elements=finite)).map(
        lambda p: p[0] + 1j * p[1])


grids = st.sampled_from([GridSpec(2, 8, 3.0), GridSpec(2, 16, 10.0), GridSpec(3, 8, 5.0)])


@st.composite
def fields(draw, nonzero=False):
    g = draw(grids)
    vals = draw(complex_arrays(g.shape))
    if nonzero and not np.any(vals):
        vals.flat[draw(st.integers(0, g.size - 1))] = 1.0
    return ComplexField(g, 0.0, vals)


@given(fields())
def test_parseval(f):
    g = f.grid
    a = lp_norm(f, 2)
    b = math.sqrt(np.sum(np.abs(forward_transform(f).values) ** 2) * g.dual_volume)
    assert abs(a - b) <= 1e-12 * max(a, 1e-300) + 1e-300


@given(fields())
def test_round_trips(f):
    back = inverse_transform(forward_transform(f)).values
    assert np.allclose(back, f.values, rtol=0, atol=1e-12 * max(1.0, np.abs(f.values).max()))
    spec = ComplexField(f.grid, 0, f.values, SPECTRAL)
    again = forward_transform(inverse_transform(spec)).values
    assert np.allclose(again, f.values, rtol=0, atol=1e-12 * max(1.0, np.abs(f.values).max()))


@given(fields(nonzero=True), st.floats(1.05, 6.0))
def test_lorentz_diagonal(f, p):
    a, b = lorentz_norm(f, p, p), lp_norm(f, p)
    assert abs(a - b) <= 1e-10 * b


@given(fields(nonzero=True), st.floats(1.1, 5.0), st.floats(1.0, 8.0), st.randoms(use_true_random=False))
def test_lorentz_rearrangement_invariance(f, p, q, rnd):
    perm = list(range(f.grid.size))
    rnd.shuffle(perm)
    h = f.with_values(f.values.ravel()[perm].reshape(f.grid.shape))
    assert lorentz_norm(f, p, q) == lorentz_norm(h, p, q)
    assert np.array_equal(rearrangement(f), rearrangement(h))


@given(fields(nonzero=True), st.floats(0.01, 100.0), st.floats(0, 2 * math.pi))
def test_interpolation_bound_and_scaling(f, lam, theta):
    r = interpolation_ratio(f)
    assert r <= interpolation_bound(f.grid.d) * (1 + 1e-12)
    r2 = interpolation_ratio(f.with_values(lam * np.exp(1j * theta) * f.values))
    assert abs(r2 - r) <= 1e-12 * r


vgrid = VelocityGrid(2, 8, 1.0)


@st.composite
def gamma_series(draw):
    n = draw(st.integers(2, 6))
    steps = draw(st.lists(st.floats(0.01, 3.0), min_size=n, max_size=n))
    times = 1.0 + np.concatenate([[0.0], np.cumsum(steps)])
    vals = [draw(complex_arrays(vgrid.shape)) for _ in times]
    return times, vals


@given(gamma_series(), st.sampled_from(["derived", "paper"]))
def test_gauge_modulus_and_phase_monotone(series, coupling):
    times, vals = series
    acc = PhaseAccumulator.start(GammaSlice(times[0], vgrid, vals[0]), coupling)
    prev = acc.phi
    for t, v in zip(times[1:], vals[1:]):
        sl = GammaSlice(t, vgrid, v)
        acc = update_phase(acc, sl)
        assert np.all(acc.phi >= prev)
        G = gauged_amplitude(sl, acc)
        assert np.allclose(np.abs(G), np.abs(v), rtol=1e-14, atol=1e-12)
        prev = acc.phi


row_values = st.one_of(finite, st.just(math.nan), st.floats(1e-300, 1e-290), st.integers(-10**6, 10**6).map(float))


@given(st.lists(st.fixed_dictionaries({c: row_values for c in COLUMNS}), max_size=5))
def test_csv_round_trip(rows):
    text = rows_to_csv(rows)
    header, back = csv_to_rows(text)
    assert header == list(COLUMNS)
    assert rows_to_csv(back) == text
    for a, b in zip(rows, back):
        for c in COLUMNS:
            assert (math.isnan(a[c]) and math.isnan(b[c])) or a[c] == b[c]
