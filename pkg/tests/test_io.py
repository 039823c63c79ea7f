import numpy as np
import pytest
from hypothesis import given, strategies as st

from hartree_scattering.io import (
    HEADER,
    FormatError,
    read_field,
    read_gamma,
    read_gamma_history,
    read_profile,
    write_field,
    write_gamma,
    write_gamma_history,
    write_profile,
)
from hartree_scattering.scattering import ScatteringProfile
from hartree_scattering.spectral import PHYSICAL, SPECTRAL, ComplexField, GridSpec
from hartree_scattering.wavepacket import GammaSlice, VelocityGrid


def _cvals(shape, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@given(st.sampled_from([(2, 8), (2, 16), (3, 8)]), st.floats(0.5, 100), st.floats(0, 60),
       st.sampled_from([PHYSICAL, SPECTRAL]), st.integers(0, 10**6))
def test_field_round_trip(tmp_path_factory, dn, L, t, space, seed):
    d, n = dn
    g = GridSpec(d, n, L)
    u = ComplexField(g, t, _cvals(g.shape, seed), space)
    path = write_field(tmp_path_factory.mktemp("f") / "u.bin", u)
    assert path.stat().st_size == HEADER.size + 16 * g.size
    back = read_field(path)
    assert back.grid == g and back.t == t and back.space == space
    assert np.array_equal(back.values, u.values)


def test_header_layout(tmp_path):
    g = GridSpec(2, 8, 4.0)
    path = write_field(tmp_path / "u.bin", ComplexField(g, 1.5, np.ones(g.shape)))
    raw = path.read_bytes()
    assert raw[:8] == b"HNLSSNAP"
    assert HEADER.unpack_from(raw) == (b"HNLSSNAP", 1, 0, 0, 2, 8, 4.0, 1.5)
    # first payload value: real then imaginary part
    assert np.frombuffer(raw, "<f8", 2, HEADER.size).tolist() == [1.0, 0.0]


def test_gamma_and_history_round_trip(tmp_path):
    vg = VelocityGrid(2, 6, 1.5)
    slices = [GammaSlice(t, vg, _cvals(vg.shape, i)) for i, t in enumerate((1.0, 1.25, 2.0))]
    one = read_gamma(write_gamma(tmp_path / "g.bin", slices[0]))
    assert one.t == 1.0 and one.vgrid == vg and np.array_equal(one.values, slices[0].values)
    hist = read_gamma_history(write_gamma_history(tmp_path / "h.bin", slices))
    assert [h.t for h in hist] == [1.0, 1.25, 2.0]
    assert all(np.array_equal(a.values, b.values) for a, b in zip(hist, slices))


def test_profile_round_trip(tmp_path):
    vg = VelocityGrid(3, 4, 0.8)
    prof = ScatteringProfile(vg, 50.0, _cvals(vg.shape, 1), _cvals(vg.shape, 2), 0.01, 0.02,
                             -0.003, "paper")
    back = read_profile(write_profile(tmp_path / "p.bin", prof))
    assert (back.T, back.tail, back.tail_prev, back.gauge_rate, back.coupling) == (50.0, 0.01, 0.02, -0.003, "paper")
    assert np.array_equal(back.W, prof.W) and np.array_equal(back.W0, prof.W0)


def test_format_errors(tmp_path):
    g = GridSpec(2, 8, 4.0)
    path = write_field(tmp_path / "u.bin", ComplexField(g, 0, np.ones(g.shape)))
    raw = path.read_bytes()
    (tmp_path / "short.bin").write_bytes(raw[:20])
    (tmp_path / "trunc.bin").write_bytes(raw[:-8])
    (tmp_path / "magic.bin").write_bytes(b"XXXXXXXX" + raw[8:])
    (tmp_path / "version.bin").write_bytes(raw[:8] + (7).to_bytes(4, "little") + raw[12:])
    for name in ("short", "trunc", "magic", "version"):
        with pytest.raises(FormatError):
            read_field(tmp_path / f"{name}.bin")
    with pytest.raises(FormatError):
        read_gamma(path)
