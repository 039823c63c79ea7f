"""Binary snapshot, gamma-slice and profile files.

All three share a fixed little-endian header followed by raw complex128
data (interleaved real/imag float64, row-major)::

    offset size  field
    0      8     magic (b"HNLSSNAP", b"HNLSGAMA" or b"HNLSPROF")
    8      4     uint32 format version (1)
    12     1     uint8 endianness of the payload (0 = little)
    13     1     uint8 space flag (0 physical, 1 spectral; 0 for velocity data)
    14     2     uint16 dimension d
    16     4     uint32 points per axis (N, or M for velocity data)
    20     8     float64 box length L (or velocity half-width vmax)
    28     8     float64 time t (or extraction time T)

Profile files append three float64 values (tail, tail_prev, gauge rate)
and a 16-byte NUL-padded coupling name before the payload, which holds
``W`` followed by ``W0``.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .spectral import PHYSICAL, SPECTRAL, ComplexField, GridSpec
from .scattering import ScatteringProfile
from .wavepacket import GammaSlice, VelocityGrid

VERSION = 1
HEADER = struct.Struct("<8sIBBHIdd")
PROFILE_EXTRA = struct.Struct("<ddd16s")
SNAP_MAGIC = b"HNLSSNAP"
GAMMA_MAGIC = b"HNLSGAMA"
PROFILE_MAGIC = b"HNLSPROF"


class FormatError(ValueError):
    pass


def _payload(values: np.ndarray) -> bytes:
    return np.ascontiguousarray(values, dtype="<c16").tobytes()


def _header(magic, space, d, n, length, t) -> bytes:
    return HEADER.pack(magic, VERSION, 0, space, d, n, float(length), float(t))


def _read_header(buf: bytes, magic: bytes):
    if len(buf) < HEADER.size:
        raise FormatError("file too short for header")
    got, version, endian, space, d, n, length, t = HEADER.unpack_from(buf)
    if got != magic:
        raise FormatError(f"bad magic {got!r}, expected {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if endian != 0:
        raise FormatError("only little-endian payloads are supported")
    return space, d, n, length, t


def _array(buf: bytes, offset: int, count: int) -> np.ndarray:
    need = offset + 16 * count
    if len(buf) < need:
        raise FormatError("payload truncated")
    return np.frombuffer(buf, dtype="<c16", count=count, offset=offset).astype(np.complex128)


def write_field(path, u: ComplexField) -> Path:
    path = Path(path)
    space = 0 if u.space == PHYSICAL else 1
    path.write_bytes(_header(SNAP_MAGIC, space, u.grid.d, u.grid.n, u.grid.length, u.t)
                     + _payload(u.values))
    return path


def read_field(path) -> ComplexField:
    buf = Path(path).read_bytes()
    space, d, n, length, t = _read_header(buf, SNAP_MAGIC)
    grid = GridSpec(d, n, length)
    vals = _array(buf, HEADER.size, grid.size)
    return ComplexField(grid, t, vals.reshape(grid.shape), PHYSICAL if space == 0 else SPECTRAL)


def write_gamma(path, g: GammaSlice) -> Path:
    path = Path(path)
    vg = g.vgrid
    path.write_bytes(_header(GAMMA_MAGIC, 0, vg.d, vg.m, vg.vmax, g.t) + _payload(g.values))
    return path


def read_gamma(path) -> GammaSlice:
    buf = Path(path).read_bytes()
    _, d, m, vmax, t = _read_header(buf, GAMMA_MAGIC)
    vg = VelocityGrid(d, m, vmax)
    return GammaSlice(t, vg, _array(buf, HEADER.size, m**d).reshape(vg.shape))


def write_gamma_history(path, slices) -> Path:
    """Concatenation of gamma-slice records, one per time."""
    path = Path(path)
    with open(path, "wb") as fh:
        for g in slices:
            vg = g.vgrid
            fh.write(_header(GAMMA_MAGIC, 0, vg.d, vg.m, vg.vmax, g.t) + _payload(g.values))
    return path


def read_gamma_history(path) -> list[GammaSlice]:
    buf = Path(path).read_bytes()
    out, pos = [], 0
    while pos < len(buf):
        _, d, m, vmax, t = _read_header(buf[pos:pos + HEADER.size], GAMMA_MAGIC)
        vg = VelocityGrid(d, m, vmax)
        out.append(GammaSlice(t, vg, _array(buf, pos + HEADER.size, m**d).reshape(vg.shape)))
        pos += HEADER.size + 16 * m**d
    return out


def write_profile(path, prof: ScatteringProfile) -> Path:
    path = Path(path)
    vg = prof.vgrid
    name = prof.coupling.encode("ascii")[:16].ljust(16, b"\0")
    data = (_header(PROFILE_MAGIC, 0, vg.d, vg.m, vg.vmax, prof.T)
            + PROFILE_EXTRA.pack(prof.tail, prof.tail_prev, prof.gauge_rate, name)
            + _payload(prof.W) + _payload(prof.W0))
    path.write_bytes(data)
    return path


def read_profile(path) -> ScatteringProfile:
    buf = Path(path).read_bytes()
    _, d, m, vmax, T = _read_header(buf, PROFILE_MAGIC)
    tail, tail_prev, rate, name = PROFILE_EXTRA.unpack_from(buf, HEADER.size)
    vg = VelocityGrid(d, m, vmax)
    off = HEADER.size + PROFILE_EXTRA.size
    W = _array(buf, off, m**d).reshape(vg.shape)
    W0 = _array(buf, off + 16 * m**d, m**d).reshape(vg.shape)
    return ScatteringProfile(vg, T, W, W0, tail, tail_prev, rate, name.rstrip(b"\0").decode("ascii"))
