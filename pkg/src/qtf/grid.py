"""Structured 3-D grids, field containers, snapshot I/O and boundary handling.

Fields are sampled at cell centers x_i = (i + 1/2) h on a box of size
(lx, ly, lz); for periodic domains the samples sit at x_i = i h.  Data
arrays are indexed [ix, iy, iz, component...].

Two boundary flavors exist: ``periodic``, and ``box`` which means no-slip
velocity (odd ghost reflection about the wall faces) and homogeneous
Neumann Q-tensor/pressure (mirror ghost reflection).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .tensor_algebra import frobenius_sq

__all__ = [
    "BCKind",
    "DomainSpec",
    "ScalarField",
    "VelocityField",
    "QTensorField",
    "pad_mirror",
    "pad_odd",
    "apply_velocity_bcs",
    "write_snapshot",
    "read_snapshot",
]


class BCKind(str, Enum):
    PERIODIC = "periodic"
    BOX = "box"


@dataclass(frozen=True)
class DomainSpec:
    nx: int
    ny: int
    nz: int
    lx: float = 2.0 * np.pi
    ly: float = 2.0 * np.pi
    lz: float = 2.0 * np.pi
    bc_kind: BCKind = BCKind.PERIODIC

    def __post_init__(self):
        object.__setattr__(self, "bc_kind", BCKind(self.bc_kind))
        for n in (self.nx, self.ny, self.nz):
            if n < 8:
                raise ValueError("cell counts must be >= 8")
        for l in (self.lx, self.ly, self.lz):
            if l <= 0:
                raise ValueError("box lengths must be positive")
        if self.bc_kind is BCKind.PERIODIC:
            if any(n % 2 for n in (self.nx, self.ny, self.nz)):
                raise ValueError("periodic domains require even cell counts")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def spacing(self) -> tuple[float, float, float]:
        return (self.lx / self.nx, self.ly / self.ny, self.lz / self.nz)

    @property
    def cell_volume(self) -> float:
        hx, hy, hz = self.spacing
        return hx * hy * hz

    @property
    def periodic(self) -> bool:
        return self.bc_kind is BCKind.PERIODIC

    def coords(self):
        """Broadcastable coordinate arrays (x, y, z) at the sample points."""
        offset = 0.0 if self.periodic else 0.5
        hx, hy, hz = self.spacing
        x = (np.arange(self.nx) + offset) * hx
        y = (np.arange(self.ny) + offset) * hy
        z = (np.arange(self.nz) + offset) * hz
        return (
            x[:, None, None],
            y[None, :, None],
            z[None, None, :],
        )

    def to_dict(self) -> dict:
        return {
            "nx": self.nx,
            "ny": self.ny,
            "nz": self.nz,
            "lx": self.lx,
            "ly": self.ly,
            "lz": self.lz,
            "bc_kind": self.bc_kind.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DomainSpec":
        return cls(**d)


class _Field:
    """Base container pairing a data array with its domain."""

    ncomp_shape: tuple = ()

    def __init__(self, domain: DomainSpec, data: np.ndarray | None = None):
        self.domain = domain
        expected = domain.shape + self.ncomp_shape
        if data is None:
            data = np.zeros(expected)
        else:
            data = np.asarray(data, dtype=float)
            if data.shape != expected:
                raise ValueError(f"expected data shape {expected}, got {data.shape}")
        self.data = data

    def copy(self):
        return type(self)(self.domain, self.data.copy())

    def magnitude(self) -> np.ndarray:
        """Per-cell Frobenius magnitude."""
        raise NotImplementedError


class ScalarField(_Field):
    ncomp_shape = ()

    def magnitude(self):
        return np.abs(self.data)


class VelocityField(_Field):
    ncomp_shape = (3,)

    def magnitude(self):
        return np.sqrt(np.sum(self.data**2, axis=-1))


class QTensorField(_Field):
    """Five-component symmetric trace-free tensor field."""

    ncomp_shape = (5,)

    def magnitude(self):
        return np.sqrt(frobenius_sq(self.data))


def _edge_slices(axis, depth, side):
    sl = [slice(None)] * 3
    sl[axis] = slice(0, depth) if side == 0 else slice(-depth, None)
    return tuple(sl)


def pad_mirror(data, axis, depth=1):
    """Cell-mirror ghost extension (f_{-1} = f_0): homogeneous Neumann walls."""
    pad = [(0, 0)] * data.ndim
    pad[axis] = (depth, depth)
    return np.pad(data, pad, mode="symmetric")


def pad_odd(data, axis, depth=1):
    """Odd ghost extension (f_{-1} = -f_0): zero value on the wall faces."""
    out = pad_mirror(data, axis, depth)
    lo = [slice(None)] * out.ndim
    hi = [slice(None)] * out.ndim
    lo[axis] = slice(0, depth)
    hi[axis] = slice(out.shape[axis] - depth, None)
    out[tuple(lo)] = -out[tuple(lo)]
    out[tuple(hi)] = -out[tuple(hi)]
    return out


def apply_velocity_bcs(u: VelocityField) -> VelocityField:
    """Zero the wall-adjacent cell layer of a box-domain velocity field.

    No-op on periodic domains.
    """
    if u.domain.periodic:
        return u
    data = u.data.copy()
    for axis in range(3):
        data[_edge_slices(axis, 1, 0)] = 0.0
        data[_edge_slices(axis, 1, 1)] = 0.0
    return VelocityField(u.domain, data)


_FIELD_KINDS = {
    "scalar": ScalarField,
    "velocity": VelocityField,
    "qtensor": QTensorField,
}


def _serial_order(data):
    # x varies fastest on disk: reverse all axes (components become slowest)
    return np.ascontiguousarray(np.transpose(data, axes=tuple(range(data.ndim - 1, -1, -1))))


def write_snapshot(path, field, time: float, name: str = "field") -> None:
    """Write a field as a JSON header line followed by raw little-endian f64.

    Round-trips bit exactly.
    """
    kind = {ScalarField: "scalar", VelocityField: "velocity", QTensorField: "qtensor"}[type(field)]
    ncomp = int(np.prod(field.ncomp_shape)) if field.ncomp_shape else 1
    header = {
        "domain": field.domain.to_dict(),
        "field": name,
        "kind": kind,
        "components": ncomp,
        "time": time,
        "endianness": "little",
        "layout": "x-fastest",
    }
    raw = _serial_order(field.data).astype("<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8"))
        fh.write(b"\n")
        fh.write(raw)


def read_snapshot(path):
    """Inverse of :func:`write_snapshot`; returns (field, time, name)."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        raw = fh.read()
    domain = DomainSpec.from_dict(header["domain"])
    cls = _FIELD_KINDS[header["kind"]]
    shape = domain.shape + cls.ncomp_shape
    flat = np.frombuffer(raw, dtype="<f8")
    data = flat.reshape(tuple(reversed(shape)))
    data = np.transpose(data, axes=tuple(range(data.ndim - 1, -1, -1)))
    return cls(domain, np.ascontiguousarray(data)), header["time"], header["field"]
