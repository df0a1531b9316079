"""Initial-condition constructors for runs and sweeps."""

from __future__ import annotations

import numpy as np
import scipy.fft as sfft

from .coupled import SimState
from .errors import ConfigError
from .grid import DomainSpec, QTensorField, ScalarField, VelocityField
from .operators import fft_workers, project_div_free
from .tensor_algebra import frobenius_sq

__all__ = ["make_initial_state"]

# unit-Frobenius uniaxial reference tensor diag(1, 1, -2)/sqrt(6)
_QHAT = np.array([1.0, 0.0, 0.0, 1.0, 0.0]) / np.sqrt(6.0)


def _lowpass(noise, domain: DomainSpec, cutoff: int):
    """Keep only modes with max |mode index| <= cutoff.

    Periodic uses the Fourier basis; box uses the cosine basis, which bakes
    in the homogeneous Neumann (mirror) symmetry at the walls.
    """
    if domain.periodic:
        hat = sfft.rfftn(noise, axes=(0, 1, 2), workers=fft_workers())
        mx = np.abs(np.fft.fftfreq(domain.nx) * domain.nx)[:, None, None]
        my = np.abs(np.fft.fftfreq(domain.ny) * domain.ny)[None, :, None]
        mz = np.arange(domain.nz // 2 + 1)[None, None, :]
        keep = (mx <= cutoff) & (my <= cutoff) & (mz <= cutoff)
        hat = hat * keep.reshape(keep.shape + (1,) * (noise.ndim - 3))
        return sfft.irfftn(hat, s=domain.shape, axes=(0, 1, 2), workers=fft_workers())
    hat = sfft.dctn(noise, type=2, axes=(0, 1, 2), workers=fft_workers())
    mx = np.arange(domain.nx)[:, None, None]
    my = np.arange(domain.ny)[None, :, None]
    mz = np.arange(domain.nz)[None, None, :]
    keep = (mx <= cutoff) & (my <= cutoff) & (mz <= cutoff)
    hat = hat * keep.reshape(keep.shape + (1,) * (noise.ndim - 3))
    return sfft.idctn(hat, type=2, axes=(0, 1, 2), workers=fft_workers())


def _scale_to_amplitude(data, mag, amplitude):
    peak = float(np.max(mag))
    if peak == 0.0 or amplitude == 0.0:
        return np.zeros_like(data)
    return data * (amplitude / peak)


def _random_smooth(domain, seed, amplitude, cutoff_mode, u_amplitude):
    rng = np.random.default_rng(np.uint64(seed))
    qn = rng.standard_normal(domain.shape + (5,))
    un = rng.standard_normal(domain.shape + (3,))
    qs = _lowpass(qn, domain, cutoff_mode)
    q = _scale_to_amplitude(qs, np.sqrt(frobenius_sq(qs)), amplitude)
    us = _lowpass(un, domain, cutoff_mode)
    if not domain.periodic:
        # honor no-slip before projecting so the projected field is
        # divergence-free in the same discrete sense as every step output
        us[0] = us[-1] = 0.0
        us[:, 0] = us[:, -1] = 0.0
        us[:, :, 0] = us[:, :, -1] = 0.0
    us, _ = project_div_free(us, domain)
    u = _scale_to_amplitude(us, np.sqrt(np.sum(us**2, axis=-1)), u_amplitude)
    return VelocityField(domain, u), QTensorField(domain, q)


def _sine_mode(domain, k, amplitude, axis):
    x = domain.coords()[axis]
    length = (domain.lx, domain.ly, domain.lz)[axis]
    if domain.periodic:
        profile = np.sin(2.0 * np.pi * k * x / length)
    else:
        # cosine profile keeps the wall-normal derivative zero at the faces
        profile = np.cos(np.pi * k * x / length)
    profile = np.broadcast_to(profile, domain.shape)
    q = amplitude * profile[..., None] * _QHAT
    return VelocityField(domain), QTensorField(domain, np.ascontiguousarray(q))


def make_initial_state(domain: DomainSpec, ic: dict) -> SimState:
    """Build the initial (u, Q, p) triple from a validated IC description."""
    kind = ic["kind"]
    if kind == "zero":
        return SimState.zero(domain)
    if kind == "sine_mode":
        u, q = _sine_mode(domain, ic["k"], ic["amplitude"], ic["axis"])
    elif kind == "random_smooth":
        u, q = _random_smooth(
            domain,
            ic.get("seed", 0),
            ic.get("amplitude", 0.1),
            ic.get("cutoff_mode", 3),
            ic.get("u_amplitude", 0.0),
        )
    else:
        raise ConfigError(f"unknown initial condition kind: {kind!r}")
    return SimState(u, q, ScalarField(domain), 0.0)
