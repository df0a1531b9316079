"""Pointwise algebra on 3x3 symmetric trace-free tensors.

A Q-tensor is stored as its five independent components
(q11, q12, q13, q22, q23); q33 is reconstructed as -(q11 + q22), so the
trace vanishes exactly by representation rather than within a tolerance.

All functions also accept stacked component arrays of shape (..., 5) and
operate elementwise over the leading axes, which is how the field-level
solvers use them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "QTensor",
    "ModelParams",
    "to_matrix",
    "from_matrix",
    "sym_traceless_project",
    "trace_sq",
    "trace_cub",
    "bulk_molecular_field",
    "commutator_stress",
    "cubic_trace_bound_check",
    "rotation_cancellation",
    "frobenius_sq",
]

# index maps between the 5-vector and the symmetric 3x3 matrix
_ROWS = (0, 0, 0, 1, 1)
_COLS = (0, 1, 2, 1, 2)


def to_matrix(q):
    """Expand components (..., 5) to the full symmetric matrix (..., 3, 3)."""
    q = np.asarray(q, dtype=float)
    m = np.zeros(q.shape[:-1] + (3, 3))
    q11, q12, q13, q22, q23 = (q[..., i] for i in range(5))
    m[..., 0, 0] = q11
    m[..., 1, 1] = q22
    m[..., 2, 2] = -(q11 + q22)
    m[..., 0, 1] = m[..., 1, 0] = q12
    m[..., 0, 2] = m[..., 2, 0] = q13
    m[..., 1, 2] = m[..., 2, 1] = q23
    return m


def from_matrix(m):
    """Read the five independent components off a symmetric trace-free matrix."""
    m = np.asarray(m, dtype=float)
    return np.stack([m[..., r, c] for r, c in zip(_ROWS, _COLS)], axis=-1)


def sym_traceless_project(m):
    """Project an arbitrary 3x3 matrix onto symmetric trace-free tensors.

    Returns the five components of (M + M^T)/2 - tr(M)/3 * I.  Idempotent on
    tensors that are already symmetric and trace-free.
    """
    m = np.asarray(m, dtype=float)
    sym = 0.5 * (m + np.swapaxes(m, -1, -2))
    tr3 = np.trace(sym, axis1=-2, axis2=-1) / 3.0
    out = np.stack(
        [
            sym[..., 0, 0] - tr3,
            sym[..., 0, 1],
            sym[..., 0, 2],
            sym[..., 1, 1] - tr3,
            sym[..., 1, 2],
        ],
        axis=-1,
    )
    return out


def frobenius_sq(q):
    """|Q|^2 = Q_ab Q_ab for stacked components (..., 5)."""
    q = np.asarray(q, dtype=float)
    q11, q12, q13, q22, q23 = (q[..., i] for i in range(5))
    q33 = -(q11 + q22)
    return q11**2 + q22**2 + q33**2 + 2.0 * (q12**2 + q13**2 + q23**2)


def trace_sq(q):
    """tr(Q^2), equal to the squared Frobenius norm; always >= 0."""
    return frobenius_sq(q)


def trace_cub(q):
    """tr(Q^3)."""
    m = to_matrix(q)
    return np.trace(m @ m @ m, axis1=-2, axis2=-1)


def bulk_molecular_field(q, params):
    """Non-Laplacian part of the molecular field driving Q relaxation.

    -a*Q + b*[Q^2 - tr(Q^2)/3 * I] - c*Q*tr(Q^2), returned in component
    form.  The I/3 subtraction keeps the result trace-free by construction;
    the elastic L*Lap(Q) part is added by the field-level solver.
    """
    q = np.asarray(q, dtype=float)
    tsq = trace_sq(q)[..., None]
    out = -params.a * q - params.c * tsq * q
    if params.b != 0.0:
        m = to_matrix(q)
        out = out + params.b * sym_traceless_project(m @ m)
    return out


def commutator_stress(q, dq):
    """Commutator Q*DQ - DQ*Q as a full (antisymmetric) 3x3 matrix.

    DQ is the (discrete) Laplacian of Q at the same point, any symmetric
    trace-free tensor accepted.
    """
    a = to_matrix(q)
    b = to_matrix(dq)
    return a @ b - b @ a


def cubic_trace_bound_check(q, eps):
    """Check tr(Q^3) <= 3*eps/8 * tr(Q^2)^2 + 3/(2*eps) * tr(Q^2).

    Returns (lhs, rhs, holds).  `holds` allows an absolute slack of
    1e-12 * max(1, |rhs|) for floating-point noise.  Vectorized over
    stacked components; eps broadcasts.
    """
    eps = np.asarray(eps, dtype=float)
    if np.any(eps <= 0):
        raise ValueError("eps must be positive")
    tsq = trace_sq(q)
    lhs = trace_cub(q)
    rhs = 0.375 * eps * tsq**2 + 1.5 / eps * tsq
    holds = lhs <= rhs + 1e-12 * np.maximum(1.0, np.abs(rhs))
    return lhs, rhs, holds


def rotation_cancellation(omega, q):
    """Contraction (Omega*Q - Q*Omega)_ab * Q_ab; zero by symmetry of Q.

    Omega must be antisymmetric (checked to 1e-14 relative to its scale).
    """
    omega = np.asarray(omega, dtype=float)
    scale = max(1.0, float(np.max(np.abs(omega))))
    if np.max(np.abs(omega + np.swapaxes(omega, -1, -2))) > 1e-14 * scale:
        raise ValueError("omega is not antisymmetric")
    m = to_matrix(q)
    comm = omega @ m - m @ omega
    return np.sum(comm * m, axis=(-2, -1))


@dataclass(frozen=True)
class QTensor:
    """A single symmetric trace-free 3x3 tensor, stored as 5 components."""

    q11: float = 0.0
    q12: float = 0.0
    q13: float = 0.0
    q22: float = 0.0
    q23: float = 0.0

    @classmethod
    def from_components(cls, comps) -> "QTensor":
        c = np.asarray(comps, dtype=float)
        return cls(*(float(v) for v in c))

    @classmethod
    def from_matrix(cls, m) -> "QTensor":
        """Build from a symmetric trace-free matrix (projected if it is not)."""
        return cls.from_components(sym_traceless_project(m))

    @property
    def components(self) -> np.ndarray:
        return np.array([self.q11, self.q12, self.q13, self.q22, self.q23])

    @property
    def matrix(self) -> np.ndarray:
        return to_matrix(self.components)

    def trace_sq(self) -> float:
        return float(trace_sq(self.components))

    def trace_cub(self) -> float:
        return float(trace_cub(self.components))


@dataclass(frozen=True)
class ModelParams:
    """Bulk, elastic and hydrodynamic coefficients plus monitor exponents.

    The flow-alignment ratio xi is pinned to 0: the co-rotational stress is
    outside the model treated here.
    """

    a: float = 1.0
    b: float = 0.0
    c: float = 1.0
    L: float = 1.0
    nu: float = 1.0
    gamma: float = 1.0
    xi: float = 0.0
    p_exp: float = 16.0 / 15.0
    q_exp: float = 4.0
    r_exp: float = 15.0

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.L <= 0:
            raise ValueError("L must be positive")
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.xi != 0.0:
            raise ValueError("xi != 0 is not supported")
