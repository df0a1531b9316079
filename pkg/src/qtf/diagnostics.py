"""Scalar observables: energies, norms, decay-rate fits and CSV streaming."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import QTensorField, ScalarField, VelocityField
from .operators import (
    div_consistent,
    grad_array,
    integral,
    lp_norm,
    sobolev_monitor,
)
from .tensor_algebra import frobenius_sq, to_matrix, trace_cub, trace_sq

__all__ = [
    "DiagnosticsRecord",
    "CSV_HEADER",
    "landau_de_gennes_energy",
    "damping_condition_check",
    "damping_decay_floor",
    "decay_rate_fit",
    "energy_budget",
    "make_record",
    "kinetic_energy",
    "DiagnosticsWriter",
]

CSV_HEADER = "t,kinetic,lg_energy,q_l2,q_l4,q_l6,div_residual,monitor"
Q_NORM_EXPONENTS = (2, 4, 6)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    kinetic: float
    lg_energy: float
    q_lp_norms: dict = field(default_factory=dict)
    div_residual: float = 0.0
    monitor: float = 0.0
    trace_residual: float = 0.0

    @property
    def total_energy(self) -> float:
        return self.kinetic + self.lg_energy


def kinetic_energy(u: VelocityField) -> float:
    """(1/2) ||u||_{L^2}^2."""
    return 0.5 * lp_norm(u, 2) ** 2


def grad_q_sq(q: QTensorField, gradq=None) -> np.ndarray:
    """Per-cell |grad Q|^2 summed over every tensor slot.

    ``gradq`` accepts a precomputed mirror-ghost gradient (..., 5, 3).
    """
    g = grad_array(q.data, q.domain, ghost="mirror") if gradq is None else gradq
    return sum(frobenius_sq(g[..., d]) for d in range(3))


def landau_de_gennes_energy(q: QTensorField, params, gradq=None) -> float:
    """Integral of L/2 |grad Q|^2 + a/2 tr Q^2 - b/3 tr Q^3 + c/4 (tr Q^2)^2."""
    tsq = trace_sq(q.data)
    density = (0.5 * params.L * grad_q_sq(q, gradq=gradq)
               + 0.5 * params.a * tsq + 0.25 * params.c * tsq**2)
    if params.b != 0.0:
        density = density - (params.b / 3.0) * trace_cub(q.data)
    return integral(density, q.domain)


def damping_condition_check(params) -> bool:
    """a > 0, c > 0 and a*c >= 9/16 b^2: the bulk source acts as damping."""
    return params.a > 0 and params.c > 0 and params.a * params.c >= 0.5625 * params.b**2


def damping_decay_floor(params) -> float:
    """Explicit lower bound on the L^p decay exponent: a - 9 b^2 / (16 c)."""
    return params.a - 9.0 * params.b**2 / (16.0 * params.c)


def decay_rate_fit(series) -> float:
    """Least-squares slope of -log(value) against t.

    Needs at least 8 samples with strictly increasing times and positive
    values; returns the fitted exponential decay rate.
    """
    ts = np.asarray([s[0] for s in series], dtype=float)
    vs = np.asarray([s[1] for s in series], dtype=float)
    if len(ts) < 8:
        raise ValueError("need at least 8 samples")
    if np.any(np.diff(ts) <= 0):
        raise ValueError("times must be strictly increasing")
    if np.any(vs <= 0):
        raise ValueError("values must be positive")
    slope = np.polyfit(ts, -np.log(vs), 1)[0]
    return float(slope)


def energy_budget(prev: DiagnosticsRecord, next_: DiagnosticsRecord, dt: float) -> float:
    """Energy change rate (E_next - E_prev) / dt between consecutive records."""
    return (next_.total_energy - prev.total_energy) / dt


def make_record(u, q, pressure, t, params, compute_monitor=True,
                gradq=None, div_residual=None) -> DiagnosticsRecord:
    """Assemble the per-step observables.

    ``gradq`` and ``div_residual`` let callers hand over quantities that
    the step already computed instead of redoing the transforms.
    """
    mag = np.sqrt(frobenius_sq(q.data))
    dom = q.domain
    h3 = dom.cell_volume
    q_norms = {p: float((np.sum(mag**p) * h3) ** (1.0 / p)) for p in Q_NORM_EXPONENTS}
    q33 = -(q.data[..., 0] + q.data[..., 3])
    trace_res = float(np.max(np.abs(q.data[..., 0] + q.data[..., 3] + q33)))
    if div_residual is None:
        div_residual = float(np.max(np.abs(div_consistent(u.data, dom))))
    return DiagnosticsRecord(
        t=t,
        kinetic=kinetic_energy(u),
        lg_energy=landau_de_gennes_energy(q, params, gradq=gradq),
        q_lp_norms=q_norms,
        div_residual=div_residual,
        monitor=sobolev_monitor(u, q, params) if compute_monitor else float("nan"),
        trace_residual=trace_res,
    )


class DiagnosticsWriter:
    """Streams records to CSV with 17 significant digits."""

    def __init__(self, path):
        self._fh = open(path, "w", newline="")
        self._fh.write(CSV_HEADER + "\n")

    def write(self, rec: DiagnosticsRecord) -> None:
        vals = [
            rec.t,
            rec.kinetic,
            rec.lg_energy,
            rec.q_lp_norms.get(2, 0.0),
            rec.q_lp_norms.get(4, 0.0),
            rec.q_lp_norms.get(6, 0.0),
            rec.div_residual,
            rec.monitor,
        ]
        self._fh.write(",".join(f"{v:.17g}" for v in vals) + "\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
