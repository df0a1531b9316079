"""Semi-implicit momentum step with pressure projection.

One step treats advection and the external force explicitly, diffusion
implicitly (backward Euler Helmholtz solve), then projects onto the
discretely divergence-free subspace.  On box domains no-slip enters
through the odd ghost extension of the implicit solve; the projection
preserves the no-penetration condition exactly while tangential slip is
the usual O(dt) splitting error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import StepRejected
from .grid import ScalarField, VelocityField
from .operators import grad_array, helmholtz_project, project_div_free

__all__ = ["FluidStepReport", "leray_project", "momentum_step", "cfl_limit"]

CFL_NUMBER = 0.4
VELOCITY_FLOOR = 1e-8


@dataclass(frozen=True)
class FluidStepReport:
    div_residual: float
    poisson_iters: int
    dt_used: float


def cfl_limit(u: VelocityField) -> float:
    """Advective CFL bound: 0.4 * h_min / max(|u|_inf, floor)."""
    umax = float(np.max(u.magnitude())) if u.data.size else 0.0
    return CFL_NUMBER * min(u.domain.spacing) / max(umax, VELOCITY_FLOOR)


def leray_project(u: VelocityField) -> tuple[VelocityField, ScalarField]:
    """Split u into its divergence-free part and a zero-mean potential."""
    proj, phi = project_div_free(u.data, u.domain)
    return VelocityField(u.domain, proj), ScalarField(u.domain, phi)


def _convection(u: VelocityField) -> np.ndarray:
    """(u . grad) u, with no-slip ghost extension on box domains."""
    dom = u.domain
    ghost = "odd"
    gu = grad_array(u.data, dom, ghost=ghost)  # (..., comp, deriv)
    return np.einsum("...b,...ab->...a", u.data, gu)


def momentum_step(u: VelocityField, force: VelocityField, dt: float, params):
    """Advance the momentum equation by one step.

    Returns (velocity, pressure, report).  Raises StepRejected when dt
    exceeds the advective CFL limit.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    limit = cfl_limit(u)
    if dt > limit:
        raise StepRejected(f"momentum dt {dt} exceeds CFL limit {limit}", dt, limit)
    dom = u.domain
    rhs = u.data + dt * (force.data - _convection(u))
    proj, phi, residual = helmholtz_project(rhs, params.nu * dt, dom)
    unew = VelocityField(dom, proj)
    pressure = ScalarField(dom, phi / dt)
    return unew, pressure, FluidStepReport(residual, 1, dt)
