"""Full system evolution and the fixed-point (Picard) window solver.

A direct step advances the momentum equation first (elastic force built
from the current Q), then the Q-tensor equation using the pre-step
velocity: first-order operator splitting in which every right-hand side
is evaluated at the old time level.  The Picard mode re-solves the same
linear problems over a whole time window with the previous iterate frozen
on all right-hand sides; its fixed point is exactly the direct trajectory,
which the contraction diagnostics exploit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diagnostics import DiagnosticsRecord, make_record
from .fluid import momentum_step
from .grid import (
    DomainSpec,
    QTensorField,
    ScalarField,
    VelocityField,
    apply_velocity_bcs,
)
from .operators import (
    div_mat,
    grad_array,
    helmholtz_project,
    helmholtz_solve,
    lp_norm,
    qtensor_derivatives,
)
from .qtensor import advect_q, q_step
from .tensor_algebra import bulk_molecular_field, to_matrix

__all__ = [
    "SimState",
    "PicardReport",
    "apply_bcs",
    "assemble_elastic_force",
    "step",
    "picard_solve",
]

MAX_PICARD_WINDOW = 256


@dataclass
class SimState:
    u: VelocityField
    Q: QTensorField
    p: ScalarField
    t: float = 0.0
    # derivative cache (grad Q, lap Q) filled in by `step`; dropped on copy
    q_derivs: tuple | None = field(default=None, repr=False, compare=False)

    @classmethod
    def zero(cls, domain: DomainSpec) -> "SimState":
        return cls(VelocityField(domain), QTensorField(domain), ScalarField(domain), 0.0)

    @property
    def domain(self) -> DomainSpec:
        return self.u.domain

    def copy(self) -> "SimState":
        return SimState(self.u.copy(), self.Q.copy(), self.p.copy(), self.t)


@dataclass
class PicardReport:
    iters: int
    deltas: list = field(default_factory=list)
    converged: bool = False

    @property
    def ratios(self) -> list:
        return [b / a for a, b in zip(self.deltas, self.deltas[1:]) if a > 0]


def apply_bcs(state: SimState) -> SimState:
    """Enforce no-slip wall cells; Neumann Q ghosts live in the operators.

    No-op on periodic domains.
    """
    if state.domain.periodic:
        return state
    return SimState(apply_velocity_bcs(state.u), state.Q, state.p, state.t)


def assemble_elastic_force(q: QTensorField, params, derivs=None) -> VelocityField:
    """Divergence of the elastic stresses driving the momentum equation.

    f_a = -L d_b( d_a Q : d_b Q ) + L d_b( Q Lap(Q) - Lap(Q) Q )_{ab},
    evaluated in conservative form from the assembled stress matrix.
    ``derivs`` accepts a precomputed (grad Q, lap Q) pair in the
    5-component representation.
    """
    dom = q.domain
    gq, lapq = qtensor_derivatives(q.data, dom) if derivs is None else derivs
    # d_a Q : d_b Q contracted through the 5-component quadratic form:
    # 2 sum_c g_ca g_cb plus the q11/q22 cross terms from q33 = -(q11+q22)
    gmod = 2.0 * gq
    gmod[..., 0, :] += gq[..., 3, :]
    gmod[..., 3, :] += gq[..., 0, :]
    odot = np.swapaxes(gmod, -1, -2) @ gq
    full = to_matrix(q.data)
    lap = to_matrix(lapq)
    comm = full @ lap - lap @ full
    stress = params.L * (comm - odot)
    return div_mat(stress, dom)


def step(state: SimState, dt: float, params, compute_monitor=False):
    """One coupled step; returns (new state, diagnostics record)."""
    dom = state.domain
    derivs = state.q_derivs
    if derivs is None:
        derivs = qtensor_derivatives(state.Q.data, dom)
    force = assemble_elastic_force(state.Q, params, derivs=derivs)
    unew, pnew, report = momentum_step(state.u, force, dt, params)
    qnew = q_step(state.Q, state.u, dt, params, gradq=derivs[0])
    new_derivs = qtensor_derivatives(qnew.data, dom)
    new = SimState(unew, qnew, pnew, state.t + dt, q_derivs=new_derivs)
    rec = make_record(unew, qnew, pnew, new.t, params,
                      compute_monitor=compute_monitor,
                      gradq=new_derivs[0], div_residual=report.div_residual)
    return new, rec


def _window_rhs_u(state_u, state_q, params, derivs):
    gu = grad_array(state_u.data, state_u.domain, ghost="odd")
    conv = np.einsum("...b,...ab->...a", state_u.data, gu)
    return assemble_elastic_force(state_q, params, derivs=derivs).data - conv


def _window_rhs_q(state_u, state_q, params, gradq):
    adv = advect_q(state_q, state_u, gradq=gradq).data
    return adv + params.gamma * bulk_molecular_field(state_q.data, params)


def _delta(traj_a, traj_b) -> float:
    worst = 0.0
    for (ua, qa), (ub, qb) in zip(traj_a, traj_b):
        du = lp_norm(VelocityField(ua.domain, ua.data - ub.data), 2)
        dq = lp_norm(QTensorField(qa.domain, qa.data - qb.data), 2)
        worst = max(worst, du + dq)
    return worst


def picard_solve(state0: SimState, t_window: float, dt: float, params, tol: float,
                 max_iters: int):
    """Iterate the frozen-coefficient linear systems over [0, t_window].

    Iterate 0 is the constant-in-time extension of the initial state.  Each
    sweep solves the linear momentum and Q problems over the whole window
    with all nonlinear data taken from the previous iterate.  Returns the
    final window trajectory (list of SimState) and a PicardReport; running
    out of iterations yields converged=False rather than an exception.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    nsteps = int(round(t_window / dt))
    if nsteps < 1 or abs(nsteps * dt - t_window) > 1e-9 * max(dt, t_window):
        raise ValueError("t_window must be an integer multiple of dt")
    if nsteps > MAX_PICARD_WINDOW:
        raise ValueError(f"window of {nsteps} steps exceeds {MAX_PICARD_WINDOW}")

    dom = state0.domain
    traj = [(state0.u.copy(), state0.Q.copy()) for _ in range(nsteps + 1)]
    pressures = [state0.p.copy() for _ in range(nsteps + 1)]
    report = PicardReport(iters=0)

    for _ in range(max_iters):
        new_traj = [(state0.u.copy(), state0.Q.copy())]
        new_pressures = [state0.p.copy()]
        for m in range(nsteps):
            u_frozen = traj[m][0]
            q_frozen = traj[m][1]
            derivs = qtensor_derivatives(q_frozen.data, dom)
            rhs_u = new_traj[m][0].data + dt * _window_rhs_u(
                u_frozen, q_frozen, params, derivs)
            proj, phi, _res = helmholtz_project(rhs_u, params.nu * dt, dom)
            rhs_q = new_traj[m][1].data + dt * _window_rhs_q(
                u_frozen, q_frozen, params, derivs[0])
            qn = helmholtz_solve(rhs_q, params.gamma * params.L * dt, dom, "neumann")
            new_traj.append((VelocityField(dom, proj), QTensorField(dom, qn)))
            new_pressures.append(ScalarField(dom, phi / dt))
        report.iters += 1
        delta = _delta(new_traj, traj)
        report.deltas.append(delta)
        traj = new_traj
        pressures = new_pressures
        if delta <= tol:
            report.converged = True
            break

    states = [
        SimState(u, q, p, state0.t + m * dt)
        for m, ((u, q), p) in enumerate(zip(traj, pressures))
    ]
    return states, report
