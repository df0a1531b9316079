"""Self-contained algebraic verification suites behind the `verify` command.

Each check draws its own random samples from a fixed seed and reports
(name, passed, detail); the CLI turns the aggregate into an exit code.
"""

from __future__ import annotations

import numpy as np

from .grid import DomainSpec
from .operators import div_vec, grad, grad_array, laplacian_array
from .grid import ScalarField, VelocityField
from .tensor_algebra import (
    cubic_trace_bound_check,
    rotation_cancellation,
    sym_traceless_project,
    to_matrix,
    trace_sq,
)

__all__ = ["run_verification"]


def _random_q(rng, n, scale):
    # log-uniform component magnitudes up to `scale`
    mag = 10.0 ** rng.uniform(-3, np.log10(scale), size=(n, 5))
    return mag * rng.choice([-1.0, 1.0], size=(n, 5))


def _check_cubic_bound(rng):
    n = 100_000
    q = _random_q(rng, n, 1e3)
    eps = 10.0 ** rng.uniform(-3, 3, size=n)
    lhs, rhs, holds = cubic_trace_bound_check(q, eps)
    bad = int(np.sum(~holds))
    return bad == 0, f"{n} samples, {bad} violations"


def _check_cancellation(rng):
    n = 10_000
    q = rng.standard_normal((n, 5)) * 10.0 ** rng.uniform(-2, 2, size=(n, 1))
    w = rng.standard_normal((n, 3, 3))
    omega = 0.5 * (w - np.swapaxes(w, -1, -2))
    vals = np.abs(rotation_cancellation(omega, q))
    scale = np.max(np.abs(omega), axis=(-2, -1)) * trace_sq(q) + 1e-300
    worst = float(np.max(vals / (1e-13 * scale)))
    return worst <= 1.0, f"{n} pairs, worst residual {worst:.3g}x tolerance"


def _check_projection(rng):
    m = rng.standard_normal((5_000, 3, 3)) * 10.0
    p1 = sym_traceless_project(m)
    p2 = sym_traceless_project(to_matrix(p1))
    tr = np.trace(to_matrix(p1), axis1=-2, axis2=-1)
    ok = np.max(np.abs(p2 - p1)) <= 1e-12 * max(1.0, float(np.max(np.abs(p1))))
    ok = ok and float(np.max(np.abs(tr))) == 0.0
    return ok, "idempotency and exact trace on 5000 samples"


def _check_operator_identity(rng):
    dom = DomainSpec(16, 16, 16)
    f = rng.standard_normal(dom.shape)
    g = grad_array(f, dom)
    divgrad = sum(grad_array(g[..., a], dom)[..., a] for a in range(3))
    lap = laplacian_array(f, dom)
    # drop Nyquist content: odd derivatives zero those modes by construction
    import scipy.fft as sfft
    hat = sfft.rfftn(f, axes=(0, 1, 2))
    hat[dom.nx // 2, :, :] = 0
    hat[:, dom.ny // 2, :] = 0
    hat[:, :, -1] = 0
    f_res = sfft.irfftn(hat, s=dom.shape, axes=(0, 1, 2))
    g2 = grad_array(f_res, dom)
    divgrad2 = sum(grad_array(g2[..., a], dom)[..., a] for a in range(3))
    lap2 = laplacian_array(f_res, dom)
    err = float(np.max(np.abs(divgrad2 - lap2))) / max(1.0, float(np.max(np.abs(lap2))))
    return err <= 1e-12, f"div(grad f) vs lap f, relative error {err:.3g}"


def _check_linearity(rng):
    dom = DomainSpec(12, 12, 12, 1.0, 2.0, 0.5, bc_kind="box")
    f = rng.standard_normal(dom.shape)
    g = rng.standard_normal(dom.shape)
    a, b = 1.7, -0.3
    lhs = grad_array(a * f + b * g, dom)
    rhs = a * grad_array(f, dom) + b * grad_array(g, dom)
    scale = max(1.0, float(np.max(np.abs(rhs))))
    err = float(np.max(np.abs(lhs - rhs))) / scale
    return err <= 1e-12, f"gradient linearity, relative error {err:.3g}"


CHECKS = [
    ("cubic-trace-bound", _check_cubic_bound),
    ("rotation-cancellation", _check_cancellation),
    ("traceless-projection", _check_projection),
    ("div-grad-laplacian", _check_operator_identity),
    ("operator-linearity", _check_linearity),
]


def run_verification(seed: int = 20240817):
    """Run all checks; returns a list of (name, passed, detail)."""
    results = []
    for name, fn in CHECKS:
        rng = np.random.default_rng(seed)
        passed, detail = fn(rng)
        results.append((name, passed, detail))
    return results
