"""Desk-scale simulator for simplified Q-tensor nematic liquid-crystal flow.

Incompressible Navier-Stokes coupled to a relaxational Q-tensor equation
with a Landau-de Gennes bulk potential, plus the verification machinery
for the model's algebraic identities, norm decay and the fixed-point
window solver.
"""

from .config import RunConfig, parse_config
from .coupled import SimState, picard_solve, step
from .grid import BCKind, DomainSpec, QTensorField, ScalarField, VelocityField
from .tensor_algebra import ModelParams, QTensor

__all__ = [
    "BCKind",
    "DomainSpec",
    "ModelParams",
    "QTensor",
    "QTensorField",
    "RunConfig",
    "ScalarField",
    "SimState",
    "VelocityField",
    "parse_config",
    "picard_solve",
    "step",
]

__version__ = "0.1.0"
