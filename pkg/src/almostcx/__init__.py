"""Numerical laboratory for almost complex structures on coordinate charts.

Submodules: ``geometry`` (charts, fields, structures), ``connections``
(Nijenhuis tensor, minimal connections, curvature), ``bundles`` (tangent and
normal bundle structures), ``jets`` (1-jet normal forms), ``torus`` (line
bundles over elliptic curves), ``generator`` (structure generation),
``config`` / ``expr`` (input files), ``suites`` / ``reports`` / ``cli``.
"""

from .errors import (CapabilityError, ChartError, ContractError, DomainError, GeometryError,
                     InvalidSpecError, PreconditionError)
from .geometry import AlmostComplexStructure, ChartDomain, ScalarField, Tensor21Field, VectorField
from .connections import ConnectionField, minimal_connection, nijenhuis_tensor

__version__ = "0.1.0"

__all__ = [
    "AlmostComplexStructure", "ChartDomain", "ScalarField", "VectorField", "Tensor21Field",
    "ConnectionField", "minimal_connection", "nijenhuis_tensor",
    "GeometryError", "DomainError", "ChartError", "CapabilityError", "ContractError",
    "PreconditionError", "InvalidSpecError",
]
