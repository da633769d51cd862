"""Variational reduced-order models for elastoplastic bodies and composites.

Subpackages and modules
-----------------------
tensor, plasticity
    Mandel 6-vector algebra, isotropic materials and the von Mises
    radial return.
quadform
    Quadratic forms with condensation of minimizing variables.
torsion, sphere
    Reduced models of a twisted shaft and a pressurized thick sphere.
rve
    Periodic RVE geometry, the condensed RVE energy and its Reuss and
    Voigt counterparts.
oracles
    Independent fine-scale solvers used as references.
scenario
    Load protocols, configuration files, the time-stepping runner, result
    comparison and the command line tool.
"""

from .errors import (
    ConfigError,
    DomainError,
    EffplastError,
    GeometryError,
    NonConvergence,
    RangeError,
    SchemaError,
    SingularError,
    SolverError,
)
from .quadform import QuadraticForm
from .tensor import Material

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DomainError",
    "EffplastError",
    "GeometryError",
    "Material",
    "NonConvergence",
    "QuadraticForm",
    "RangeError",
    "SchemaError",
    "SingularError",
    "SolverError",
    "__version__",
]
