"""Symmetric second-order tensors and isotropic stiffness in Mandel notation.

A symmetric 3x3 tensor is stored as a length-6 array ordered
``(11, 22, 33, 23, 13, 12)`` with the off-diagonal entries scaled by
``sqrt(2)``.  In this basis the plain dot product of two vectors equals the
double contraction of the tensors, and a fourth-order tensor with minor
symmetries becomes an ordinary 6x6 matrix acting by matrix-vector product.

All functions accept stacked inputs of shape ``(..., 6)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import DomainError, SingularError

SQ2 = np.sqrt(2.0)
TWO_THIRDS_SQRT = np.sqrt(2.0 / 3.0)

#: index pairs of the six components
COMPONENTS = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))
NAMES = ("11", "22", "33", "23", "13", "12")
_SCALE = np.array([1.0, 1.0, 1.0, SQ2, SQ2, SQ2])

IDENTITY = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
P_VOL = np.outer(IDENTITY, IDENTITY) / 3.0
P_DEV = np.eye(6) - P_VOL

COND_LIMIT = 1e12


def from_matrix(m):
    """Convert ``(..., 3, 3)`` symmetric matrices to Mandel vectors."""
    m = np.asarray(m, dtype=float)
    out = np.stack([m[..., i, j] for i, j in COMPONENTS], axis=-1)
    return out * _SCALE


def to_matrix(v):
    """Convert Mandel vectors ``(..., 6)`` back to symmetric 3x3 matrices."""
    v = np.asarray(v, dtype=float)
    c = v / _SCALE
    m = np.empty(v.shape[:-1] + (3, 3))
    for k, (i, j) in enumerate(COMPONENTS):
        m[..., i, j] = c[..., k]
        m[..., j, i] = c[..., k]
    return m


def from_components(t11=0.0, t22=0.0, t33=0.0, t23=0.0, t13=0.0, t12=0.0):
    """Build a Mandel vector from plain tensor components."""
    return np.array([t11, t22, t33, SQ2 * t23, SQ2 * t13, SQ2 * t12])


def components(v):
    """Plain tensor components ``(11, 22, 33, 23, 13, 12)`` of a Mandel vector."""
    return np.asarray(v, dtype=float) / _SCALE


def trace(v):
    v = np.asarray(v, dtype=float)
    return v[..., 0] + v[..., 1] + v[..., 2]


def dev(v):
    """Deviatoric part."""
    v = np.asarray(v, dtype=float)
    out = v.copy()
    out[..., :3] -= trace(v)[..., None] / 3.0
    return out


def ddot(a, b):
    """Double contraction ``a : b``."""
    return np.sum(np.asarray(a) * np.asarray(b), axis=-1)


def norm(v):
    """Frobenius norm of the represented tensor."""
    return np.sqrt(ddot(v, v))


def sym_outer(a, n):
    """Mandel vector of ``sym(a (x) n)`` for 2- or 3-component vectors."""
    a3 = np.zeros(3)
    n3 = np.zeros(3)
    a3[: len(a)] = a
    n3[: len(n)] = n
    return from_matrix(0.5 * (np.outer(a3, n3) + np.outer(n3, a3)))


def iso_from_moduli(bulk, shear):
    """Isotropic stiffness ``3K P_vol + 2 mu P_dev``."""
    return 3.0 * bulk * P_VOL + 2.0 * shear * P_DEV


def iso_stiffness(E, nu):
    """Isotropic elasticity tensor from Young's modulus and Poisson's ratio.

    Raises
    ------
    DomainError
        If ``E <= 0`` or ``nu`` is outside ``(-1, 0.5)``.
    """
    if not E > 0:
        raise DomainError(f"Young's modulus must be positive, got {E}")
    if not -1.0 < nu < 0.5:
        raise DomainError(f"Poisson's ratio must lie in (-1, 0.5), got {nu}")
    return iso_from_moduli(E / (3.0 * (1.0 - 2.0 * nu)), E / (2.0 * (1.0 + nu)))


def iso_moduli(C, rtol=1e-8):
    """Recover ``(K, mu)`` from an isotropic stiffness matrix.

    Raises
    ------
    DomainError
        If ``C`` is not isotropic to within ``rtol``.
    """
    C = np.asarray(C, dtype=float)
    bulk = IDENTITY @ C @ IDENTITY / 9.0
    shear = np.trace(P_DEV @ C) / 10.0
    ref = iso_from_moduli(bulk, shear)
    if np.max(np.abs(C - ref)) > rtol * max(np.max(np.abs(C)), 1e-300):
        raise DomainError("stiffness is not isotropic")
    return bulk, shear


def invert(C, cond_limit=COND_LIMIT):
    """Invert a symmetric positive definite 6x6 stiffness.

    Uses a Cholesky factorization; a condition number above ``cond_limit``
    or a failed factorization raises :class:`SingularError`.
    """
    C = np.asarray(C, dtype=float)
    C = 0.5 * (C + C.T)
    cond = np.linalg.cond(C)
    if not np.isfinite(cond) or cond > cond_limit:
        raise SingularError(f"stiffness condition number {cond:.3e} exceeds {cond_limit:.1e}")
    try:
        factor = scipy.linalg.cho_factor(C)
    except np.linalg.LinAlgError as exc:
        raise SingularError("stiffness is not positive definite") from exc
    inv = scipy.linalg.cho_solve(factor, np.eye(C.shape[0]))
    return 0.5 * (inv + inv.T)


@dataclass(frozen=True)
class Material:
    """Isotropic elastoplastic constituent with linear isotropic hardening.

    ``yield_stress`` is the tensile yield stress for the 3D von Mises models
    and the shear yield stress for the torsion model.
    """

    E: float
    nu: float
    yield_stress: float
    hardening: float = 0.0

    def __post_init__(self):
        if not self.E > 0:
            raise DomainError(f"E must be positive, got {self.E}")
        if not -1.0 < self.nu < 0.5:
            raise DomainError(f"nu must lie in (-1, 0.5), got {self.nu}")
        if not self.yield_stress > 0:
            raise DomainError(f"yield stress must be positive, got {self.yield_stress}")
        if self.hardening < 0:
            raise DomainError(f"hardening modulus must be non-negative, got {self.hardening}")

    @property
    def shear_modulus(self):
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def bulk_modulus(self):
        return self.E / (3.0 * (1.0 - 2.0 * self.nu))

    @cached_property
    def stiffness(self):
        return iso_stiffness(self.E, self.nu)
