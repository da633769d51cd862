"""Explicit quadratic energies and their condensation.

A :class:`QuadraticForm` stores ``psi(x) = 1/2 x^T H x`` over named scalar
variables.  Condensing a subset of variables minimizes over them, which for
a convex form is the Schur complement of the eliminated block.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np
import scipy.linalg

from .errors import SingularError


@dataclass(frozen=True)
class QuadraticForm:
    hessian: np.ndarray
    names: tuple

    def __post_init__(self):
        H = np.asarray(self.hessian, dtype=float)
        if H.shape != (len(self.names), len(self.names)):
            raise ValueError("hessian shape does not match the variable names")
        object.__setattr__(self, "hessian", 0.5 * (H + H.T))
        object.__setattr__(self, "names", tuple(self.names))

    def index(self, name):
        return self.names.index(name)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * x @ self.hessian @ x

    def gradient(self, x):
        return self.hessian @ np.asarray(x, dtype=float)

    def condense(self, eliminate, cond_limit=1e14):
        """Minimize over the variables in ``eliminate``.

        Returns the condensed form and the recovery matrix ``R`` such that the
        minimizing eliminated values are ``R @ x_kept``.
        """
        elim = [self.index(n) for n in eliminate]
        keep = [i for i in range(len(self.names)) if i not in elim]
        H = self.hessian
        Hee = H[np.ix_(elim, elim)]
        Hek = H[np.ix_(elim, keep)]
        if elim:
            cond = np.linalg.cond(Hee)
            if not np.isfinite(cond) or cond > cond_limit:
                raise SingularError(f"condensation block is singular (cond={cond:.3e})")
            R = -scipy.linalg.solve(Hee, Hek, assume_a="sym")
        else:
            R = np.zeros((0, len(keep)))
        Hc = H[np.ix_(keep, keep)] + H[np.ix_(keep, elim)] @ R
        return QuadraticForm(Hc, tuple(self.names[i] for i in keep)), R

    def coefficients(self):
        """Polynomial coefficients ``c_alpha`` with ``psi = sum c_alpha x^alpha``.

        Keys are exponent tuples over ``names``.
        """
        n = len(self.names)
        out = {}
        for i, j in combinations_with_replacement(range(n), 2):
            alpha = [0] * n
            alpha[i] += 1
            alpha[j] += 1
            c = 0.5 * self.hessian[i, i] if i == j else self.hessian[i, j]
            out[tuple(alpha)] = float(c)
        return out
