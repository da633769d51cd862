"""Reduced model of a thick spherical shell under radial displacement control.

The shell is split into concentric sub-shells.  Each sub-shell carries the
volume average ``p_i`` of the radial plastic strain
(``eps_p = p * diag(1, -1/2, -1/2)`` in spherical coordinates); the
external variables are the inner and outer radial displacements.

Within a sub-shell the constrained energy minimizer is known in closed
form: the deviatoric stress measure ``s = u' - u/r - 3p/2`` is constant,
``u = c1 r + c2 / r^2 + beta r ln(r / r_a)`` with ``beta = -4 mu s / (3K)``,
and ``p = -2 c2 / r^3 + 2 (beta - s) / 3``.  The three constants follow
from the two end displacements and the average constraint, which makes
each sub-shell energy an explicit quadratic in ``(u_left, u_right, p_i)``.
Summing sub-shells and condensing the interface displacements gives the
macroscopic energy.  The yield conditions on the driving forces are
coupled and are solved by Gauss-Seidel sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import GeometryError, NonConvergence, SingularError
from .quadform import QuadraticForm

FOUR_PI = 4.0 * np.pi
DISSIPATION_MODES = ("nominal", "consistent")


@dataclass(frozen=True)
class SphereModel:
    """Sub-shell partition and material data.

    Parameters
    ----------
    radii : array
        ``r_in = r_0 < ... < r_N = r_out``.
    bulk, shear : float
        Elastic moduli.
    tau_y : float
        Yield parameter.
    dissipation : {"nominal", "consistent"}
        ``"nominal"`` uses the yield force ``2 pi m2_i tau_y`` on a full
        sphere; ``"consistent"`` integrates ``tau_y |eps_p_dot|`` exactly,
        giving ``4 pi sqrt(3/2) m2_i tau_y``.
    solid_angle : float
        Solid angle the energy is integrated over.  ``4 pi`` is the full
        shell; ``1`` gives energies per steradian.
    """

    radii: np.ndarray
    bulk: float
    shear: float
    tau_y: float
    dissipation: str = "nominal"
    solid_angle: float = FOUR_PI
    m2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        if r.ndim != 1 or len(r) < 2:
            raise GeometryError("need at least two radii")
        if r[0] <= 0:
            raise GeometryError("inner radius must be positive")
        if np.any(np.diff(r) <= 0):
            raise GeometryError("radii must be strictly increasing")
        if self.dissipation not in DISSIPATION_MODES:
            raise ValueError(f"dissipation must be one of {DISSIPATION_MODES}")
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "m2", np.diff(r**3) / 3.0)

    @classmethod
    def equidistant(cls, r_in, r_out, n, bulk, shear, tau_y, **kwargs):
        return cls(np.linspace(r_in, r_out, n + 1), bulk, shear, tau_y, **kwargs)

    @property
    def n(self):
        return len(self.m2)

    @property
    def thresholds(self):
        """Yield forces bounding ``|f_i|``."""
        if self.dissipation == "nominal":
            return 2.0 * np.pi * self.m2 * self.tau_y * (self.solid_angle / FOUR_PI)
        return self.solid_angle * np.sqrt(1.5) * self.m2 * self.tau_y

    @property
    def pointwise_yield(self):
        """Bound on the pointwise force ``2 mu (u' - u/r - 3p/2)`` matching ``thresholds``."""
        return self.thresholds[0] / (self.solid_angle * self.m2[0])


@dataclass(frozen=True)
class SubShell:
    """Closed-form minimizer of one sub-shell.

    ``coeffs @ (u_left, u_right, p)`` gives ``(c1, c2, s)``; ``hessian``
    is the energy Hessian in the same variables.
    """

    a: float
    b: float
    beta_per_s: float
    coeffs: np.ndarray
    hessian: np.ndarray

    def fields(self, values):
        c1, c2, s = self.coeffs @ np.asarray(values, dtype=float)
        beta = self.beta_per_s * s
        a = self.a

        def u(r):
            r = np.asarray(r, dtype=float)
            return c1 * r + c2 / r**2 + beta * r * np.log(r / a)

        def p(r):
            r = np.asarray(r, dtype=float)
            return -2.0 * c2 / r**3 + 2.0 * (beta - s) / 3.0

        return u, p


def _r2_log_integrals(a, b):
    """``int_a^b r^2 ln(r/a)^k dr`` for k = 0, 1, 2."""

    def F(r):
        L = np.log(r / a)
        r3 = r**3
        return np.array([r3 / 3.0, r3 * L / 3.0 - r3 / 9.0, r3 * L**2 / 3.0 - 2.0 * r3 * L / 9.0 + 2.0 * r3 / 27.0])

    return F(b) - F(a)


def subshell(model, i, cond_limit=1e12):
    """Closed-form minimizer and energy Hessian of sub-shell ``i`` (0-based)."""
    a, b = model.radii[i], model.radii[i + 1]
    K, mu = model.bulk, model.shear
    vol = (b**3 - a**3) / 3.0
    kb = -4.0 * mu / (3.0 * K)
    # rows: u(a) = u_left, u(b) = u_right, <p> = p_i
    A = np.array(
        [
            [a, 1.0 / a**2, 0.0],
            [b, 1.0 / b**2, kb * b * np.log(b / a)],
            [0.0, -2.0 * np.log(b / a) / vol, 2.0 * (kb - 1.0) / 3.0],
        ]
    )
    if np.linalg.cond(A) > cond_limit:
        raise SingularError(f"sub-shell {i} constraint system is singular")
    M = scipy.linalg.solve(A, np.eye(3))

    # volumetric strain 3 c1 + beta (1 + 3 ln(r/a)) written as A0 + B0 ln(r/a)
    T = np.array([[3.0, 0.0, kb], [0.0, 0.0, 3.0 * kb]])
    I0, I1, I2 = _r2_log_integrals(a, b)
    J = np.array([[I0, I1], [I1, I2]])
    Q = 0.5 * K * T.T @ J @ T
    Q[2, 2] += 2.0 / 3.0 * mu * vol
    H = 2.0 * model.solid_angle * M.T @ Q @ M
    return SubShell(a, b, kb, M, 0.5 * (H + H.T))


def subdomain_energy(model, i, u_left, u_right, p):
    v = np.array([u_left, u_right, p], dtype=float)
    return 0.5 * v @ subshell(model, i).hessian @ v


def _displacement_names(n):
    return ["u_in"] + [f"u_{k}" for k in range(1, n)] + ["u_out"]


@dataclass(frozen=True)
class SphereQuadForm:
    """Macroscopic energy over the retained variables.

    ``recovery @ x`` returns the condensed displacements in the order of
    ``condensed``.
    """

    model: SphereModel
    form: QuadraticForm
    condensed: tuple
    recovery: np.ndarray
    shells: tuple

    @property
    def names(self):
        return self.form.names

    @property
    def hessian(self):
        return self.form.hessian

    @property
    def p_index(self):
        return np.array([self.form.index(f"p_{k}") for k in range(1, self.model.n + 1)])

    def retains(self, name):
        return name in self.form.names

    def vector(self, state):
        x = np.zeros(len(self.names))
        for k, name in enumerate(self.names):
            if name == "u_in":
                x[k] = state.u_in
            elif name == "u_out":
                x[k] = state.u_out
        x[self.p_index] = state.p
        return x

    def energy(self, state):
        return self.form.value(self.vector(state))

    def coefficients(self):
        return self.form.coefficients()


def assemble(model, free_outer=False, free_inner=False):
    """Sum the sub-shell energies and condense interior interface displacements.

    ``free_outer`` / ``free_inner`` additionally minimize over the outer or
    inner boundary displacement (traction-free boundary).
    """
    n = model.n
    unames = _displacement_names(n)
    names = unames + [f"p_{k}" for k in range(1, n + 1)]
    H = np.zeros((len(names), len(names)))
    shells = []
    for i in range(n):
        sh = subshell(model, i)
        shells.append(sh)
        idx = [i, i + 1, n + 1 + i]
        H[np.ix_(idx, idx)] += sh.hessian
    full = QuadraticForm(H, tuple(names))
    eliminate = list(unames[1:-1])
    if free_inner:
        eliminate.insert(0, "u_in")
    if free_outer:
        eliminate.append("u_out")
    reduced, R = full.condense(eliminate)
    return SphereQuadForm(model, reduced, tuple(eliminate), R, tuple(shells))


@dataclass(frozen=True)
class SphereState:
    p: np.ndarray
    u_in: float = 0.0
    u_out: float = 0.0
    sweeps: int = 0

    @classmethod
    def zero(cls, n):
        return cls(np.zeros(n))


def driving_forces(form, state):
    """``f_i = -d psi / d p_i``."""
    return -form.form.gradient(form.vector(state))[form.p_index]


def inner_traction(form, state):
    """Radial stress at the inner surface, tension positive.

    The inner surface has outward normal ``-e_r``, so the energy derivative
    with respect to ``u_in`` is minus the radial stress times the area.
    """
    if not form.retains("u_in"):
        raise ValueError("inner displacement was condensed; traction is zero by construction")
    k = form.form.index("u_in")
    dpsi = form.form.gradient(form.vector(state))[k]
    r_in = form.model.radii[0]
    return -dpsi / (form.model.solid_angle * r_in**2)


def outer_force(form, state):
    """``d psi / d u_out``: the force conjugate to the outer displacement."""
    k = form.form.index("u_out")
    return form.form.gradient(form.vector(state))[k]


def _with_condensed(form, state, x):
    """Fill condensed boundary displacements from their minimizers."""
    u_in, u_out = state.u_in, state.u_out
    if form.condensed:
        rec = dict(zip(form.condensed, form.recovery @ x))
        u_in = rec.get("u_in", u_in)
        u_out = rec.get("u_out", u_out)
    return u_in, u_out


def step(form, state, u_in=None, u_out=None, tol=1e-10, sweep_limit=200):
    """Staggered backward-Euler update of all sub-shell plastic strains.

    Each Gauss-Seidel sweep minimizes the incremental potential
    ``psi + sum_i t_i |p_i - p_i^n|`` exactly in one ``p_i`` at a time,
    holding the others fixed.  The sweeps stop when no update exceeds
    ``tol`` in units of the yield force and every yield condition holds to
    ``tol`` relative, with equality for the sub-shells that flowed.

    Raises
    ------
    NonConvergence
        If ``sweep_limit`` sweeps do not converge.
    """
    model = form.model
    new = SphereState(
        state.p.copy(),
        state.u_in if u_in is None else float(u_in),
        state.u_out if u_out is None else float(u_out),
    )
    x = form.vector(new)
    H = form.hessian
    idx = form.p_index
    thr = model.thresholds
    p_old = state.p
    residual = np.inf
    for sweep in range(1, sweep_limit + 1):
        residual = 0.0
        for k, j in enumerate(idx):
            hjj = H[j, j]
            f = -(H[j] @ x)
            f_trial = f + hjj * (x[j] - p_old[k])
            excess = abs(f_trial) - thr[k]
            target = p_old[k] + np.sign(f_trial) * excess / hjj if excess > 0 else p_old[k]
            residual = max(residual, abs(target - x[j]) * hjj / thr[k])
            x[j] = target
        if residual <= tol:
            viol = (np.abs(-(H[idx] @ x)) - thr) / thr
            moved = x[idx] != p_old
            if np.all(viol <= tol) and np.all(np.abs(viol[moved]) <= tol):
                break
    else:
        raise NonConvergence(
            f"staggered sphere update did not converge in {sweep_limit} sweeps",
            residual=residual,
            iterations=sweep_limit,
        )
    p = x[idx].copy()
    u_a, u_b = _with_condensed(form, new, x)
    return SphereState(p, u_a, u_b, sweep)


def yield_violation(form, state):
    """``|f_i| - t_i``; non-positive when admissible."""
    return np.abs(driving_forces(form, state)) - form.model.thresholds


def dissipation(form, dp):
    return float(np.sum(form.model.thresholds * np.abs(dp)))


@dataclass(frozen=True)
class SphereFields:
    radii: np.ndarray
    interface_u: np.ndarray
    pieces: tuple

    def _piece(self, r):
        r = np.asarray(r, dtype=float)
        return np.clip(np.searchsorted(self.radii, r, side="right") - 1, 0, len(self.pieces) - 1)

    def u(self, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        j = self._piece(r)
        out = np.empty_like(r)
        for k, (uf, _) in enumerate(self.pieces):
            m = j == k
            out[m] = uf(r[m])
        return out

    def p(self, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        j = self._piece(r)
        out = np.empty_like(r)
        for k, (_, pf) in enumerate(self.pieces):
            m = j == k
            out[m] = pf(r[m])
        return out

    def shell_average(self, k, n_gauss=32):
        x, w = np.polynomial.legendre.leggauss(n_gauss)
        a, b = self.radii[k], self.radii[k + 1]
        r = 0.5 * (b - a) * x + 0.5 * (b + a)
        w = 0.5 * (b - a) * w * r**2
        return float(np.sum(w * self.pieces[k][1](r)) / np.sum(w))


def interface_displacements(form, state):
    """All displacements ``u_0 .. u_N`` at the minimizing interface values."""
    x = form.vector(state)
    vals = dict(zip(form.condensed, form.recovery @ x))
    for name in ("u_in", "u_out"):
        if form.retains(name):
            vals[name] = x[form.form.index(name)]
    return np.array([vals[name] for name in _displacement_names(form.model.n)])


def recover_fields(form, state):
    """Piecewise analytic ``u(r)`` and ``p(r)`` of the current state."""
    u = interface_displacements(form, state)
    pieces = tuple(sh.fields((u[i], u[i + 1], state.p[i])) for i, sh in enumerate(form.shells))
    return SphereFields(form.model.radii, u, pieces)
