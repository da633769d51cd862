"""Macroscopic quadratic energies of a polygonal RVE and their evolution.

The reduced energy is

    psi(e_M, e_p, q) = min_a sum_i w_i [1/2 (e_i - e_pi) : C_i : (e_i - e_pi) + 1/2 a_i q_i^2]

with ``w_i = |Omega_i| / |Omega|`` and ``e_i`` the subdomain strains of
:mod:`effplast.rve.geometry`.  Minimizing over the amplitudes leaves a
quadratic form in ``x = (e_M, e_p1, ..., e_pN)`` whose blocks are the
effective tensors ``C_eff``, ``F_i`` and ``G_ij``::

    psi = 1/2 e_M:C_eff:e_M - sum_i e_M:F_i^T:e_pi + 1/2 sum_ij e_pi:G_ij:e_pj

Reuss and Voigt variants share the same block structure and come from
relaxing or suppressing strain compatibility.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import tensor as tn
from ..errors import NonConvergence, SolverError
from ..plasticity import yield_radius
from .geometry import subdomain_strains

PINV_RCOND = 1e-10
SOLVER_RTOL = 1e-10


def _material_arrays(geometry, materials):
    mats = [materials[m] for m in geometry.materials]
    C = np.array([m.stiffness for m in mats])
    return mats, C


def rve_energy(geometry, materials, e_M, e_p, amplitudes, q=None):
    """Volume-averaged free energy for given amplitude vectors."""
    mats, C = _material_arrays(geometry, materials)
    w = geometry.fractions
    eps = subdomain_strains(geometry, e_M, amplitudes) - np.asarray(e_p, dtype=float)
    elastic = 0.5 * np.einsum("i,ik,ikl,il->", w, eps, C, eps)
    if q is None:
        return float(elastic)
    a = np.array([m.hardening for m in mats])
    return float(elastic + 0.5 * np.sum(w * a * np.asarray(q) ** 2))


def voigt_energy(geometry, materials, e_M, e_p, q=None):
    """Energy with all amplitudes set to zero, i.e. uniform strain ``e_M``."""
    return rve_energy(geometry, materials, e_M, e_p, np.zeros(geometry.n_unknowns), q)


def _amplitude_system(geometry, C):
    """Normal matrix ``K`` and the load operator ``L`` with ``K a = -L x``."""
    w = geometry.fractions
    B = geometry.strain_operator
    n = geometry.n_subdomains
    K = np.einsum("i,ika,ikl,ilb->ab", w, B, C, B)
    # residual strain e_i - e_pi = S_i x + B_i a with S_i = [I, 0, .., -I, .., 0]
    L = np.zeros((geometry.n_unknowns, 6 * (n + 1)))
    for i in range(n):
        BC = w[i] * B[i].T @ C[i]
        L[:, :6] += BC
        L[:, 6 * (i + 1) : 6 * (i + 2)] -= BC
    return K, L


def _pinv(K):
    return np.linalg.pinv(K, rcond=PINV_RCOND, hermitian=True)


def minimize_amplitudes(geometry, materials, e_M, e_p):
    """Minimum-norm minimizer of the RVE energy over the amplitude vectors.

    Raises
    ------
    SolverError
        If the stationarity equations are not solved to ``1e-10`` relative.
    """
    _, C = _material_arrays(geometry, materials)
    K, L = _amplitude_system(geometry, C)
    x = np.concatenate([np.asarray(e_M, dtype=float), np.ravel(e_p)])
    rhs = -L @ x
    a = _pinv(K) @ rhs
    res = np.linalg.norm(K @ a - rhs)
    scale = np.linalg.norm(rhs) + np.linalg.norm(K) * np.linalg.norm(a)
    if res > SOLVER_RTOL * max(scale, 1e-300) and res > 1e-300:
        raise SolverError(f"amplitude stationarity residual {res:.3e} exceeds tolerance")
    return a.reshape(geometry.n_amplitudes, geometry.dim)


@dataclass(frozen=True)
class RveQuadForm:
    """Quadratic macroscopic energy over ``(e_M, e_p1, ..., e_pN)``.

    Attributes
    ----------
    hessian : (6(N+1), 6(N+1)) array
    fractions : (N,) array
    bulk, shear, sigma_y, hardening : (N,) arrays
        Subdomain material data used by the return map.
    kind : str
        ``"rom"``, ``"reuss"`` or ``"voigt"``.
    """

    hessian: np.ndarray
    fractions: np.ndarray
    bulk: np.ndarray
    shear: np.ndarray
    sigma_y: np.ndarray
    hardening: np.ndarray
    kind: str = "rom"

    @property
    def n(self):
        return len(self.fractions)

    def _block(self, i, j):
        return self.hessian[6 * i : 6 * (i + 1), 6 * j : 6 * (j + 1)]

    @property
    def C_eff(self):
        return self._block(0, 0).copy()

    def F(self, i):
        return -self._block(i + 1, 0)

    def G(self, i, j):
        return self._block(i + 1, j + 1).copy()

    def _x(self, e_M, e_p):
        return np.concatenate([np.asarray(e_M, dtype=float), np.ravel(e_p)])

    def energy(self, e_M, e_p, q=None):
        x = self._x(e_M, e_p)
        psi = 0.5 * x @ self.hessian @ x
        if q is not None:
            psi += 0.5 * np.sum(self.fractions * self.hardening * np.asarray(q) ** 2)
        return float(psi)

    def elastic_energy(self, e_M, e_p):
        return self.energy(e_M, e_p)

    def macro_stress(self, e_M, e_p):
        """``d psi / d e_M = C_eff e_M - sum_i F_i^T e_pi``."""
        return self.hessian[:6] @ self._x(e_M, e_p)

    def driving_forces(self, e_M, e_p):
        """``g_i = -d psi / d e_pi``, returned as an ``(N, 6)`` array."""
        return -(self.hessian[6:] @ self._x(e_M, e_p)).reshape(self.n, 6)

    def subdomain_stresses(self, e_M, e_p):
        """Mean subdomain stresses ``g_i / w_i``."""
        return self.driving_forces(e_M, e_p) / self.fractions[:, None]

    def return_moduli(self):
        """Shear stiffness used by the per-subdomain return map.

        Half the largest eigenvalue of the deviatoric part of ``G_ii / w_i``,
        so the local quadratic model dominates the true one.
        """
        out = np.empty(self.n)
        for i in range(self.n):
            Gd = tn.P_DEV @ self.G(i, i) @ tn.P_DEV / self.fractions[i]
            out[i] = 0.5 * np.linalg.eigvalsh(0.5 * (Gd + Gd.T))[-1]
        return out


def _form(hessian, geometry, materials, kind):
    mats, _ = _material_arrays(geometry, materials)
    return RveQuadForm(
        0.5 * (hessian + hessian.T),
        geometry.fractions,
        np.array([m.bulk_modulus for m in mats]),
        np.array([m.shear_modulus for m in mats]),
        np.array([m.yield_stress for m in mats]),
        np.array([m.hardening for m in mats]),
        kind,
    )


def _unconstrained_hessian(w, C):
    n = len(w)
    H = np.zeros((6 * (n + 1), 6 * (n + 1)))
    for i in range(n):
        S = np.zeros((6, 6 * (n + 1)))
        S[:, :6] = np.eye(6)
        S[:, 6 * (i + 1) : 6 * (i + 2)] = -np.eye(6)
        H += w[i] * S.T @ C[i] @ S
    return H


def assemble_quadratic(geometry, materials):
    """Condense the amplitude vectors out of the RVE energy.

    ``materials`` maps the geometry's material ids to :class:`Material`.
    """
    _, C = _material_arrays(geometry, materials)
    w = geometry.fractions
    K, L = _amplitude_system(geometry, C)
    Kp = _pinv(K)
    R = -Kp @ L
    res = np.linalg.norm(K @ R + L)
    if res > SOLVER_RTOL * max(np.linalg.norm(L), 1e-300):
        raise SolverError(f"amplitude stationarity residual {res:.3e} exceeds tolerance")
    H = _unconstrained_hessian(w, C) + L.T @ R
    return _form(H, geometry, materials, "rom")


def voigt_assemble(geometry, materials):
    _, C = _material_arrays(geometry, materials)
    return _form(_unconstrained_hessian(geometry.fractions, C), geometry, materials, "voigt")


def reuss_assemble(geometry, materials):
    """Minimize over subdomain strains constrained only by their mean.

    The minimizer has equal stresses ``sigma = C_R (e_M - sum_j w_j e_pj)``
    with ``C_R = (sum_i w_i C_i^-1)^-1``.
    """
    _, C = _material_arrays(geometry, materials)
    w = geometry.fractions
    compliance = sum(wi * tn.invert(Ci) for wi, Ci in zip(w, C))
    CR = tn.invert(compliance)
    n = len(w)
    T = np.zeros((6, 6 * (n + 1)))
    T[:, :6] = np.eye(6)
    for i in range(n):
        T[:, 6 * (i + 1) : 6 * (i + 2)] = -w[i] * np.eye(6)
    return _form(T.T @ CR @ T, geometry, materials, "reuss")


ASSEMBLERS = {"rom": assemble_quadratic, "reuss": reuss_assemble, "voigt": voigt_assemble}


@dataclass(frozen=True)
class RveState:
    e_p: np.ndarray
    q: np.ndarray
    e_M: np.ndarray
    sweeps: int = 0

    @classmethod
    def zero(cls, n):
        return cls(np.zeros((n, 6)), np.zeros(n), np.zeros(6))


def yield_violation(form, state):
    """``|dev sigma_i| - (sqrt(2/3) sigma_y,i + a_i q_i)`` per subdomain."""
    s = tn.dev(form.subdomain_stresses(state.e_M, state.e_p))
    return tn.norm(s) - yield_radius(form.sigma_y, form.hardening, state.q)


def dissipation(form, old, new):
    dp = tn.norm(new.e_p - old.e_p)
    return float(np.sum(form.fractions * tn.TWO_THIRDS_SQRT * form.sigma_y * dp))


def _admissible(form, x, q, plastic, tol):
    """Yield inequality everywhere and consistency where the step was plastic."""
    sig = -(form.hessian[6:] @ x).reshape(form.n, 6) / form.fractions[:, None]
    viol = (tn.norm(tn.dev(sig)) - yield_radius(form.sigma_y, form.hardening, q)) / form.sigma_y
    return bool(np.all(viol <= tol) and np.all(np.abs(viol[plastic]) <= tol))


def step(form, e_M, state, tol=1e-10, sweep_limit=200):
    """Backward-Euler update of all subdomain plastic strains.

    Gauss-Seidel sweeps in ascending subdomain order.  Each visit performs a
    radial return of subdomain ``i`` from its step-start state, holding the
    other subdomains at their latest values; the trial stress is corrected
    by the return modulus so the converged sweep is the exact coupled
    backward-Euler solution.  Sweeps stop when no plastic strain changes by
    more than ``tol * sigma_y,i / (2 mu_i)`` and every yield condition holds
    to ``tol * sigma_y,i`` (with equality in subdomains that yielded).

    Raises
    ------
    NonConvergence
        After ``sweep_limit`` sweeps without convergence.
    """
    e_M = np.asarray(e_M, dtype=float)
    H = form.hessian
    w = form.fractions
    mu_hat = form.return_moduli()
    x = np.concatenate([e_M, np.ravel(state.e_p)])
    p_old = state.e_p
    q_old = state.q
    q_new = q_old.copy()
    residual = np.inf
    for sweep in range(1, sweep_limit + 1):
        residual = 0.0
        for i in range(form.n):
            sl = slice(6 * (i + 1), 6 * (i + 2))
            sigma = -(H[sl] @ x) / w[i]
            trial = tn.dev(sigma + 2.0 * mu_hat[i] * (x[sl] - p_old[i]))
            t_norm = float(tn.norm(trial))
            excess = t_norm - yield_radius(form.sigma_y[i], form.hardening[i], q_old[i])
            if excess > 0.0:
                dgamma = excess / (2.0 * mu_hat[i] + form.hardening[i])
                target = p_old[i] + dgamma * trial / t_norm
            else:
                dgamma = 0.0
                target = p_old[i].copy()
            change = 2.0 * mu_hat[i] * float(tn.norm(target - x[sl])) / form.sigma_y[i]
            residual = max(residual, change)
            x[sl] = target
            q_new[i] = q_old[i] + dgamma
        if residual <= tol and _admissible(form, x, q_new, q_new > q_old, tol):
            break
    else:
        raise NonConvergence(
            f"staggered RVE update did not converge in {sweep_limit} sweeps",
            residual=residual,
            iterations=sweep_limit,
        )
    e_p = tn.dev(x[6:].reshape(form.n, 6))
    return RveState(e_p, q_new, e_M.copy(), sweep)
