"""Von Mises plasticity with linear isotropic hardening.

Free energy ``psi = 1/2 (eps - eps_p) : C : (eps - eps_p) + 1/2 a q^2``,
dissipation ``sqrt(2/3) sigma_y |eps_p_dot|`` and the hardening constraint
``q_dot = |eps_p_dot|``.  Eliminating the multiplier of that constraint
gives the yield function ``|dev sigma| <= sqrt(2/3) sigma_y + a q`` used by
the return maps below.  Both the scalar and the batched return map are
backward-Euler updates solved in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as tn

YIELD_RTOL = 1e-10


@dataclass(frozen=True)
class LocalState:
    """Pointwise internal variables: trace-free plastic strain and hardening."""

    plastic_strain: np.ndarray = field(default_factory=lambda: np.zeros(6))
    q: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "plastic_strain", np.asarray(self.plastic_strain, dtype=float))


@dataclass(frozen=True)
class ReturnMapResult:
    state: LocalState
    stress: np.ndarray
    dlambda: float
    dissipation: float


def yield_radius(sigma_y, a, q):
    """Radius of the yield surface in deviatoric stress space."""
    return tn.TWO_THIRDS_SQRT * sigma_y + a * q


def stress(strain, state, C):
    return np.asarray(C) @ (np.asarray(strain) - state.plastic_strain)


def free_energy(strain, state, C, a):
    elastic = np.asarray(strain) - state.plastic_strain
    return 0.5 * elastic @ np.asarray(C) @ elastic + 0.5 * a * state.q**2


def dissipation_rate(rate, sigma_y):
    return tn.TWO_THIRDS_SQRT * sigma_y * float(tn.norm(rate))


def radial_return(strain, state, C, a, sigma_y):
    """Backward-Euler return map for one material point.

    Parameters
    ----------
    strain : (6,) array
        Total strain at the end of the step.
    state : LocalState
        Internal variables at the start of the step.
    C : (6, 6) array
        Isotropic stiffness; anything else raises ``DomainError``.
    a, sigma_y : float
        Hardening modulus and tensile yield stress.
    """
    _, mu = tn.iso_moduli(C)
    trial = stress(strain, state, C)
    s_trial = tn.dev(trial)
    s_norm = float(tn.norm(s_trial))
    excess = s_norm - yield_radius(sigma_y, a, state.q)
    if excess <= YIELD_RTOL * sigma_y:
        return ReturnMapResult(state, trial, 0.0, 0.0)
    dgamma = excess / (2.0 * mu + a)
    direction = s_trial / s_norm
    eps_p = state.plastic_strain + dgamma * direction
    eps_p = tn.dev(eps_p)
    new_state = LocalState(eps_p, state.q + dgamma)
    sig = trial - 2.0 * mu * dgamma * direction
    s_new = s_norm - 2.0 * mu * dgamma
    return ReturnMapResult(
        new_state,
        sig,
        dgamma / s_new if s_new > 0 else np.inf,
        tn.TWO_THIRDS_SQRT * sigma_y * dgamma,
    )


def radial_return_batch(strain, eps_p, q, bulk, shear, a, sigma_y, tangent=True):
    """Vectorized return map over ``n`` points with the consistent tangent.

    All material arguments may be scalars or length-``n`` arrays.

    Returns
    -------
    stress, eps_p_new, q_new, dgamma : arrays
    C_alg : (n, 6, 6) array or None
    """
    strain = np.asarray(strain, dtype=float)
    bulk = np.broadcast_to(np.asarray(bulk, dtype=float), strain.shape[:1])
    shear = np.broadcast_to(np.asarray(shear, dtype=float), strain.shape[:1])
    a = np.broadcast_to(np.asarray(a, dtype=float), strain.shape[:1])
    sigma_y = np.broadcast_to(np.asarray(sigma_y, dtype=float), strain.shape[:1])

    elastic = strain - eps_p
    vol = bulk * tn.trace(elastic)
    s_trial = 2.0 * shear[:, None] * tn.dev(elastic)
    s_norm = tn.norm(s_trial)
    excess = s_norm - yield_radius(sigma_y, a, q)
    plastic = excess > YIELD_RTOL * sigma_y

    dgamma = np.where(plastic, excess / (2.0 * shear + a), 0.0)
    safe = np.where(s_norm > 0, s_norm, 1.0)
    direction = s_trial / safe[:, None]
    sig = s_trial - (2.0 * shear * dgamma)[:, None] * direction
    sig[:, :3] += vol[:, None]
    eps_p_new = eps_p + dgamma[:, None] * direction
    q_new = q + dgamma

    C_alg = None
    if tangent:
        theta = np.where(plastic, 2.0 * shear * dgamma / safe, 0.0)
        coef_nn = np.where(plastic, theta - 2.0 * shear / (2.0 * shear + a), 0.0)
        C_alg = (
            3.0 * bulk[:, None, None] * tn.P_VOL
            + (2.0 * shear * (1.0 - theta))[:, None, None] * tn.P_DEV
            + (2.0 * shear * coef_nn)[:, None, None] * np.einsum("ni,nj->nij", direction, direction)
        )
    return sig, eps_p_new, q_new, dgamma, C_alg
