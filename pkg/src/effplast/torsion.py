"""Reduced model of an elastoplastic circular shaft under twist.

The cross section is split into concentric rings.  Each ring carries the
ring average ``p_i`` of the engineering plastic shear strain and the average
hardening variable ``q_i``; the twist per unit length is the only external
variable.  The ring yield conditions decouple, so each step is a set of
independent closed-form scalar return maps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError

TWO_PI = 2.0 * np.pi


def moments(radii):
    """First and second radial moments of each ring.

    ``m1_i = (r_i^2 - r_{i-1}^2)/2`` and ``m2_i = (r_i^3 - r_{i-1}^3)/3``.
    """
    r = np.asarray(radii, dtype=float)
    if r.ndim != 1 or len(r) < 2:
        raise GeometryError("need at least two radii")
    if r[0] != 0.0:
        raise GeometryError("the first radius must be 0")
    if np.any(np.diff(r) <= 0):
        raise GeometryError("radii must be strictly increasing")
    return 0.5 * np.diff(r**2), np.diff(r**3) / 3.0


def equidistant_radii(radius, n):
    return np.linspace(0.0, radius, n + 1)


@dataclass(frozen=True)
class TorsionState:
    p: np.ndarray
    q: np.ndarray
    twist: float = 0.0

    @classmethod
    def zero(cls, n):
        return cls(np.zeros(n), np.zeros(n), 0.0)


@dataclass(frozen=True)
class RingField:
    """Recovered plastic strain ``p(r) = r * twist + offset_j`` on ring ``j``."""

    radii: np.ndarray
    twist: float
    offsets: np.ndarray

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        j = np.clip(np.searchsorted(self.radii, r, side="right") - 1, 0, len(self.offsets) - 1)
        return r * self.twist + self.offsets[j]

    def jumps(self):
        """``p(r_j+) - p(r_j-)`` at the interior interfaces."""
        return np.diff(self.offsets)

    def ring_average(self, j, n_gauss=8):
        """Area-weighted average over ring ``j`` by Gauss quadrature."""
        x, w = np.polynomial.legendre.leggauss(n_gauss)
        a, b = self.radii[j], self.radii[j + 1]
        r = 0.5 * (b - a) * x + 0.5 * (b + a)
        w = 0.5 * (b - a) * w
        vals = r * self.twist + self.offsets[j]
        return float(np.sum(w * vals * r) / np.sum(w * r))


@dataclass(frozen=True)
class TorsionModel:
    """Ring-averaged torsion model.

    Parameters
    ----------
    radii : array
        ``0 = r_0 < r_1 < ... < r_N = R`` in mm.
    mu : float
        Shear modulus.
    tau_y : float
        Shear yield stress.
    hardening : float
        Linear hardening modulus ``a``.
    """

    radii: np.ndarray
    mu: float
    tau_y: float
    hardening: float = 0.0
    m1: np.ndarray = field(init=False, repr=False)
    m2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        m1, m2 = moments(radii)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "m1", m1)
        object.__setattr__(self, "m2", m2)

    @classmethod
    def equidistant(cls, radius, n, mu, tau_y, hardening=0.0):
        return cls(equidistant_radii(radius, n), mu, tau_y, hardening)

    @property
    def n(self):
        return len(self.m1)

    @property
    def lever(self):
        """``m2_i / m1_i``: the ring-average radius seen by the shear strain."""
        return self.m2 / self.m1

    def zero_state(self):
        return TorsionState.zero(self.n)

    def ring_stress(self, twist, state):
        return self.mu * (self.lever * twist - state.p)

    def macro_energy(self, twist, state):
        tau = self.ring_stress(twist, state)
        return float(
            np.sum(TWO_PI * self.m1 * (0.5 * tau**2 / self.mu + 0.5 * self.hardening * state.q**2))
        )

    def torque(self, twist, state):
        return float(TWO_PI * self.mu * np.sum(self.m2**2 / self.m1 * twist - self.m2 * state.p))

    def driving_forces(self, twist, state):
        """``-d psi / d p_i``."""
        return TWO_PI * self.m1 * self.ring_stress(twist, state)

    def elastic_stiffness(self):
        return float(TWO_PI * self.mu * np.sum(self.m2**2 / self.m1))

    def dissipation(self, dp):
        return float(np.sum(TWO_PI * self.m1 * self.tau_y * np.abs(dp)))

    def yield_violation(self, twist, state):
        """Per-ring ``|tau_i| - (tau_y + a q_i)``; non-positive when admissible."""
        return np.abs(self.ring_stress(twist, state)) - (self.tau_y + self.hardening * state.q)

    def step(self, state, twist):
        """Backward-Euler update of all rings to the new twist."""
        tau = self.ring_stress(twist, state)
        excess = np.abs(tau) - (self.tau_y + self.hardening * state.q)
        dp = np.where(excess > 0.0, np.sign(tau) * excess / (self.mu + self.hardening), 0.0)
        return TorsionState(state.p + dp, state.q + np.abs(dp), float(twist))

    def recover_fields(self, state, twist):
        return RingField(self.radii, float(twist), state.p - self.lever * twist)
