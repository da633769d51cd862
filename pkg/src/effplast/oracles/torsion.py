"""Pointwise reference solution of the elastoplastic shaft.

The engineering shear strain ``gamma = r * twist`` is prescribed pointwise
by the kinematics, so every radius evolves independently and no
equilibrium problem has to be solved.  The torque is the quadrature of
``2 pi tau r^2`` over the radius.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def gauss_rule(radius, n_points=1024, panels=1):
    """Composite Gauss-Legendre nodes and weights on ``[0, radius]``.

    ``n_points`` is the total number of radii; it must be divisible by
    ``panels``.
    """
    if n_points % panels:
        raise ValueError("n_points must be a multiple of panels")
    x, w = np.polynomial.legendre.leggauss(n_points // panels)
    edges = np.linspace(0.0, radius, panels + 1)
    h = np.diff(edges)
    nodes = (edges[:-1, None] + 0.5 * h[:, None] * (x[None, :] + 1.0)).ravel()
    weights = (0.5 * h[:, None] * w[None, :]).ravel()
    return nodes, weights


@dataclass
class TorsionPointwise:
    """Independent backward-Euler shear return map at every quadrature radius."""

    radius: float
    mu: float
    tau_y: float
    hardening: float = 0.0
    n_points: int = 1024
    panels: int = 1

    def __post_init__(self):
        self.nodes, self.weights = gauss_rule(self.radius, self.n_points, self.panels)
        self.reset()

    def reset(self):
        self.p = np.zeros_like(self.nodes)
        self.q = np.zeros_like(self.nodes)
        self.twist = 0.0

    def stress(self, twist=None):
        twist = self.twist if twist is None else twist
        return self.mu * (self.nodes * twist - self.p)

    def torque(self):
        return float(np.sum(self.weights * 2.0 * np.pi * self.stress() * self.nodes**2))

    def energy(self):
        tau = self.stress()
        dens = 0.5 * tau**2 / self.mu + 0.5 * self.hardening * self.q**2
        return float(np.sum(self.weights * 2.0 * np.pi * dens * self.nodes))

    def advance(self, twist):
        """Move to a new twist; returns the dissipated energy of the step."""
        tau = self.stress(twist)
        radius = self.tau_y + self.hardening * self.q
        over = np.abs(tau) - radius
        dp = np.where(over > 0.0, np.sign(tau) * over / (self.mu + self.hardening), 0.0)
        self.p = self.p + dp
        self.q = self.q + np.abs(dp)
        self.twist = float(twist)
        return float(np.sum(self.weights * 2.0 * np.pi * self.tau_y * np.abs(dp) * self.nodes))


def torsion_pointwise(radius, mu, tau_y, twists, hardening=0.0, n_points=1024, panels=1):
    """Torque history and final plastic strain profile for a twist history.

    Returns
    -------
    torque : (n_steps,) array
    oracle : TorsionPointwise
        Solver in its final state (``nodes``, ``p``, ``q``).
    """
    oracle = TorsionPointwise(radius, mu, tau_y, hardening, n_points, panels)
    out = np.empty(len(twists))
    for k, tw in enumerate(twists):
        oracle.advance(tw)
        out[k] = oracle.torque()
    return out, oracle


def elastic_plastic_torque(radius, mu, tau_y, twist):
    """Classical torque of a perfectly plastic shaft under monotone twist."""
    twist = abs(float(twist))
    if mu * twist * radius <= tau_y:
        return np.pi * mu * twist * radius**4 / 2.0
    r_y = tau_y / (mu * twist)
    return 2.0 * np.pi * (mu * twist * r_y**4 / 4.0 + tau_y * (radius**3 - r_y**3) / 3.0)
