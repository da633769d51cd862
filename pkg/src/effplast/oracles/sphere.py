"""Reference solutions for the spherically symmetric shell.

* Lame closed form of the elastic shell.
* A constrained 1D finite element minimization of one sub-shell energy
  with prescribed end displacements and prescribed mean plastic strain.
* A 1D elastoplastic finite element solver with a pointwise return map,
  used as the reference for the reduced model's load histories.

Kinematics: radial displacement ``u(r)``, plastic strain
``p(r) diag(1, -1/2, -1/2)``; with ``theta = u' + 2u/r`` and
``s = u' - u/r - 3p/2`` the energy density is
``K theta^2 / 2 + 2 mu s^2 / 3`` and ``2 mu s`` is the force conjugate to
``p``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from ..errors import NonConvergence, SingularError

FOUR_PI = 4.0 * np.pi


def lame_coefficients(r_in, r_out, bulk, shear, u_in=None, u_out=None, sigma_in=0.0, sigma_out=0.0):
    """``(c1, c2)`` of ``u = c1 r + c2 / r^2``.

    Each side is either displacement driven (``u_in`` / ``u_out``) or
    loaded by the radial stress ``sigma_in`` / ``sigma_out``.
    """
    rows, rhs = [], []
    for r, u, s in ((r_in, u_in, sigma_in), (r_out, u_out, sigma_out)):
        if u is not None:
            rows.append([r, 1.0 / r**2])
            rhs.append(u)
        else:
            rows.append([3.0 * bulk, -4.0 * shear / r**3])
            rhs.append(s)
    return np.linalg.solve(np.array(rows), np.array(rhs))


def lame_radial_stress(r, c, bulk, shear):
    return 3.0 * bulk * c[0] - 4.0 * shear * c[1] / np.asarray(r, dtype=float) ** 3


def lame_energy(r_in, r_out, c, bulk, shear, solid_angle=FOUR_PI):
    """Elastic energy of the Lame field: volumetric ``c1`` and deviatoric ``c2`` parts."""
    vol = (r_out**3 - r_in**3) / 3.0
    dev = 2.0 / 3.0 * shear * 9.0 * c[1] ** 2 * (r_in**-3 - r_out**-3) / 3.0
    return solid_angle * (0.5 * bulk * 9.0 * c[0] ** 2 * vol + dev)


class _Lagrange:
    """Equally spaced Lagrange shape functions on ``[-1, 1]``."""

    def __init__(self, order, n_gauss):
        self.order = order
        self.xi = np.linspace(-1.0, 1.0, order + 1)
        self.gx, self.gw = np.polynomial.legendre.leggauss(n_gauss)
        self.N, self.dN = self.evaluate(self.gx)

    def evaluate(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        n = self.order + 1
        N = np.ones((len(x), n))
        dN = np.zeros((len(x), n))
        for a in range(n):
            others = [b for b in range(n) if b != a]
            denom = np.prod([self.xi[a] - self.xi[b] for b in others])
            for b in others:
                N[:, a] *= x - self.xi[b]
            for c in others:
                term = np.ones(len(x))
                for b in others:
                    if b != c:
                        term *= x - self.xi[b]
                dN[:, a] += term
            N[:, a] /= denom
            dN[:, a] /= denom
        return N, dN


def constrained_shell_energy(a, b, bulk, shear, u_left, u_right, p_mean, n_elements=200, solid_angle=FOUR_PI):
    """Minimum energy of a sub-shell with fixed ends and fixed mean plastic strain.

    Quadratic continuous displacement, discontinuous linear plastic strain
    and one multiplier for ``int p r^2 dr = p_mean (b^3 - a^3)/3``.
    """
    edges = np.linspace(a, b, n_elements + 1)
    shp = _Lagrange(2, 4)
    n_u = 2 * n_elements + 1
    n_p = 2 * n_elements
    n = n_u + n_p + 1
    Hm = np.zeros((n, n))
    cons = np.zeros(n)
    # p shape on the element: (1 - x)/2, (1 + x)/2
    Np = np.stack([(1 - shp.gx) / 2, (1 + shp.gx) / 2], axis=1)
    for e in range(n_elements):
        r0, r1 = edges[e], edges[e + 1]
        h = r1 - r0
        r = r0 + 0.5 * h * (shp.gx + 1.0)
        w = 0.5 * h * shp.gw * r**2
        N = shp.N
        dN = shp.dN * 2.0 / h
        ui = np.arange(2 * e, 2 * e + 3)
        pi = n_u + np.arange(2 * e, 2 * e + 2)
        idx = np.concatenate([ui, pi])
        # theta = T v, s = S v with v = (u_e, p_e)
        T = np.hstack([dN + 2.0 * N / r[:, None], np.zeros((len(r), 2))])
        S = np.hstack([dN - N / r[:, None], -1.5 * Np])
        Ke = bulk * T.T @ (w[:, None] * T) + 4.0 / 3.0 * shear * S.T @ (w[:, None] * S)
        Hm[np.ix_(idx, idx)] += solid_angle * Ke
        cons[pi] += Np.T @ w
    Hm[-1, :] = cons
    Hm[:, -1] = cons
    Hm[-1, -1] = 0.0
    fixed = [0, n_u - 1]
    free = [i for i in range(n) if i not in fixed]
    rhs = np.zeros(n)
    rhs[-1] = p_mean * (b**3 - a**3) / 3.0
    x = np.zeros(n)
    x[0], x[n_u - 1] = u_left, u_right
    rhs_free = rhs[free] - Hm[np.ix_(free, fixed)] @ x[fixed]
    x[free] = scipy.linalg.solve(Hm[np.ix_(free, free)], rhs_free)
    v = x[:-1]
    return 0.5 * v @ Hm[:-1, :-1] @ v


@dataclass
class SphereFEM:
    """Elastoplastic shell on a radial mesh with a pointwise return map.

    Parameters
    ----------
    edges : array
        Element boundaries ``r_in = r_0 < ... < r_out``.
    bulk, shear : float
    yield_force : float
        Pointwise bound on ``|2 mu (u' - u/r - 3p/2)|``.
    order : int
        Lagrange order of the displacement.
    solid_angle : float
    """

    edges: np.ndarray
    bulk: float
    shear: float
    yield_force: float
    order: int = 3
    solid_angle: float = FOUR_PI
    rtol: float = 1e-10
    max_newton: int = 50
    shape: _Lagrange = field(init=False, repr=False)

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        if np.any(np.diff(self.edges) <= 0) or self.edges[0] <= 0:
            raise ValueError("mesh edges must be positive and strictly increasing")
        self.shape = _Lagrange(self.order, self.order + 2)
        ne = len(self.edges) - 1
        h = np.diff(self.edges)
        self.r = self.edges[:-1, None] + 0.5 * h[:, None] * (self.shape.gx[None, :] + 1.0)
        self.w = 0.5 * h[:, None] * self.shape.gw[None, :] * self.r**2 * self.solid_angle
        self.dN = self.shape.dN[None, :, :] * (2.0 / h)[:, None, None]
        self.conn = self.order * np.arange(ne)[:, None] + np.arange(self.order + 1)[None, :]
        self.n_dofs = self.order * ne + 1
        self.reset()

    @classmethod
    def for_partition(cls, radii, elements_per_subdomain, bulk, shear, yield_force, **kwargs):
        radii = np.asarray(radii, dtype=float)
        edges = np.concatenate(
            [np.linspace(radii[i], radii[i + 1], elements_per_subdomain + 1)[:-1] for i in range(len(radii) - 1)]
            + [radii[-1:]]
        )
        return cls(edges, bulk, shear, yield_force, **kwargs)

    def reset(self):
        self.u = np.zeros(self.n_dofs)
        self.p = np.zeros_like(self.r)

    def _kinematics(self, u):
        ue = u[self.conn]
        uq = np.einsum("ga,ea->eg", self.shape.N, ue)
        du = np.einsum("ega,ea->eg", self.dN, ue)
        return uq, du

    def _material(self, u, p_old):
        uq, du = self._kinematics(u)
        D = du - uq / self.r
        theta = du + 2.0 * uq / self.r
        f = 2.0 * self.shear * (D - 1.5 * p_old)
        excess = np.abs(f) - self.yield_force
        plastic = excess > 0.0
        p = p_old + np.where(plastic, np.sign(f) * excess / (3.0 * self.shear), 0.0)
        s = D - 1.5 * p
        return theta, s, p, plastic

    def _residual(self, u, p_old, tangent=True, consistent=True):
        theta, s, p, plastic = self._material(u, p_old)
        N = self.shape.N[None, :, :]
        r = self.r[:, :, None]
        Bt = self.dN + 2.0 * N / r
        Bs = self.dN - N / r
        sr = self.bulk * theta + 4.0 / 3.0 * self.shear * s
        st = 2.0 * self.bulk * theta - 4.0 / 3.0 * self.shear * s
        fe = np.einsum("eg,ega->ea", self.w * sr, self.dN) + np.einsum("eg,ega->ea", self.w * st / self.r, np.broadcast_to(N, self.dN.shape))
        R = np.zeros(self.n_dofs)
        np.add.at(R, self.conn, fe)
        if not tangent:
            return R, p, None
        c = np.where(plastic, 0.0, 1.0) if consistent else np.ones_like(self.r)
        Ke = self.bulk * np.einsum("eg,ega,egb->eab", self.w, Bt, Bt) + 4.0 / 3.0 * self.shear * np.einsum(
            "eg,ega,egb->eab", self.w * c, Bs, Bs
        )
        rows = np.repeat(self.conn, self.order + 1, axis=1).ravel()
        cols = np.tile(self.conn, (1, self.order + 1)).ravel()
        K = scipy.sparse.coo_matrix((Ke.ravel(), (rows, cols)), shape=(self.n_dofs,) * 2).tocsc()
        return R, p, K

    def solve(self, u_in=None, u_out=None):
        """Equilibrate at the given boundary displacements; ``None`` means traction free.

        Returns the number of Newton iterations.

        Raises
        ------
        NonConvergence
            If neither Newton nor the elastic-tangent fallback converges.
        """
        fixed = {}
        if u_in is not None:
            fixed[0] = float(u_in)
        if u_out is not None:
            fixed[self.n_dofs - 1] = float(u_out)
        free = np.array([i for i in range(self.n_dofs) if i not in fixed])
        u0 = self.u.copy()
        for idx, val in fixed.items():
            u0[idx] = val
        scale = self.shear * self.solid_angle * self.edges[-1] ** 2 * max(np.abs(u0).max(), 1e-300)
        for consistent, limit in ((True, self.max_newton), (False, 20 * self.max_newton)):
            u = u0.copy()
            for it in range(1, limit + 1):
                R, p, K = self._residual(u, self.p, consistent=consistent)
                res = np.linalg.norm(R[free])
                ref = max(np.linalg.norm(R[list(fixed)]) if fixed else 0.0, 1e-3 * scale)
                if res <= self.rtol * ref:
                    self.u, self.p = u, p
                    return it
                Kff = K[free][:, free]
                try:
                    du = scipy.sparse.linalg.spsolve(Kff, -R[free])
                except RuntimeError as exc:
                    raise SingularError("singular sphere tangent") from exc
                if not np.all(np.isfinite(du)):
                    break
                u[free] += du
        raise NonConvergence("sphere FEM Newton iteration failed", residual=res, iterations=limit)

    def reactions(self):
        R, _, _ = self._residual(self.u, self.p, tangent=False)
        return R

    def inner_radial_stress(self):
        """``sigma_rr(r_in)`` from the inner reaction, tension positive."""
        return -self.reactions()[0] / (self.solid_angle * self.edges[0] ** 2)

    def energy(self):
        uq, du = self._kinematics(self.u)
        theta = du + 2.0 * uq / self.r
        s = du - uq / self.r - 1.5 * self.p
        return float(np.sum(self.w * (0.5 * self.bulk * theta**2 + 2.0 / 3.0 * self.shear * s**2)))

    def displacement(self, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        e = np.clip(np.searchsorted(self.edges, r, side="right") - 1, 0, len(self.edges) - 2)
        h = self.edges[e + 1] - self.edges[e]
        xi = 2.0 * (r - self.edges[e]) / h - 1.0
        out = np.empty_like(r)
        for k in range(len(r)):
            N, _ = self.shape.evaluate(xi[k])
            out[k] = N[0] @ self.u[self.conn[e[k]]]
        return out

    def subdomain_means(self, radii):
        """Volume-weighted mean of ``p`` over each ``[radii[i], radii[i+1]]``."""
        radii = np.asarray(radii, dtype=float)
        mid = 0.5 * (self.edges[:-1] + self.edges[1:])
        out = np.empty(len(radii) - 1)
        for i in range(len(radii) - 1):
            m = (mid > radii[i]) & (mid < radii[i + 1])
            out[i] = np.sum(self.w[m] * self.p[m]) / np.sum(self.w[m])
        return out


def sphere_fem(fem, u_in_history, u_out_history):
    """Run a displacement history; ``None`` entries leave that side free.

    Returns ``(sigma_rr_in, p_snapshots)`` with one row per step.
    """
    sig = np.empty(len(u_out_history))
    snaps = []
    for k, (a, b) in enumerate(zip(u_in_history, u_out_history)):
        fem.solve(a, b)
        sig[k] = fem.inner_radial_stress()
        snaps.append(fem.p.copy())
    return sig, snaps
