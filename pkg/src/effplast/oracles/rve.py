"""Periodic plane-strain finite element model of an RVE.

Bilinear quadrilaterals on a structured grid with 2 x 2 Gauss points.  The
displacement is ``u = e_M x + u_per`` with ``u_per`` periodic; periodicity
is built into the numbering (node indices wrap around), and one node is
pinned to remove the rigid translation.  Every Gauss point carries a full
3D von Mises state, so the out-of-plane plastic strain is tracked.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .. import tensor as tn
from ..errors import NonConvergence, SingularError
from ..plasticity import radial_return_batch

INPLANE = np.array([0, 1, 5])


@dataclass
class PeriodicGrid:
    """Structured ``nx x ny`` grid on a periodic rectangle.

    ``subdomain`` holds one subdomain index per element, elements ordered
    row by row from the bottom left.
    """

    nx: int
    ny: int
    size: tuple
    subdomain: np.ndarray

    def __post_init__(self):
        self.subdomain = np.asarray(self.subdomain, dtype=int).ravel()
        if self.subdomain.size != self.nx * self.ny:
            raise ValueError("one subdomain index per element is required")

    @classmethod
    def from_geometry(cls, geometry, per_unit=32):
        """Grid with ``per_unit`` elements per unit length of the cell."""
        lx, ly = geometry.period
        nx, ny = int(round(per_unit * lx)), int(round(per_unit * ly))
        hx, hy = lx / nx, ly / ny
        i, j = np.meshgrid(np.arange(nx), np.arange(ny))
        centres = np.stack([(i.ravel() + 0.5) * hx, (j.ravel() + 0.5) * hy], axis=1)
        return cls(nx, ny, (lx, ly), geometry.locate(centres))

    @property
    def n_elements(self):
        return self.nx * self.ny

    @property
    def n_nodes(self):
        return self.nx * self.ny

    def connectivity(self):
        i, j = np.meshgrid(np.arange(self.nx), np.arange(self.ny))
        i, j = i.ravel(), j.ravel()
        ip, jp = (i + 1) % self.nx, (j + 1) % self.ny
        return np.stack([j * self.nx + i, j * self.nx + ip, jp * self.nx + ip, jp * self.nx + i], axis=1)

    def pairing_consistent(self):
        """Every node is shared by exactly four elements (no open edges)."""
        counts = np.bincount(self.connectivity().ravel(), minlength=self.n_nodes)
        return bool(np.all(counts == 4))


def _q4_operator(hx, hy):
    """Mandel in-plane strain operators ``(4 gauss, 3, 8)`` and the weight per point."""
    g = 1.0 / np.sqrt(3.0)
    xi = np.array([[-g, -g], [g, -g], [g, g], [-g, g]])
    corners = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float)
    B = np.zeros((4, 3, 8))
    for k, (x, y) in enumerate(xi):
        dx = corners[:, 0] * (1 + corners[:, 1] * y) / 4.0 * 2.0 / hx
        dy = corners[:, 1] * (1 + corners[:, 0] * x) / 4.0 * 2.0 / hy
        B[k, 0, 0::2] = dx
        B[k, 1, 1::2] = dy
        B[k, 2, 0::2] = dy / tn.SQ2
        B[k, 2, 1::2] = dx / tn.SQ2
    return B, hx * hy / 4.0


@dataclass
class RveFEM:
    """Elastoplastic periodic RVE on a :class:`PeriodicGrid`.

    ``materials`` is a sequence of :class:`Material` indexed by the
    geometry's material ids; ``material_of`` maps subdomain to material id.
    """

    grid: PeriodicGrid
    materials: dict
    material_of: tuple
    rtol: float = 1e-10
    max_newton: int = 200
    n_subdomains: int = field(init=False)

    def __post_init__(self):
        g = self.grid
        self.conn = g.connectivity()
        hx, hy = g.size[0] / g.nx, g.size[1] / g.ny
        self.B, self.wq = _q4_operator(hx, hy)
        self.area = g.size[0] * g.size[1]
        mat_el = np.array([self.material_of[s] for s in g.subdomain])
        mats = [self.materials[m] for m in mat_el]
        rep = lambda v: np.repeat(np.asarray(v, dtype=float), 4)
        self.bulk = rep([m.bulk_modulus for m in mats])
        self.shear = rep([m.shear_modulus for m in mats])
        self.sigma_y = rep([m.yield_stress for m in mats])
        self.hardening = rep([m.hardening for m in mats])
        self.sub_q = np.repeat(g.subdomain, 4)
        self.n_subdomains = int(g.subdomain.max()) + 1
        dofs = np.stack([2 * self.conn, 2 * self.conn + 1], axis=2).reshape(-1, 8)
        self.dofs = dofs
        self.n_dofs = 2 * g.n_nodes
        # node 0 is pinned; the reduced numbering drops its two dofs
        self.free = np.arange(2, self.n_dofs)
        red = dofs - 2
        rows = np.repeat(red, 8, axis=1).ravel()
        cols = np.tile(red, (1, 8)).ravel()
        keep = (rows >= 0) & (cols >= 0)
        nf = self.n_dofs - 2
        lin = cols[keep].astype(np.int64) * nf + rows[keep]
        uniq, self._scatter = np.unique(lin, return_inverse=True)
        self._keep = keep
        self._indices = (uniq % nf).astype(np.int32)
        self._indptr = np.searchsorted(uniq // nf, np.arange(nf + 1)).astype(np.int32)
        self._nf = nf
        self._lu = None
        self._elastic_lu = None
        self.reset()

    def reset(self):
        n = 4 * self.grid.n_elements
        self.u = np.zeros(self.n_dofs)
        self.eps_p = np.zeros((n, 6))
        self.q = np.zeros(n)
        self.e_M = np.zeros(6)
        self.stress = np.zeros((n, 6))

    def _strain(self, u, e_M):
        ue = u[self.dofs]
        eps = np.zeros((self.grid.n_elements, 4, 6))
        eps[:, :, INPLANE] = np.einsum("gcd,ed->egc", self.B, ue)
        eps += e_M[None, None, :]
        return eps.reshape(-1, 6)

    def _evaluate(self, u, e_M, tangent=True):
        eps = self._strain(u, e_M)
        sig, ep, q, dg, C = radial_return_batch(
            eps, self.eps_p, self.q, self.bulk, self.shear, self.hardening, self.sigma_y, tangent=tangent
        )
        s_in = sig[:, INPLANE].reshape(-1, 4, 3)
        fe = self.wq * np.einsum("gcd,egc->ed", self.B, s_in)
        R = np.bincount(self.dofs.ravel(), weights=fe.ravel(), minlength=self.n_dofs)
        K = self._assemble(C) if tangent else None
        return R, fe, sig, ep, q, K

    def _assemble(self, C):
        """Reduced (pinned) stiffness matrix in CSC form."""
        Cin = C[:, INPLANE][:, :, INPLANE].reshape(-1, 4, 3, 3)
        Bt = np.swapaxes(self.B, 1, 2)[None]
        Ke = self.wq * np.sum(Bt @ (Cin @ self.B[None]), axis=1)
        data = np.bincount(self._scatter, weights=Ke.ravel()[self._keep], minlength=len(self._indices))
        return scipy.sparse.csc_matrix((data, self._indices, self._indptr), shape=(self._nf, self._nf))

    def _factor(self, K):
        try:
            self._lu = scipy.sparse.linalg.splu(K, permc_spec="MMD_AT_PLUS_A", options={"SymmetricMode": True})
        except RuntimeError as exc:
            raise SingularError("singular RVE tangent") from exc

    def _linear_solve(self, K, rhs):
        """Solve with CG preconditioned by a cached factorization, refactoring if needed."""
        if self._lu is not None:
            M = scipy.sparse.linalg.LinearOperator(K.shape, matvec=self._lu.solve)
            x, info = scipy.sparse.linalg.cg(K, rhs, rtol=1e-10, atol=0.0, maxiter=25, M=M)
            if info == 0:
                return x
        self._factor(K)
        return self._lu.solve(rhs)

    def incremental_potential(self, u, e_M):
        """Backward-Euler incremental potential of the step from the committed state.

        Stored energy plus dissipation, both after the pointwise return map;
        it is convex in ``u`` and its gradient is the nodal residual.
        """
        eps = self._strain(u, e_M)
        sig, ep, q, dg, _ = radial_return_batch(
            eps, self.eps_p, self.q, self.bulk, self.shear, self.hardening, self.sigma_y, tangent=False
        )
        dens = 0.5 * tn.ddot(eps - ep, sig) + 0.5 * self.hardening * q**2 + tn.TWO_THIRDS_SQRT * self.sigma_y * dg
        return float(self.wq * np.sum(dens))

    def _descent(self, K, g):
        """Newton direction, or the elastic-tangent direction if Newton does not descend."""
        du = None
        try:
            du = self._linear_solve(K, -g)
        except SingularError:
            pass
        if du is None or not np.all(np.isfinite(du)) or g @ du >= 0.0:
            if self._elastic_lu is None:
                K0 = self._elastic_tangent()
                self._elastic_lu = scipy.sparse.linalg.splu(K0, permc_spec="MMD_AT_PLUS_A", options={"SymmetricMode": True})
            du = self._elastic_lu.solve(-g)
        return du

    def solve(self, e_M):
        """Equilibrate at macroscopic strain ``e_M`` and commit the state.

        Newton iteration with the algorithmic tangent, globalized by an
        Armijo backtracking line search on the incremental potential.  When
        the tangent is singular (plastic mechanisms of a perfectly plastic
        phase) the elastic-tangent direction is used instead.  Returns the
        number of iterations.

        Raises
        ------
        NonConvergence
            After ``max_newton`` iterations without meeting ``rtol``.
        """
        e_M = np.asarray(e_M, dtype=float)
        u = self.u.copy()
        res = np.inf
        for it in range(1, self.max_newton + 1):
            R, fe, sig, ep, q, K = self._evaluate(u, e_M)
            g = R[self.free]
            res = np.linalg.norm(g)
            ref = np.linalg.norm(fe) + 1e-300
            if res <= self.rtol * ref or res == 0.0:
                self.u, self.eps_p, self.q, self.stress, self.e_M = u, ep, q, sig, e_M.copy()
                return it
            du = self._descent(K, g)
            pi0 = self.incremental_potential(u, e_M)
            slope = g @ du
            step = 1.0
            for _ in range(40):
                trial = u.copy()
                trial[self.free] += step * du
                if self.incremental_potential(trial, e_M) <= pi0 + 1e-4 * step * slope:
                    break
                R_t = self._evaluate(trial, e_M, tangent=False)[0]
                if np.linalg.norm(R_t[self.free]) < 0.5 * res:
                    break
                step *= 0.5
            u = trial
        raise NonConvergence("RVE FEM Newton iteration failed", residual=res, iterations=self.max_newton)

    def _elastic_tangent(self):
        C = 3.0 * self.bulk[:, None, None] * tn.P_VOL + 2.0 * self.shear[:, None, None] * tn.P_DEV
        return self._assemble(C)

    def macro_stress(self):
        return self.stress.mean(axis=0)

    def fluctuation_mean(self):
        """Volume average of the periodic part of the strain."""
        return self._strain(self.u, np.zeros(6)).mean(axis=0)

    def elastic_energy(self):
        """Volume-averaged stored elastic energy (hardening excluded)."""
        eps = self._strain(self.u, self.e_M) - self.eps_p
        C = 3.0 * self.bulk[:, None, None] * tn.P_VOL + 2.0 * self.shear[:, None, None] * tn.P_DEV
        return float(0.5 * np.mean(np.einsum("ni,nij,nj->n", eps, C, eps)))

    def energy(self):
        return self.elastic_energy() + float(0.5 * np.mean(self.hardening * self.q**2))

    def subdomain_plastic_strain(self):
        """Mean plastic strain per subdomain, ``(N_sd, 6)``."""
        out = np.zeros((self.n_subdomains, 6))
        counts = np.bincount(self.sub_q, minlength=self.n_subdomains)
        for c in range(6):
            out[:, c] = np.bincount(self.sub_q, weights=self.eps_p[:, c], minlength=self.n_subdomains) / counts
        return out

    def effective_stiffness(self):
        """Elastic ``C_eff`` from six unit macro strains (state is reset)."""
        C = np.zeros((6, 6))
        scale = 1e-8
        for k in range(6):
            self.reset()
            e = np.zeros(6)
            e[k] = scale
            self.solve(e)
            C[:, k] = self.macro_stress() / scale
        self.reset()
        return C


def rve_fem(fem, e_M_history):
    """Run a macro-strain history.

    Returns ``(stress (n, 6), elastic energy (n,), subdomain plastic strains (n, N_sd, 6))``.
    """
    n = len(e_M_history)
    sig = np.empty((n, 6))
    en = np.empty(n)
    eps = np.empty((n, fem.n_subdomains, 6))
    for k, e in enumerate(e_M_history):
        fem.solve(e)
        sig[k] = fem.macro_stress()
        en[k] = fem.elastic_energy()
        eps[k] = fem.subdomain_plastic_strain()
    return sig, en, eps
