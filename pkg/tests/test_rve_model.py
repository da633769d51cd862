import numpy as np
import pytest
from scipy.optimize import minimize

from effplast import tensor as tn
from effplast.errors import NonConvergence
from effplast.plasticity import LocalState, radial_return
from effplast.rve import geometry as geo
from effplast.rve import model as rm

MAT1 = tn.Material(1000.0, 0.25, 1.5)
MAT2 = tn.Material(2500.0, 0.3, 2.0)
MAT3 = tn.Material(5000.0, 0.15, 3.75)
FIG1_MATS = {0: MAT1, 1: MAT3}
THREE_MATS = {0: MAT1, 1: MAT2, 2: MAT3}
CASES = [("fig1", FIG1_MATS), ("fig4", THREE_MATS), ("fig12", THREE_MATS)]


def random_args(rng, n, scale=1e-3):
    return rng.standard_normal(6) * scale, tn.dev(rng.standard_normal((n, 6)) * scale)


def summation_energy(g, mats, e_M, e_p, a):
    """Per-subdomain contraction in 3x3 matrix form."""
    e = geo.subdomain_strains(g, e_M, a)
    total = 0.0
    for i in range(g.n_subdomains):
        m = mats[g.materials[i]]
        el = tn.to_matrix(e[i] - e_p[i])
        tr = np.trace(el)
        dev = el - tr / 3 * np.eye(3)
        total += g.fractions[i] * (0.5 * m.bulk_modulus * tr**2 + m.shear_modulus * np.sum(dev * dev))
    return total


def psd_order(lower, upper, tol=1e-9):
    w = np.linalg.eigvalsh(0.5 * ((upper - lower) + (upper - lower).T))
    return w.min() >= -tol * np.abs(upper).max()


class TestEnergy:
    def test_zero(self):
        g = geo.fig1_symmetric()
        assert rm.rve_energy(g, FIG1_MATS, np.zeros(6), np.zeros((9, 6)), np.zeros((8, 2))) == 0.0

    @pytest.mark.parametrize("name, mats", CASES)
    def test_matches_summation(self, name, mats):
        g = geo.CONSTRUCTORS[name]()
        rng = np.random.default_rng(0)
        for _ in range(10):
            e_M, e_p = random_args(rng, 9)
            a = rng.standard_normal((g.n_amplitudes, 2)) * 1e-3
            ref = summation_energy(g, mats, e_M, e_p, a)
            assert rm.rve_energy(g, mats, e_M, e_p, a) == pytest.approx(ref, rel=1e-12)

    def test_fig1_label_weights(self):
        g = geo.fig1_symmetric()
        rng = np.random.default_rng(1)
        e_M = rng.standard_normal(6) * 1e-3
        a = rng.standard_normal((8, 2)) * 1e-3
        by_label = {lab: tn.dev(rng.standard_normal(6) * 1e-3) for lab in "12345"}
        e_p = np.array([by_label[lab] for lab in g.labels])
        e = geo.subdomain_strains(g, e_M, a)
        first = {lab: i for i, lab in reversed(list(enumerate(g.labels)))}
        ref = 0.0
        for lab, w in zip("12345", (1 / 18, 1 / 9, 1 / 9, 1 / 9, 1 / 9)):
            i = first[lab]
            el = e[i] - e_p[i]
            ref += w * el @ FIG1_MATS[g.materials[i]].stiffness @ el
        assert rm.rve_energy(g, FIG1_MATS, e_M, e_p, a) == pytest.approx(ref, rel=1e-12)

    def test_hardening_term(self):
        mats = {0: tn.Material(1000.0, 0.25, 1.5, 20.0), 1: tn.Material(5000.0, 0.15, 3.75, 0.0)}
        g = geo.fig1_symmetric()
        q = np.linspace(0.0, 1.0, 9)
        val = rm.rve_energy(g, mats, np.zeros(6), np.zeros((9, 6)), np.zeros((8, 2)), q)
        assert val == pytest.approx(0.5 * 20.0 * q[0] ** 2 / 9)


class TestAmplitudes:
    def test_homogeneous_zero_minimizer(self):
        g = geo.fig4_nonsymmetric()
        mats = {k: MAT2 for k in range(3)}
        e_M = np.arange(1.0, 7.0) * 1e-3
        a = rm.minimize_amplitudes(g, mats, e_M, np.zeros((9, 6)))
        np.testing.assert_allclose(a, 0.0, atol=1e-14)
        assert rm.rve_energy(g, mats, e_M, np.zeros((9, 6)), a) == pytest.approx(
            rm.voigt_energy(g, mats, e_M, np.zeros((9, 6))), rel=1e-12
        )

    @pytest.mark.parametrize("name, mats", CASES)
    def test_numeric_minimum(self, name, mats):
        g = geo.CONSTRUCTORS[name]()
        rng = np.random.default_rng(2)
        e_M, e_p = random_args(rng, 9)
        a = rm.minimize_amplitudes(g, mats, e_M, e_p)
        best = rm.rve_energy(g, mats, e_M, e_p, a)
        scale = 1e-3

        def f(y):
            return rm.rve_energy(g, mats, e_M, e_p, y * scale) / best

        res = minimize(f, np.zeros(g.n_unknowns), method="BFGS", options={"gtol": 1e-12})
        assert best == pytest.approx(res.fun * best, rel=1e-8)

    def test_gauge_independence(self):
        g = geo.fig1_symmetric()
        rng = np.random.default_rng(3)
        e_M, e_p = random_args(rng, 9)
        a = rm.minimize_amplitudes(g, FIG1_MATS, e_M, e_p)
        B = g.strain_operator.reshape(-1, g.n_unknowns)
        _, s, vt = np.linalg.svd(B)
        null = vt[np.sum(s > 1e-10 * s[0]) :]
        assert len(null) > 0
        shifted = a.ravel() + null.T @ rng.standard_normal(len(null))
        e0 = rm.rve_energy(g, FIG1_MATS, e_M, e_p, a)
        e1 = rm.rve_energy(g, FIG1_MATS, e_M, e_p, shifted)
        assert abs(e1 - e0) <= 1e-10 * (1 + abs(e0))


class TestAssemble:
    @pytest.mark.parametrize("name, mats", CASES)
    def test_form_equals_direct_minimization(self, name, mats):
        g = geo.CONSTRUCTORS[name]()
        form = rm.assemble_quadratic(g, mats)
        rng = np.random.default_rng(4)
        for _ in range(100):
            e_M, e_p = random_args(rng, 9)
            a = rm.minimize_amplitudes(g, mats, e_M, e_p)
            direct = rm.rve_energy(g, mats, e_M, e_p, a)
            assert form.energy(e_M, e_p) == pytest.approx(direct, rel=1e-10)

    @pytest.mark.parametrize("name", ["fig1", "fig4", "fig12"])
    def test_homogeneity(self, name):
        g = geo.CONSTRUCTORS[name]()
        mats = {k: MAT2 for k in range(3)}
        for build in rm.ASSEMBLERS.values():
            np.testing.assert_allclose(build(g, mats).C_eff, MAT2.stiffness, rtol=1e-10, atol=1e-10 * 2500)

    @pytest.mark.parametrize("name, mats", CASES)
    def test_F_sum_is_C_eff(self, name, mats):
        form = rm.assemble_quadratic(geo.CONSTRUCTORS[name](), mats)
        total = sum(form.F(i) for i in range(9))
        np.testing.assert_allclose(total, form.C_eff, rtol=1e-10, atol=1e-9 * np.abs(form.C_eff).max())

    @pytest.mark.parametrize("name, mats", CASES)
    def test_uniform_plastic_strain_is_stress_free(self, name, mats):
        form = rm.assemble_quadratic(geo.CONSTRUCTORS[name](), mats)
        e = tn.dev(np.array([1.0, -0.5, 0.2, 0.3, -0.1, 0.4])) * 1e-3
        assert form.energy(e, np.tile(e, (9, 1))) == pytest.approx(0.0, abs=1e-16)

    @pytest.mark.parametrize("name, mats", CASES)
    def test_G_symmetric_psd(self, name, mats):
        form = rm.assemble_quadratic(geo.CONSTRUCTORS[name](), mats)
        G = form.hessian[6:, 6:]
        np.testing.assert_allclose(G, G.T, atol=1e-12 * np.abs(G).max())
        assert np.linalg.eigvalsh(G).min() >= -1e-9 * np.abs(G).max()
        assert np.linalg.eigvalsh(form.C_eff).min() > 0

    def test_fig1_tensor_bounds(self):
        g = geo.fig1_symmetric()
        C = {k: b(g, FIG1_MATS).C_eff for k, b in rm.ASSEMBLERS.items()}
        assert psd_order(C["rom"], C["voigt"])
        assert psd_order(C["reuss"], C["rom"])
        assert not np.allclose(C["rom"], C["voigt"])

    def test_reuss_equals_constrained_minimum(self):
        g = geo.fig4_nonsymmetric()
        mats = THREE_MATS
        w = g.fractions
        n = 9
        rng = np.random.default_rng(5)
        form = rm.reuss_assemble(g, mats)
        for _ in range(5):
            e_M, e_p = random_args(rng, n)
            # KKT system: w_i C_i (e_i - e_pi) - w_i lam = 0 and sum_i w_i e_i = e_M
            m = 6 * n + 6
            A = np.zeros((m, m))
            b = np.zeros(m)
            for i in range(n):
                Ci = mats[g.materials[i]].stiffness
                A[6 * i : 6 * i + 6, 6 * i : 6 * i + 6] = w[i] * Ci
                A[6 * i : 6 * i + 6, 6 * n :] = -w[i] * np.eye(6)
                A[6 * n :, 6 * i : 6 * i + 6] = w[i] * np.eye(6)
                b[6 * i : 6 * i + 6] = w[i] * Ci @ e_p[i]
            b[6 * n :] = e_M
            sol = np.linalg.solve(A, b)
            e = sol[: 6 * n].reshape(n, 6)
            ref = sum(0.5 * w[i] * (e[i] - e_p[i]) @ mats[g.materials[i]].stiffness @ (e[i] - e_p[i]) for i in range(n))
            assert form.energy(e_M, e_p) == pytest.approx(ref, rel=1e-10)


class TestGradients:
    @pytest.mark.parametrize("kind", sorted(rm.ASSEMBLERS))
    def test_finite_differences(self, kind):
        g = geo.fig4_nonsymmetric()
        form = rm.ASSEMBLERS[kind](g, THREE_MATS)
        rng = np.random.default_rng(6)
        h = 1e-7
        for _ in range(10):
            e_M, e_p = random_args(rng, 9)
            sig = form.macro_stress(e_M, e_p)
            for c in range(6):
                d = np.zeros(6)
                d[c] = h
                fd = (form.energy(e_M + d, e_p) - form.energy(e_M - d, e_p)) / (2 * h)
                assert fd == pytest.approx(sig[c], rel=1e-6, abs=1e-6 * np.abs(sig).max())
            gi = form.driving_forces(e_M, e_p)
            for i in (0, 4, 8):
                for c in range(6):
                    dp = np.zeros((9, 6))
                    dp[i, c] = h
                    fd = -(form.energy(e_M, e_p + dp) - form.energy(e_M, e_p - dp)) / (2 * h)
                    assert fd == pytest.approx(gi[i, c], rel=1e-6, abs=1e-6 * np.abs(gi).max())

    def test_homogeneous_driving_forces(self):
        g = geo.fig1_symmetric()
        mats = {0: MAT1, 1: MAT1}
        form = rm.assemble_quadratic(g, mats)
        e_M = np.array([1.0, 0.5, 0.0, 0.0, 0.0, 0.2]) * 1e-3
        gi = form.driving_forces(e_M, np.zeros((9, 6)))
        np.testing.assert_allclose(gi, np.tile(MAT1.stiffness @ e_M / 9, (9, 1)), rtol=1e-10, atol=1e-14)
        np.testing.assert_allclose(
            form.macro_stress(e_M, np.tile(e_M / 2, (9, 1))), MAT1.stiffness @ (e_M / 2), rtol=1e-10
        )


def single_domain():
    return geo.RveGeometry((1.0,), (0,), (), 0)


class TestStep:
    def test_elastic_state_unchanged(self):
        form = rm.assemble_quadratic(geo.fig1_symmetric(), FIG1_MATS)
        st = rm.step(form, np.array([1e-5, 0, 0, 0, 0, 0]), rm.RveState.zero(9))
        np.testing.assert_array_equal(st.e_p, 0.0)
        np.testing.assert_array_equal(st.q, 0.0)

    def test_single_subdomain_is_radial_return(self):
        mat = tn.Material(1000.0, 0.25, 1.5, 30.0)
        form = rm.assemble_quadratic(single_domain(), {0: mat})
        st = rm.RveState.zero(1)
        local = LocalState()
        rng = np.random.default_rng(7)
        path = np.cumsum(rng.standard_normal((40, 6)) * 1e-3, axis=0)
        for e_M in path:
            st = rm.step(form, e_M, st)
            res = radial_return(e_M, local, mat.stiffness, mat.hardening, mat.yield_stress)
            local = res.state
            np.testing.assert_allclose(st.e_p[0], local.plastic_strain, rtol=1e-9, atol=1e-13)
            assert st.q[0] == pytest.approx(local.q, rel=1e-9, abs=1e-13)
            np.testing.assert_allclose(form.macro_stress(e_M, st.e_p), res.stress, rtol=1e-9, atol=1e-9)

    @pytest.mark.parametrize("kind", sorted(rm.ASSEMBLERS))
    def test_admissibility_along_path(self, kind):
        form = rm.ASSEMBLERS[kind](geo.fig1_symmetric(), FIG1_MATS)
        st = rm.RveState.zero(9)
        t = np.linspace(0, 1, 80)
        for tk in t:
            e_M = tn.from_components(t11=1.5e-3 * min(2 * tk, 1.0), t12=5e-3 * np.sin(4 * np.pi * tk) * (tk > 0.5))
            new = rm.step(form, e_M, st)
            assert np.all(rm.yield_violation(form, new) <= 1e-10 * form.sigma_y)
            assert np.abs(tn.trace(new.e_p)).max() <= 1e-12
            assert np.all(new.q >= st.q)
            assert rm.dissipation(form, st, new) >= 0
            st = new
        assert np.any(st.q > 0)

    def test_sweep_limit(self):
        form = rm.assemble_quadratic(geo.fig1_symmetric(), FIG1_MATS)
        with pytest.raises(NonConvergence):
            rm.step(form, tn.from_components(t12=0.05), rm.RveState.zero(9), sweep_limit=1)
