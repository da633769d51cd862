import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from effplast import tensor as tn
from effplast.errors import DomainError
from effplast.plasticity import (
    LocalState,
    dissipation_rate,
    free_energy,
    radial_return,
    radial_return_batch,
    stress,
    yield_radius,
)

MAT = tn.Material(1000.0, 0.25, 1.5)
C = MAT.stiffness
MU = MAT.shear_modulus

strain6 = arrays(np.float64, 6, elements=st.floats(-5e-3, 5e-3, allow_nan=False))


def bisection_return(eps_mat, ep_mat, q, mu, K, a, sigma_y, tol=1e-14):
    """Reference return map in 3x3 matrix form with a bisection on the consistency equation."""
    el = eps_mat - ep_mat
    s_trial = 2 * mu * (el - np.trace(el) / 3 * np.eye(3))
    norm = np.sqrt(np.sum(s_trial**2))
    r0 = np.sqrt(2 / 3) * sigma_y + a * q
    if norm <= r0:
        return ep_mat, q, s_trial + K * np.trace(el) * np.eye(3)
    phi = lambda g: norm - 2 * mu * g - (r0 + a * g)
    lo, hi = 0.0, norm / (2 * mu)
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if phi(mid) > 0 else (lo, mid)
    g = 0.5 * (lo + hi)
    n = s_trial / norm
    ep_new = ep_mat + g * n
    return ep_new, q + g, s_trial - 2 * mu * g * n + K * np.trace(el) * np.eye(3)


class TestFreeEnergy:
    def test_stress_free(self):
        ep = tn.dev(np.arange(6.0))
        assert free_energy(ep, LocalState(ep), C, 0.0) == 0.0

    def test_hardening_term(self):
        assert free_energy(np.zeros(6), LocalState(np.zeros(6), 1.0), C, 15.0) == pytest.approx(7.5)

    def test_matches_matrix_contraction(self):
        rng = np.random.default_rng(3)
        K = MAT.bulk_modulus
        for _ in range(20):
            eps = rng.standard_normal(6) * 1e-3
            ep = tn.dev(rng.standard_normal(6) * 1e-3)
            q = abs(rng.standard_normal())
            e = tn.to_matrix(eps - ep)
            dev = e - np.trace(e) / 3 * np.eye(3)
            ref = 0.5 * K * np.trace(e) ** 2 + MU * np.sum(dev * dev) + 0.5 * 30.0 * q**2
            assert free_energy(eps, LocalState(ep, q), C, 30.0) == pytest.approx(ref, rel=1e-12)

    def test_gradient_is_stress(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            eps = rng.standard_normal(6) * 1e-3
            state = LocalState(tn.dev(rng.standard_normal(6) * 1e-3), 0.1)
            h = 1e-7
            fd = np.array(
                [
                    (free_energy(eps + h * e, state, C, 5.0) - free_energy(eps - h * e, state, C, 5.0)) / (2 * h)
                    for e in np.eye(6)
                ]
            )
            np.testing.assert_allclose(fd, stress(eps, state, C), rtol=1e-6, atol=1e-9)


class TestDissipation:
    def test_zero_rate(self):
        assert dissipation_rate(np.zeros(6), 1.5) == 0.0

    def test_homogeneous(self):
        r = tn.dev(np.array([1.0, 0.2, -0.1, 0.4, 0.0, 0.3]))
        assert dissipation_rate(2 * r, 1.5) == pytest.approx(2 * dissipation_rate(r, 1.5))

    def test_unit_deviator(self):
        d = tn.dev(tn.from_components(1.0, -1.0))
        d = d / tn.norm(d)
        assert dissipation_rate(d, 1.5) == pytest.approx(np.sqrt(2 / 3) * 1.5)


class TestRadialReturn:
    def test_elastic_step(self):
        state = LocalState()
        res = radial_return(tn.from_components(t11=1e-4), state, C, 0.0, 1.5)
        assert res.dlambda == 0.0 and res.dissipation == 0.0
        assert res.state is state

    def test_perfect_plastic_shear_clamped(self):
        state = LocalState()
        for g in np.linspace(0, 1e-2, 50):
            res = radial_return(tn.from_components(t12=g), state, C, 0.0, 1.5)
            state = res.state
        assert float(tn.norm(tn.dev(res.stress))) == pytest.approx(np.sqrt(2 / 3) * 1.5, rel=1e-12)

    def test_anisotropic_rejected(self):
        Cbad = C.copy()
        Cbad[0, 1] += 10.0
        Cbad[1, 0] += 10.0
        with pytest.raises(DomainError):
            radial_return(np.zeros(6), LocalState(), Cbad, 0.0, 1.0)

    def test_uniaxial_cycle_matches_bisection(self):
        a, sy = 15.0, 1.5
        K = MAT.bulk_modulus
        history = np.concatenate([np.linspace(0, 6e-3, 30), np.linspace(6e-3, -6e-3, 60), np.linspace(-6e-3, 2e-3, 40)])
        state = LocalState()
        ep_ref, q_ref = np.zeros((3, 3)), 0.0
        for e in history:
            eps = tn.from_components(t11=e)
            res = radial_return(eps, state, C, a, sy)
            state = res.state
            ep_ref, q_ref, sig_ref = bisection_return(tn.to_matrix(eps), ep_ref, q_ref, MU, K, a, sy)
            np.testing.assert_allclose(tn.to_matrix(res.stress), sig_ref, rtol=1e-6, atol=1e-6 * sy)
            assert state.q == pytest.approx(q_ref, rel=1e-6, abs=1e-12)

    @given(strain6, strain6, st.floats(0.0, 50.0))
    @settings(max_examples=200, deadline=None)
    def test_biot_consistency(self, e1, e2, a):
        sy = 1.5
        virgin = LocalState()
        r1 = radial_return(e1, virgin, C, a, sy)
        r2 = radial_return(e2, r1.state, C, a, sy)
        for prev, res in ((virgin, r1), (r1.state, r2)):
            s = float(tn.norm(tn.dev(res.stress)))
            radius = yield_radius(sy, a, res.state.q)
            assert s <= radius + 1e-10 * sy
            if res.dlambda > 0:
                assert abs(s - radius) <= 1e-10 * sy
                dp = res.state.plastic_strain - prev.plastic_strain
                assert res.state.q - prev.q == pytest.approx(float(tn.norm(dp)), rel=1e-12)
                # flow direction parallel to the returned deviator
                cos = float(tn.ddot(dp, tn.dev(res.stress))) / (float(tn.norm(dp)) * s)
                assert cos == pytest.approx(1.0, abs=1e-12)
            else:
                assert res.state is prev
            assert res.dissipation >= 0.0

    def test_incompressibility_long_history(self):
        rng = np.random.default_rng(11)
        state = LocalState()
        for _ in range(2000):
            state = radial_return(rng.standard_normal(6) * 5e-3, state, C, 2.0, 1.5).state
        assert abs(tn.trace(state.plastic_strain)) <= 1e-12


class TestBatch:
    def test_matches_scalar(self):
        rng = np.random.default_rng(5)
        eps = rng.standard_normal((40, 6)) * 4e-3
        ep = tn.dev(rng.standard_normal((40, 6)) * 1e-3)
        q = np.abs(rng.standard_normal(40)) * 1e-3
        sig, ep_new, q_new, dg, Calg = radial_return_batch(eps, ep, q, MAT.bulk_modulus, MU, 5.0, 1.5)
        for k in range(40):
            ref = radial_return(eps[k], LocalState(ep[k], q[k]), C, 5.0, 1.5)
            np.testing.assert_allclose(sig[k], ref.stress, rtol=1e-12, atol=1e-12)
            np.testing.assert_allclose(ep_new[k], ref.state.plastic_strain, rtol=1e-12, atol=1e-15)

    def test_consistent_tangent(self):
        rng = np.random.default_rng(6)
        eps = rng.standard_normal((10, 6)) * 4e-3
        ep = np.zeros((10, 6))
        q = np.zeros(10)
        args = (MAT.bulk_modulus, MU, 5.0, 1.5)
        _, _, _, _, Calg = radial_return_batch(eps, ep, q, *args)
        h = 1e-9
        for c in range(6):
            d = np.zeros(6)
            d[c] = h
            sp = radial_return_batch(eps + d, ep, q, *args, tangent=False)[0]
            sm = radial_return_batch(eps - d, ep, q, *args, tangent=False)[0]
            np.testing.assert_allclose((sp - sm) / (2 * h), Calg[:, :, c], rtol=1e-5, atol=1e-3)
