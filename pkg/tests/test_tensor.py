import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from effplast import tensor as tn
from effplast.errors import DomainError, SingularError

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
vec6 = arrays(np.float64, 6, elements=finite)


def random_sym(rng):
    m = rng.standard_normal((3, 3))
    return 0.5 * (m + m.T)


class TestConversion:
    def test_round_trip(self):
        rng = np.random.default_rng(1)
        m = random_sym(rng)
        np.testing.assert_allclose(tn.to_matrix(tn.from_matrix(m)), m, atol=1e-15)

    def test_components_are_plain(self):
        v = tn.from_components(t11=1.0, t12=2.0)
        np.testing.assert_allclose(tn.components(v), [1, 0, 0, 0, 0, 2])
        assert v[5] == pytest.approx(2.0 * np.sqrt(2.0))

    def test_trace_exact(self):
        v = tn.from_components(1.5, -0.25, 3.0, 7.0, 8.0, 9.0)
        assert tn.trace(v) == 1.5 - 0.25 + 3.0


class TestBasisConsistency:
    @given(vec6, vec6)
    @settings(max_examples=200, deadline=None)
    def test_dot_equals_double_contraction(self, a, b):
        ma, mb = tn.to_matrix(a), tn.to_matrix(b)
        ref = float(np.sum(ma * mb))
        assert float(tn.ddot(a, b)) == pytest.approx(ref, rel=1e-14, abs=1e-10)

    @given(vec6)
    @settings(max_examples=200, deadline=None)
    def test_norm_is_frobenius(self, a):
        assert float(tn.norm(a)) == pytest.approx(np.linalg.norm(tn.to_matrix(a)), rel=1e-14, abs=1e-12)


class TestDeviator:
    def test_spherical_vanishes(self):
        np.testing.assert_allclose(tn.dev(4.2 * tn.IDENTITY), 0.0, atol=1e-15)

    def test_traceless_unchanged(self):
        t = tn.from_components(1.0, -2.0, 1.0, 0.3, 0.0, -0.7)
        np.testing.assert_allclose(tn.dev(t), t, atol=1e-15)

    def test_diagonal_example(self):
        np.testing.assert_allclose(tn.components(tn.dev(tn.from_components(3.0))), [2, -1, -1, 0, 0, 0])

    @given(vec6)
    @settings(max_examples=200, deadline=None)
    def test_idempotent_and_traceless(self, t):
        d = tn.dev(t)
        assert abs(tn.trace(d)) <= 1e-14 * max(np.linalg.norm(t), 1.0)
        np.testing.assert_allclose(tn.dev(d), d, atol=1e-12)


class TestIsotropicStiffness:
    def test_moduli_steel_like(self):
        C = tn.iso_stiffness(1000.0, 0.25)
        K, mu = tn.iso_moduli(C)
        assert mu == pytest.approx(400.0, rel=1e-14)
        assert K == pytest.approx(2000.0 / 3.0, rel=1e-14)

    def test_moduli_matrix_phase(self):
        K, mu = tn.iso_moduli(tn.iso_stiffness(5000.0, 0.15))
        assert mu == pytest.approx(2173.913043478261, rel=1e-12)
        assert K == pytest.approx(2380.952380952381, rel=1e-12)

    @pytest.mark.parametrize("E, nu", [(1000.0, 0.5), (1000.0, -1.0), (0.0, 0.2), (-5.0, 0.2)])
    def test_domain_errors(self, E, nu):
        with pytest.raises(DomainError):
            tn.iso_stiffness(E, nu)

    def test_action_on_random_strain(self):
        rng = np.random.default_rng(7)
        E, nu = 2500.0, 0.3
        K, mu = E / (3 * (1 - 2 * nu)), E / (2 * (1 + nu))
        C = tn.iso_stiffness(E, nu)
        for _ in range(50):
            eps = rng.standard_normal(6)
            ref = K * tn.trace(eps) * tn.IDENTITY + 2 * mu * tn.dev(eps)
            np.testing.assert_allclose(C @ eps, ref, rtol=1e-13, atol=1e-13 * np.abs(ref).max())

    def test_symmetric_positive_definite(self):
        C = tn.iso_stiffness(1000.0, 0.25)
        np.testing.assert_array_equal(C, C.T)
        assert np.linalg.eigvalsh(C).min() > 0

    def test_anisotropic_rejected(self):
        C = tn.iso_stiffness(1000.0, 0.25)
        C[0, 0] *= 1.1
        with pytest.raises(DomainError):
            tn.iso_moduli(C)


class TestInvert:
    def test_identity(self):
        np.testing.assert_allclose(tn.invert(np.eye(6)), np.eye(6), atol=1e-15)

    def test_uniaxial_compliance(self):
        S = tn.invert(tn.iso_stiffness(1000.0, 0.25))
        sigma = tn.from_components(t11=1.0)
        eps = tn.components(S @ sigma)
        assert eps[0] == pytest.approx(1e-3, rel=1e-12)
        assert eps[1] == pytest.approx(-0.25e-3, rel=1e-12)

    def test_product_is_identity(self):
        C = tn.iso_stiffness(5000.0, 0.15)
        np.testing.assert_allclose(C @ tn.invert(C), np.eye(6), atol=1e-12)

    def test_mixture_matches_harmonic_moduli(self):
        # co-axial isotropic tensors: harmonic means of 3K and 2 mu separately
        w = 0.3
        Ka, mua = tn.iso_moduli(tn.iso_stiffness(1000.0, 0.25))
        Kb, mub = tn.iso_moduli(tn.iso_stiffness(5000.0, 0.15))
        compliance = w * tn.invert(tn.iso_stiffness(1000.0, 0.25)) + (1 - w) * tn.invert(tn.iso_stiffness(5000.0, 0.15))
        CR = tn.invert(compliance)
        K = 1.0 / (w / Ka + (1 - w) / Kb)
        mu = 1.0 / (w / mua + (1 - w) / mub)
        np.testing.assert_allclose(CR, tn.iso_from_moduli(K, mu), rtol=1e-12, atol=1e-9)

    def test_singular_guard(self):
        C = np.diag([1.0, 1.0, 1.0, 1.0, 1.0, 1e-14])
        with pytest.raises(SingularError):
            tn.invert(C)


class TestMaterial:
    def test_invalid(self):
        with pytest.raises(DomainError):
            tn.Material(1000.0, 0.25, -1.0)
        with pytest.raises(DomainError):
            tn.Material(1000.0, 0.25, 1.0, hardening=-1.0)

    def test_cached_stiffness(self):
        m = tn.Material(1000.0, 0.25, 1.5)
        np.testing.assert_array_equal(m.stiffness, tn.iso_stiffness(1000.0, 0.25))
        assert m.shear_modulus == pytest.approx(400.0)
