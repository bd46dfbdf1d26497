"""Model library golden data: the stored expected objects must be exactly
what the engine derives, plus the structural identities of the
electromagnetic field strength."""

from fractions import Fraction

import pytest

from kcontact.algebra import Poly
from kcontact.lagrangian import classify, el_residual
from kcontact.models import (
    build_model,
    damped_klein_gordon,
    damped_string,
    dissipative_maxwell,
)
from kcontact.unified import sr_equations


class TestGoldenEquality:
    def test_damped_string(self, string_bundle, string_family):
        assert el_residual(string_bundle.system).fields == string_bundle.expected_residuals
        assert tuple(string_family.constraints.polys()) == string_bundle.expected_constraints
        assert classify(string_bundle.system).is_regular == string_bundle.expected_regular

    def test_scalar_field(self, kg_bundle, kg_family):
        assert el_residual(kg_bundle.system).fields == kg_bundle.expected_residuals
        assert tuple(kg_family.constraints.polys()) == kg_bundle.expected_constraints
        assert classify(kg_bundle.system).is_regular == kg_bundle.expected_regular

    def test_electromagnetic(self, maxwell_bundle, maxwell_family):
        assert el_residual(maxwell_bundle.system).fields == maxwell_bundle.expected_residuals
        assert set(map(str, maxwell_family.constraints.polys())) == set(
            map(str, maxwell_bundle.expected_constraints)
        )
        assert classify(maxwell_bundle.system).is_regular == maxwell_bundle.expected_regular


class TestSpecializations:
    def test_string_without_damping_is_wave_equation(self):
        b = damped_string(gamma=0)
        res = el_residual(b.system)
        rho, tau = b.constants["rho"], b.constants["tau"]
        u_tt = Poly.var(b.jets.second_jet(0, 1, 1))
        u_xx = Poly.var(b.jets.second_jet(0, 0, 0))
        assert res.fields[0] == rho * u_tt - tau * u_xx

    def test_scalar_field_without_damping_is_klein_gordon(self):
        b = damped_klein_gordon(gamma_mu=[0, 0, 0, 0])
        res = el_residual(b.system)
        m2 = b.constants["m2"]
        q = Poly.var(b.space.q[0])
        box = Poly.var(b.jets.second_jet(0, 0, 0))
        for mu in range(1, 4):
            box = box - Poly.var(b.jets.second_jet(0, mu, mu))
        assert res.fields[0] == box + m2 * q

    def test_time_damped_scalar_field_is_telegrapher(self):
        # gamma_mu = (-gamma, 0, 0, 0) yields box u + gamma u_t + m2 u
        gamma = Fraction(7, 10)
        b = damped_klein_gordon(gamma_mu=[-gamma, 0, 0, 0])
        res = el_residual(b.system)
        m2 = b.constants["m2"]
        q = Poly.var(b.space.q[0])
        v0 = Poly.var(b.space.v[0][0])
        box = Poly.var(b.jets.second_jet(0, 0, 0))
        for mu in range(1, 4):
            box = box - Poly.var(b.jets.second_jet(0, mu, mu))
        assert res.fields[0] == box + gamma * v0 + m2 * q

    def test_electromagnetic_without_damping_is_source_free(self):
        b = dissipative_maxwell(gamma_alpha=[0, 0, 0, 0])
        res = el_residual(b.system)
        mu0_inv = b.constants["mu0_inv"]
        f_upper = b.extras["f_upper"]
        for mu in range(4):
            expected = Poly()
            for a in range(4):
                expected = expected + b.jets.total_derivative(f_upper[mu][a], a)
            assert res.fields[mu] == mu0_inv * expected


class TestElectromagneticStructure:
    def test_field_strength_antisymmetry(self, maxwell_bundle):
        f_lower = maxwell_bundle.extras["f_lower"]
        f_upper = maxwell_bundle.extras["f_upper"]
        for mu in range(4):
            assert f_lower[mu][mu].is_zero()
            for nu in range(4):
                assert f_lower[mu][nu] == -f_lower[nu][mu]
                assert f_upper[mu][nu] == -f_upper[nu][mu]

    def test_bianchi_combination_vanishes(self, maxwell_bundle):
        f_lower = maxwell_bundle.extras["f_lower"]
        jets = maxwell_bundle.jets
        for a in range(4):
            for mu in range(4):
                for nu in range(4):
                    total = (
                        jets.total_derivative(f_lower[mu][nu], a)
                        + jets.total_derivative(f_lower[nu][a], mu)
                        + jets.total_derivative(f_lower[a][mu], nu)
                    )
                    assert total.is_zero()

    def test_spatial_divergence_constraint_at_pure_time_damping(self):
        # with gamma = (gamma0, 0, 0, 0) the time component of the field
        # equation is the Gauss-type law div E = -gamma . E = 0
        gamma0 = Fraction(1, 5)
        b = dissipative_maxwell(mu0_inv=1, gamma_alpha=[gamma0, 0, 0, 0])
        res = el_residual(b.system)
        f_upper = b.extras["f_upper"]
        jets = b.jets
        # residual for A_0: spatial divergence of F^{0 i} plus gamma0 F^{0 0} = div
        expected = Poly()
        for a in range(4):
            expected = expected + jets.total_derivative(f_upper[0][a], a)
        expected = expected + gamma0 * f_upper[0][0]
        assert res.fields[0] == expected
        assert f_upper[0][0].is_zero()  # no self-damping term in the Gauss law


class TestBuilderSurface:
    def test_models_addressable_by_name(self):
        for name in ("damped_string", "damped_klein_gordon", "dissipative_maxwell"):
            b = build_model(name)
            assert b.name == name

    def test_unknown_name_rejected(self):
        with pytest.raises(KeyError, match="unknown model"):
            build_model("nonexistent")

    def test_numeric_constants_are_embedded(self):
        b = damped_string(rho=1, tau=4, gamma=Fraction(1, 10))
        eqs = sr_equations(b.system)
        ch = b.space
        u_x = Poly.var(ch.v[0][0])
        p_x = Poly.var(ch.p[0][0])
        assert (p_x + 4 * u_x).normalized() in eqs.constraints.polys()

    def test_bad_parameter_shapes_rejected(self):
        with pytest.raises(ValueError):
            damped_klein_gordon(gamma_mu=[1, 2])
        with pytest.raises(ValueError):
            dissipative_maxwell(gamma_alpha=[1])
