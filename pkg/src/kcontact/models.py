"""Built-in model library.

Three dissipative field theories, each packaged with the data the engine is
expected to reproduce: the damped vibrating string (n=1, k=2), the damped
scalar field whose time-damped special case is the telegrapher equation
(n=1, k=4), and source-free electromagnetism with a linear dissipation term
(n=4, k=4, singular).

Conventions follow each model's published form, including the sign with
which the dissipation variables enter the Lagrangian: the string model uses
L - gamma*s_t while the scalar-field model uses L + gamma_mu*s^mu (so its
time-damped case takes gamma_0 = -gamma).  The electromagnetic model keeps
the inverse vacuum permeability as the constant `mu0_inv` so that every
derived object stays polynomial, and hard-codes the metric signature
(+, -, -, -).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

from .algebra import ROLE_CONSTANT, ZERO, Poly, Symbol
from .bundles import pontryagin_chart
from .lagrangian import JetContext, LagrangianSystem, jet_context

NumberLike = Union[int, Fraction, None]

MINKOWSKI_SIGNS = (1, -1, -1, -1)


def _const(name: str, value: NumberLike) -> Poly:
    """A model constant: a fresh symbol when value is None, else the number."""
    if value is None:
        return Poly.var(Symbol(name, ROLE_CONSTANT))
    return Poly.const(Fraction(value))


@dataclass(frozen=True)
class ModelBundle:
    """A LagrangianSystem wired together with its expected derived data."""

    name: str
    system: LagrangianSystem
    constants: dict  # constant name -> Poly (symbol or number)
    expected_constraints: tuple
    expected_residuals: tuple
    expected_regular: bool
    jets: JetContext
    extras: dict

    @property
    def space(self):
        return self.system.space


def damped_string(
    rho: NumberLike = None, tau: NumberLike = None, gamma: NumberLike = None
) -> ModelBundle:
    """Vibrating string with friction: L = rho/2 u_t^2 - tau/2 u_x^2 - gamma s_t.

    Field equation: rho u_tt - tau u_xx + gamma rho u_t = 0, i.e. the damped
    wave equation u_tt = c^2 u_xx - gamma u_t with c^2 = tau/rho.
    """
    chart = pontryagin_chart(
        1, 2, base_names=["u"], direction_labels=["x", "t"], name="string"
    )
    rho_p = _const("rho", rho)
    tau_p = _const("tau", tau)
    gamma_p = _const("gamma", gamma)
    u_x = Poly.var(chart.v[0][0])
    u_t = Poly.var(chart.v[0][1])
    s_t = Poly.var(chart.s[1])
    L = rho_p * u_t * u_t * Fraction(1, 2) - tau_p * u_x * u_x * Fraction(1, 2) - gamma_p * s_t
    sys = LagrangianSystem(chart, L)
    jets = jet_context(sys)

    p_x = Poly.var(chart.p[0][0])
    p_t = Poly.var(chart.p[0][1])
    expected_constraints = (
        (p_x + tau_p * u_x).normalized(),
        (p_t - rho_p * u_t).normalized(),
    )
    u_tt = Poly.var(jets.second_jet(0, 1, 1))
    u_xx = Poly.var(jets.second_jet(0, 0, 0))
    expected_residuals = (rho_p * u_tt - tau_p * u_xx + gamma_p * rho_p * u_t,)
    return ModelBundle(
        name="damped_string",
        system=sys,
        constants={"rho": rho_p, "tau": tau_p, "gamma": gamma_p},
        expected_constraints=expected_constraints,
        expected_residuals=expected_residuals,
        expected_regular=True,
        jets=jets,
        extras={},
    )


def damped_klein_gordon(
    m2: NumberLike = None, gamma_mu: Optional[Sequence[NumberLike]] = None
) -> ModelBundle:
    """Massive scalar field with a linear dissipation term.

    L = (v_0^2 - v_1^2 - v_2^2 - v_3^2)/2 - m2 q^2 / 2 + gamma_mu s^mu.
    The residual is the damped wave operator; gamma_mu = (-gamma, 0, 0, 0)
    gives the telegrapher equation.
    """
    if gamma_mu is None:
        gamma_mu = [None] * 4
    if len(gamma_mu) != 4:
        raise ValueError("gamma_mu must have four entries")
    chart = pontryagin_chart(
        1,
        4,
        base_names=["q"],
        direction_labels=["0", "1", "2", "3"],
        velocity_names=[["v_0", "v_1", "v_2", "v_3"]],
        name="scalar",
    )
    m2_p = _const("m2", m2)
    gam = [_const(f"gam{mu}", gamma_mu[mu]) for mu in range(4)]
    q = Poly.var(chart.q[0])
    v = [Poly.var(chart.v[0][a]) for a in range(4)]
    L = ZERO
    for mu in range(4):
        L = L + Fraction(MINKOWSKI_SIGNS[mu], 2) * v[mu] * v[mu]
        L = L + gam[mu] * Poly.var(chart.s[mu])
    L = L - Fraction(1, 2) * m2_p * q * q
    sys = LagrangianSystem(chart, L)
    jets = jet_context(sys)

    expected_constraints = tuple(
        (Poly.var(chart.p[0][mu]) - Poly.const(MINKOWSKI_SIGNS[mu]) * v[mu]).normalized()
        for mu in range(4)
    )
    box = ZERO
    for mu in range(4):
        box = box + Poly.const(MINKOWSKI_SIGNS[mu]) * Poly.var(jets.second_jet(0, mu, mu))
    damping = ZERO
    for mu in range(4):
        damping = damping - Poly.const(MINKOWSKI_SIGNS[mu]) * gam[mu] * v[mu]
    expected_residuals = (box + m2_p * q + damping,)
    return ModelBundle(
        name="damped_klein_gordon",
        system=sys,
        constants={"m2": m2_p, **{f"gam{mu}": gam[mu] for mu in range(4)}},
        expected_constraints=expected_constraints,
        expected_residuals=expected_residuals,
        expected_regular=True,
        jets=jets,
        extras={},
    )


def dissipative_maxwell(
    mu0_inv: NumberLike = None, gamma_alpha: Optional[Sequence[NumberLike]] = None
) -> ModelBundle:
    """Source-free electromagnetism with dissipation.

    L = -(mu0_inv/4) F_mn F^mn - gamma_a s^a over the potential components
    A_mu with velocities A_mu_nu (the derivative of A_mu in direction nu) and
    momenta P_mu_nu.  The Hessian annihilates symmetric velocity directions,
    so the system is singular of rank 6.
    """
    if gamma_alpha is None:
        gamma_alpha = [None] * 4
    if len(gamma_alpha) != 4:
        raise ValueError("gamma_alpha must have four entries")
    base = [f"A_{mu}" for mu in range(4)]
    chart = pontryagin_chart(
        4,
        4,
        base_names=base,
        direction_labels=["0", "1", "2", "3"],
        momentum_names=[[f"P_{mu}_{nu}" for nu in range(4)] for mu in range(4)],
        name="maxwell",
    )
    mu0_inv_p = _const("mu0_inv", mu0_inv)
    gam = [_const(f"gam{a}", gamma_alpha[a]) for a in range(4)]

    def v(mu, nu):  # derivative of A_mu in direction nu
        return Poly.var(chart.v[mu][nu])

    # field strength: F_mn = d_m A_n - d_n A_m; indices raised with the metric
    f_lower = [[v(nu, mu) - v(mu, nu) for nu in range(4)] for mu in range(4)]
    f_upper = [
        [
            Poly.const(MINKOWSKI_SIGNS[mu] * MINKOWSKI_SIGNS[nu]) * f_lower[mu][nu]
            for nu in range(4)
        ]
        for mu in range(4)
    ]
    ff = ZERO
    for mu in range(4):
        for nu in range(4):
            ff = ff + f_lower[mu][nu] * f_upper[mu][nu]
    L = -Fraction(1, 4) * mu0_inv_p * ff
    for a in range(4):
        L = L - gam[a] * Poly.var(chart.s[a])
    sys = LagrangianSystem(chart, L)
    jets = jet_context(sys)

    expected_constraints = tuple(
        (Poly.var(chart.p[mu][nu]) - mu0_inv_p * f_upper[mu][nu]).normalized()
        for mu in range(4)
        for nu in range(4)
    )
    # field equations, built independently from the F definition:
    # the residual for A_mu is mu0_inv * (D_a F^{mu a} + gamma_a F^{mu a}),
    # equivalently -(1/mu0)(d_a F^{a mu} + gamma_a F^{a mu}).
    expected_residuals = []
    for mu in range(4):
        acc = ZERO
        for a in range(4):
            acc = acc + jets.total_derivative(f_upper[mu][a], a)
            acc = acc + gam[a] * f_upper[mu][a]
        expected_residuals.append(mu0_inv_p * acc)
    return ModelBundle(
        name="dissipative_maxwell",
        system=sys,
        constants={"mu0_inv": mu0_inv_p, **{f"gam{a}": gam[a] for a in range(4)}},
        expected_constraints=expected_constraints,
        expected_residuals=tuple(expected_residuals),
        expected_regular=False,
        jets=jets,
        extras={"f_lower": f_lower, "f_upper": f_upper, "signs": MINKOWSKI_SIGNS},
    )


MODEL_BUILDERS = {
    "damped_string": damped_string,
    "damped_klein_gordon": damped_klein_gordon,
    "dissipative_maxwell": dissipative_maxwell,
}


def build_model(name: str, **params) -> ModelBundle:
    if name not in MODEL_BUILDERS:
        known = ", ".join(sorted(MODEL_BUILDERS))
        raise KeyError(f"unknown model {name!r}; known models: {known}")
    return MODEL_BUILDERS[name](**params)
