"""Hamilton-De Donder-Weyl equations on the momentum bundle.

Covers both faces of the Hamiltonian formalism: the affine coefficient
equations for Hamiltonian k-vector fields (including the dissipation term
proportional to the contact forms) and the section residuals over first-jet
symbols.  Hamiltonians are rational functions whose denominators involve
model constants only, which is what Legendre inversion produces.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Optional

from .algebra import (
    ONE,
    ROLE_CONSTANT,
    ROLE_VELOCITY,
    ZERO,
    LinSystem,
    Poly,
    RatFunc,
    Symbol,
)
from .bundles import (
    Chart,
    KVectorField,
    OneForm,
    contact_forms,
    d_contact,
    interior_sum,
    interior_sum_1,
    symbolic_kvector,
)


@dataclass(frozen=True)
class HamiltonianSystem:
    """A Hamiltonian function on a momentum-bundle chart."""

    chart: Chart
    H: RatFunc

    def __post_init__(self):
        if not self.chart.has_momenta():
            raise ValueError("HamiltonianSystem needs a momentum group")
        H = self.H if isinstance(self.H, RatFunc) else RatFunc(Poly._coerce(self.H))
        object.__setattr__(self, "H", H)
        for sym in H.symbols():
            if sym.role == ROLE_VELOCITY:
                raise ValueError(f"Hamiltonian references a velocity symbol: {sym.name}")
            if sym.role != ROLE_CONSTANT and sym not in set(self.momentum_chart().symbols()):
                raise ValueError(f"Hamiltonian references a foreign symbol: {sym.name}")

    def momentum_chart(self) -> Chart:
        return self.chart if self.chart.v is None else self.chart.momentum_subchart()

    @property
    def n(self) -> int:
        return self.chart.n

    @property
    def k(self) -> int:
        return self.chart.k


@dataclass
class HamiltonianEquations:
    """Affine coefficient equations for a Hamiltonian k-vector field."""

    system: LinSystem
    field: KVectorField
    unknown_of: dict  # (direction, chart symbol) -> unknown Symbol
    dissipation_rows: dict  # chart symbol -> RatFunc contribution of the contact term


def hdw_field_equations(
    sys: HamiltonianSystem, Y: Optional[KVectorField] = None, unknown_of: Optional[dict] = None
) -> HamiltonianEquations:
    """Equate i(Y_a) d eta^a with dH - (R_a H) eta^a and i(Y_a) eta^a with -H.

    The returned system is affine in the coefficients of Y; its pivot rows
    reproduce the coordinate conditions (base components equal dH/dp, the
    momentum trace picks up the dissipation force, and the s trace equals the
    Legendre-type combination p dH/dp - H).
    """
    chart = sys.momentum_chart()
    if Y is None:
        Y, unknowns, unknown_of = symbolic_kvector(chart, prefix="Y")
    else:
        if Y.chart.symbols() != chart.symbols():
            raise ValueError("field must live on the system's momentum chart")
        if unknown_of is None:
            raise ValueError("an explicit field needs its unknown map")
        unknowns = [u for _, u in sorted(unknown_of.items(), key=lambda kv: kv[1].index)]

    etas = contact_forms(chart)
    omegas = d_contact(chart)
    lhs = interior_sum(Y, omegas)

    dH = {x: sys.H.diff(x) for x in chart.symbols()}
    dissipation_rows = {}
    rhs = dict(dH)
    for a in range(chart.k):
        coeff = sys.H.diff(chart.s[a])
        if coeff.is_zero():
            continue
        for x, c in etas[a].coeff.items():
            term = coeff * c
            dissipation_rows[x] = dissipation_rows.get(x, RatFunc(ZERO)) - term
            rhs[x] = rhs[x] - term

    eqs = []
    for x in chart.symbols():
        left = lhs.get(x)
        left = left if isinstance(left, RatFunc) else RatFunc(left)
        eqs.append(left - rhs[x])
    eqs.append(interior_sum_1(Y, etas) + sys.H)

    system = LinSystem.from_equations(unknowns, eqs)
    return HamiltonianEquations(
        system=system, field=Y, unknown_of=unknown_of, dissipation_rows=dissipation_rows
    )


@dataclass(frozen=True)
class HamiltonianJets:
    """First-jet symbols of the momentum-bundle coordinates."""

    chart: Chart
    qd: tuple  # qd[i][a]
    pd: tuple  # pd[i][a][b]: derivative of p_i^a in direction b
    sd: tuple  # sd[a][b]


@functools.lru_cache(maxsize=None)
def hamiltonian_jets(chart: Chart) -> HamiltonianJets:
    """First-jet symbols for a chart; cached so residuals share them."""
    labels = chart.direction_labels
    qd = tuple(
        tuple(Symbol(f"{q.name}_d{labels[a]}", ROLE_VELOCITY) for a in range(chart.k))
        for q in chart.q
    )
    pd = tuple(
        tuple(
            tuple(
                Symbol(f"{chart.p[i][a].name}_d{labels[b]}", ROLE_VELOCITY)
                for b in range(chart.k)
            )
            for a in range(chart.k)
        )
        for i in range(chart.n)
    )
    sd = tuple(
        tuple(Symbol(f"{chart.s[a].name}_d{labels[b]}", ROLE_VELOCITY) for b in range(chart.k))
        for a in range(chart.k)
    )
    return HamiltonianJets(chart, qd, pd, sd)


@dataclass(frozen=True)
class HDWResidual:
    """Section residuals of the Hamilton-De Donder-Weyl equations."""

    base: dict  # (i, a) -> RatFunc: dq^i/dt^a - dH/dp_i^a
    momentum: tuple  # per i: sum_a dp_i^a/dt^a + dH/dq^i + p_i^a dH/ds^a
    s_equation: RatFunc  # sum_a ds^a/dt^a - (p dH/dp - H)
    jets: HamiltonianJets


def hdw_section_residual(sys: HamiltonianSystem) -> HDWResidual:
    chart = sys.momentum_chart()
    jets = hamiltonian_jets(chart)
    base = {}
    for i in range(chart.n):
        for a in range(chart.k):
            base[(i, a)] = RatFunc(Poly.var(jets.qd[i][a])) - sys.H.diff(chart.p[i][a])
    momentum = []
    for i in range(chart.n):
        acc = sys.H.diff(chart.q[i])
        for a in range(chart.k):
            acc = acc + RatFunc(Poly.var(jets.pd[i][a][a]))
            ds = sys.H.diff(chart.s[a])
            if not ds.is_zero():
                acc = acc + RatFunc(Poly.var(chart.p[i][a])) * ds
        momentum.append(acc)
    s_eq = RatFunc(sys.H)
    for a in range(chart.k):
        s_eq = s_eq + RatFunc(Poly.var(jets.sd[a][a]))
        for i in range(chart.n):
            s_eq = s_eq - RatFunc(Poly.var(chart.p[i][a])) * sys.H.diff(chart.p[i][a])
    return HDWResidual(base=base, momentum=tuple(momentum), s_equation=s_eq, jets=jets)


def pullback_through_legendre(res: HDWResidual, lag_sys, lag_jets) -> tuple:
    """Substitute the Legendre relations into the momentum residuals.

    Momenta become fibre derivatives of the Lagrangian, base jets become the
    velocities, momentum jets become total derivatives of the fibre
    derivatives, and the dissipation jets are identified across the two jet
    spaces.  Returns one RatFunc per base field.
    """
    space = lag_sys.space
    sub = {}
    for i in range(space.n):
        for a in range(space.k):
            sub[res.jets.chart.p[i][a]] = lag_sys.dLdv(i, a)
            sub[res.jets.qd[i][a]] = Poly.var(space.v[i][a])
            for b in range(space.k):
                sub[res.jets.pd[i][a][b]] = lag_jets.total_derivative(lag_sys.dLdv(i, a), b)
    for a in range(space.k):
        for b in range(space.k):
            sub[res.jets.sd[a][b]] = Poly.var(lag_jets.sj[a][b])
    return tuple(r.substitute(sub) for r in res.momentum)
