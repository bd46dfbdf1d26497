"""Charts and canonical geometric objects on the field-theory bundles.

A Chart groups the role-tagged coordinate symbols of one of the bundles in
play: the velocity bundle (base + velocities + dissipation variables), the
momentum bundle (base + momenta + dissipation variables), or the full
Pontryagin bundle carrying both fibres.  On top of charts live the degree-one
and degree-two coordinate forms the formalism needs (contact forms and their
exterior derivatives), interior products with k-vector fields, and Reeb
families.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .algebra import (
    ONE,
    ROLE_BASE,
    ROLE_CONSTANT,
    ROLE_DISSIPATION,
    ROLE_MOMENTUM,
    ROLE_PARAMETER,
    ROLE_VELOCITY,
    ZERO,
    Poly,
    RatFunc,
    Scalar,
    Symbol,
)


class ChartError(Exception):
    pass


@dataclass(frozen=True)
class Chart:
    """A named coordinate system on one of the bundles.

    q[i] are base coordinates, v[i][a] velocities (dq^i in direction a),
    p[i][a] momenta, s[a] dissipation coordinates.  Velocity and momentum
    groups are optional, but at least one must be present; a chart on the
    Pontryagin bundle has both.
    """

    n: int
    k: int
    q: tuple
    v: Optional[tuple]  # v[i][a]
    p: Optional[tuple]  # p[i][a]
    s: tuple
    name: str = "chart"
    labels: tuple = ()  # display labels for the k contact directions

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise ChartError("chart dimensions must be positive")
        if len(self.q) != self.n or len(self.s) != self.k:
            raise ChartError("coordinate group sizes do not match (n, k)")
        if self.v is None and self.p is None:
            raise ChartError("chart needs a velocity or momentum group")
        for group in (self.v, self.p):
            if group is not None:
                if len(group) != self.n or any(len(row) != self.k for row in group):
                    raise ChartError("fibre group shape must be n rows of k symbols")
        names = [sym.name for sym in self.symbols()]
        if len(names) != len(set(names)):
            raise ChartError("symbol names must be unique within a chart")
        if self.labels and len(self.labels) != self.k:
            raise ChartError("need one direction label per contact direction")

    @property
    def direction_labels(self) -> tuple:
        return self.labels if self.labels else tuple(str(a + 1) for a in range(self.k))

    def symbols(self) -> tuple:
        """All chart symbols in registration-friendly canonical order."""
        out = list(self.q)
        if self.v is not None:
            out.extend(sym for row in self.v for sym in row)
        if self.p is not None:
            out.extend(sym for row in self.p for sym in row)
        out.extend(self.s)
        return tuple(out)

    @property
    def dim(self) -> int:
        return len(self.symbols())

    def has_velocities(self) -> bool:
        return self.v is not None

    def has_momenta(self) -> bool:
        return self.p is not None

    def velocity_subchart(self) -> "Chart":
        """The velocity-bundle chart sharing this chart's symbols."""
        if self.v is None:
            raise ChartError("chart has no velocity group")
        return Chart(
            self.n, self.k, self.q, self.v, None, self.s,
            name=f"{self.name}:vel", labels=self.labels,
        )

    def momentum_subchart(self) -> "Chart":
        """The momentum-bundle chart sharing this chart's symbols."""
        if self.p is None:
            raise ChartError("chart has no momentum group")
        return Chart(
            self.n, self.k, self.q, None, self.p, self.s,
            name=f"{self.name}:mom", labels=self.labels,
        )


def pontryagin_chart(
    n: int,
    k: int,
    base_names: Optional[Sequence[str]] = None,
    direction_labels: Optional[Sequence[str]] = None,
    momentum_names: Optional[Sequence[Sequence[str]]] = None,
    velocity_names: Optional[Sequence[Sequence[str]]] = None,
    name: str = "W",
) -> Chart:
    """Chart on the Pontryagin bundle with all four coordinate groups.

    Default names follow q{i}, v{i}_{a}, p{i}_{a}, s{a}; models may pass
    their own base names, direction labels (for example ("x", "t")), and a
    full n x k matrix of momentum names.
    """
    if n < 1 or k < 1:
        raise ChartError("chart dimensions must be positive")
    if base_names is None:
        base_names = [f"q{i + 1}" for i in range(n)] if n > 1 else ["q1"]
    if direction_labels is None:
        direction_labels = [str(a + 1) for a in range(k)]
    if len(base_names) != n or len(direction_labels) != k:
        raise ChartError("name lists must match (n, k)")
    if momentum_names is None:
        momentum_names = [
            [f"p{'_' + bn if n > 1 else ''}_{dl}" for dl in direction_labels]
            for bn in base_names
        ]
    if velocity_names is None:
        velocity_names = [[f"{bn}_{dl}" for dl in direction_labels] for bn in base_names]
    q = tuple(Symbol(bn, ROLE_BASE) for bn in base_names)
    v = tuple(
        tuple(Symbol(vn, ROLE_VELOCITY) for vn in row) for row in velocity_names
    )
    p = tuple(
        tuple(Symbol(mn, ROLE_MOMENTUM) for mn in row) for row in momentum_names
    )
    s = tuple(Symbol(f"s_{dl}", ROLE_DISSIPATION) for dl in direction_labels)
    return Chart(n, k, q, v, p, s, name=name, labels=tuple(direction_labels))


@dataclass(frozen=True)
class OneForm:
    """A coordinate 1-form: coefficient of each basis differential."""

    chart: Chart
    coeff: dict  # Symbol -> Poly

    def get(self, x: Symbol) -> Poly:
        return self.coeff.get(x, ZERO)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeff.values())

    def __add__(self, other: "OneForm") -> "OneForm":
        if other.chart is not self.chart:
            raise ChartError("cannot add forms on different charts")
        keys = set(self.coeff) | set(other.coeff)
        return OneForm(self.chart, {x: self.get(x) + other.get(x) for x in keys})

    def __sub__(self, other: "OneForm") -> "OneForm":
        if other.chart is not self.chart:
            raise ChartError("cannot subtract forms on different charts")
        keys = set(self.coeff) | set(other.coeff)
        return OneForm(self.chart, {x: self.get(x) - other.get(x) for x in keys})

    def scale(self, c) -> "OneForm":
        return OneForm(self.chart, {x: v * c for x, v in self.coeff.items()})


@dataclass(frozen=True)
class TwoForm:
    """A coordinate 2-form stored antisymmetrically.

    Internally only keys (x, y) with x registered before y are kept;
    `get` returns the signed coefficient for any ordering.
    """

    chart: Chart
    coeff: dict  # (Symbol, Symbol) with x.index < y.index -> Poly

    def __post_init__(self):
        for (x, y) in self.coeff:
            if x.index >= y.index:
                raise ChartError("two-form keys must be stored in registration order")

    def get(self, x: Symbol, y: Symbol) -> Poly:
        if x.index == y.index:
            return ZERO
        if x.index < y.index:
            return self.coeff.get((x, y), ZERO)
        return -self.coeff.get((y, x), ZERO)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeff.values())


@dataclass(frozen=True)
class KVectorField:
    """A k-tuple of coordinate vector fields on a chart.

    comp[a] maps a chart symbol to the coefficient of its partial-derivative
    direction.  Coefficients are rational functions; solution families keep
    free-parameter symbols inside them.
    """

    chart: Chart
    comp: tuple  # length k, each a dict Symbol -> RatFunc

    def __post_init__(self):
        if len(self.comp) != self.chart.k:
            raise ChartError("component count must equal k")

    def get(self, a: int, x: Symbol) -> RatFunc:
        return self.comp[a].get(x, RatFunc(ZERO))

    @staticmethod
    def build(chart: Chart, comp: Sequence[Mapping[Symbol, object]]) -> "KVectorField":
        cooked = []
        for a in range(chart.k):
            row = {}
            for x, val in comp[a].items():
                r = val if isinstance(val, RatFunc) else RatFunc(Poly._coerce(val))
                if not r.is_zero():
                    row[x] = r
            cooked.append(row)
        return KVectorField(chart, tuple(cooked))

    @staticmethod
    def zero(chart: Chart) -> "KVectorField":
        return KVectorField(chart, tuple({} for _ in range(chart.k)))

    def substitute(self, mapping) -> "KVectorField":
        out = []
        for row in self.comp:
            new = {}
            for x, val in row.items():
                r = val.substitute(mapping)
                if not r.is_zero():
                    new[x] = r
            out.append(new)
        return KVectorField(self.chart, tuple(out))

    def apply_to(self, f: Scalar, a: int) -> RatFunc:
        """Directional derivative of a function along the a-th field."""
        acc = RatFunc(ZERO)
        fr = f if isinstance(f, RatFunc) else RatFunc(Poly._coerce(f))
        for x, val in self.comp[a].items():
            d = fr.diff(x)
            if not d.is_zero():
                acc = acc + val * d
        return acc


def contact_forms(chart: Chart) -> list:
    """The canonical contact forms: eta^a = ds^a - p_i^a dq^i."""
    if not chart.has_momenta():
        raise ChartError("contact forms need a momentum group")
    out = []
    for a in range(chart.k):
        coeff = {chart.s[a]: ONE}
        for i in range(chart.n):
            coeff[chart.q[i]] = -Poly.var(chart.p[i][a])
        out.append(OneForm(chart, coeff))
    return out


def d_contact(chart: Chart) -> list:
    """Exterior derivatives of the contact forms: dq^i wedge dp_i^a."""
    if not chart.has_momenta():
        raise ChartError("contact forms need a momentum group")
    out = []
    for a in range(chart.k):
        coeff = {}
        for i in range(chart.n):
            qi, pia = chart.q[i], chart.p[i][a]
            key = (qi, pia) if qi.index < pia.index else (pia, qi)
            sign = 1 if qi.index < pia.index else -1
            coeff[key] = Poly.const(sign)
        out.append(TwoForm(chart, coeff))
    return out


def exterior_derivative(form: OneForm) -> TwoForm:
    """Coordinate exterior derivative of a 1-form with Poly coefficients."""
    chart = form.chart
    syms = chart.symbols()
    coeff: dict = {}
    for y, c in form.coeff.items():
        for x in syms:
            d = c.diff(x)
            if d.is_zero():
                continue
            # d(c dy) contributes d c/dx dx^dy
            if x.index < y.index:
                coeff[(x, y)] = coeff.get((x, y), ZERO) + d
            elif x.index > y.index:
                coeff[(y, x)] = coeff.get((y, x), ZERO) - d
    return TwoForm(chart, {k: v for k, v in coeff.items() if not v.is_zero()})


def contract(vf: KVectorField, a: int, omega: TwoForm) -> OneForm:
    """Interior product of the a-th field with a 2-form."""
    if vf.chart is not omega.chart and vf.chart.symbols() != omega.chart.symbols():
        raise ChartError("vector field and form live on different charts")
    coeff: dict = {}
    for (x, y), c in omega.coeff.items():
        zx = vf.get(a, x)
        zy = vf.get(a, y)
        if not zx.is_zero():
            coeff[y] = coeff.get(y, RatFunc(ZERO)) + zx * c
        if not zy.is_zero():
            coeff[x] = coeff.get(x, RatFunc(ZERO)) - zy * c
    return OneForm(omega.chart, {x: _scalarize(v) for x, v in coeff.items()})


def contract_1(vf: KVectorField, a: int, eta: OneForm) -> RatFunc:
    """Interior product of the a-th field with a 1-form."""
    acc = RatFunc(ZERO)
    for x, c in eta.coeff.items():
        z = vf.get(a, x)
        if not z.is_zero():
            acc = acc + z * c
    return acc


def _scalarize(v):
    if isinstance(v, RatFunc) and v.is_poly():
        return v.as_poly()
    return v


def interior_sum(vf: KVectorField, omegas: Sequence[TwoForm]) -> OneForm:
    """The alpha-summed contraction i(Z_a) omega^a."""
    if len(omegas) != vf.chart.k:
        raise ChartError("need one 2-form per contact direction")
    total = None
    for a, omega in enumerate(omegas):
        term = contract(vf, a, omega)
        total = term if total is None else total + term
    return total


def interior_sum_1(vf: KVectorField, etas: Sequence[OneForm]) -> RatFunc:
    """The alpha-summed contraction i(Z_a) eta^a."""
    if len(etas) != vf.chart.k:
        raise ChartError("need one 1-form per contact direction")
    acc = RatFunc(ZERO)
    for a, eta in enumerate(etas):
        acc = acc + contract_1(vf, a, eta)
    return acc


def reeb_family(chart: Chart, param_prefix: str = "r") -> KVectorField:
    """The Reeb family of the Pontryagin chart.

    On the full bundle the contact structure only pins the ds components;
    the velocity components are arbitrary and are returned as fresh
    free-parameter symbols, one per (direction, velocity coordinate).
    """
    if not (chart.has_velocities() and chart.has_momenta()):
        raise ChartError("the Reeb family with free fibre components needs a Pontryagin chart")
    comp = []
    for a in range(chart.k):
        row: dict = {chart.s[a]: RatFunc(ONE)}
        for i in range(chart.n):
            for b in range(chart.k):
                sym = Symbol(f"{param_prefix}{a}_{chart.v[i][b].name}", ROLE_PARAMETER)
                row[chart.v[i][b]] = RatFunc(Poly.var(sym))
        comp.append(row)
    return KVectorField(chart, tuple(comp))


def symbolic_kvector(chart: Chart, prefix: str = "Z"):
    """A k-vector field with one fresh free-parameter symbol per coefficient.

    Returns (field, unknowns, unknown_of) where unknowns are listed in the
    declared elimination order (directions outermost, chart symbols in
    canonical order within each direction) and unknown_of maps a pair
    (direction index, chart symbol) to its coefficient symbol.
    """
    labels = chart.direction_labels
    comp = []
    unknowns = []
    unknown_of = {}
    for a in range(chart.k):
        row = {}
        for x in chart.symbols():
            u = Symbol(f"{prefix}{labels[a]}_{x.name}", ROLE_PARAMETER)
            row[x] = RatFunc(Poly.var(u))
            unknowns.append(u)
            unknown_of[(a, x)] = u
        comp.append(row)
    return KVectorField(chart, tuple(comp)), unknowns, unknown_of


def reeb_parameters(reeb: KVectorField) -> list:
    """The free-parameter symbols carried by a Reeb family."""
    out = []
    for row in reeb.comp:
        for val in row.values():
            out.extend(s for s in val.symbols() if s.role == ROLE_PARAMETER)
    return sorted(set(out), key=lambda s: s.index)
