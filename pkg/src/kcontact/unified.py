"""The unified formalism on the Pontryagin bundle.

Assembles the contact field equations for a k-vector field with free
coefficients, extracts the holonomy and trace conditions together with the
primary constraints (the graph of the Legendre map), runs the tangency-based
constraint algorithm to stabilization, and projects stabilized solution
families back to the velocity- and momentum-bundle formalisms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .algebra import (
    ONE,
    ROLE_CONSTANT,
    ROLE_PARAMETER,
    ZERO,
    ConstraintReducer,
    LinSystem,
    NonAffineError,
    Poly,
    RatFunc,
    Scalar,
    Symbol,
    solve_affine,
    split_affine,
)
from .bundles import (
    Chart,
    KVectorField,
    contact_forms,
    d_contact,
    interior_sum,
    interior_sum_1,
    reeb_family,
    reeb_parameters,
    symbolic_kvector,
)
from .hamiltonian import HamiltonianSystem
from .lagrangian import LagrangianSystem


class UnifiedError(Exception):
    pass


class NonStabilizationError(UnifiedError):
    """The constraint algorithm did not stabilize within its iteration bound."""


class NoDynamicsError(UnifiedError):
    """The constraint ideal grew to the full chart dimension."""


class ReebConsistencyError(UnifiedError):
    """A Reeb-parameter coefficient failed to vanish modulo the primary
    constraints, so the equations would depend on the Reeb choice."""


class ConstraintSet:
    """Ordered, generation-indexed constraints with independence enforced.

    A candidate that reduces to zero modulo the earlier constraints is
    silently dropped; accepted constraints are stored sign- and
    content-normalized.
    """

    def __init__(self):
        self.items: list = []  # (Poly, generation)
        self._reducer = ConstraintReducer()

    def add(self, c: Poly, generation: int) -> bool:
        if c.is_zero():
            return False
        if not self._reducer.add(c):
            return False
        self.items.append((c.normalized(), generation))
        return True

    def polys(self) -> list:
        return [p for p, _ in self.items]

    def generation_of(self, idx: int) -> int:
        return self.items[idx][1]

    def by_generation(self, g: int) -> list:
        return [p for p, gen in self.items if gen == g]

    def generations(self) -> int:
        return max((gen for _, gen in self.items), default=0)

    def reduce(self, f: Scalar) -> RatFunc:
        return self._reducer.reduce(f)

    def is_zero(self, f: Scalar) -> bool:
        return self._reducer.is_zero(f)

    def copy(self) -> "ConstraintSet":
        out = ConstraintSet()
        for p, gen in self.items:
            out.add(p, gen)
        return out

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)


def coupling(chart: Chart) -> Poly:
    """The canonical pairing of momenta with velocities on the Pontryagin chart."""
    if not (chart.has_velocities() and chart.has_momenta()):
        raise UnifiedError("coupling needs a Pontryagin chart")
    acc = ZERO
    for i in range(chart.n):
        for a in range(chart.k):
            acc = acc + Poly.var(chart.p[i][a]) * Poly.var(chart.v[i][a])
    return acc


def sr_hamiltonian(sys: LagrangianSystem) -> Poly:
    """The unified Hamiltonian: coupling minus the (pulled-back) Lagrangian."""
    return coupling(sys.space) - sys.L


def _unified_rows(sys: LagrangianSystem, Z: KVectorField, reeb: KVectorField):
    """Coefficient equations of the unified system, one per chart symbol in
    canonical order, plus the scalar trace equation keyed by None."""
    space = sys.space
    H = sr_hamiltonian(sys)
    etas = contact_forms(space)
    omegas = d_contact(space)
    lhs = interior_sum(Z, omegas)
    reeb_H = [reeb.apply_to(H, a) for a in range(space.k)]

    rhs = {x: RatFunc(H.diff(x)) for x in space.symbols()}
    for a in range(space.k):
        if reeb_H[a].is_zero():
            continue
        for x, c in etas[a].coeff.items():
            rhs[x] = rhs[x] - reeb_H[a] * c

    rows = []
    for x in space.symbols():
        left = lhs.get(x)
        left = left if isinstance(left, RatFunc) else RatFunc(left)
        rows.append((x, left - rhs[x]))
    rows.append((None, interior_sum_1(Z, etas) + H))
    return rows


def _split_parameter_terms(expr: RatFunc, params: set):
    """Split a row into its parameter-free part and the coefficients of each
    Reeb-parameter monomial."""
    if expr.den.symbols() & params:
        raise ReebConsistencyError("Reeb parameters appeared in a denominator")
    base_terms = {}
    buckets: dict = {}
    for mono, c in expr.num.terms.items():
        par = tuple((s, e) for s, e in mono if s in params)
        rest = tuple((s, e) for s, e in mono if s not in params)
        if par:
            b = buckets.setdefault(par, {})
            b[rest] = b.get(rest, 0) + c
        else:
            base_terms[mono] = c
    return RatFunc(Poly(base_terms), expr.den), {m: Poly(t) for m, t in buckets.items()}


@dataclass
class SREquations:
    """The unified field equations after primary-constraint extraction."""

    sys: LagrangianSystem
    system: LinSystem
    constraints: ConstraintSet
    field: KVectorField
    unknown_of: dict
    reeb: KVectorField


def sr_equations(sys: LagrangianSystem, reeb: Optional[KVectorField] = None) -> SREquations:
    """Build the affine system for the unified field equations.

    The rows are assembled with a generic Reeb family.  Every Reeb-parameter
    coefficient must lie in the ideal of the primary constraints (this is
    verified, not assumed), after which those terms are dropped: the emitted
    system is therefore literally independent of the Reeb choice.  The
    constraint set returned holds the generation-1 (Legendre-graph)
    constraints.
    """
    space = sys.space
    Z, unknowns, unknown_of = symbolic_kvector(space, prefix="Z")
    if reeb is None:
        reeb = reeb_family(space)
    params = set(reeb_parameters(reeb))

    rows = _unified_rows(sys, Z, reeb)
    uset = unknowns

    constraints = ConstraintSet()
    pending = []
    for key, expr in rows:
        coeffs, const = split_affine(expr, uset)
        if not coeffs:
            base, buckets = _split_parameter_terms(const, params)
            if not buckets and not base.is_zero():
                constraints.add(base.num, 1)
            else:
                pending.append((key, base, buckets, {}))
        else:
            base, buckets = _split_parameter_terms(const, params)
            pending.append((key, base, buckets, coeffs))

    system = LinSystem(list(uset))
    for key, base, buckets, coeffs in pending:
        for mono, coeff_poly in buckets.items():
            if not constraints.is_zero(coeff_poly):
                raise ReebConsistencyError(
                    f"Reeb-parameter coefficient not generated by the primary "
                    f"constraints in row {key}: {coeff_poly}"
                )
        if not coeffs:
            if not base.is_zero() and not constraints.is_zero(base):
                constraints.add(base.num, 1)
            continue
        system.rows.append((coeffs, -base))
    return SREquations(
        sys=sys, system=system, constraints=constraints, field=Z, unknown_of=unknown_of, reeb=reeb
    )


def sr_raw_rows(sys: LagrangianSystem, reeb: KVectorField):
    """The unreduced unified rows for an explicit Reeb family (test hook)."""
    Z, unknowns, unknown_of = symbolic_kvector(space := sys.space, prefix="Z")
    return _unified_rows(sys, Z, reeb), Z, unknowns, unknown_of


@dataclass
class SolutionFamily:
    """A (partially) determined solution family of the unified equations."""

    sys: LagrangianSystem
    field: KVectorField
    unknown_of: dict
    determined: dict  # unknown Symbol -> RatFunc over chart symbols and free unknowns
    free: list
    constraints: ConstraintSet
    generations: int
    system: LinSystem
    generation_counts: list = field(default_factory=list)

    @property
    def space(self) -> Chart:
        return self.sys.space

    def value(self, a: int, x: Symbol) -> RatFunc:
        """Component of the family at (direction, coordinate), free symbols kept."""
        u = self.unknown_of[(a, x)]
        return self.determined.get(u, RatFunc(Poly.var(u)))

    def canonical_field(self) -> KVectorField:
        """The canonical representative: all free parameters set to zero."""
        zeros = {u: ZERO for u in self.free}
        comp = []
        for a in range(self.space.k):
            row = {}
            for x in self.space.symbols():
                val = self.value(a, x).substitute(zeros)
                if not val.is_zero():
                    row[x] = val
            comp.append(row)
        return KVectorField(self.space, tuple(comp))

    def substituted_value(self, a: int, x: Symbol, extra: dict) -> RatFunc:
        return self.value(a, x).substitute(extra)


def tangency_rows(sys: LagrangianSystem, Z: KVectorField, constraints: ConstraintSet, todo):
    """Rows demanding the field be tangent to the constraint submanifold.

    For each (constraint, direction) pair in `todo`, the directional
    derivative of the constraint along the field is reduced modulo the
    current constraints (coefficient-wise) and emitted as an equation.
    """
    rows = []
    for ci, a in todo:
        zeta = constraints.items[ci][0]
        expr = Z.apply_to(zeta, a)
        rows.append(expr)
    return rows


def _reduce_affine_row(coeffs, const, constraints: ConstraintSet):
    red_coeffs = {}
    for u, c in coeffs.items():
        rc = constraints.reduce(c)
        if not rc.is_zero():
            red_coeffs[u] = rc
    return red_coeffs, constraints.reduce(const)


def initial_family(sys: LagrangianSystem, reeb: Optional[KVectorField] = None) -> SolutionFamily:
    """Solve the unified equations before any tangency demand: holonomy and
    trace conditions pivoted, generation-1 constraints extracted."""
    eqs = sr_equations(sys, reeb=reeb)
    result = solve_affine(eqs.system)
    constraints = eqs.constraints
    for r in result.residuals:
        constraints.add(r, 1)
    return SolutionFamily(
        sys=sys,
        field=eqs.field,
        unknown_of=eqs.unknown_of,
        determined=result.solution,
        free=result.free,
        constraints=constraints,
        generations=1,
        system=eqs.system,
        generation_counts=[len(constraints)],
    )


def tangency_step(fam: SolutionFamily) -> SolutionFamily:
    """One tangency pass: every (constraint, direction) derivative of the
    family is appended (reduced modulo the current constraints), the system
    re-solved, and any fresh residuals become next-generation constraints.
    A stabilized family is a fixed point."""
    system = fam.system.copy()
    constraints = fam.constraints.copy()
    for ci in range(len(constraints.items)):
        zeta = constraints.items[ci][0]
        for a in range(fam.space.k):
            expr = fam.field.apply_to(zeta, a)
            coeffs, const = split_affine(expr, system.unknowns)
            coeffs, const = _reduce_affine_row(coeffs, const, constraints)
            if not coeffs:
                if not const.is_zero():
                    constraints.add(const.num, fam.generations + 1)
                continue
            system.rows.append((coeffs, -const))
    result = solve_affine(system)
    new = 0
    for r in result.residuals:
        if constraints.add(r, fam.generations + 1):
            new += 1
    generations = fam.generations + (1 if new else 0)
    counts = list(fam.generation_counts)
    if new:
        counts.append(len(constraints))
    return SolutionFamily(
        sys=fam.sys,
        field=fam.field,
        unknown_of=fam.unknown_of,
        determined=result.solution,
        free=result.free,
        constraints=constraints,
        generations=generations,
        system=system,
        generation_counts=counts,
    )


def constraint_algorithm(
    sys: LagrangianSystem,
    reeb: Optional[KVectorField] = None,
    max_iterations: Optional[int] = None,
) -> SolutionFamily:
    """Iterate consistency and tangency until the constraint set stabilizes.

    Generation 1 holds the Legendre-graph constraints; each later generation
    holds the new residuals produced by demanding tangency to everything
    found so far.  Fails when the iteration bound (default twice the chart
    dimension) is hit or when the constraints exhaust the chart dimension.
    """
    eqs = sr_equations(sys, reeb=reeb)
    space = sys.space
    dim = space.dim
    if max_iterations is None:
        max_iterations = 2 * dim

    system = eqs.system
    constraints = eqs.constraints
    Z = eqs.field
    processed = set()
    generation = 1
    counts = [len(constraints)]

    if len(constraints) >= dim:
        raise NoDynamicsError("primary constraints already exhaust the chart dimension")

    while True:
        todo = [
            (ci, a)
            for ci in range(len(constraints.items))
            for a in range(space.k)
            if (ci, a) not in processed
        ]
        if not todo:
            break
        for pair in todo:
            processed.add(pair)
        for expr in tangency_rows(sys, Z, constraints, todo):
            coeffs, const = split_affine(expr, system.unknowns)
            coeffs, const = _reduce_affine_row(coeffs, const, constraints)
            if not coeffs:
                if not const.is_zero():
                    constraints.add(const.num, generation + 1)
                continue
            system.rows.append((coeffs, -const))
        result = solve_affine(system)
        new = 0
        for r in result.residuals:
            if constraints.add(r, generation + 1):
                new += 1
        if new == 0:
            break
        generation += 1
        counts.append(len(constraints))
        if len(constraints) >= dim:
            raise NoDynamicsError("constraint ideal reached the chart dimension: no dynamics left")
        if generation > max_iterations:
            raise NonStabilizationError(
                f"constraint algorithm did not stabilize within {max_iterations} generations"
            )

    result = solve_affine(system)
    return SolutionFamily(
        sys=sys,
        field=Z,
        unknown_of=eqs.unknown_of,
        determined=result.solution,
        free=result.free,
        constraints=constraints,
        generations=generation,
        system=system,
        generation_counts=counts,
    )


def project_lagrangian(fam: SolutionFamily) -> KVectorField:
    """Velocity-bundle projection of a stabilized family.

    Momentum components are dropped; momenta inside the remaining components
    are eliminated through the Legendre-graph substitution.
    """
    space = fam.space
    vchart = space.velocity_subchart()
    sub = {}
    for i in range(space.n):
        for a in range(space.k):
            sub[space.p[i][a]] = fam.sys.dLdv(i, a)
    comp = []
    for a in range(space.k):
        row = {}
        for x in vchart.symbols():
            val = fam.value(a, x).substitute(sub)
            if not val.is_zero():
                row[x] = val
        comp.append(row)
    return KVectorField(vchart, tuple(comp))


def legendre_inverse(sys: LagrangianSystem) -> dict:
    """Solve the Legendre relations for the velocities (regular, affine case)."""
    space = sys.space
    v_unknowns = [space.v[i][a] for i in range(space.n) for a in range(space.k)]
    exprs = []
    for i in range(space.n):
        for a in range(space.k):
            exprs.append(RatFunc(Poly.var(space.p[i][a]) - sys.dLdv(i, a)))
    try:
        system = LinSystem.from_equations(v_unknowns, exprs)
    except NonAffineError as exc:
        raise UnifiedError(
            "Legendre map is not affine in the velocities; symbolic inversion unsupported"
        ) from exc
    result = solve_affine(system)
    if result.free or result.residuals:
        raise UnifiedError("Legendre map is not invertible: system is singular")
    return dict(result.solution)


@dataclass
class HamiltonianProjection:
    """Momentum-bundle projection of a stabilized family.

    For regular systems the velocities are eliminated and `hamiltonian`
    carries the induced Hamiltonian system.  For singular systems the
    velocities remain as fibre parameters and `constraints` lists the
    momentum-space content of the Legendre graph.
    """

    field: KVectorField
    constraints: list
    hamiltonian: Optional[HamiltonianSystem]
    velocity_parameters: list


def project_hamiltonian(fam: SolutionFamily) -> HamiltonianProjection:
    space = fam.space
    mchart = space.momentum_subchart()
    sys = fam.sys

    from .lagrangian import classify, energy

    reg = classify(sys)
    if reg.is_regular:
        vsol = legendre_inverse(sys)
        comp = []
        for a in range(space.k):
            row = {}
            for x in mchart.symbols():
                val = fam.value(a, x).substitute(vsol)
                if not val.is_zero():
                    row[x] = val
            comp.append(row)
        H = RatFunc(energy(sys)).substitute(vsol)
        ham = HamiltonianSystem(mchart, H)
        return HamiltonianProjection(
            field=KVectorField(mchart, tuple(comp)),
            constraints=[],
            hamiltonian=ham,
            velocity_parameters=[],
        )

    # singular case: eliminate what can be eliminated from the Legendre graph
    # and report the purely momentum-space constraints
    v_unknowns = [space.v[i][a] for i in range(space.n) for a in range(space.k)]
    exprs = [RatFunc(c) for c in fam.constraints.by_generation(1)]
    system = LinSystem.from_equations(v_unknowns, exprs)
    result = solve_affine(system)
    momentum_constraints = list(result.residuals)
    comp = []
    for a in range(space.k):
        row = {}
        for x in mchart.symbols():
            val = fam.value(a, x)
            if not val.is_zero():
                row[x] = val
        comp.append(row)
    field_ = KVectorField(space, tuple(comp))
    return HamiltonianProjection(
        field=field_,
        constraints=momentum_constraints,
        hamiltonian=None,
        velocity_parameters=[v for v in v_unknowns if v in result.free],
    )


def induced_hamiltonian(sys: LagrangianSystem) -> HamiltonianSystem:
    """The momentum-bundle Hamiltonian of a regular system (energy through
    the inverted Legendre map)."""
    from .lagrangian import energy

    vsol = legendre_inverse(sys)
    H = RatFunc(energy(sys)).substitute(vsol)
    return HamiltonianSystem(sys.space.momentum_subchart(), H)


def pushforward_lagrangian_field(sys: LagrangianSystem, X: KVectorField) -> KVectorField:
    """Push a velocity-bundle field to the Pontryagin bundle along the graph
    of the Legendre map: momentum components become directional derivatives
    of the fibre derivatives."""
    space = sys.space
    comp = []
    for a in range(space.k):
        row = {}
        for x in space.q + space.s:
            val = X.get(a, x)
            if not val.is_zero():
                row[x] = val
        for i in range(space.n):
            for b in range(space.k):
                val = X.get(a, space.v[i][b])
                if not val.is_zero():
                    row[space.v[i][b]] = val
        for i in range(space.n):
            for b in range(space.k):
                val = X.apply_to(sys.dLdv(i, b), a)
                if not val.is_zero():
                    row[space.p[i][b]] = val
        comp.append(row)
    return KVectorField(space, tuple(comp))


def residuals_of_family(fam: SolutionFamily, candidate: KVectorField) -> list:
    """Residual of each accumulated equation row under a candidate field,
    reduced modulo the constraints (zero list iff the candidate solves the
    stabilized system on the final submanifold)."""
    values = {}
    for (a, x), u in fam.unknown_of.items():
        values[u] = candidate.get(a, x)
    out = []
    for res in fam.system.substitute_into_rows(values):
        out.append(fam.constraints.reduce(res))
    return out
