"""Lagrangian-side derived objects.

From a polynomial Lagrangian on the velocity bundle this module derives the
energy, the Cartan and contact forms, the Legendre map, the fibre Hessian
with its regularity classification, the Lagrangian Reeb fields, the
Euler-Lagrange residuals over jet symbols, and the coefficient equations for
Lagrangian k-vector fields.
"""

from __future__ import annotations

import functools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .algebra import (
    ONE,
    ROLE_CONSTANT,
    ROLE_VELOCITY,
    ZERO,
    LinSystem,
    Poly,
    RatFunc,
    Scalar,
    Symbol,
)
from .bundles import Chart, KVectorField, OneForm, symbolic_kvector


class RegularityError(Exception):
    pass


@dataclass(frozen=True)
class LagrangianSystem:
    """A polynomial Lagrangian on the velocity bundle.

    `space` is the full Pontryagin chart so that the unified formalism and
    the Legendre map share coordinate symbols; the Lagrangian itself must not
    reference the momentum group.
    """

    space: Chart
    L: Poly

    def __post_init__(self):
        if not (self.space.has_velocities() and self.space.has_momenta()):
            raise ValueError("LagrangianSystem needs a full Pontryagin chart")
        allowed = set(self.space.velocity_subchart().symbols())
        for sym in self.L.symbols():
            if sym.role == ROLE_CONSTANT:
                continue
            if sym not in allowed:
                raise ValueError(f"Lagrangian references a non-velocity-bundle symbol: {sym.name}")

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def k(self) -> int:
        return self.space.k

    @property
    def chart(self) -> Chart:
        return self.space.velocity_subchart()

    def dLdv(self, i: int, a: int) -> Poly:
        return self.L.diff(self.space.v[i][a])


def energy(sys: LagrangianSystem) -> Poly:
    """Lagrangian energy: the Liouville derivative of L minus L."""
    space = sys.space
    acc = -sys.L
    for i in range(space.n):
        for a in range(space.k):
            acc = acc + Poly.var(space.v[i][a]) * sys.dLdv(i, a)
    return acc


def cartan_contact_forms(sys: LagrangianSystem):
    """(theta^a, eta^a) with theta^a = dL/dv_a^i dq^i and eta^a = ds^a - theta^a."""
    space = sys.space
    chart = sys.chart
    thetas = []
    etas = []
    for a in range(space.k):
        theta = {space.q[i]: sys.dLdv(i, a) for i in range(space.n)}
        thetas.append(OneForm(chart, {x: c for x, c in theta.items() if not c.is_zero()}))
        eta = {space.s[a]: ONE}
        for i in range(space.n):
            c = -sys.dLdv(i, a)
            if not c.is_zero():
                eta[space.q[i]] = c
        etas.append(OneForm(chart, eta))
    return thetas, etas


@dataclass(frozen=True)
class CoordinateMap:
    """A coordinate substitution map between two charts."""

    source: Chart
    target: Chart
    assignment: dict  # target Symbol -> Poly over source symbols

    def __post_init__(self):
        missing = [x.name for x in self.target.symbols() if x not in self.assignment]
        if missing:
            raise ValueError(f"coordinate map misses target symbols: {missing}")

    def pullback(self, f: Scalar):
        """Substitute the map into a function of the target coordinates."""
        if isinstance(f, RatFunc):
            return f.substitute(self.assignment)
        return f.substitute(self.assignment)


def legendre(sys: LagrangianSystem) -> CoordinateMap:
    """The fibre derivative: momenta become dL/dv, base and s are identity."""
    space = sys.space
    assignment = {x: Poly.var(x) for x in space.q + space.s}
    for i in range(space.n):
        for a in range(space.k):
            assignment[space.p[i][a]] = sys.dLdv(i, a)
    return CoordinateMap(sys.chart, space.momentum_subchart(), assignment)


@dataclass(frozen=True)
class Hessian:
    """The fibre Hessian d2L/dv dv over flattened (i, a) indices."""

    sys: LagrangianSystem
    pairs: tuple  # flat index -> (i, a)
    entries: tuple  # tuple of tuples of Poly

    def entry(self, row: int, col: int) -> Poly:
        return self.entries[row][col]

    @property
    def size(self) -> int:
        return len(self.pairs)


def hessian(sys: LagrangianSystem) -> Hessian:
    space = sys.space
    pairs = tuple((i, a) for i in range(space.n) for a in range(space.k))
    rows = []
    for (i, a) in pairs:
        d1 = sys.dLdv(i, a)
        rows.append(tuple(d1.diff(space.v[j][b]) for (j, b) in pairs))
    return Hessian(sys, pairs, tuple(rows))


def _rat_det(entries) -> RatFunc:
    """Determinant by fraction-aware Gaussian elimination."""
    m = [[RatFunc(e) if isinstance(e, Poly) else e for e in row] for row in entries]
    size = len(m)
    det = RatFunc(ONE)
    for col in range(size):
        piv = None
        for r in range(col, size):
            if not m[r][col].is_zero():
                piv = r
                break
        if piv is None:
            return RatFunc(ZERO)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det = det * m[col][col]
        inv = RatFunc(ONE) / m[col][col]
        for r in range(col + 1, size):
            f = m[r][col] * inv
            if f.is_zero():
                continue
            for c in range(col, size):
                m[r][c] = m[r][c] - f * m[col][c]
    return det


def _rat_inverse(entries):
    """Matrix inverse by Gauss-Jordan elimination over RatFunc."""
    size = len(entries)
    m = [[RatFunc(e) if isinstance(e, Poly) else e for e in row] for row in entries]
    aug = [[RatFunc(ONE) if i == j else RatFunc(ZERO) for j in range(size)] for i in range(size)]
    for col in range(size):
        piv = None
        for r in range(col, size):
            if not m[r][col].is_zero():
                piv = r
                break
        if piv is None:
            raise RegularityError("matrix is singular")
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            aug[col], aug[piv] = aug[piv], aug[col]
        inv = RatFunc(ONE) / m[col][col]
        m[col] = [e * inv for e in m[col]]
        aug[col] = [e * inv for e in aug[col]]
        for r in range(size):
            if r == col:
                continue
            f = m[r][col]
            if f.is_zero():
                continue
            m[r] = [a - f * b for a, b in zip(m[r], m[col])]
            aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [tuple(row) for row in aug]


def hessian_inverse(h: Hessian):
    """Exact inverse of the fibre Hessian; raises for singular systems."""
    return tuple(_rat_inverse(h.entries))


@dataclass(frozen=True)
class Regularity:
    kind: str  # "regular" | "singular"
    rank: int
    det: Optional[RatFunc] = None
    note: str = ""

    @property
    def is_regular(self) -> bool:
        return self.kind == "regular"

    def __str__(self):
        if self.is_regular:
            return f"Regular (det = {self.det})"
        extra = f"; {self.note}" if self.note else ""
        return f"Singular (rank {self.rank}){extra}"


# Rank sampling: 5 random rational points with entries in [-10, 10] and a
# 1e-9 pivot tolerance after row reduction.  Polynomial rank is generically
# attained, so the maximum over samples is taken.
_RANK_SAMPLES = 5
_RANK_TOL = 1e-9
_RANK_SEED = 1962


def _numeric_rank(h: Hessian) -> int:
    rng = random.Random(_RANK_SEED)
    syms = set()
    for row in h.entries:
        for e in row:
            syms |= e.symbols()
    best = 0
    for _ in range(_RANK_SAMPLES):
        point = {s: Fraction(rng.randint(-1000, 1000), 100) for s in syms}
        mat = np.array(
            [[e.evaluate(point) for e in row] for row in h.entries], dtype=float
        )
        rank = 0
        work = mat.copy()
        rows, cols = work.shape
        r = 0
        for c in range(cols):
            piv = r + int(np.argmax(np.abs(work[r:, c]))) if r < rows else None
            if piv is None or abs(work[piv, c]) <= _RANK_TOL:
                continue
            work[[r, piv]] = work[[piv, r]]
            work[r] = work[r] / work[r, c]
            for rr in range(rows):
                if rr != r:
                    work[rr] -= work[rr, c] * work[r]
            r += 1
            rank += 1
            if r == rows:
                break
        best = max(best, rank)
    return best


def classify(sys: LagrangianSystem) -> Regularity:
    """Regular iff the symbolic Hessian determinant is a nonzero constant.

    "Constant" means free of chart coordinates; model constants are fine.  A
    nonzero but coordinate-dependent determinant is classified singular with
    a sampled rank and a warning, since pointwise regularity domains are not
    tracked.
    """
    h = hessian(sys)
    det = _rat_det(h.entries)
    if not det.is_zero() and det.only_roles({ROLE_CONSTANT}):
        return Regularity(kind="regular", rank=h.size, det=det)
    note = ""
    if not det.is_zero():
        note = "determinant is coordinate-dependent; rank sampled numerically"
    return Regularity(kind="singular", rank=_numeric_rank(h), det=det, note=note)


def reeb_lagrangian(sys: LagrangianSystem) -> KVectorField:
    """The unique Reeb family of a regular Lagrangian system.

    Component form: d/ds^a minus the inverse Hessian contracted with the
    mixed derivatives d2L/ds dv, acting on the velocity directions.
    """
    reg = classify(sys)
    if not reg.is_regular:
        raise RegularityError("Reeb undefined; use unified formalism")
    h = hessian(sys)
    winv = hessian_inverse(h)
    space = sys.space
    chart = sys.chart
    comp = []
    for a in range(space.k):
        row = {space.s[a]: RatFunc(ONE)}
        mixed = [sys.dLdv(j, g).diff(space.s[a]) for (j, g) in h.pairs]
        for col, (i, b) in enumerate(h.pairs):
            acc = RatFunc(ZERO)
            for rix in range(h.size):
                if mixed[rix].is_zero():
                    continue
                acc = acc + winv[rix][col] * mixed[rix]
            if not acc.is_zero():
                row[space.v[i][b]] = -acc
        comp.append(row)
    return KVectorField(chart, tuple(comp))


@dataclass(frozen=True)
class JetContext:
    """Jet symbols for writing field equations as PDE residuals.

    Velocities double as the first jets of the base fields; second jets are
    stored symmetrically (direction pair in nondecreasing label order) and
    the dissipation variables get first jets.
    """

    sys: LagrangianSystem
    q2: tuple  # q2[i][(a, b)] with a <= b
    sj: tuple  # sj[a][b]

    def second_jet(self, i: int, a: int, b: int) -> Symbol:
        key = (a, b) if a <= b else (b, a)
        return self.q2[i][key]

    def total_derivative(self, f: Poly, a: int) -> Poly:
        """Formal total derivative D_a over the jet coordinates."""
        space = self.sys.space
        acc = ZERO
        for i in range(space.n):
            d = f.diff(space.q[i])
            if not d.is_zero():
                acc = acc + d * Poly.var(space.v[i][a])
            for b in range(space.k):
                d = f.diff(space.v[i][b])
                if not d.is_zero():
                    acc = acc + d * Poly.var(self.second_jet(i, b, a))
        for b in range(space.k):
            d = f.diff(space.s[b])
            if not d.is_zero():
                acc = acc + d * Poly.var(self.sj[b][a])
        return acc


@functools.lru_cache(maxsize=None)
def jet_context(sys: LagrangianSystem) -> JetContext:
    """Jet symbols for a system; cached so repeated derivations share them."""
    space = sys.space
    labels = space.direction_labels
    q2 = []
    for i in range(space.n):
        per = {}
        for a in range(space.k):
            for b in range(a, space.k):
                per[(a, b)] = Symbol(
                    f"{space.q[i].name}_{labels[a]}{labels[b]}", ROLE_VELOCITY
                )
        q2.append(per)
    sj = tuple(
        tuple(Symbol(f"{space.s[a].name}_{labels[b]}", ROLE_VELOCITY) for b in range(space.k))
        for a in range(space.k)
    )
    return JetContext(sys, tuple(q2), sj)


@dataclass(frozen=True)
class ELResidual:
    """Euler-Lagrange residuals over jet symbols, one per base field, plus
    the dissipation bookkeeping equation."""

    fields: tuple  # Poly per base index i
    s_equation: Poly
    jets: JetContext


def el_residual(sys: LagrangianSystem) -> ELResidual:
    """Residuals of the field equations:

        sum_a D_a(dL/dv_a^i) - dL/dq^i - sum_a dL/ds^a dL/dv_a^i   (per i)
        sum_a s^a_,a - L                                           (bookkeeping)
    """
    jets = jet_context(sys)
    space = sys.space
    out = []
    for i in range(space.n):
        acc = -sys.L.diff(space.q[i])
        for a in range(space.k):
            dv = sys.dLdv(i, a)
            acc = acc + jets.total_derivative(dv, a)
            ds = sys.L.diff(space.s[a])
            if not ds.is_zero():
                acc = acc - ds * dv
        out.append(acc)
    s_eq = -sys.L
    for a in range(space.k):
        s_eq = s_eq + Poly.var(jets.sj[a][a])
    return ELResidual(tuple(out), s_eq, jets)


@dataclass
class LagrangianEquations:
    """The coefficient equations for a Lagrangian k-vector field with free
    coefficients, as an affine system."""

    system: LinSystem
    field: KVectorField
    unknown_of: dict  # (direction, chart symbol) -> unknown Symbol


def lagrangian_field_equations(
    sys: LagrangianSystem, X: Optional[KVectorField] = None, unknown_of: Optional[dict] = None
) -> LagrangianEquations:
    """Coefficient equations on the velocity bundle for a field X.

    Four equation families: the mixed-dissipation block, the Hessian
    (second-order) block, the force block, and the volume/trace condition.
    If X is omitted a fully symbolic field is created.
    """
    chart = sys.chart
    space = sys.space
    if X is None:
        X, unknowns, unknown_of = symbolic_kvector(chart, prefix="X")
    else:
        if X.chart.symbols() != chart.symbols():
            raise ValueError("field must live on the system's velocity chart")
        if unknown_of is None:
            raise ValueError("an explicit field needs its unknown map")
        unknowns = [u for (_, _), u in sorted(unknown_of.items(), key=lambda kv: kv[1].index)]

    L = sys.L

    def xq(a, j):
        return X.get(a, space.q[j])

    def xv(a, j, b):
        return X.get(a, space.v[j][b])

    def xs(a, b):
        return X.get(a, space.s[b])

    eqs = []
    # mixed-dissipation block: ((X_a)^j - v_a^j) d2L/dv_a^j ds^b = 0
    for b in range(space.k):
        acc = RatFunc(ZERO)
        for a in range(space.k):
            for j in range(space.n):
                w = sys.dLdv(j, a).diff(space.s[b])
                if w.is_zero():
                    continue
                acc = acc + (xq(a, j) - RatFunc(Poly.var(space.v[j][a]))) * w
        eqs.append(acc)
    # Hessian block: ((X_a)^j - v_a^j) d2L/dv_b^i dv_a^j = 0
    for i in range(space.n):
        for b in range(space.k):
            acc = RatFunc(ZERO)
            for a in range(space.k):
                for j in range(space.n):
                    w = sys.dLdv(j, a).diff(space.v[i][b])
                    if w.is_zero():
                        continue
                    acc = acc + (xq(a, j) - RatFunc(Poly.var(space.v[j][a]))) * w
            eqs.append(acc)
    # force block
    for i in range(space.n):
        acc = RatFunc(L.diff(space.q[i]))
        for a in range(space.k):
            dv_ia = sys.dLdv(i, a)
            for j in range(space.n):
                w = sys.dLdv(j, a).diff(space.q[i])
                if not w.is_zero():
                    acc = acc + (xq(a, j) - RatFunc(Poly.var(space.v[j][a]))) * w
            for b in range(space.k):
                w = dv_ia.diff(space.s[b])
                if not w.is_zero():
                    acc = acc - w * xs(a, b)
            for j in range(space.n):
                w = dv_ia.diff(space.q[j])
                if not w.is_zero():
                    acc = acc - w * xq(a, j)
            for j in range(space.n):
                for b in range(space.k):
                    w = dv_ia.diff(space.v[j][b])
                    if not w.is_zero():
                        acc = acc - w * xv(a, j, b)
            ds = L.diff(space.s[a])
            if not ds.is_zero():
                acc = acc + ds * dv_ia
        eqs.append(acc)
    # volume condition: L + dL/dv_a^i ((X_a)^i - v_a^i) - (X_a)^a = 0
    acc = RatFunc(L)
    for a in range(space.k):
        for i in range(space.n):
            dv = sys.dLdv(i, a)
            if not dv.is_zero():
                acc = acc + dv * (xq(a, i) - RatFunc(Poly.var(space.v[i][a])))
        acc = acc - xs(a, a)
    eqs.append(acc)

    system = LinSystem.from_equations(unknowns, eqs)
    return LagrangianEquations(system=system, field=X, unknown_of=unknown_of)
