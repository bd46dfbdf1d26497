"""Exact multivariate polynomial and rational-function arithmetic.

This is the computational substrate for every symbolic derivation in the
package: polynomials with exact rational coefficients over role-tagged
symbols, rational functions (needed for elimination pivots such as division
by Hessian entries), affine linear systems over the rational-function field,
and reduction modulo a constraint ideal.

Everything here is immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

# Symbol roles.  Coordinates carry the geometric role they play in a chart;
# "parameter" marks the free functions of solution families; "constant"
# marks model constants (densities, damping rates, metric entries, ...).
ROLE_BASE = "base"
ROLE_VELOCITY = "velocity"
ROLE_MOMENTUM = "momentum"
ROLE_DISSIPATION = "dissipation"
ROLE_PARAMETER = "parameter"
ROLE_CONSTANT = "constant"

ROLES = frozenset(
    {ROLE_BASE, ROLE_VELOCITY, ROLE_MOMENTUM, ROLE_DISSIPATION, ROLE_PARAMETER, ROLE_CONSTANT}
)

_registry = itertools.count()


class AlgebraError(Exception):
    """Base class for symbolic-arithmetic failures."""


class UnregisteredSymbolError(AlgebraError):
    pass


class MissingAssignmentError(AlgebraError):
    pass


class NonAffineError(AlgebraError):
    pass


class PivotError(AlgebraError):
    """Raised when elimination would divide by an inadmissible pivot."""

    def __init__(self, message, offending=None):
        super().__init__(message)
        self.offending = offending


@dataclass(frozen=True)
class Symbol:
    """A named, role-tagged indeterminate.

    Symbols are identified by a global registration index, which also fixes
    the monomial order (graded lexicographic over registration order) so
    that canonical forms are deterministic across runs.
    """

    name: str
    role: str = ROLE_CONSTANT
    index: int = field(default_factory=lambda: next(_registry))

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown symbol role {self.role!r}")

    def __repr__(self):
        return f"Symbol({self.name!r}, {self.role!r})"

    def __str__(self):
        return self.name


# A monomial is a tuple of (symbol, exponent) pairs with positive exponents,
# sorted by registration index.
Monomial = tuple

_EMPTY_MONO: Monomial = ()


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        sa, ea = a[i]
        sb, eb = b[j]
        if sa.index == sb.index:
            out.append((sa, ea + eb))
            i += 1
            j += 1
        elif sa.index < sb.index:
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return tuple(out)


def _mono_divides(a: Monomial, b: Monomial) -> bool:
    """True if monomial a divides monomial b."""
    eb = {s: e for s, e in b}
    return all(eb.get(s, 0) >= e for s, e in a)


def _mono_div(b: Monomial, a: Monomial) -> Monomial:
    eb = dict(b)
    for s, e in a:
        r = eb[s] - e
        if r:
            eb[s] = r
        else:
            del eb[s]
    return tuple(sorted(eb.items(), key=lambda p: p[0].index))


def _mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def _grlex_key(m: Monomial):
    # Graded lexicographic: total degree first, then lex with the
    # earliest-registered symbol most significant.
    return (_mono_degree(m), tuple((-s.index, e) for s, e in m))


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


class Poly:
    """A multivariate polynomial with exact rational coefficients.

    Terms are stored as a map monomial -> Fraction with no zero entries and
    canonically sorted monomials, so structural equality is decidable.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        clean = {}
        if terms:
            for mono, coeff in terms.items():
                coeff = _as_fraction(coeff)
                if coeff:
                    clean[mono] = clean.get(mono, Fraction(0)) + coeff
                    if not clean[mono]:
                        del clean[mono]
        object.__setattr__(self, "terms", clean)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def const(c) -> "Poly":
        c = _as_fraction(c)
        return Poly({_EMPTY_MONO: c}) if c else Poly()

    @staticmethod
    def var(s: Symbol, exp: int = 1) -> "Poly":
        if exp < 0:
            raise ValueError("negative exponent")
        if exp == 0:
            return Poly.const(1)
        return Poly({((s, exp),): Fraction(1)})

    @staticmethod
    def _coerce(x) -> "Poly":
        if isinstance(x, Poly):
            return x
        if isinstance(x, Symbol):
            return Poly.var(x)
        if isinstance(x, (int, Fraction)):
            return Poly.const(x)
        raise TypeError(f"cannot coerce {type(x).__name__} to Poly")

    # -- basic queries -----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(m == _EMPTY_MONO for m in self.terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise AlgebraError("polynomial is not constant")
        return self.terms.get(_EMPTY_MONO, Fraction(0))

    def symbols(self) -> set:
        out = set()
        for mono in self.terms:
            for s, _ in mono:
                out.add(s)
        return out

    def only_roles(self, roles: Iterable[str]) -> bool:
        roles = set(roles)
        return all(s.role in roles for s in self.symbols())

    def total_degree(self) -> int:
        if not self.terms:
            return 0
        return max(_mono_degree(m) for m in self.terms)

    def degree_in(self, x: Symbol) -> int:
        d = 0
        for mono in self.terms:
            for s, e in mono:
                if s is x or s == x:
                    d = max(d, e)
        return d

    def sorted_terms(self):
        """Terms in canonical (descending graded-lex) order."""
        return sorted(self.terms.items(), key=lambda kv: _grlex_key(kv[0]), reverse=True)

    def leading(self):
        """(monomial, coefficient) of the leading term; the zero poly has none."""
        if not self.terms:
            raise AlgebraError("zero polynomial has no leading term")
        mono = max(self.terms, key=_grlex_key)
        return mono, self.terms[mono]

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        try:
            other = Poly._coerce(other)
        except TypeError:
            return NotImplemented
        out = dict(self.terms)
        for mono, c in other.terms.items():
            s = out.get(mono, Fraction(0)) + c
            if s:
                out[mono] = s
            else:
                out.pop(mono, None)
        p = Poly()
        object.__setattr__(p, "terms", out)
        return p

    __radd__ = __add__

    def __neg__(self):
        p = Poly()
        object.__setattr__(p, "terms", {m: -c for m, c in self.terms.items()})
        return p

    def __sub__(self, other):
        try:
            other = Poly._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return Poly._coerce(other) - self

    def __mul__(self, other):
        try:
            other = Poly._coerce(other)
        except TypeError:
            return NotImplemented
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono = _mono_mul(m1, m2)
                s = out.get(mono, Fraction(0)) + c1 * c2
                if s:
                    out[mono] = s
                else:
                    del out[mono]
        p = Poly()
        object.__setattr__(p, "terms", out)
        return p

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a nonnegative integer")
        result = Poly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            c = _as_fraction(other)
            if not c:
                raise ZeroDivisionError("division by zero")
            return self * Fraction(c.denominator, c.numerator)
        if isinstance(other, (Poly, Symbol)):
            return RatFunc(self, Poly._coerce(other))
        return NotImplemented

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self.terms == Poly.const(other).terms
        if isinstance(other, RatFunc):
            return other == self
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    # -- calculus ----------------------------------------------------------

    def diff(self, x: Symbol) -> "Poly":
        """Formal partial derivative with respect to a registered symbol."""
        if not isinstance(x, Symbol):
            raise UnregisteredSymbolError(f"unregistered symbol: {x!r}")
        out: dict = {}
        for mono, c in self.terms.items():
            for k, (s, e) in enumerate(mono):
                if s == x:
                    if e == 1:
                        new = mono[:k] + mono[k + 1 :]
                    else:
                        new = mono[:k] + ((s, e - 1),) + mono[k + 1 :]
                    cur = out.get(new, Fraction(0)) + c * e
                    if cur:
                        out[new] = cur
                    else:
                        out.pop(new, None)
                    break
        p = Poly()
        object.__setattr__(p, "terms", out)
        return p

    # -- substitution and evaluation ----------------------------------------

    def substitute(self, mapping: Mapping[Symbol, object]):
        """Substitute symbols by polynomials, rationals, or rational functions.

        Returns a Poly when every replacement is polynomial, otherwise a
        RatFunc.  Symbols absent from the mapping are left untouched.
        """
        if not mapping:
            return self
        rational = any(isinstance(v, RatFunc) for v in mapping.values())
        if rational:
            acc = RatFunc(Poly())
            for mono, c in self.sorted_terms():
                term = RatFunc(Poly.const(c))
                for s, e in mono:
                    if s in mapping:
                        v = mapping[s]
                        v = v if isinstance(v, RatFunc) else RatFunc(Poly._coerce(v))
                        term = term * v**e
                    else:
                        term = term * RatFunc(Poly.var(s, e))
                acc = acc + term
            return acc
        acc = Poly()
        for mono, c in self.terms.items():
            term = Poly.const(c)
            for s, e in mono:
                if s in mapping:
                    term = term * Poly._coerce(mapping[s]) ** e
                else:
                    term = term * Poly.var(s, e)
            acc = acc + term
        return acc

    def evaluate(self, point: Mapping[Symbol, float]) -> float:
        """Numeric evaluation; every symbol appearing must be assigned."""
        missing = sorted((s.name for s in self.symbols() if s not in point))
        if missing:
            raise MissingAssignmentError(f"missing assignments for: {', '.join(missing)}")
        total = 0.0
        for mono, c in self.sorted_terms():
            v = float(c)
            for s, e in mono:
                v *= float(point[s]) ** e
            total += v
        return total

    def evaluate_arrays(self, point: Mapping[Symbol, object]):
        """Vectorized evaluation with numpy arrays (or scalars) as values."""
        missing = sorted((s.name for s in self.symbols() if s not in point))
        if missing:
            raise MissingAssignmentError(f"missing assignments for: {', '.join(missing)}")
        total = None
        for mono, c in self.sorted_terms():
            v = float(c)
            for s, e in mono:
                v = v * np.asarray(point[s], dtype=float) ** e
            total = v if total is None else total + v
        if total is None:
            return 0.0
        return total

    # -- structure helpers ---------------------------------------------------

    def as_univariate(self, x: Symbol) -> dict:
        """View as a polynomial in x: exponent -> coefficient Poly."""
        out: dict = {}
        for mono, c in self.terms.items():
            e_x = 0
            rest = []
            for s, e in mono:
                if s == x:
                    e_x = e
                else:
                    rest.append((s, e))
            bucket = out.setdefault(e_x, {})
            rest = tuple(rest)
            bucket[rest] = bucket.get(rest, Fraction(0)) + c
        return {e: Poly(t) for e, t in out.items()}

    def content(self) -> Fraction:
        """gcd of the coefficients (positive), 0 for the zero polynomial."""
        if not self.terms:
            return Fraction(0)
        from math import gcd

        num = 0
        den = 1
        for c in self.terms.values():
            num = gcd(num, abs(c.numerator))
            den = den * c.denominator // gcd(den, c.denominator)
        return Fraction(num, den)

    def monomial_gcd(self) -> Monomial:
        """Largest monomial dividing every term."""
        if not self.terms:
            return _EMPTY_MONO
        common = None
        for mono in self.terms:
            exps = dict(mono)
            if common is None:
                common = exps
            else:
                common = {s: min(e, exps[s]) for s, e in common.items() if s in exps}
            if not common:
                return _EMPTY_MONO
        return tuple(sorted(common.items(), key=lambda p: p[0].index))

    def normalized(self) -> "Poly":
        """Canonical constraint form: primitive coefficients, positive leading one."""
        if not self.terms:
            return self
        c = self.content()
        _, lead = self.leading()
        if lead < 0:
            c = -c
        return self * Fraction(c.denominator, c.numerator)

    # -- display -------------------------------------------------------------

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for mono, c in self.sorted_terms():
            factors = []
            if abs(c) != 1 or not mono:
                factors.append(str(abs(c)))
            for s, e in mono:
                factors.append(s.name if e == 1 else f"{s.name}^{e}")
            text = "*".join(factors)
            if not parts:
                parts.append(text if c > 0 else f"-{text}")
            else:
                parts.append(f"+ {text}" if c > 0 else f"- {text}")
        return " ".join(parts)

    def __repr__(self):
        return f"Poly({self})"


ZERO = Poly()
ONE = Poly.const(1)


def poly_reduce(f: Poly, divisors: Sequence[Poly]) -> Poly:
    """Remainder of multivariate division of f by an ordered divisor list."""
    rem = Poly()
    work = f
    divisors = [d for d in divisors if not d.is_zero()]
    leads = [d.leading() for d in divisors]
    while not work.is_zero():
        mono, coeff = work.leading()
        for d, (lm, lc) in zip(divisors, leads):
            if _mono_divides(lm, mono):
                factor = Poly({_mono_div(mono, lm): coeff / lc})
                work = work - factor * d
                break
        else:
            rem = rem + Poly({mono: coeff})
            work = work - Poly({mono: coeff})
    return rem


class RatFunc:
    """A quotient of two Polys kept in a deterministic reduced form.

    Reduction removes the common coefficient content and common monomial
    factor and performs exact division when the denominator divides the
    numerator; the denominator is normalized to have a positive leading
    coefficient of 1 when constant, or primitive otherwise.  Equality is
    decided by cross-multiplication, so it is exact even when two
    representations do not share a canonical form.
    """

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        if isinstance(num, RatFunc) or isinstance(den, RatFunc):
            num = RatFunc._coerce(num)
            den = RatFunc._coerce(ONE if den is None else den)
            num, den = num.num * den.den, num.den * den.num
        else:
            num = Poly._coerce(num)
            den = ONE if den is None else Poly._coerce(den)
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        num, den = self._reduce(num, den)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @staticmethod
    def _coerce(x) -> "RatFunc":
        if isinstance(x, RatFunc):
            return x
        return RatFunc(Poly._coerce(x))

    @staticmethod
    def _reduce(num: Poly, den: Poly):
        if num.is_zero():
            return num, ONE
        if den.is_constant():
            c = den.constant_value()
            return num * Fraction(c.denominator, c.numerator), ONE
        # common monomial factor
        gm = den.monomial_gcd()
        if gm:
            gn = num.monomial_gcd()
            common = tuple(
                (s, min(e, dict(gn).get(s, 0))) for s, e in gm if dict(gn).get(s, 0) > 0
            )
            common = tuple((s, e) for s, e in common if e > 0)
            if common:
                shift = {s: e for s, e in common}
                num = Poly(
                    {
                        tuple(
                            (s, e - shift.get(s, 0)) for s, e in m if e - shift.get(s, 0) > 0
                        ): c
                        for m, c in num.terms.items()
                    }
                )
                den = Poly(
                    {
                        tuple(
                            (s, e - shift.get(s, 0)) for s, e in m if e - shift.get(s, 0) > 0
                        ): c
                        for m, c in den.terms.items()
                    }
                )
                if den.is_constant():
                    c = den.constant_value()
                    return num * Fraction(c.denominator, c.numerator), ONE
        # exact polynomial division
        quot, rem = _poly_divmod(num, den)
        if rem.is_zero():
            return quot, ONE
        # normalize: primitive denominator with positive leading coefficient
        c = den.content()
        _, lead = den.leading()
        if lead < 0:
            c = -c
        inv = Fraction(c.denominator, c.numerator)
        return num * inv, den * inv

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_poly(self) -> bool:
        return self.den == ONE

    def as_poly(self) -> Poly:
        if not self.is_poly():
            raise AlgebraError(f"not a polynomial: {self}")
        return self.num

    def symbols(self) -> set:
        return self.num.symbols() | self.den.symbols()

    def only_roles(self, roles) -> bool:
        return self.num.only_roles(roles) and self.den.only_roles(roles)

    def __add__(self, other):
        try:
            other = RatFunc._coerce(other)
        except TypeError:
            return NotImplemented
        return RatFunc(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        r = RatFunc.__new__(RatFunc)
        object.__setattr__(r, "num", -self.num)
        object.__setattr__(r, "den", self.den)
        return r

    def __sub__(self, other):
        try:
            other = RatFunc._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return RatFunc._coerce(other) - self

    def __mul__(self, other):
        try:
            other = RatFunc._coerce(other)
        except TypeError:
            return NotImplemented
        return RatFunc(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = RatFunc._coerce(other)
        if other.is_zero():
            raise ZeroDivisionError("division by zero rational function")
        return RatFunc(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        return RatFunc._coerce(other) / self

    def __pow__(self, n: int):
        if n < 0:
            return RatFunc(self.den, self.num) ** (-n)
        return RatFunc(self.num**n, self.den**n)

    def __eq__(self, other):
        if isinstance(other, (RatFunc, Poly, int, Fraction)):
            other = RatFunc._coerce(other)
            return (self.num * other.den - other.num * self.den).is_zero()
        return NotImplemented

    def __hash__(self):
        return hash((self.num, self.den))

    def diff(self, x: Symbol) -> "RatFunc":
        return RatFunc(
            self.num.diff(x) * self.den - self.num * self.den.diff(x), self.den * self.den
        )

    def substitute(self, mapping) -> "RatFunc":
        num = self.num.substitute(mapping)
        den = self.den.substitute(mapping)
        num = num if isinstance(num, RatFunc) else RatFunc(num)
        den = den if isinstance(den, RatFunc) else RatFunc(den)
        return num / den

    def evaluate(self, point) -> float:
        d = self.den.evaluate(point)
        if d == 0.0:
            raise ZeroDivisionError("denominator vanishes at evaluation point")
        return self.num.evaluate(point) / d

    def __str__(self):
        if self.is_poly():
            return str(self.num)
        return f"({self.num})/({self.den})"

    def __repr__(self):
        return f"RatFunc({self})"


def _poly_divmod(f: Poly, g: Poly):
    """Single-divisor multivariate division: f = q*g + r with no term of r
    divisible by the leading monomial of g."""
    if g.is_zero():
        raise ZeroDivisionError("polynomial division by zero")
    lm, lc = g.leading()
    quot = Poly()
    rem = Poly()
    work = f
    while not work.is_zero():
        mono, coeff = work.leading()
        if _mono_divides(lm, mono):
            t = Poly({_mono_div(mono, lm): coeff / lc})
            quot = quot + t
            work = work - t * g
        else:
            t = Poly({mono: coeff})
            rem = rem + t
            work = work - t
    return quot, rem


# ---------------------------------------------------------------------------
# module-level operation surface


def diff(f: Poly, x: Symbol) -> Poly:
    return Poly._coerce(f).diff(x)


def evaluate(f, point: Mapping[Symbol, float]) -> float:
    if isinstance(f, RatFunc):
        return f.evaluate(point)
    return Poly._coerce(f).evaluate(point)


Scalar = Union[Poly, RatFunc]


# ---------------------------------------------------------------------------
# affine systems over the rational-function field


@dataclass
class LinSystem:
    """An affine system in declared unknowns with RatFunc coefficients."""

    unknowns: list
    rows: list = field(default_factory=list)  # list of (dict Symbol->RatFunc, RatFunc rhs)

    def append_equation(self, expr: Scalar):
        """Add the equation expr == 0, with expr affine in the unknowns."""
        coeffs, const = split_affine(expr, self.unknowns)
        self.rows.append((coeffs, -const))

    @classmethod
    def from_equations(cls, unknowns, exprs) -> "LinSystem":
        sys = cls(list(unknowns))
        for e in exprs:
            sys.append_equation(e)
        return sys

    def copy(self) -> "LinSystem":
        return LinSystem(list(self.unknowns), [(dict(c), r) for c, r in self.rows])

    def substitute_into_rows(self, solution: Mapping[Symbol, "RatFunc"]) -> list:
        """Residual of each row under a candidate solution (free unknowns symbolic)."""
        out = []
        for coeffs, rhs in self.rows:
            acc = RatFunc(Poly()) - rhs
            for u, c in coeffs.items():
                val = solution.get(u, RatFunc(Poly.var(u)))
                acc = acc + c * val
            out.append(acc)
        return out


def split_affine(expr: Scalar, unknowns: Sequence[Symbol]):
    """Split an expression affine in `unknowns` into (coefficient map, constant)."""
    uset = set(unknowns)
    if isinstance(expr, RatFunc):
        if expr.den.symbols() & uset:
            raise NonAffineError("unknowns appear in a denominator")
        coeffs, const = split_affine(expr.num, unknowns)
        inv = RatFunc(ONE, expr.den)
        return {u: c * inv for u, c in coeffs.items()}, const * inv
    expr = Poly._coerce(expr)
    coeffs: dict = {}
    const_terms: dict = {}
    for mono, c in expr.terms.items():
        hits = [(s, e) for s, e in mono if s in uset]
        if not hits:
            const_terms[mono] = const_terms.get(mono, Fraction(0)) + c
            continue
        if len(hits) > 1 or hits[0][1] > 1:
            raise NonAffineError(f"term not affine in unknowns: {Poly({mono: c})}")
        s = hits[0][0]
        rest = tuple(p for p in mono if p[0] is not s and p[0] != s)
        bucket = coeffs.setdefault(s, {})
        bucket[rest] = bucket.get(rest, Fraction(0)) + c
    return (
        {s: RatFunc(Poly(t)) for s, t in coeffs.items()},
        RatFunc(Poly(const_terms)),
    )


@dataclass
class SolveResult:
    """Outcome of Gaussian elimination over the rational-function field."""

    solution: dict  # solved unknown -> RatFunc (may reference free unknowns)
    free: list
    residuals: list  # denominator-cleared, sign-normalized Polys
    pivot_count: int

    def value(self, u: Symbol) -> "RatFunc":
        return self.solution.get(u, RatFunc(Poly.var(u)))


def _admissible_pivot(c: RatFunc) -> bool:
    # Division is only allowed by nonzero numbers or expressions in declared
    # model constants; coordinate-dependent pivots are a hard failure mode
    # handled by the caller.
    return (not c.is_zero()) and c.only_roles({ROLE_CONSTANT})


def clear_denominators(r: RatFunc) -> Poly:
    """Numerator of r after normalization (exact up to a constant unit)."""
    return r.num


def solve_affine(system: LinSystem) -> SolveResult:
    """Gauss-Jordan elimination with deterministic pivoting.

    Unknowns are processed in declared order; for each, the first row whose
    coefficient is an admissible pivot (nonzero, model constants only) is
    used.  Rows that reduce to 0 = nonzero become residual constraints,
    cleared of denominators and sign-normalized.  A row left with an unknown
    that admits no pivot anywhere raises PivotError.
    """
    rows = [(dict(c), r) for c, r in system.rows]
    used = [False] * len(rows)
    pivot_row_of: dict = {}

    for u in system.unknowns:
        chosen = None
        for idx, (coeffs, _) in enumerate(rows):
            if used[idx]:
                continue
            c = coeffs.get(u)
            if c is not None and _admissible_pivot(c):
                chosen = idx
                break
        if chosen is None:
            continue
        coeffs, rhs = rows[chosen]
        pivot = coeffs.pop(u)
        inv = RatFunc(ONE) / pivot
        coeffs = {s: c * inv for s, c in coeffs.items() if not c.is_zero()}
        rhs = rhs * inv
        rows[chosen] = (coeffs, rhs)
        used[chosen] = True
        pivot_row_of[u] = chosen
        for idx, (c2, r2) in enumerate(rows):
            if idx == chosen:
                continue
            factor = c2.get(u)
            if factor is None or factor.is_zero():
                continue
            del c2[u]
            for s, cv in coeffs.items():
                nv = c2.get(s, RatFunc(ZERO)) - factor * cv
                if nv.is_zero():
                    c2.pop(s, None)
                else:
                    c2[s] = nv
            rows[idx] = (c2, r2 - factor * rhs)

    residuals = []
    for idx, (coeffs, rhs) in enumerate(rows):
        if used[idx]:
            continue
        live = {s: c for s, c in coeffs.items() if not c.is_zero()}
        if live:
            bad = next(iter(live.values()))
            raise PivotError(
                f"pivot degenerate: no admissible pivot for row with coefficient {bad}",
                offending=bad.num,
            )
        if not rhs.is_zero():
            residuals.append(clear_denominators(rhs).normalized())

    solution = {}
    for u, idx in pivot_row_of.items():
        coeffs, rhs = rows[idx]
        expr = rhs
        for s, c in coeffs.items():
            expr = expr - c * RatFunc(Poly.var(s))
        solution[u] = expr
    free = [u for u in system.unknowns if u not in solution]
    return SolveResult(solution=solution, free=free, residuals=residuals, pivot_count=len(solution))


# ---------------------------------------------------------------------------
# reduction modulo a constraint ideal


class ConstraintReducer:
    """Reduction modulo a constraint list, Groebner-style but specialized.

    Each constraint that is linear in a momentum or velocity symbol with a
    constants-only coefficient is turned into a substitution rule for that
    symbol (the highest-registered candidate).  Rules are kept inter-reduced
    so a single substitution pass is complete.  Constraints that cannot be
    solved this way participate through plain multivariate division.
    """

    SOLVABLE_ROLES = (ROLE_MOMENTUM, ROLE_VELOCITY)

    def __init__(self, constraints: Iterable[Poly] = ()):
        self.rules: dict = {}
        self.divisors: list = []
        for c in constraints:
            self.add(c)

    def add(self, c: Poly) -> bool:
        """Insert one constraint; returns False if it reduces to zero."""
        r = self.reduce(c)
        if r.is_zero():
            return False
        p = r.num.normalized()
        target = self._solvable_symbol(p)
        if target is None:
            self.divisors.append(p)
            return True
        parts = p.as_univariate(target)
        a = parts.get(1, ZERO)
        b = parts.get(0, ZERO)
        rhs = RatFunc(-b, a)
        sub = {target: rhs}
        self.rules = {s: v.substitute(sub) for s, v in self.rules.items()}
        self.divisors = [self._resubstitute(d, sub) for d in self.divisors]
        self.rules[target] = rhs
        return True

    @staticmethod
    def _resubstitute(d: Poly, sub) -> Poly:
        r = d.substitute(sub)
        r = r if isinstance(r, RatFunc) else RatFunc(r)
        return r.num.normalized() if not r.is_zero() else ZERO

    def _solvable_symbol(self, p: Poly):
        best = None
        for s in p.symbols():
            if s.role not in self.SOLVABLE_ROLES:
                continue
            if p.degree_in(s) != 1:
                continue
            coeff = p.as_univariate(s).get(1, ZERO)
            if not coeff.only_roles({ROLE_CONSTANT}):
                continue
            if best is None or s.index > best.index:
                best = s
        return best

    def reduce(self, f: Scalar) -> RatFunc:
        r = f if isinstance(f, RatFunc) else RatFunc(Poly._coerce(f))
        if self.rules:
            r = r.substitute(self.rules)
        if self.divisors and not r.is_zero():
            rem = poly_reduce(r.num, self.divisors)
            r = RatFunc(rem, r.den)
        return r

    def is_zero(self, f: Scalar) -> bool:
        return self.reduce(f).is_zero()


def is_zero_mod(f: Scalar, constraints) -> bool:
    """True iff f reduces to zero modulo the given constraints.

    `constraints` may be any iterable of Polys or an object exposing a
    `polys()` iterable (such as a ConstraintSet).
    """
    if hasattr(constraints, "polys"):
        constraints = constraints.polys()
    return ConstraintReducer(constraints).is_zero(f)
