"""Command-line interface.

Subcommands: derive (symbolic derivation report), classify (regularity),
constraints (constraint algorithm report), simulate (CSV output), verify
(numeric acceptance checks against the oracles).  Models come from the
built-in library or from an inline polynomial Lagrangian in a config file.

Exit codes: 0 success, 1 usage/parse error, 2 verification failure,
3 constraint algorithm failed to stabilize or left no dynamics.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
from fractions import Fraction
from typing import Optional

import numpy as np

from .algebra import Poly, RatFunc, Symbol, ROLE_CONSTANT
from .bundles import pontryagin_chart
from .lagrangian import LagrangianSystem, classify, el_residual, energy, legendre
from .models import MODEL_BUILDERS, ModelBundle, build_model
from .unified import (
    NoDynamicsError,
    NonStabilizationError,
    constraint_algorithm,
    project_hamiltonian,
    sr_hamiltonian,
)
from . import pde

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2
EXIT_NO_DYNAMICS = 3

SIMULATOR_ALIASES = {
    "damped_string": "damped_wave",
    "damped_wave": "damped_wave",
    "damped_klein_gordon": "telegrapher",
    "telegrapher": "telegrapher",
    "dissipative_maxwell": "maxwell_1d",
    "maxwell_1d": "maxwell_1d",
}


class CLIError(Exception):
    pass


class ParseError(CLIError):
    def __init__(self, message, line, col):
        super().__init__(f"parse error at line {line}, column {col}: {message}")
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# inline Lagrangian grammar: signed sums of rational-coefficient monomials,
# explicit '*', '^' for integer powers


def _tokenize(text: str):
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        if ch in "+-*^/":
            yield (ch, ch, line, col)
            i += 1
            col += 1
            continue
        if ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            yield ("int", text[i:j], line, col)
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            yield ("name", text[i:j], line, col)
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    yield ("end", "", line, col)


def parse_poly(text: str, symbols: dict) -> Poly:
    """Parse the inline polynomial grammar over a fixed symbol table."""
    tokens = list(_tokenize(text))
    pos = 0

    def peek():
        return tokens[pos]

    def advance():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        return tok

    def parse_factor() -> Poly:
        kind, value, line, col = advance()
        if kind == "int":
            num = int(value)
            if peek()[0] == "/":
                advance()
                k2, v2, l2, c2 = advance()
                if k2 != "int":
                    raise ParseError("expected an integer denominator", l2, c2)
                den = int(v2)
                if den == 0:
                    raise ParseError("zero denominator", l2, c2)
                return Poly.const(Fraction(num, den))
            return Poly.const(num)
        if kind == "name":
            if value not in symbols:
                raise ParseError(f"unknown symbol {value!r}", line, col)
            exp = 1
            if peek()[0] == "^":
                advance()
                k2, v2, l2, c2 = advance()
                if k2 != "int":
                    raise ParseError("expected an integer exponent", l2, c2)
                exp = int(v2)
            return Poly.var(symbols[value], exp)
        raise ParseError(f"expected a number or symbol, got {value!r}", line, col)

    def parse_term() -> Poly:
        acc = parse_factor()
        while peek()[0] == "*":
            advance()
            acc = acc * parse_factor()
        return acc

    total = Poly()
    sign = 1
    kind, value, line, col = peek()
    if kind in ("+", "-"):
        advance()
        sign = -1 if kind == "-" else 1
    while True:
        total = total + Poly.const(sign) * parse_term()
        kind, value, line, col = peek()
        if kind == "end":
            return total
        if kind == "+":
            sign = 1
        elif kind == "-":
            sign = -1
        else:
            raise ParseError(f"expected '+' or '-', got {value!r}", line, col)
        advance()


def inline_model(n: int, k: int, constant_names, lagrangian_text: str) -> ModelBundle:
    """Build a model from an inline Lagrangian declaration.

    Coordinates are named q{i}, v{i}_{a}, s_{a} (momenta p{i}_{a} are
    created for the unified formalism but may not appear in the Lagrangian).
    """
    from .lagrangian import jet_context

    chart = pontryagin_chart(
        n,
        k,
        base_names=[f"q{i + 1}" for i in range(n)],
        velocity_names=[[f"v{i + 1}_{a + 1}" for a in range(k)] for i in range(n)],
        momentum_names=[[f"p{i + 1}_{a + 1}" for a in range(k)] for i in range(n)],
        name="inline",
    )
    symbols = {sym.name: sym for sym in chart.velocity_subchart().symbols()}
    constants = {}
    for name in constant_names:
        if name in symbols:
            raise CLIError(f"constant name {name!r} collides with a coordinate")
        sym = Symbol(name, ROLE_CONSTANT)
        symbols[name] = sym
        constants[name] = Poly.var(sym)
    L = parse_poly(lagrangian_text, symbols)
    sys_ = LagrangianSystem(chart, L)
    return ModelBundle(
        name="inline",
        system=sys_,
        constants=constants,
        expected_constraints=(),
        expected_residuals=(),
        expected_regular=True,
        jets=jet_context(sys_),
        extras={"symbols": symbols},
    )


# ---------------------------------------------------------------------------
# model loading


def load_bundle(args) -> ModelBundle:
    config = _load_config(args.config) if args.config else None
    name = args.model
    if config is not None and config.has_section("model"):
        sec = config["model"]
        if name is None:
            name = sec.get("name", None)
        if name is None:
            n = sec.getint("n")
            k = sec.getint("k")
            constants = [c.strip() for c in sec.get("constants", "").split(",") if c.strip()]
            text = sec.get("lagrangian", None)
            if text is None:
                raise CLIError("inline model needs a 'lagrangian' entry")
            return inline_model(n, k, constants, text)
    if name is None:
        raise CLIError("no model given: use --model or a config with a [model] section")
    if name in ("maxwell_1d",):
        name = "dissipative_maxwell"
    if name in ("telegrapher",):
        name = "damped_klein_gordon"
    if name not in MODEL_BUILDERS:
        known = ", ".join(sorted(MODEL_BUILDERS))
        raise CLIError(f"unknown model {name!r}; known models: {known}")
    return build_model(name)


def _load_config(path: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    read = cp.read(path)
    if not read:
        raise CLIError(f"config file not found: {path}")
    return cp


def _numeric_params(args, config) -> dict:
    out = {}
    if config is not None and config.has_section("simulate"):
        for key, val in config["simulate"].items():
            out[key] = val
    for key in ("N", "dt", "T", "gamma", "c2", "m2", "gamma0", "mu0", "boundary", "stride"):
        val = getattr(args, key, None)
        if val is not None:
            out[key] = val
    return out


# ---------------------------------------------------------------------------
# reports


def _print_legendre(bundle: ModelBundle, out):
    fl = legendre(bundle.system)
    space = bundle.space
    for i in range(space.n):
        for a in range(space.k):
            p = space.p[i][a]
            out(f"  {p.name} = {fl.assignment[p]}")


def cmd_derive(args) -> int:
    bundle = load_bundle(args)
    sys_ = bundle.system
    lines = []
    out = lines.append
    out(f"model: {bundle.name}  (n={sys_.n}, k={sys_.k})")
    out(f"L = {sys_.L}")
    out(f"energy: E = {energy(sys_)}")
    out("Legendre map:")
    _print_legendre(bundle, out)
    out(f"unified Hamiltonian: H = {sr_hamiltonian(sys_)}")
    from .lagrangian import cartan_contact_forms

    _, etas = cartan_contact_forms(sys_)
    out("contact forms (coefficients of ds^a and dq^i):")
    labels = sys_.space.direction_labels
    for a, eta in enumerate(etas):
        coeffs = ", ".join(
            f"d{x.name}: {c}" for x, c in sorted(eta.coeff.items(), key=lambda kv: kv[0].index)
        )
        out(f"  eta^{labels[a]} = [{coeffs}]")
    res = el_residual(sys_)
    out("field-equation residuals (= 0):")
    for i, r in enumerate(res.fields):
        out(f"  [{sys_.space.q[i].name}] {r}")
    out(f"dissipation bookkeeping (= 0): {res.s_equation}")
    print("\n".join(lines))
    return EXIT_OK


def cmd_classify(args) -> int:
    bundle = load_bundle(args)
    reg = classify(bundle.system)
    print(f"model: {bundle.name}")
    print(f"regularity: {reg}")
    return EXIT_OK


def cmd_constraints(args) -> int:
    bundle = load_bundle(args)
    try:
        fam = constraint_algorithm(bundle.system)
    except (NonStabilizationError, NoDynamicsError) as exc:
        print(f"constraint algorithm failed: {exc}")
        return EXIT_NO_DYNAMICS
    print(f"model: {bundle.name}  (chart dimension {bundle.space.dim})")
    for g in range(1, fam.constraints.generations() + 1):
        cs = fam.constraints.by_generation(g)
        print(f"generation {g}: {len(cs)} constraints")
        for c in cs:
            print(f"  {c} = 0")
    print(f"stabilized after generation {fam.generations}")
    print(f"free parameters: {len(fam.free)}")
    print("canonical solution representative (free parameters set to zero):")
    field = fam.canonical_field()
    labels = bundle.space.direction_labels
    for a in range(bundle.space.k):
        parts = [
            f"({field.get(a, x)}) d/d{x.name}"
            for x in bundle.space.symbols()
            if not field.get(a, x).is_zero()
        ]
        print(f"  Z_{labels[a]} = " + (" + ".join(parts) if parts else "0"))
    return EXIT_OK


def _simulation_setup(bundle_name: str, params: dict):
    sim = SIMULATOR_ALIASES.get(bundle_name)
    if sim is None:
        raise CLIError(f"no simulator for model {bundle_name!r}")
    N = int(params.get("N", 400))
    boundary = params.get("boundary", "periodic" if sim == "maxwell_1d" else "fixed-zero")
    grid = pde.Grid1D(N, boundary=boundary)
    dt = float(params["dt"]) if "dt" in params else 0.5 * grid.dx
    T = float(params.get("T", 5.0))
    stride = int(params.get("stride", max(1, int(round(0.01 / dt)))))
    return sim, grid, dt, T, stride


def _run_simulation(bundle_name: str, params: dict) -> pde.SimReport:
    sim, grid, dt, T, stride = _simulation_setup(bundle_name, params)
    gamma = float(params.get("gamma", 0.1))
    if sim == "damped_wave":
        return pde.simulate_damped_wave(
            {"c2": float(params.get("c2", 1.0)), "gamma": gamma}, grid, dt, T,
            pde.standing_mode(grid), snap_stride=stride,
        )
    if sim == "telegrapher":
        return pde.simulate_telegrapher(
            {"c2": float(params.get("c2", 1.0)), "gamma": gamma,
             "m2": float(params.get("m2", 1.0))},
            grid, dt, T, pde.standing_mode(grid), snap_stride=stride,
        )
    return pde.simulate_maxwell_1d(
        {"c": math.sqrt(float(params.get("c2", 1.0))),
         "gamma0": float(params.get("gamma0", 0.1)),
         "mu0": float(params.get("mu0", 1.0))},
        grid, dt, T, snap_stride=stride,
    )


def cmd_simulate(args) -> int:
    config = _load_config(args.config) if args.config else None
    params = _numeric_params(args, config)
    bundle_name = args.model or "damped_string"
    try:
        report = _run_simulation(bundle_name, params)
    except pde.CFLError as exc:
        print(f"refused: {exc}")
        return EXIT_USAGE
    out_path = args.out or f"{bundle_name}.csv"
    pde.write_csv(report, out_path)
    rate = pde.fit_decay_rate(report)
    print(f"wrote {out_path}: {len(report.times)} snapshots, "
          f"final energy {report.energy[-1]:.6g}, fitted decay rate {rate:.6g}")
    return EXIT_OK


def _check(name: str, value: float, bound: float, results: list, kind: str = "<="):
    ok = value <= bound if kind == "<=" else value >= bound
    results.append(ok)
    status = "PASS" if ok else "FAIL"
    print(f"  [{status}] {name}: {value:.4g} {kind} {bound:.4g}")


def _verify_damped_string(params: dict, results: list):
    print("damped_string:")
    N = int(params.get("N", 400))
    gamma = float(params.get("gamma", 0.1))
    c2 = float(params.get("c2", 1.0))
    T = float(params.get("T", 5.0))
    grid = pde.Grid1D(N)
    dt = 0.5 * grid.dx
    rep = pde.simulate_damped_wave({"c2": c2, "gamma": gamma}, grid, dt, T,
                                   pde.standing_mode(grid), snap_stride=4)
    _check("oracle max error", pde.oracle_error(rep), 1e-3, results)
    if gamma > 0:
        rate = pde.fit_decay_rate(rep)
        _check("decay-rate relative error", abs(rate - 0.5 * gamma) / (0.5 * gamma), 0.01, results)
    fine = pde.Grid1D(2 * N)
    rep2 = pde.simulate_damped_wave({"c2": c2, "gamma": gamma}, fine, 0.5 * fine.dx, T,
                                    pde.standing_mode(fine), snap_stride=8)
    order = pde.estimate_order(pde.oracle_error(rep), pde.oracle_error(rep2))
    _check("convergence order", order, 1.9, results, kind=">=")
    _check("action audit relative error", pde.action_audit(rep), 1e-10, results)
    rep0 = pde.simulate_damped_wave({"c2": c2, "gamma": 0.0}, grid, dt, 10.0,
                                    pde.standing_mode(grid), snap_stride=16)
    _check("gamma=0 energy drift (T=10)", pde.energy_drift(rep0), 1e-6, results)


def _verify_telegrapher(params: dict, results: list):
    print("telegrapher:")
    N = int(params.get("N", 400))
    gamma = float(params.get("gamma", 0.1))
    m2 = float(params.get("m2", 1.0))
    grid = pde.Grid1D(N)
    dt = 0.5 * grid.dx
    rep = pde.simulate_telegrapher({"c2": 1.0, "gamma": gamma, "m2": m2}, grid, dt, 5.0,
                                   pde.standing_mode(grid), snap_stride=4)
    k = pde.mode_wavenumber(grid)
    expected = math.sqrt(k * k + m2 - 0.25 * gamma * gamma)
    w = pde.measure_frequency(rep.times, pde.mode_coefficients(rep, "u")[0])
    _check("mode-frequency relative error", abs(w - expected) / expected, 0.01, results)
    wave = pde.simulate_damped_wave({"c2": 1.0, "gamma": gamma}, grid, dt, 1.0,
                                    pde.standing_mode(grid))
    tele = pde.simulate_telegrapher({"c2": 1.0, "gamma": gamma, "m2": 0.0}, grid, dt, 1.0,
                                    pde.standing_mode(grid))
    same = float(np.max(np.abs(wave.fields["u"] - tele.fields["u"])))
    _check("m2=0 matches damped wave (bitwise)", same, 0.0, results)


def _verify_maxwell(params: dict, results: list):
    print("maxwell_1d:")
    N = int(params.get("N", 400))
    gamma0 = float(params.get("gamma0", 0.2))
    c = math.sqrt(float(params.get("c2", 1.0)))
    grid = pde.Grid1D(N, boundary="periodic")
    dt = 0.5 * grid.dx
    rep = pde.simulate_maxwell_1d({"c": c, "gamma0": gamma0}, grid, dt, 5.0, snap_stride=4)
    rate = pde.fit_decay_rate(rep)
    target = 0.5 * c * gamma0
    _check("decay-rate relative error", abs(rate - target) / target, 0.01, results)
    rep0 = pde.simulate_maxwell_1d({"c": c, "gamma0": 0.0}, grid, dt, 2.0, snap_stride=8)
    x = grid.nodes()
    k = pde.mode_wavenumber(grid)
    exact = np.sin(k * (x - c * 2.0))
    err = float(np.max(np.abs(rep0.fields["E"][-1] - exact)))
    _check("undamped plane-wave transport error", err, 1e-3, results)
    _check("undamped energy drift", pde.energy_drift(rep0), 1e-10, results)


def cmd_verify(args) -> int:
    config = _load_config(args.config) if args.config else None
    params = _numeric_params(args, config)
    which = SIMULATOR_ALIASES.get(args.model) if args.model else None
    if args.model and which is None:
        raise CLIError(f"no verification suite for model {args.model!r}")
    results: list = []
    if which in (None, "damped_wave"):
        _verify_damped_string(params, results)
    if which in (None, "telegrapher"):
        _verify_telegrapher(params, results)
    if which in (None, "maxwell_1d"):
        _verify_maxwell(params, results)
    passed = sum(results)
    print(f"{passed}/{len(results)} checks passed")
    return EXIT_OK if passed == len(results) else EXIT_VERIFY


# ---------------------------------------------------------------------------
# argument plumbing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CLIError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="kcontact", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("model", nargs="?", default=None,
                       help="built-in model name (or use --model/--config)")
        p.add_argument("--model", dest="model_flag", default=None)
        p.add_argument("--config", default=None, help="INI config file")
        p.add_argument("--out", default=None)
        p.add_argument("--N", type=int, default=None)
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--T", type=float, default=None)
        p.add_argument("--stride", type=int, default=None)
        p.add_argument("--boundary", default=None, choices=["fixed-zero", "periodic"])
        p.add_argument("--gamma", type=float, default=None)
        p.add_argument("--c2", type=float, default=None)
        p.add_argument("--m2", type=float, default=None)
        p.add_argument("--gamma0", type=float, default=None)
        p.add_argument("--mu0", type=float, default=None)

    for name, fn in (
        ("derive", cmd_derive),
        ("classify", cmd_classify),
        ("constraints", cmd_constraints),
        ("simulate", cmd_simulate),
        ("verify", cmd_verify),
    ):
        p = sub.add_parser(name)
        common(p)
        p.set_defaults(func=fn)
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.model_flag is not None:
            args.model = args.model_flag
        return args.func(args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NonStabilizationError, NoDynamicsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_DYNAMICS


if __name__ == "__main__":
    sys.exit(main())
