"""Command-line surface: reports, exit codes, config handling, and the
round trip between printed polynomials and the inline grammar."""

import pytest

from kcontact.algebra import Poly, ROLE_CONSTANT, Symbol
from kcontact.cli import (
    EXIT_NO_DYNAMICS,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VERIFY,
    ParseError,
    inline_model,
    main,
    parse_poly,
)
from kcontact.lagrangian import el_residual, energy
from kcontact.unified import sr_hamiltonian


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestParser:
    def setup_method(self):
        self.syms = {
            "x": Symbol("x", ROLE_CONSTANT),
            "y": Symbol("y", ROLE_CONSTANT),
        }

    def test_signed_monomial_sum(self):
        x, y = self.syms["x"], self.syms["y"]
        p = parse_poly("-3/2*x^2*y + y - 4", self.syms)
        from fractions import Fraction

        expected = Poly.const(Fraction(-3, 2)) * Poly.var(x, 2) * Poly.var(y) + Poly.var(
            y
        ) - Poly.const(4)
        assert p == expected

    def test_leading_plus_and_bare_number(self):
        assert parse_poly("+5", self.syms) == Poly.const(5)

    def test_unknown_symbol_has_position(self):
        with pytest.raises(ParseError) as err:
            parse_poly("x + zz", self.syms)
        assert err.value.line == 1 and err.value.col == 5

    def test_missing_operator_reported(self):
        with pytest.raises(ParseError, match="expected"):
            parse_poly("x y", self.syms)

    def test_zero_denominator_rejected(self):
        with pytest.raises(ParseError, match="zero denominator"):
            parse_poly("1/0*x", self.syms)

    def test_printed_polynomials_reparse(self, string_bundle):
        # derive output round-trips through the grammar
        sys_ = string_bundle.system
        table = {s.name: s for s in sys_.space.symbols()}
        for name, poly in string_bundle.constants.items():
            for s in poly.symbols():
                table[s.name] = s
        for jet in [string_bundle.jets.second_jet(0, a, b) for a in range(2) for b in range(a, 2)]:
            table[jet.name] = jet
        for a in range(2):
            for b in range(2):
                table[string_bundle.jets.sj[a][b].name] = string_bundle.jets.sj[a][b]
        for poly in (
            sys_.L,
            energy(sys_),
            sr_hamiltonian(sys_),
            el_residual(sys_).fields[0],
            el_residual(sys_).s_equation,
        ):
            assert parse_poly(str(poly), table) == poly


class TestInlineModel:
    def test_harmonic_contact_model(self):
        b = inline_model(1, 1, ["w2"], "1/2*v1_1^2 - 1/2*w2*q1^2")
        res = el_residual(b.system)
        q = Poly.var(b.space.q[0])
        w2 = b.constants["w2"]
        acc = Poly.var(b.jets.second_jet(0, 0, 0))
        assert res.fields[0] == acc + w2 * q

    def test_momentum_symbols_rejected_in_lagrangian(self):
        with pytest.raises(ParseError, match="unknown symbol"):
            inline_model(1, 1, [], "p1_1*v1_1")

    def test_constant_collision_rejected(self):
        with pytest.raises(Exception, match="collides"):
            inline_model(1, 1, ["q1"], "q1*v1_1")


class TestCommands:
    def test_derive_report_contains_legendre_and_residual(self, capsys):
        code, out, _ = run(capsys, "derive", "damped_string")
        assert code == EXIT_OK
        assert "p_t = u_t*rho" in out
        assert "u_t*rho*gamma + rho*u_tt - tau*u_xx" in out
        assert "unified Hamiltonian" in out

    def test_derive_zero_inline_lagrangian(self, capsys, tmp_path):
        cfg = tmp_path / "zero.ini"
        cfg.write_text("[model]\nn = 1\nk = 2\nconstants =\nlagrangian = 0\n")
        code, out, _ = run(capsys, "derive", "--config", str(cfg))
        assert code == EXIT_OK
        assert "L = 0" in out
        assert "energy: E = 0" in out

    def test_derive_maxwell_lists_field_equations(self, capsys):
        code, out, _ = run(capsys, "derive", "dissipative_maxwell")
        assert code == EXIT_OK
        assert "[A_0]" in out and "[A_3]" in out
        assert "mu0_inv" in out

    def test_classify(self, capsys):
        code, out, _ = run(capsys, "classify", "dissipative_maxwell")
        assert code == EXIT_OK
        assert "Singular (rank 6)" in out

    def test_constraints_report(self, capsys):
        code, out, _ = run(capsys, "constraints", "damped_string")
        assert code == EXIT_OK
        assert "generation 1: 2 constraints" in out
        assert "stabilized after generation 1" in out
        assert "free parameters: 6" in out

    def test_constraints_scalar_field(self, capsys):
        code, out, _ = run(capsys, "constraints", "damped_klein_gordon")
        assert code == EXIT_OK
        assert "generation 1: 4 constraints" in out
        assert "stabilized after generation 1" in out

    def test_constraints_inline_regular_without_dissipation(self, capsys, tmp_path):
        cfg = tmp_path / "free.ini"
        cfg.write_text("[model]\nn = 1\nk = 1\nconstants =\nlagrangian = 1/2*v1_1^2\n")
        code, out, _ = run(capsys, "constraints", "--config", str(cfg))
        assert code == EXIT_OK
        assert "generation 1: 1 constraints" in out

    def test_unknown_model_is_usage_error(self, capsys):
        code, _, err = run(capsys, "derive", "not_a_model")
        assert code == EXIT_USAGE
        assert "unknown model" in err

    def test_simulate_writes_csv(self, capsys, tmp_path):
        out_path = tmp_path / "run.csv"
        code, out, _ = run(
            capsys, "simulate", "damped_string", "--N", "64", "--T", "1",
            "--gamma", "0.1", "--out", str(out_path),
        )
        assert code == EXIT_OK
        assert out_path.exists()
        header = out_path.read_text().splitlines()[0]
        assert header.startswith("t,energy,action,residual_norm")

    def test_simulate_reproducible(self, capsys, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        for path in (a, b):
            code, _, _ = run(
                capsys, "simulate", "damped_string", "--N", "64", "--T", "1",
                "--out", str(path),
            )
            assert code == EXIT_OK
        assert a.read_bytes() == b.read_bytes()

    def test_simulate_cfl_refusal(self, capsys, tmp_path):
        code, out, _ = run(
            capsys, "simulate", "damped_string", "--N", "64", "--T", "1",
            "--dt", "0.5", "--out", str(tmp_path / "x.csv"),
        )
        assert code == EXIT_USAGE
        assert "suggested dt" in out

    def test_verify_single_model(self, capsys):
        code, out, _ = run(capsys, "verify", "maxwell_1d", "--N", "128", "--gamma0", "0.2")
        assert code == EXIT_OK
        assert "[PASS]" in out
        assert "FAIL" not in out

    def test_verify_telegrapher(self, capsys):
        code, out, _ = run(capsys, "verify", "telegrapher", "--N", "128")
        assert code == EXIT_OK
        assert "checks passed" in out

    def test_config_file_supplies_simulation_section(self, capsys, tmp_path):
        cfg = tmp_path / "sim.ini"
        cfg.write_text("[simulate]\nN = 64\nT = 1\ngamma = 0.1\n")
        out_path = tmp_path / "cfg.csv"
        code, _, _ = run(
            capsys, "simulate", "damped_string", "--config", str(cfg),
            "--out", str(out_path),
        )
        assert code == EXIT_OK
        assert out_path.exists()

    def test_flag_overrides_config(self, capsys, tmp_path):
        cfg = tmp_path / "sim.ini"
        cfg.write_text("[simulate]\nN = 64\nT = 1\n")
        o1 = tmp_path / "one.csv"
        o2 = tmp_path / "two.csv"
        run(capsys, "simulate", "damped_string", "--config", str(cfg), "--out", str(o1))
        run(capsys, "simulate", "damped_string", "--config", str(cfg), "--N", "128",
            "--out", str(o2))
        assert len(o1.read_text().splitlines()[0]) != len(o2.read_text().splitlines()[0])

    def test_missing_config_is_usage_error(self, capsys):
        code, _, err = run(capsys, "derive", "--config", "/nonexistent.ini")
        assert code == EXIT_USAGE

    def test_parse_error_reports_position(self, capsys, tmp_path):
        cfg = tmp_path / "bad.ini"
        cfg.write_text("[model]\nn = 1\nk = 1\nconstants = a\nlagrangian = a*&v1_1\n")
        code, _, err = run(capsys, "derive", "--config", str(cfg))
        assert code == EXIT_USAGE
        assert "line" in err and "column" in err
