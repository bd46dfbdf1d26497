"""Numeric harness: oracles, energy and action bookkeeping, decay and
frequency measurements, residual evaluation, and serialization."""

import math

import numpy as np
import pytest

from kcontact import pde
from kcontact.algebra import Poly
from kcontact.lagrangian import el_residual
from kcontact.pde import (
    CFLError,
    Grid1D,
    MaxwellInit,
    action_audit,
    dissipation_defect,
    energy_drift,
    estimate_order,
    fd_arrays,
    fit_decay_rate,
    measure_frequency,
    mode_coefficients,
    mode_wavenumber,
    oracle_damped_mode,
    oracle_error,
    plane_wave,
    residual_check,
    simulate_damped_wave,
    simulate_maxwell_1d,
    simulate_telegrapher,
    standing_mode,
    wave_residual_bindings,
    write_csv,
)


def _string_run(N=200, gamma=0.1, T=2.0, stride=1, c2=1.0):
    grid = Grid1D(N)
    dt = 0.5 * grid.dx
    return simulate_damped_wave(
        {"c2": c2, "gamma": gamma}, grid, dt, T, standing_mode(grid), snap_stride=stride
    )


class TestGrid:
    def test_too_small_rejected(self):
        with pytest.raises(ValueError):
            Grid1D(4)

    def test_bad_boundary_rejected(self):
        with pytest.raises(ValueError):
            Grid1D(16, boundary="absorbing")

    def test_node_layouts(self):
        assert Grid1D(16).nodes().size == 17
        assert Grid1D(16, boundary="periodic").nodes().size == 16


class TestDampedWave:
    def test_cfl_refusal_suggests_dt(self):
        grid = Grid1D(100)
        with pytest.raises(CFLError) as err:
            simulate_damped_wave({"c2": 4.0, "gamma": 0.0}, grid, grid.dx, 1.0)
        assert err.value.suggested_dt == pytest.approx(grid.dx / 2.0)

    def test_undamped_energy_conserved(self):
        rep = _string_run(N=128, gamma=0.0, T=3.0, stride=4)
        assert energy_drift(rep) < 1e-10

    def test_oracle_error_small(self):
        rep = _string_run(N=200, gamma=0.1, T=2.0, stride=4)
        assert oracle_error(rep) < 2e-4

    def test_envelope_decay_rate(self):
        rep = _string_run(N=200, gamma=0.1, T=4.0, stride=4)
        rate = fit_decay_rate(rep)
        assert abs(rate - 0.05) / 0.05 < 0.01

    def test_dissipation_identity_second_order(self):
        d_coarse = dissipation_defect(_string_run(N=100))
        d_fine = dissipation_defect(_string_run(N=200))
        assert d_coarse / d_fine > 3.0

    def test_staggered_identity_is_discretely_exact(self):
        rep = _string_run(N=100)
        assert dissipation_defect(rep, use="staggered") < 1e-10

    def test_action_audit_is_exact_resummation(self):
        rep = _string_run(N=100, T=1.0)
        assert action_audit(rep) <= 1e-10

    def test_action_accumulator_tracks_lagrangian(self):
        rep = _string_run(N=100, gamma=0.1, T=2.0)
        assert abs(rep.action[-1]) > 1e-4  # damped run has nonzero net action

    def test_static_zero_field_accumulates_nothing(self):
        grid = Grid1D(64)
        rep = simulate_damped_wave(
            {"c2": 1.0, "gamma": 0.1}, grid, 0.5 * grid.dx, 0.5,
            pde.WaveInit(u0=None, v0=None),
        )
        assert np.all(rep.st == 0.0)
        assert np.all(rep.action == 0.0)

    def test_determinism_bit_identical(self):
        a = _string_run(N=100, T=1.0)
        b = _string_run(N=100, T=1.0)
        assert np.array_equal(a.fields["u"], b.fields["u"])
        assert np.array_equal(a.energy, b.energy)
        assert np.array_equal(a.action, b.action)


class TestTelegrapher:
    def test_massless_limit_is_bitwise_damped_wave(self):
        grid = Grid1D(100)
        dt = 0.5 * grid.dx
        a = simulate_damped_wave({"c2": 1.0, "gamma": 0.2}, grid, dt, 1.0, standing_mode(grid))
        b = simulate_telegrapher(
            {"c2": 1.0, "gamma": 0.2, "m2": 0.0}, grid, dt, 1.0, standing_mode(grid)
        )
        assert np.array_equal(a.fields["u"], b.fields["u"])
        assert np.array_equal(a.energy, b.energy)

    def test_klein_gordon_frequency(self):
        grid = Grid1D(256)
        rep = simulate_telegrapher(
            {"c2": 1.0, "gamma": 0.0, "m2": 1.0}, grid, 0.5 * grid.dx, 5.0,
            standing_mode(grid), snap_stride=4,
        )
        k = mode_wavenumber(grid)
        expected = math.sqrt(k * k + 1.0)
        w = measure_frequency(rep.times, mode_coefficients(rep, "u")[0])
        assert abs(w - expected) / expected < 0.01
        assert energy_drift(rep) < 1e-10

    def test_convergence_order_against_oracle(self):
        def err(N):
            grid = Grid1D(N)
            rep = simulate_telegrapher(
                {"c2": 1.0, "gamma": 0.1, "m2": 1.0}, grid, 0.5 * grid.dx, 2.0,
                standing_mode(grid), snap_stride=4,
            )
            return oracle_error(rep)

        assert estimate_order(err(100), err(200)) >= 1.9

    def test_transmission_line_parameterization(self):
        # LC u_tt + (LG + RC) u_t + RG u = u_xx maps onto the kernel with
        # c2 = 1/LC, gamma = (LG + RC)/LC, m2 = RG/LC
        L_, C_, R_, G_ = 1.0, 1.0, 0.3, 0.2
        gamma = (L_ * G_ + R_ * C_) / (L_ * C_)
        m2 = R_ * G_ / (L_ * C_)
        grid = Grid1D(200)
        rep = simulate_telegrapher(
            {"c2": 1.0 / (L_ * C_), "gamma": gamma, "m2": m2}, grid, 0.5 * grid.dx, 3.0,
            standing_mode(grid), snap_stride=4,
        )
        k = mode_wavenumber(grid)
        expected = math.sqrt(k * k / (L_ * C_) + m2 - 0.25 * gamma * gamma)
        w = measure_frequency(rep.times, mode_coefficients(rep, "u")[0])
        assert abs(w - expected) / expected < 0.01


class TestMaxwell1D:
    def test_undamped_wave_translates(self):
        grid = Grid1D(200, boundary="periodic")
        dt = 0.5 * grid.dx
        rep = simulate_maxwell_1d({"c": 1.0, "gamma0": 0.0}, grid, dt, 2.0, snap_stride=8)
        x = grid.nodes()
        k = mode_wavenumber(grid)
        exact = np.sin(k * (x - 2.0))
        assert np.max(np.abs(rep.fields["E"][-1] - exact)) < 5e-4

    def test_damped_mode_decay_rate(self):
        grid = Grid1D(200, boundary="periodic")
        rep = simulate_maxwell_1d(
            {"c": 1.0, "gamma0": 0.2}, grid, 0.5 * grid.dx, 4.0, snap_stride=4
        )
        rate = fit_decay_rate(rep)
        assert abs(rate - 0.1) / 0.1 < 0.01

    def test_undamped_energy_conserved(self):
        grid = Grid1D(128, boundary="periodic")
        rep = simulate_maxwell_1d({"c": 1.0, "gamma0": 0.0}, grid, 0.5 * grid.dx, 2.0)
        assert energy_drift(rep) < 1e-10

    def test_transport_convergence_order(self):
        def err(N):
            grid = Grid1D(N, boundary="periodic")
            rep = simulate_maxwell_1d(
                {"c": 1.0, "gamma0": 0.0}, grid, 0.5 * grid.dx, 2.0, snap_stride=8
            )
            x = grid.nodes()
            k = mode_wavenumber(grid)
            return float(np.max(np.abs(rep.fields["E"][-1] - np.sin(k * (x - 2.0)))))

        assert estimate_order(err(100), err(200)) >= 1.9

    def test_magnetic_field_is_transverse_scalar(self):
        # the 1+1 reduction carries B as the single transverse component
        # B_z(x), whose divergence has no surviving term
        grid = Grid1D(64, boundary="periodic")
        rep = simulate_maxwell_1d({"c": 1.0, "gamma0": 0.1}, grid, 0.5 * grid.dx, 0.5)
        assert set(rep.fields) == {"E", "B", "Edot"}
        assert rep.fields["B"].shape == rep.fields["E"].shape

    def test_nonperiodic_grid_rejected(self):
        with pytest.raises(ValueError, match="periodic"):
            simulate_maxwell_1d({"c": 1.0}, Grid1D(64), 0.001, 0.1)

    def test_cfl_refusal(self):
        grid = Grid1D(64, boundary="periodic")
        with pytest.raises(CFLError):
            simulate_maxwell_1d({"c": 2.0, "gamma0": 0.0}, grid, grid.dx, 0.1)


class TestResidualCheck:
    def _bindings_for(self, rep, bundle):
        return wave_residual_bindings(rep, bundle)

    def test_simulated_solution_satisfies_derived_equation(self, string_bundle):
        # snapshots at every step reproduce the scheme's stencils exactly,
        # so the derived-equation residual sits at roundoff
        rep = _string_run(N=100, gamma=0.1, T=1.0, stride=1)
        res = el_residual(string_bundle.system)
        bindings = self._bindings_for(rep, string_bundle)
        out = residual_check(rep, res.fields[0], bindings, tolerance=1e-8)
        assert out.passed
        assert out.max_norm < 1e-9

    def test_exact_oracle_has_truncation_floor_and_order(self, string_bundle):
        res = el_residual(string_bundle.system)

        def oracle_report(N):
            grid = Grid1D(N)
            dt = 0.5 * grid.dx
            u, _ = oracle_damped_mode(grid, 1.0, 0.1)
            x = grid.nodes()
            steps = int(round(1.0 / dt))
            times = np.array([n * dt for n in range(steps + 1)])
            vals = np.stack([u(x, t) for t in times])
            rep = _string_run(N=N, gamma=0.1, T=1.0, stride=1)
            rep.fields["u"] = vals
            rep.times = times
            return rep

        r200 = oracle_report(200)
        r400 = oracle_report(400)
        bindings200 = self._bindings_for(r200, string_bundle)
        bindings400 = self._bindings_for(r400, string_bundle)
        res200 = residual_check(r200, res.fields[0], bindings200)
        res400 = residual_check(r400, res.fields[0], bindings400)
        assert res200.max_norm > 1e-6  # discretization floor, not zero
        order = estimate_order(res200.max_norm, res400.max_norm)
        assert order > 1.9

    def test_wrong_sign_damping_is_flagged(self, string_bundle):
        rep = _string_run(N=100, gamma=0.2, T=1.0, stride=1)
        res = el_residual(string_bundle.system)
        bindings = self._bindings_for(rep, string_bundle)
        flipped = dict(bindings)
        gam_sym = next(iter(string_bundle.constants["gamma"].symbols()))
        flipped[gam_sym] = -0.2
        out = residual_check(rep, res.fields[0], flipped, tolerance=1e-6)
        assert not out.passed
        ut_scale = np.max(np.abs(fd_arrays(rep)["ut"]))
        assert out.max_norm == pytest.approx(2 * 0.2 * ut_scale, rel=0.2)

    def test_scalar_field_bindings_cover_reduction(self, kg_bundle):
        rep = simulate_telegrapher(
            {"c2": 1.0, "gamma": 0.15, "m2": 0.5}, Grid1D(100), 0.5 / 100, 1.0,
            standing_mode(Grid1D(100)),
        )
        res = el_residual(kg_bundle.system)
        bindings = wave_residual_bindings(rep, kg_bundle)
        bindings[next(iter(kg_bundle.constants["m2"].symbols()))] = 0.5
        out = residual_check(rep, res.fields[0], bindings, tolerance=1e-8)
        assert out.passed

    def test_missing_binding_reported(self, string_bundle):
        rep = _string_run(N=100, T=0.5, stride=1)
        res = el_residual(string_bundle.system)
        bindings = self._bindings_for(rep, string_bundle)
        gam_sym = next(iter(string_bundle.constants["gamma"].symbols()))
        del bindings[gam_sym]
        with pytest.raises(Exception, match="gamma"):
            residual_check(rep, res.fields[0], bindings)


class TestSerialization:
    def test_csv_round_trip_and_determinism(self, tmp_path):
        rep = _string_run(N=64, T=0.5, stride=4)
        p1 = tmp_path / "a.csv"
        p2 = tmp_path / "b.csv"
        write_csv(rep, str(p1))
        write_csv(_string_run(N=64, T=0.5, stride=4), str(p2))
        assert p1.read_bytes() == p2.read_bytes()
        header, first = p1.read_text().splitlines()[:2]
        cols = header.split(",")
        assert cols[:4] == ["t", "energy", "action", "residual_norm"]
        assert len(first.split(",")) == len(cols)

    def test_csv_17_digit_round_trip(self, tmp_path):
        rep = _string_run(N=64, T=0.5, stride=4)
        path = tmp_path / "r.csv"
        write_csv(rep, str(path))
        lines = path.read_text().splitlines()
        row = np.array([float(v) for v in lines[1].split(",")])
        assert row[1] == rep.energy[0]  # 17 significant digits are lossless

    def test_maxwell_csv_has_both_fields(self, tmp_path):
        grid = Grid1D(64, boundary="periodic")
        rep = simulate_maxwell_1d({"c": 1.0, "gamma0": 0.1}, grid, 0.5 * grid.dx, 0.25)
        path = tmp_path / "m.csv"
        write_csv(rep, str(path))
        header = path.read_text().splitlines()[0]
        assert "E_0" in header and "B_0" in header


class TestOracleHelpers:
    def test_oracle_frequency_definition(self):
        grid = Grid1D(64)
        _, w = oracle_damped_mode(grid, 1.0, 0.2, m2=0.5)
        k = mode_wavenumber(grid)
        assert w == pytest.approx(math.sqrt(k * k + 0.5 - 0.01))

    def test_overdamped_oracle_rejected(self):
        grid = Grid1D(64)
        with pytest.raises(ValueError, match="overdamped"):
            oracle_damped_mode(grid, 1e-6, 50.0)

    def test_plane_wave_init_is_right_mover(self):
        grid = Grid1D(64, boundary="periodic")
        init = plane_wave(grid, 1.0, 0.001)
        x = grid.nodes()
        assert np.allclose(init.E0(x), np.sin(2 * math.pi * x))
