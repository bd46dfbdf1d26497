"""Finite-difference verification of the derived field equations.

Explicit second-order schemes for the three example PDE families: leapfrog
with time-centered damping for the damped wave and telegrapher equations,
and a staggered (Yee-style) curl pair for the 1+1 plane-wave reduction of
the dissipative electromagnetic system.  Each run tracks two energy
diagnostics (the staggered form, exactly conservative at zero damping, and
the plain centered form used for refinement checks), the dissipation
bookkeeping (per-node s_t accumulators driven by the Lagrangian density and
the integrated action), and enough field history to evaluate symbolic
residuals with finite differences.

Units are dimensionless: the mass density defaults to 1 and c^2, gamma,
m^2, mu0 are the free dials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Union

import numpy as np

from .algebra import MissingAssignmentError, Poly


class CFLError(ValueError):
    """Stability refusal; carries a usable time step."""

    def __init__(self, message: str, suggested_dt: float):
        super().__init__(f"{message}; suggested dt <= {suggested_dt:.6g}")
        self.suggested_dt = suggested_dt


class AuditError(ValueError):
    pass


@dataclass(frozen=True)
class Grid1D:
    """Uniform 1D grid: N cells on [0, length].

    fixed-zero carries N+1 nodes with pinned endpoints; periodic carries N
    nodes with wraparound.
    """

    N: int
    length: float = 1.0
    boundary: str = "fixed-zero"

    def __post_init__(self):
        if self.N < 8:
            raise ValueError("grid needs at least 8 cells")
        if self.boundary not in ("fixed-zero", "periodic"):
            raise ValueError("boundary must be 'fixed-zero' or 'periodic'")

    @property
    def dx(self) -> float:
        return self.length / self.N

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    def nodes(self) -> np.ndarray:
        if self.periodic:
            return np.arange(self.N) * self.dx
        return np.linspace(0.0, self.length, self.N + 1)

    def node_weights(self) -> np.ndarray:
        w = np.ones(self.N if self.periodic else self.N + 1)
        if not self.periodic:
            w[0] = w[-1] = 0.5
        return w


ArrayOrFunc = Union[np.ndarray, Callable[[np.ndarray], np.ndarray], None]


@dataclass(frozen=True)
class WaveInit:
    """Initial displacement and velocity (arrays or callables of x)."""

    u0: ArrayOrFunc = None
    v0: ArrayOrFunc = None


def standing_mode(grid: Grid1D, mode: int = 1, amplitude: float = 1.0) -> WaveInit:
    """Single sine mode at rest: the workhorse oracle initial condition."""
    k = mode_wavenumber(grid, mode)
    return WaveInit(u0=lambda x: amplitude * np.sin(k * x), v0=None)


def mode_wavenumber(grid: Grid1D, mode: int = 1) -> float:
    if grid.periodic:
        return 2.0 * mode * math.pi / grid.length
    return mode * math.pi / grid.length


def _materialize(f: ArrayOrFunc, x: np.ndarray) -> np.ndarray:
    if f is None:
        return np.zeros_like(x)
    if callable(f):
        return np.asarray(f(x), dtype=float).copy()
    arr = np.asarray(f, dtype=float).copy()
    if arr.shape != x.shape:
        raise ValueError(f"initial data shape {arr.shape} does not match grid {x.shape}")
    return arr


@dataclass
class SimReport:
    """Snapshots and diagnostics of one run.

    action[i] is the integrated dissipation accumulator S(t_i); l_dx holds
    the per-step spatial integral of the Lagrangian density, accumulated in
    a fixed order so the action audit is an exact resummation.
    """

    kind: str
    params: dict
    grid: Grid1D
    dt: float
    snap_stride: int
    times: np.ndarray
    fields: dict
    st: np.ndarray
    energy: np.ndarray
    energy_centered: np.ndarray
    action: np.ndarray
    l_dx: np.ndarray
    residual_norms: Optional[np.ndarray] = None

    @property
    def snap_dt(self) -> float:
        return self.dt * self.snap_stride


def _gradient_edges(u: np.ndarray, dx: float, periodic: bool) -> np.ndarray:
    if periodic:
        return (np.roll(u, -1, axis=-1) - u) / dx
    return (u[..., 1:] - u[..., :-1]) / dx


def _laplacian(u: np.ndarray, dx: float, periodic: bool) -> np.ndarray:
    if periodic:
        return (np.roll(u, -1) - 2.0 * u + np.roll(u, 1)) / (dx * dx)
    lap = np.zeros_like(u)
    lap[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (dx * dx)
    return lap


def _edge_to_nodes(g: np.ndarray, periodic: bool) -> np.ndarray:
    """Average an edge-centered quantity onto nodes."""
    if periodic:
        return 0.5 * (g + np.roll(g, 1, axis=-1))
    out = np.empty(g.shape[:-1] + (g.shape[-1] + 1,))
    out[..., 1:-1] = 0.5 * (g[..., 1:] + g[..., :-1])
    out[..., 0] = g[..., 0]
    out[..., -1] = g[..., -1]
    return out


def _wave_kernel(
    *,
    kind: str,
    c2: float,
    gamma: float,
    m2: float,
    rho: float,
    grid: Grid1D,
    dt: float,
    T: float,
    init: WaveInit,
    snap_stride: int,
) -> SimReport:
    c = math.sqrt(c2)
    dx = grid.dx
    if c * dt / dx > 1.0 + 1e-12:
        raise CFLError(f"CFL violated: c*dt/dx = {c * dt / dx:.4g} > 1", suggested_dt=dx / c)
    if gamma * dt >= 2.0:
        raise CFLError("damping too strong for the time step: gamma*dt >= 2", 1.9 / gamma)
    if m2 > 0 and m2 * dt * dt >= 4.0:
        raise CFLError("mass term too strong for the time step: m2*dt^2 >= 4", 1.9 / math.sqrt(m2))

    periodic = grid.periodic
    tau = rho * c2
    x = grid.nodes()
    w = grid.node_weights()
    steps = max(1, int(round(T / dt)))
    gd2 = 0.5 * gamma * dt

    u0 = _materialize(init.u0, x)
    v0 = _materialize(init.v0, x)
    if not periodic:
        u0[0] = u0[-1] = 0.0
        v0[0] = v0[-1] = 0.0

    # full trajectory (desk scale): U[n] is the field at t = n*dt
    U = np.empty((steps + 1, x.size))
    U[0] = u0
    acc0 = c2 * _laplacian(u0, dx, periodic) - m2 * u0 - gamma * v0
    U[1] = u0 + dt * v0 + 0.5 * dt * dt * acc0
    if not periodic:
        U[1, 0] = U[1, -1] = 0.0
    for n in range(1, steps):
        lap = _laplacian(U[n], dx, periodic)
        U[n + 1] = (
            2.0 * U[n] - (1.0 - gd2) * U[n - 1] + dt * dt * (c2 * lap - m2 * U[n])
        ) / (1.0 + gd2)
        if not periodic:
            U[n + 1, 0] = U[n + 1, -1] = 0.0

    # staggered energies at half steps (exactly conserved when gamma = 0)
    ut_half = (U[1:] - U[:-1]) / dt
    g_all = _gradient_edges(U, dx, periodic)
    e_half = dx * (
        0.5 * rho * np.sum(w * ut_half * ut_half, axis=-1)
        + 0.5 * tau * np.sum(g_all[:-1] * g_all[1:], axis=-1)
        + 0.5 * rho * m2 * np.sum(w * U[:-1] * U[1:], axis=-1)
    )

    # dissipation bookkeeping: per-node s_t driven by the midpoint Lagrangian
    # density; gamma enters implicitly so the update stays second order
    st_hist = np.zeros((steps + 1, x.size))
    l_dx = np.empty(steps)
    S_steps = np.zeros(steps + 1)
    st = np.zeros(x.size)
    g_mid2 = _edge_to_nodes((0.5 * (g_all[:-1] + g_all[1:])) ** 2, periodic)
    u_mid = 0.5 * (U[:-1] + U[1:])
    kin_all = 0.5 * rho * ut_half * ut_half - 0.5 * tau * g_mid2 - 0.5 * rho * m2 * u_mid * u_mid
    for n in range(steps):
        l_nodes = (kin_all[n] - gamma * st) / (1.0 + 0.5 * gamma * dt)
        st = st + dt * l_nodes
        st_hist[n + 1] = st
        l_int = dx * float(np.sum(w * l_nodes))
        l_dx[n] = l_int
        S_steps[n + 1] = S_steps[n] + dt * l_int

    # snapshots
    snaps = list(range(0, steps + 1, snap_stride))
    if snaps[-1] != steps:
        snaps.append(steps)
    m = len(snaps)
    times = np.array([n * dt for n in snaps])
    u_snap = U[snaps].copy()
    ut_snap = np.empty((m, x.size))
    energy = np.empty(m)
    energy_c = np.empty(m)
    for j, n in enumerate(snaps):
        if n == 0:
            ut_snap[j] = v0
            energy[j] = e_half[0]
            energy_c[j] = dx * (
                0.5 * rho * np.sum(w * v0 * v0)
                + 0.5 * tau * np.sum(g_all[0] * g_all[0])
                + 0.5 * rho * m2 * np.sum(w * u0 * u0)
            )
        elif n == steps:
            if steps >= 2:
                ut_snap[j] = (3.0 * U[n] - 4.0 * U[n - 1] + U[n - 2]) / (2.0 * dt)
            else:
                ut_snap[j] = ut_half[-1]
            energy[j] = e_half[-1]
            g = g_all[n]
            energy_c[j] = dx * (
                0.5 * rho * np.sum(w * ut_snap[j] * ut_snap[j])
                + 0.5 * tau * np.sum(g * g)
                + 0.5 * rho * m2 * np.sum(w * U[n] * U[n])
            )
        else:
            ut_snap[j] = (U[n + 1] - U[n - 1]) / (2.0 * dt)
            energy[j] = 0.5 * (e_half[n - 1] + e_half[n])
            g = g_all[n]
            energy_c[j] = dx * (
                0.5 * rho * np.sum(w * ut_snap[j] * ut_snap[j])
                + 0.5 * tau * np.sum(g * g)
                + 0.5 * rho * m2 * np.sum(w * U[n] * U[n])
            )

    return SimReport(
        kind=kind,
        params={"c2": c2, "gamma": gamma, "m2": m2, "rho": rho, "T": T},
        grid=grid,
        dt=dt,
        snap_stride=snap_stride,
        times=times,
        fields={"u": u_snap, "ut": ut_snap},
        st=st_hist[snaps],
        energy=energy,
        energy_centered=energy_c,
        action=S_steps[snaps],
        l_dx=l_dx,
    )


def simulate_damped_wave(
    params: Mapping[str, float],
    grid: Grid1D,
    dt: float,
    T: float,
    init: Optional[WaveInit] = None,
    snap_stride: int = 1,
) -> SimReport:
    """Damped wave equation u_tt - c^2 u_xx + gamma u_t = 0."""
    if init is None:
        init = standing_mode(grid)
    return _wave_kernel(
        kind="damped_wave",
        c2=float(params.get("c2", 1.0)),
        gamma=float(params.get("gamma", 0.0)),
        m2=0.0,
        rho=float(params.get("rho", 1.0)),
        grid=grid,
        dt=dt,
        T=T,
        init=init,
        snap_stride=snap_stride,
    )


def simulate_telegrapher(
    params: Mapping[str, float],
    grid: Grid1D,
    dt: float,
    T: float,
    init: Optional[WaveInit] = None,
    snap_stride: int = 1,
) -> SimReport:
    """Telegrapher equation u_tt - c^2 u_xx + gamma u_t + m2 u = 0.

    With m2 = 0 this runs the exact same kernel as simulate_damped_wave, so
    the two agree bit for bit in that limit.
    """
    if init is None:
        init = standing_mode(grid)
    return _wave_kernel(
        kind="telegrapher",
        c2=float(params.get("c2", 1.0)),
        gamma=float(params.get("gamma", 0.0)),
        m2=float(params.get("m2", 0.0)),
        rho=float(params.get("rho", 1.0)),
        grid=grid,
        dt=dt,
        T=T,
        init=init,
        snap_stride=snap_stride,
    )


@dataclass(frozen=True)
class MaxwellInit:
    """Initial E at the nodes and B at the staggered half nodes (time -dt/2)."""

    E0: ArrayOrFunc = None
    B0: ArrayOrFunc = None


def plane_wave(grid: Grid1D, c: float, dt: float, mode: int = 1, amplitude: float = 1.0) -> MaxwellInit:
    """A right-moving wave E = f(x - ct), B = E/c, Yee-staggered in x and t."""
    k = mode_wavenumber(grid, mode)

    def e0(x):
        return amplitude * np.sin(k * x)

    def b0(x):
        return amplitude * np.sin(k * (x + 0.5 * grid.dx + 0.5 * c * dt)) / c

    return MaxwellInit(E0=e0, B0=b0)


def simulate_maxwell_1d(
    params: Mapping[str, float],
    grid: Grid1D,
    dt: float,
    T: float,
    init: Optional[MaxwellInit] = None,
    snap_stride: int = 1,
) -> SimReport:
    """Plane-wave reduction E_y(x, t), B_z(x, t) with damping gamma0.

    Curl updates on a staggered layout; the damping term (gamma0/c) E sits
    in the curl-of-B equation, evaluated time-centered, so the E field obeys
    E_tt - c^2 E_xx + c gamma0 E_t = 0 to second order.
    """
    c = float(params.get("c", 1.0))
    gamma0 = float(params.get("gamma0", 0.0))
    mu0 = float(params.get("mu0", 1.0))
    eps0 = 1.0 / (mu0 * c * c)
    dx = grid.dx
    if c * dt / dx > 1.0 + 1e-12:
        raise CFLError(f"CFL violated: c*dt/dx = {c * dt / dx:.4g} > 1", suggested_dt=dx / c)
    if c * gamma0 * dt >= 2.0:
        raise CFLError("damping too strong for the time step", 1.9 / (c * gamma0))
    if not grid.periodic:
        raise ValueError("the plane-wave reduction runs on a periodic grid")

    if init is None:
        init = plane_wave(grid, c, dt)
    x = grid.nodes()
    xb = x + 0.5 * dx
    E = _materialize(init.E0, x)
    B = _materialize(init.B0, xb)

    steps = max(1, int(round(T / dt)))
    q = 0.5 * c * gamma0 * dt

    Es = np.empty((steps + 1, x.size))
    Bs = np.empty((steps + 1, x.size))  # B at half steps; Bs[n] is B^{n-1/2}
    Es[0] = E
    Bs[0] = B

    for n in range(steps):
        B = B - (dt / dx) * (np.roll(E, -1) - E)
        E = ((1.0 - q) * E - (c * c * dt / dx) * (B - np.roll(B, 1))) / (1.0 + q)
        Bs[n + 1] = B
        Es[n + 1] = E

    # staggered field energy, exactly conserved at gamma0 = 0
    e_half = dx * (
        0.5 * eps0 * np.sum(Es[:-1] * Es[1:], axis=-1)
        + 0.5 / mu0 * np.sum(Bs[1:] * Bs[1:], axis=-1)
    )

    # Lagrangian-density bookkeeping
    st_hist = np.zeros((steps + 1, x.size))
    l_dx = np.empty(steps)
    S_steps = np.zeros(steps + 1)
    st = np.zeros(x.size)
    for n in range(steps):
        e_mid = 0.5 * (Es[n] + Es[n + 1])
        b_mid = 0.5 * (Bs[n + 1] + np.roll(Bs[n + 1], 1))
        kin = 0.5 * eps0 * e_mid * e_mid - 0.5 / mu0 * b_mid * b_mid
        l_nodes = (kin - c * gamma0 * st) / (1.0 + 0.5 * c * gamma0 * dt)
        st = st + dt * l_nodes
        st_hist[n + 1] = st
        l_int = dx * float(np.sum(l_nodes))
        l_dx[n] = l_int
        S_steps[n + 1] = S_steps[n] + dt * l_int

    snaps = list(range(0, steps + 1, snap_stride))
    if snaps[-1] != steps:
        snaps.append(steps)
    m = len(snaps)
    times = np.array([n * dt for n in snaps])
    E_snap = Es[snaps].copy()
    B_snap = Bs[snaps].copy()
    Edot = np.empty((m, x.size))
    energy = np.empty(m)
    for j, n in enumerate(snaps):
        if n == 0:
            Edot[j] = (Es[1] - Es[0]) / dt
            energy[j] = e_half[0]
        elif n == steps:
            Edot[j] = (Es[n] - Es[n - 1]) / dt
            energy[j] = e_half[-1]
        else:
            Edot[j] = (Es[n + 1] - Es[n - 1]) / (2.0 * dt)
            energy[j] = 0.5 * (e_half[n - 1] + e_half[n])

    return SimReport(
        kind="maxwell_1d",
        params={"c": c, "gamma0": gamma0, "mu0": mu0, "T": T},
        grid=grid,
        dt=dt,
        snap_stride=snap_stride,
        times=times,
        fields={"E": E_snap, "B": B_snap, "Edot": Edot},
        st=st_hist[snaps],
        energy=energy,
        energy_centered=energy.copy(),
        action=S_steps[snaps],
        l_dx=l_dx,
    )


# ---------------------------------------------------------------------------
# diagnostics


def oracle_damped_mode(
    grid: Grid1D, c2: float, gamma: float, m2: float = 0.0, mode: int = 1, amplitude: float = 1.0
):
    """Separation-of-variables solution for the standing mode released at
    rest: u = A e^(-gamma t / 2) sin(kx) (cos wt + (gamma/2w) sin wt)."""
    k = mode_wavenumber(grid, mode)
    w2 = c2 * k * k + m2 - 0.25 * gamma * gamma
    if w2 <= 0:
        raise ValueError("mode is overdamped; oracle invalid")
    w = math.sqrt(w2)

    def u(x, t):
        envelope = amplitude * math.exp(-0.5 * gamma * t)
        return envelope * np.sin(k * x) * (math.cos(w * t) + 0.5 * gamma / w * math.sin(w * t))

    return u, w


def oracle_error(report: SimReport, field: str = "u") -> float:
    """Max-norm error against the single-mode oracle for this run's params."""
    p = report.params
    if report.kind in ("damped_wave", "telegrapher"):
        u, _ = oracle_damped_mode(report.grid, p["c2"], p["gamma"], p.get("m2", 0.0))
    else:
        raise ValueError("oracle_error supports the wave-family runs")
    x = report.grid.nodes()
    err = 0.0
    for j, t in enumerate(report.times):
        err = max(err, float(np.max(np.abs(report.fields[field][j] - u(x, t)))))
    return err


def mode_coefficients(report: SimReport, field: str = "u", mode: int = 1):
    """Projection of a field onto the mode basis.

    fixed-zero grids give one sine coefficient; periodic grids give the
    (sin, cos) pair.
    """
    grid = report.grid
    x = grid.nodes()
    w = grid.node_weights()
    k = mode_wavenumber(grid, mode)
    data = report.fields[field]
    norm = 2.0 / grid.length * grid.dx
    a_sin = norm * np.sum(w * data * np.sin(k * x), axis=-1)
    if not grid.periodic:
        return (a_sin,)
    a_cos = norm * np.sum(w * data * np.cos(k * x), axis=-1)
    return (a_sin, a_cos)


def ringdown_amplitude(times: np.ndarray, comps, lam: float, omega: float):
    """Phase-space amplitude of a damped oscillation.

    For a(t) solving a'' + 2 lam a' + (omega^2 + lam^2) a = 0 the quantity
    sqrt(a^2 + ((a' + lam a)/omega)^2) equals A0 e^(-lam t) exactly, which
    makes the decay fit oscillation-free.  Derivatives are centered, so the
    first and last samples are dropped.
    """
    t = times[1:-1]
    total = None
    for a in comps:
        adot = (a[2:] - a[:-2]) / (times[2:] - times[:-2])
        amid = a[1:-1]
        contrib = amid**2 + ((adot + lam * amid) / omega) ** 2
        total = contrib if total is None else total + contrib
    return t, np.sqrt(total)


def fit_exponential_rate(times: np.ndarray, amplitude: np.ndarray) -> float:
    """Least-squares slope of log(amplitude); returns the decay rate."""
    mask = amplitude > 0
    coeffs = np.polyfit(times[mask], np.log(amplitude[mask]), 1)
    return -float(coeffs[0])


def fit_decay_rate(report: SimReport, mode: int = 1) -> float:
    """Fitted envelope decay rate of the dominant mode of a run."""
    p = report.params
    if report.kind in ("damped_wave", "telegrapher"):
        lam = 0.5 * p["gamma"]
        k = mode_wavenumber(report.grid, mode)
        omega2 = p["c2"] * k * k + p.get("m2", 0.0) - lam * lam
        comps = mode_coefficients(report, "u", mode)
    else:
        lam = 0.5 * p["c"] * p["gamma0"]
        k = mode_wavenumber(report.grid, mode)
        omega2 = p["c"] ** 2 * k * k - lam * lam
        comps = mode_coefficients(report, "E", mode)
    if omega2 <= 0:
        raise ValueError("overdamped mode; decay fit invalid")
    t, amp = ringdown_amplitude(report.times, comps, lam, math.sqrt(omega2))
    return fit_exponential_rate(t, amp)


def measure_frequency(times: np.ndarray, signal: np.ndarray) -> float:
    """Angular frequency from linearly interpolated zero crossings."""
    crossings = []
    for i in range(len(signal) - 1):
        a, b = signal[i], signal[i + 1]
        if a == 0.0:
            crossings.append(times[i])
        elif a * b < 0.0:
            frac = a / (a - b)
            crossings.append(times[i] + frac * (times[i + 1] - times[i]))
    if len(crossings) < 2:
        raise ValueError("not enough zero crossings to measure a frequency")
    half_period = (crossings[-1] - crossings[0]) / (len(crossings) - 1)
    return math.pi / half_period


def energy_drift(report: SimReport) -> float:
    """Max relative deviation of the staggered energy from its initial value."""
    e = report.energy
    return float(np.max(np.abs(e - e[0])) / abs(e[0]))


def dissipation_defect(report: SimReport, use: str = "centered") -> float:
    """Max defect of dE/dt = -gamma rho integral(u_t^2) over the snapshots.

    The centered form carries the O(dt^2 + dx^2) defect whose refinement the
    acceptance checks measure.  The staggered form telescopes the half-step
    energies back out of their snapshot averages, for which the identity is
    discretely exact up to roundoff.  Requires snapshots at every step.
    """
    if report.snap_stride != 1:
        raise AuditError("dissipation defect needs snapshots at every step")
    p = report.params
    gamma = p["gamma"]
    rho = p.get("rho", 1.0)
    grid = report.grid
    w = grid.node_weights()
    dt = report.snap_dt
    worst = 0.0
    if use == "staggered":
        # energy[0] = e_half[0] and energy[j] = (e_half[j-1] + e_half[j]) / 2
        e_half = np.empty(len(report.energy) - 1)
        e_half[0] = report.energy[0]
        for j in range(1, len(e_half)):
            e_half[j] = 2.0 * report.energy[j] - e_half[j - 1]
        for j in range(1, len(e_half)):
            dedt = (e_half[j] - e_half[j - 1]) / dt
            ut = report.fields["ut"][j]
            sink = gamma * rho * grid.dx * float(np.sum(w * ut * ut))
            worst = max(worst, abs(dedt + sink))
        return worst
    e = report.energy_centered
    for j in range(1, len(report.times) - 1):
        dedt = (e[j + 1] - e[j - 1]) / (2.0 * dt)
        ut = report.fields["ut"][j]
        sink = gamma * rho * grid.dx * float(np.sum(w * ut * ut))
        worst = max(worst, abs(dedt + sink))
    return worst


def action_audit(report: SimReport) -> float:
    """Relative error of S(T) - S(0) against the time-integrated Lagrangian.

    Both sides accumulate the identical per-step integrals in the identical
    order, so the audit checks the bookkeeping wiring, not quadrature.
    """
    if report.grid.boundary not in ("periodic", "fixed-zero"):
        raise AuditError("action audit needs a boundary with no spatial flux")
    total = 0.0
    for l_int in report.l_dx:
        total += report.dt * l_int
    lhs = report.action[-1] - report.action[0]
    scale = max(abs(lhs), abs(total), 1e-30)
    return abs(lhs - total) / scale


def estimate_order(err_coarse: float, err_fine: float) -> float:
    """Richardson order estimate for one halving of dx (and dt with it)."""
    return math.log2(err_coarse / err_fine)


# ---------------------------------------------------------------------------
# symbolic residual evaluation


def fd_arrays(report: SimReport, field: str = "u"):
    """Finite-difference jet arrays over the interior snapshots.

    Returns a dict with keys u, ut, ux, utt, uxx, uxt evaluated on the
    interior of the snapshot/space grid (periodic grids wrap in space).
    """
    u = report.fields[field]
    dt = report.snap_dt
    dx = report.grid.dx
    if u.shape[0] < 3:
        raise AuditError("need at least three snapshots for second differences")
    if report.grid.periodic:
        um, u0, up = u[:-2], u[1:-1], u[2:]
        ux = (np.roll(u0, -1, axis=1) - np.roll(u0, 1, axis=1)) / (2 * dx)
        uxx = (np.roll(u0, -1, axis=1) - 2 * u0 + np.roll(u0, 1, axis=1)) / (dx * dx)
        ut = (up - um) / (2 * dt)
        utt = (up - 2 * u0 + um) / (dt * dt)
        uxt = (np.roll(up, -1, axis=1) - np.roll(up, 1, axis=1)
               - np.roll(um, -1, axis=1) + np.roll(um, 1, axis=1)) / (4 * dx * dt)
        return {"u": u0, "ut": ut, "ux": ux, "utt": utt, "uxx": uxx, "uxt": uxt}
    um, u0, up = u[:-2, 1:-1], u[1:-1, 1:-1], u[2:, 1:-1]
    full0 = u[1:-1]
    ux = (full0[:, 2:] - full0[:, :-2]) / (2 * dx)
    uxx = (full0[:, 2:] - 2 * full0[:, 1:-1] + full0[:, :-2]) / (dx * dx)
    ut = (up - um) / (2 * dt)
    utt = (up - 2 * u0 + um) / (dt * dt)
    uxt = (u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2]) / (4 * dx * dt)
    return {"u": u0, "ut": ut, "ux": ux, "utt": utt, "uxx": uxx, "uxt": uxt}


@dataclass
class ResidualCheck:
    max_norm: float
    per_snapshot: np.ndarray
    passed: Optional[bool]


def residual_check(
    report: SimReport,
    residual: Poly,
    bindings: Mapping,
    tolerance: Optional[float] = None,
) -> ResidualCheck:
    """Evaluate a symbolic residual over the snapshots with finite differences.

    `bindings` maps every symbol of the residual to an array (from
    fd_arrays) or a number.  Returns the max norm, the per-snapshot norms,
    and the tolerance verdict when one is given.
    """
    missing = [s.name for s in residual.symbols() if s not in bindings]
    if missing:
        raise MissingAssignmentError(f"missing bindings for: {', '.join(sorted(missing))}")
    values = residual.evaluate_arrays(bindings)
    values = np.atleast_2d(np.asarray(values, dtype=float))
    per_snapshot = np.max(np.abs(values), axis=-1)
    max_norm = float(np.max(per_snapshot))
    return ResidualCheck(
        max_norm=max_norm,
        per_snapshot=per_snapshot,
        passed=(max_norm <= tolerance) if tolerance is not None else None,
    )


def wave_residual_bindings(report: SimReport, bundle) -> dict:
    """Bind a 1+1 wave-family model's symbols and jets to FD arrays.

    Works for the damped string chart (directions x, t) and for the damped
    scalar-field chart run in its 1+1 reduction (directions 0 = time,
    1 = space; directions 2, 3 bound to zero).
    """
    arrays = fd_arrays(report, "u")
    space = bundle.system.space
    jets = bundle.jets
    p = report.params
    zero = 0.0
    out = {}
    if bundle.name == "damped_string":
        const_vals = {"rho": p.get("rho", 1.0), "tau": p.get("rho", 1.0) * p["c2"], "gamma": p["gamma"]}
        for name, poly in bundle.constants.items():
            for sym in poly.symbols():
                out[sym] = const_vals[name]
        out[space.q[0]] = arrays["u"]
        out[space.v[0][0]] = arrays["ux"]
        out[space.v[0][1]] = arrays["ut"]
        out[jets.second_jet(0, 0, 0)] = arrays["uxx"]
        out[jets.second_jet(0, 0, 1)] = arrays["uxt"]
        out[jets.second_jet(0, 1, 1)] = arrays["utt"]
        return out
    if bundle.name == "damped_klein_gordon":
        const_vals = {"m2": p.get("m2", 0.0)}
        for mu in range(4):
            const_vals[f"gam{mu}"] = -p["gamma"] if mu == 0 else 0.0
        for name, poly in bundle.constants.items():
            for sym in poly.symbols():
                out[sym] = const_vals[name]
        out[space.q[0]] = arrays["u"]
        out[space.v[0][0]] = arrays["ut"]
        out[space.v[0][1]] = arrays["ux"]
        out[space.v[0][2]] = zero
        out[space.v[0][3]] = zero
        for a in range(4):
            for b in range(a, 4):
                out[jets.second_jet(0, a, b)] = zero
        out[jets.second_jet(0, 0, 0)] = arrays["utt"]
        out[jets.second_jet(0, 1, 1)] = arrays["uxx"]
        out[jets.second_jet(0, 0, 1)] = arrays["uxt"]
        return out
    raise ValueError(f"no 1+1 binding scheme for model {bundle.name!r}")


# ---------------------------------------------------------------------------
# serialization


def write_csv(report: SimReport, path: str):
    """One row per snapshot: t, E(t), S(t), residual norm, field samples.

    Floating-point values carry 17 significant digits so identical runs
    produce byte-identical files.
    """
    names = []
    arrays = []
    for fname in sorted(report.fields):
        if fname in ("ut", "Edot"):
            continue
        arr = report.fields[fname]
        names.extend(f"{fname}_{j}" for j in range(arr.shape[1]))
        arrays.append(arr)
    header = ["t", "energy", "action", "residual_norm"] + names
    res = report.residual_norms
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for j, t in enumerate(report.times):
            row = [t, report.energy[j], report.action[j]]
            row.append(res[j] if res is not None and j < len(res) else 0.0)
            for arr in arrays:
                row.extend(arr[j])
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
