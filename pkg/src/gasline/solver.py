"""Closed-loop time integrator for the deviation wave equation.

The second-order deviation equation

    u_tt + 2 (ubar + u) u_tx - (a^2 - (ubar + u)^2) u_xx = F(x, u, u_x, u_t)

is reduced to the first-order system (u, v, w) = (u, u_t, u_x) and advanced
with the two-step Richtmyer variant of the Lax-Wendroff scheme (formally
second order; the certified regime is smooth and shock-free).  Boundary
closure:

- x = L: u = 0 and v = 0 are pinned; w is filled by second-order one-sided
  extrapolation.
- x = 0: the outgoing characteristic combination v + (a + ubar + u) w is
  extrapolated to the boundary and intersected with the feedback relation
  w = k v, a 2x2 linear closure.

A run emits one trace row per sample time and monitors the certified
contract: realized running sup-bound within the design bound, nonpositive
boundary dissipation, subsonicity, and the exponential decay envelope.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import lyapunov
from .certifier import CertificateReport
from .model import FieldSnapshot, PipeConfig, source_f_arrays
from .stationary import StationaryProfile

__all__ = [
    "SolverConfig",
    "InitialData",
    "bump_initial_data",
    "check_compatibility",
    "MonitorViolation",
    "reduce_first_order",
    "ClosedLoopSolver",
    "RunResult",
    "run_closed_loop",
]

log = logging.getLogger("gasline.solver")

SONIC_ABORT_FRACTION = 0.98


@dataclass(frozen=True)
class SolverConfig:
    """Grid resolution, step control and monitoring knobs."""

    n_cells: int = 256
    cfl: float = 0.8
    t_end: float = 10.0
    sample_dt: float = 0.05
    boundary_tol: float = 1e-9
    scheme: str = "richtmyer"
    envelope_tol: float = 0.05

    def __post_init__(self):
        if self.n_cells < 16:
            raise ValueError("n_cells must be at least 16")
        if not 0.0 < self.cfl < 1.0:
            raise ValueError("cfl must lie in (0, 1)")
        if self.t_end <= 0.0:
            raise ValueError("t_end must be positive")
        if self.sample_dt <= 0.0:
            raise ValueError("sample_dt must be positive")
        if self.scheme != "richtmyer":
            raise ValueError(f"unknown scheme tag {self.scheme!r}")


@dataclass(frozen=True)
class InitialData:
    """Initial deviation u(0,.) = phi and rate u_t(0,.) = psi.

    Derivative callables default to fourth-order central differences of phi
    and psi; analytic ones give exact discrete compatibility.
    """

    phi: Callable
    psi: Callable
    phi_x: Callable | None = None
    phi_xx: Callable | None = None
    psi_x: Callable | None = None
    compat_checked: bool = False

    def d_phi(self, x, order: int = 1):
        if order == 1 and self.phi_x is not None:
            return self.phi_x(x)
        if order == 2 and self.phi_xx is not None:
            return self.phi_xx(x)
        return _fd_derivative(self.phi, x, order)

    def d_psi(self, x):
        if self.psi_x is not None:
            return self.psi_x(x)
        return _fd_derivative(self.psi, x, 1)


def _fd_derivative(f, x, order):
    h = 1e-5
    if order == 1:
        return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)
    return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) / (12 * h**2)


def bump_initial_data(center: float, width: float, amplitude: float,
                      psi_amplitude: float = 0.0) -> InitialData:
    """Smooth compactly-supported bump; every compatibility condition holds
    with zero residual when the support avoids both ends."""

    def shape(x):
        s = 2.0 * (np.asarray(x, dtype=float) - center) / width
        out = np.zeros_like(s)
        inside = np.abs(s) < 1.0
        si = s[inside]
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - si**2))
        return out

    def shape_x(x):
        s = 2.0 * (np.asarray(x, dtype=float) - center) / width
        out = np.zeros_like(s)
        inside = np.abs(s) < 1.0
        si = s[inside]
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - si**2)) * (-2.0 * si / (1.0 - si**2) ** 2) * (2.0 / width)
        return out

    def shape_xx(x):
        s = 2.0 * (np.asarray(x, dtype=float) - center) / width
        out = np.zeros_like(s)
        inside = np.abs(s) < 1.0
        si = s[inside]
        g = 1.0 - si**2
        out[inside] = (
            np.exp(1.0 - 1.0 / g) * ((4.0 * si**2 / g**4) - (2.0 / g**2) - (8.0 * si**2 / g**3)) * (4.0 / width**2)
        )
        return out

    return InitialData(
        phi=lambda x: amplitude * shape(x),
        psi=lambda x: psi_amplitude * shape(x),
        phi_x=lambda x: amplitude * shape_x(x),
        phi_xx=lambda x: amplitude * shape_xx(x),
        psi_x=lambda x: psi_amplitude * shape_x(x),
    )


def check_compatibility(init: InitialData, cfg: PipeConfig, profile: StationaryProfile,
                        tol: float = 1e-9) -> tuple[InitialData, dict]:
    """Residuals of the boundary compatibility conditions at t = 0.

    Zeroth/first order: phi(L) = 0, psi(L) = 0, phi'(0) = k psi(0).
    Second order: the wave equation evaluated at both ends must agree with
    the time-differentiated boundary conditions.
    """
    L = cfg.L
    phi_L = float(init.phi(np.array(L)))
    psi_L = float(init.psi(np.array(L)))
    neumann = float(init.d_phi(np.array(0.0)) - cfg.k * init.psi(np.array(0.0)))

    def u_tt_at(x):
        xa = np.array(x)
        u0 = float(init.phi(xa))
        ux0 = float(init.d_phi(xa, 1))
        uxx0 = float(init.d_phi(xa, 2))
        ut0 = float(init.psi(xa))
        utx0 = float(init.d_psi(xa))
        ubar = float(profile.value(x))
        w = ubar + u0
        f = float(source_f_arrays(np.array(u0), np.array(ux0), np.array(ut0),
                                  np.array(ubar), np.array(profile.slope(x)), cfg))
        return -2.0 * w * utx0 + (cfg.a**2 - w**2) * uxx0 + f

    dirichlet_2 = u_tt_at(L)
    neumann_2 = float(init.d_psi(np.array(0.0))) - cfg.k * u_tt_at(0.0)
    residuals = {
        "phi_L": phi_L,
        "psi_L": psi_L,
        "neumann": neumann,
        "dirichlet_order2": dirichlet_2,
        "neumann_order2": neumann_2,
    }
    ok = all(abs(v) <= tol for v in residuals.values())
    checked = InitialData(phi=init.phi, psi=init.psi, phi_x=init.phi_x,
                          phi_xx=init.phi_xx, psi_x=init.psi_x, compat_checked=ok)
    return checked, residuals


class MonitorViolation(RuntimeError):
    """A certified-run monitor failed; carries the diagnosis."""

    def __init__(self, monitor: str, t: float, detail: str):
        super().__init__(f"monitor {monitor!r} violated at t={t:.6g}: {detail}")
        self.monitor = monitor
        self.t = t
        self.detail = detail


def reduce_first_order(cfg: PipeConfig, profile: StationaryProfile,
                       forcing: Callable | None = None) -> Callable:
    """Pointwise time-derivative evaluator of the (u, v, w) reduction.

    Returns rhs(t, xs, u, v, w) -> (du, dv, dw) with second-order central
    space differences (one-sided at the ends).  The zero state is an exact
    equilibrium.
    """

    def rhs(t, xs, u, v, w):
        ubar, ubar_x = profile.on_grid(xs)
        tot = ubar + u
        if np.any(np.abs(tot) >= SONIC_ABORT_FRACTION * cfg.a):
            bad = int(np.argmax(np.abs(tot)))
            raise MonitorViolation("sonic", float(t), f"|ubar+u| >= {SONIC_ABORT_FRACTION}a at x={xs[bad]:.6g}")
        v_x = np.gradient(v, xs, edge_order=2)
        w_x = np.gradient(w, xs, edge_order=2)
        f = source_f_arrays(u, w, v, ubar, ubar_x, cfg)
        if forcing is not None:
            f = f + forcing(t, xs)
        dv = -2.0 * tot * v_x + (cfg.a**2 - tot**2) * w_x + f
        return v, dv, v_x

    return rhs


@dataclass
class _State:
    t: float
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray


@dataclass(frozen=True)
class RunResult:
    """Trace plus the final field state of one closed-loop run."""

    samples: list
    final_snapshot: FieldSnapshot
    t_li_series: np.ndarray
    max_boundary_residual: float
    dumped_snapshots: list = field(default_factory=list)

    @property
    def e0(self) -> float:
        return self.samples[0].e


class ClosedLoopSolver:
    """Richtmyer two-step integrator bound to one (config, profile, grid)."""

    def __init__(self, cfg: PipeConfig, profile: StationaryProfile,
                 solver_cfg: SolverConfig, forcing: Callable | None = None):
        self.cfg = cfg
        self.profile = profile
        self.scfg = solver_cfg
        self.forcing = forcing
        n = solver_cfg.n_cells
        self.xs = np.linspace(0.0, cfg.L, n + 1)
        self.dx = cfg.L / n
        self.x_mid = 0.5 * (self.xs[:-1] + self.xs[1:])
        self.ubar = np.asarray(profile.value(self.xs), dtype=float)
        self.ubar_x = np.asarray(profile.slope(self.xs), dtype=float)
        self.ubar_mid = np.asarray(profile.value(self.x_mid), dtype=float)
        self.ubar_x_mid = np.asarray(profile.slope(self.x_mid), dtype=float)

    # -- single step ------------------------------------------------------

    def step(self, state: _State, dt: float) -> _State:
        """Advance one step; dt must satisfy the CFL bound."""
        cfg = self.cfg
        a2 = cfg.a**2
        u, v, w = state.u, state.v, state.w
        tot_max = float(np.max(np.abs(self.ubar + u)))
        if tot_max >= SONIC_ABORT_FRACTION * cfg.a:
            bad = int(np.argmax(np.abs(self.ubar + u)))
            raise MonitorViolation("sonic", state.t,
                                   f"|ubar+u| = {tot_max:.6g} >= {SONIC_ABORT_FRACTION}a at x={self.xs[bad]:.6g}")
        smax = cfg.a + tot_max
        if dt > self.scfg.cfl * self.dx / smax * (1.0 + 1e-9):
            raise ValueError("time step violates the CFL bound")
        dx = self.dx
        t = state.t

        # half step at cell midpoints
        um = 0.5 * (u[:-1] + u[1:])
        vm = 0.5 * (v[:-1] + v[1:])
        wm = 0.5 * (w[:-1] + w[1:])
        dv = v[1:] - v[:-1]
        dw = w[1:] - w[:-1]
        c = self.ubar_mid + um
        f_m = source_f_arrays(um, wm, vm, self.ubar_mid, self.ubar_x_mid, cfg)
        if self.forcing is not None:
            f_m = f_m + self.forcing(t, self.x_mid)
        v_h = vm - (dt / (2 * dx)) * (2.0 * c * dv - (a2 - c**2) * dw) + 0.5 * dt * f_m
        w_h = wm + (dt / (2 * dx)) * dv
        u_h = um + 0.5 * dt * vm

        # full step on interior nodes
        ui = 0.5 * (u_h[:-1] + u_h[1:])
        vi = 0.5 * (v_h[:-1] + v_h[1:])
        wi = 0.5 * (w_h[:-1] + w_h[1:])
        ci = self.ubar[1:-1] + ui
        dvh = v_h[1:] - v_h[:-1]
        dwh = w_h[1:] - w_h[:-1]
        f_i = source_f_arrays(ui, wi, vi, self.ubar[1:-1], self.ubar_x[1:-1], cfg)
        if self.forcing is not None:
            f_i = f_i + self.forcing(t + 0.5 * dt, self.xs[1:-1])

        u_new = u.copy()
        v_new = v.copy()
        w_new = w.copy()
        v_new[1:-1] = v[1:-1] + dt * (-(2.0 * ci * dvh - (a2 - ci**2) * dwh) / dx + f_i)
        w_new[1:-1] = w[1:-1] + dt * dvh / dx
        u_new[1:-1] = u[1:-1] + dt * vi

        self.apply_boundaries(state, u_new, v_new, w_new, dt)

        if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(v_new)) and np.all(np.isfinite(w_new))):
            raise MonitorViolation("finite", t + dt, "non-finite field value after step")
        return _State(t=t + dt, u=u_new, v=v_new, w=w_new)

    def apply_boundaries(self, old: _State, u_new, v_new, w_new, dt: float) -> None:
        """Close the update at both ends (in place).

        Outflow x=L: pin u = v = 0, extrapolate w.  Inflow x=0: intersect the
        extrapolated outgoing characteristic value with w = k v.
        """
        cfg = self.cfg
        u_new[-1] = 0.0
        v_new[-1] = 0.0
        # degree-2 one-sided extrapolation keeps the derived boundary
        # curvature second-order accurate
        w_new[-1] = 3.0 * w_new[-2] - 3.0 * w_new[-3] + w_new[-4]

        om1 = v_new[1] + (cfg.a + self.ubar[1] + u_new[1]) * w_new[1]
        om2 = v_new[2] + (cfg.a + self.ubar[2] + u_new[2]) * w_new[2]
        om3 = v_new[3] + (cfg.a + self.ubar[3] + u_new[3]) * w_new[3]
        om0 = 3.0 * om1 - 3.0 * om2 + om3
        u0 = old.u[0]
        for _ in range(2):  # one Picard refresh of the boundary coefficient
            v0 = om0 / (1.0 + cfg.k * (cfg.a + self.ubar[0] + u0))
            u0 = old.u[0] + 0.5 * dt * (old.v[0] + v0)
        v_new[0] = v0
        w_new[0] = cfg.k * v0
        u_new[0] = u0

    # -- snapshots and runs -------------------------------------------------

    def derive_snapshot(self, state: _State) -> FieldSnapshot:
        """Second-order derived fields from the raw (u, v, w) state."""
        u_xx = np.gradient(state.w, self.xs, edge_order=2)
        u_tx = np.gradient(state.v, self.xs, edge_order=2)
        return FieldSnapshot(t=state.t, xs=self.xs, u=state.u.copy(), u_t=state.v.copy(),
                             u_x=state.w.copy(), u_xx=u_xx, u_tx=u_tx)

    def initial_state(self, init: InitialData) -> _State:
        u = np.asarray(init.phi(self.xs), dtype=float)
        v = np.asarray(init.psi(self.xs), dtype=float)
        w = np.asarray(init.d_phi(self.xs), dtype=float)
        return _State(t=0.0, u=u, v=v, w=w)

    def run(self, init: InitialData, certificate: CertificateReport | None = None,
            enforce: bool = True, mu: float | None = None,
            dump_every: int = 0) -> RunResult:
        """Integrate to t_end, sampling the energy trace at the cadence.

        With ``enforce`` and a passing certificate, violations of the
        monitored hypotheses raise :class:`MonitorViolation`.
        """
        cfg = self.cfg
        scfg = self.scfg
        if mu is None and certificate is not None:
            mu = certificate.constants["mu"]
        monitored = enforce and certificate is not None and certificate.passed
        t_li_bound = certificate.t_li_bound if certificate is not None else float("inf")
        mu_val = 0.0 if mu is None else mu
        log.debug("run: n=%d dt~%.3g t_end=%g monitored=%s", scfg.n_cells,
                  scfg.cfl * self.dx / cfg.a, scfg.t_end, monitored)

        state = self.initial_state(init)
        samples = []
        t_li_series = []
        dumped = []
        max_bres = 0.0
        e0 = None

        n_samples = max(1, int(round(scfg.t_end / scfg.sample_dt)))
        sample_times = np.linspace(0.0, scfg.t_end, n_samples + 1)

        def emit(state: _State, idx: int):
            nonlocal e0, max_bres
            snap = self.derive_snapshot(state)
            realized = lyapunov.t_li(snap, self.profile)
            t_li_series.append(realized)
            # forced runs can carry a negative certified rate; the envelope
            # column is definitional and may saturate to inf there
            with np.errstate(over="ignore"):
                envelope = 0.0 if e0 is None else e0 * float(np.exp(-mu_val * state.t))
            sample = lyapunov.evaluate_sample(snap, cfg, self.profile, envelope)
            if e0 is None:
                e0 = sample.e
                sample = replace(sample, envelope=e0)
            samples.append(sample)
            bres = snap.boundary_residuals(cfg.k)
            max_bres = max(max_bres, *bres)
            if dump_every > 0 and idx % dump_every == 0:
                dumped.append(snap)
            if monitored:
                self._check_monitors(sample, snap, realized, t_li_bound, e0, mu)
            return snap

        snap = emit(state, 0)
        for idx in range(1, n_samples + 1):
            t_target = sample_times[idx]
            while state.t < t_target - 1e-12 * scfg.t_end:
                smax = cfg.a + float(np.max(np.abs(self.ubar + state.u)))
                dt = min(scfg.cfl * self.dx / smax, t_target - state.t)
                state = self.step(state, dt)
            snap = emit(state, idx)
        return RunResult(samples=samples, final_snapshot=snap,
                         t_li_series=np.asarray(t_li_series),
                         max_boundary_residual=max_bres, dumped_snapshots=dumped)

    def _check_monitors(self, sample, snap, realized_t_li, t_li_bound, e0, mu):
        t = sample.t
        if realized_t_li > t_li_bound:
            raise MonitorViolation("t_li_bound", t,
                                   f"realized sup-bound {realized_t_li:.6g} exceeds certified {t_li_bound:.6g}")
        dec_scale = max(abs(sample.i3), self.cfg.k * self.cfg.a**2 * np.max(snap.u_x**2), 1e-300)
        if sample.i3 > 1e-9 * dec_scale:
            raise MonitorViolation("boundary_dissipation", t, f"I3 = {sample.i3:.6g} > 0")
        if mu is not None and e0 is not None and t > 0:
            bound = e0 * float(np.exp(-mu * t)) * (1.0 + self.scfg.envelope_tol)
            if sample.e > bound:
                raise MonitorViolation("decay_envelope", t,
                                       f"E = {sample.e:.6g} above envelope {bound:.6g}")


def run_closed_loop(cfg: PipeConfig, profile: StationaryProfile, solver_cfg: SolverConfig,
                    init: InitialData, certificate: CertificateReport | None = None,
                    enforce: bool = True, mu: float | None = None,
                    forcing: Callable | None = None, dump_every: int = 0) -> RunResult:
    """Convenience wrapper: build a solver and run it once."""
    solver = ClosedLoopSolver(cfg, profile, solver_cfg, forcing=forcing)
    return solver.run(init, certificate=certificate, enforce=enforce, mu=mu,
                      dump_every=dump_every)
