"""Physical model of isothermal gas flow in a friction pipe.

The gas state is (density rho, mass flux q) with constant sound speed ``a``
and friction ratio ``theta``.  The velocity q/rho obeys a second-order
quasilinear wave equation; everything the solver and the Lyapunov machinery
need from the physics lives here:

- the lower-order source of the velocity wave equation (``source_f_tilde``)
  and its deviation form around a stationary profile (``source_f``,
  ``source_f_x``),
- maps between physical variables and characteristic (Riemann) variables,
- characteristic speeds and subsonic predicates,
- reconstruction of the density from a velocity field,
- finite-difference residuals of the physical balance laws.

All functions are pure and accept scalars or numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PipeConfig",
    "PhysicalState",
    "RiemannPair",
    "FieldSnapshot",
    "source_f_tilde",
    "source_f_composed",
    "source_f_expanded",
    "source_f_arrays",
    "source_f",
    "source_f_x",
    "riemann_from_physical",
    "physical_from_riemann",
    "riemann_source",
    "eigenvalues",
    "velocity_from_riemann",
    "reconstruct_log_density",
    "euler_residual",
]

# Relative distance from the sonic line at which (a^2 - z^2)^-1 factors are
# considered out of domain.
SONIC_GUARD = 1e-9


@dataclass(frozen=True)
class PipeConfig:
    """Physical and control parameters of one stabilization problem.

    Attributes
    ----------
    a : sonic speed (> 0)
    theta : friction factor over pipe diameter (>= 0)
    L : pipe length (> 0)
    k : feedback gain of the velocity-slope boundary law (> 0)
    gamma : subsonic safety margin, in (0, 1/2]
    """

    a: float
    theta: float
    L: float
    k: float
    gamma: float = 0.5

    def __post_init__(self):
        if not (self.a > 0 and self.L > 0 and self.k > 0):
            raise ValueError("require a > 0, L > 0, k > 0")
        if self.theta < 0:
            raise ValueError("require theta >= 0")
        if not (0 < self.gamma <= 0.5):
            raise ValueError("gamma must lie in (0, 1/2]")

    def gain_condition_ok(self) -> bool:
        """Feedback-gain admissibility 1/(a*k) < 1 - gamma."""
        return 1.0 / (self.a * self.k) < 1.0 - self.gamma


@dataclass(frozen=True)
class PhysicalState:
    """Gas state in physical variables (density, mass flux)."""

    rho: float
    q: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("density must be positive")

    def velocity(self) -> float:
        return self.q / self.rho

    def is_subsonic(self, a: float) -> bool:
        return 0.0 < self.q / self.rho < a


@dataclass(frozen=True)
class RiemannPair:
    """Characteristic variables of the diagonalized flow equations."""

    r_plus: float
    r_minus: float

    def is_subsonic(self, a: float) -> bool:
        s = self.r_plus + self.r_minus
        return -2.0 * a < s < 0.0


@dataclass(frozen=True)
class FieldSnapshot:
    """Grid samples of the deviation field and its derivatives at one time.

    The arrays share the grid ``xs`` (uniform on [0, L]).  ``u`` is the
    velocity deviation from the stationary profile, ``u_t`` its time
    derivative, ``u_x``/``u_xx`` space derivatives and ``u_tx`` the mixed one.
    """

    t: float
    xs: np.ndarray
    u: np.ndarray
    u_t: np.ndarray
    u_x: np.ndarray
    u_xx: np.ndarray
    u_tx: np.ndarray

    def __post_init__(self):
        n = self.xs.shape[0]
        for name in ("u", "u_t", "u_x", "u_xx", "u_tx"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"{name} must match the grid length {n}")

    def boundary_residuals(self, k: float) -> tuple[float, float]:
        """(|u_x(0) - k u_t(0)|, |u(L)|) -- the two boundary conditions."""
        return (abs(self.u_x[0] - k * self.u_t[0]), abs(self.u[-1]))


def source_f_tilde(u, ux, ut, theta):
    """Lower-order source of the velocity wave equation (total velocity form).

    Total function of the velocity ``u``, slope ``ux`` and rate ``ut``:
    -2*ut*ux - 2*u*ux^2 - (3/2)*theta*u*|u|*ux - theta*|u|*ut.
    """
    au = np.abs(u)
    return -2.0 * ut * ux - 2.0 * u * ux**2 - 1.5 * theta * u * au * ux - theta * au * ut


def _check_subsonic_total(w, cfg: PipeConfig):
    if np.any(np.abs(w) >= cfg.a * (1.0 - SONIC_GUARD)):
        raise ValueError("total velocity at or beyond the sonic line")


def source_f_composed(u, ux, ut, ubar, ubar_x, cfg: PipeConfig):
    """Deviation source as the difference of two total-velocity sources.

    This is the defining form: the full source at (ubar+u) minus the
    stationary source rescaled by (a^2 - (ubar+u)^2)/(a^2 - ubar^2).
    Suffers from cancellation for |u| << ubar; kept as the independent
    cross-check of :func:`source_f_expanded`.
    """
    a2 = cfg.a**2
    w = ubar + u
    _check_subsonic_total(w, cfg)
    scale = (a2 - w**2) / (a2 - ubar**2)
    full = source_f_tilde(w, ubar_x + ux, ut, cfg.theta)
    return full - scale * source_f_tilde(ubar, ubar_x, 0.0, cfg.theta)


def _coeffs(ubar, cfg: PipeConfig):
    # closed-form coefficients of the deviation source for a stationary
    # profile with slope (theta/2) ubar^3 / (a^2 - ubar^2)
    a2 = cfg.a**2
    th = cfg.theta
    d = a2 - ubar**2
    ub2 = ubar * ubar
    ub3 = ub2 * ubar
    ub4 = ub2 * ub2
    c1 = -(th**2) * (3 * a2**2 * ub4 - 2 * a2 * ub4 * ub2 + ub4 * ub4) / (2 * d**3)
    c2 = -th * a2 * ubar / d
    c3 = -th * (ub4 + 3 * a2 * ub2) / (2 * d)
    c4 = -(th**2) * (2 * ub4 * ub3 - 3 * a2 * ub4 * ubar + 3 * a2**2 * ub3) / (4 * d**3)
    c5 = -th * (3 * a2 * ubar - ub3) / d
    return c1, c2, c3, c4, c5


def source_f_expanded(u, ux, ut, ubar, cfg: PipeConfig):
    """Deviation source in expanded closed form.

    Exact polynomial/rational identity with :func:`source_f_composed` on the
    regime ubar >= 0, ubar + u >= 0 (the deviation monomials carry signed
    powers there).  Free of the small-deviation cancellation of the composed
    form, so this is what the time integrator evaluates.
    """
    _check_subsonic_total(ubar + u, cfg)
    th = cfg.theta
    c1, c2, c3, c4, c5 = _coeffs(ubar, cfg)
    fts = -2.0 * ut * ux - 2.0 * u * ux**2 - 1.5 * th * u * u * ux - th * u * ut
    return fts + c1 * u + c2 * ut + c3 * ux + c4 * u * u + c5 * u * ux - 2.0 * ubar * ux**2


def source_f_arrays(u, ux, ut, ubar, ubar_x, cfg: PipeConfig):
    """Deviation source given profile samples; expanded form where the total
    velocity is nonnegative, composed form elsewhere (the expansion is an
    identity only for nonnegative total velocity)."""
    out = np.asarray(source_f_expanded(u, ux, ut, ubar, cfg), dtype=float)
    neg = np.asarray(ubar + u) < 0.0
    if np.any(neg):
        comp = source_f_composed(u, ux, ut, ubar, ubar_x, cfg)
        out = np.where(neg, comp, out)
    return out


def source_f(x, u, ux, ut, profile, cfg: PipeConfig):
    """Deviation source at position(s) ``x`` of a stationary profile."""
    out = source_f_arrays(u, ux, ut, profile.value(x), profile.slope(x), cfg)
    if out.ndim == 0:
        return float(out)
    return out


def source_f_x(u, ux, ut, uxx, utx, ubar, cfg: PipeConfig):
    """Spatial derivative of the deviation source along a field.

    Total x-derivative of the expanded deviation source, with the stationary
    slope eliminated through its first-order equation.  Matches a centered
    difference of :func:`source_f` at second order on smooth fields.
    """
    _check_subsonic_total(ubar + u, cfg)
    a2 = cfg.a**2
    th = cfg.theta
    d = a2 - ubar**2
    ub = ubar
    ub2 = ub * ub
    ub3 = ub2 * ub
    ub4 = ub2 * ub2
    ub5 = ub4 * ub
    ub6 = ub3 * ub3
    ub7 = ub6 * ub
    a4 = a2 * a2
    a6 = a4 * a2

    c1, c2, c3, c4, c5 = _coeffs(ub, cfg)
    ubar_x = 0.5 * th * ub3 / d

    # derivative, through the profile, of each expanded coefficient
    c1p = -(th**3) * (6 * a6 * ub6 - 3 * a4 * ub6 * ub2 + 4 * a2 * ub6 * ub4 - ub6 * ub6) / (2 * d**5)
    c2p = -(th**2) * (a4 * ub3 + a2 * ub5) / (2 * d**3)
    c3p = -(th**2) * (3 * a4 * ub4 + 2 * a2 * ub6 - ub4 * ub4) / (2 * d**3)
    c4p = -(th**3) * (9 * a6 * ub5 - 6 * a4 * ub7 + 11 * a2 * ub7 * ub2 - 2 * ub7 * ub4) / (8 * d**5)
    c5p = -(th**2) * (3 * a4 * ub3 + ub7) / (2 * d**3)

    dev = (
        -2.0 * ux * utx
        - 2.0 * ut * uxx
        - 2.0 * ux**3
        - 4.0 * u * ux * uxx
        - 3.0 * th * u * ux**2
        - 1.5 * th * u * u * uxx
        - th * ux * ut
        - th * u * utx
    )
    return (
        dev
        + c1p * u
        + (c1 + c3p) * ux
        + c2p * ut
        + c2 * utx
        + c3 * uxx
        + c4p * u * u
        + (2.0 * c4 + c5p) * u * ux
        + c5 * (ux**2 + u * uxx)
        - 2.0 * ubar_x * ux**2
        - 4.0 * ub * ux * uxx
    )


def riemann_from_physical(state: PhysicalState, cfg: PipeConfig) -> RiemannPair:
    """Characteristic variables -q/rho -/+ a*ln(rho) of a physical state."""
    if state.rho <= 0:
        raise ValueError("density must be positive")
    base = -state.q / state.rho
    lr = cfg.a * np.log(state.rho)
    return RiemannPair(r_plus=base - lr, r_minus=base + lr)


def physical_from_riemann(pair: RiemannPair, cfg: PipeConfig) -> PhysicalState:
    """Inverse characteristic map; exact round trip with the forward map."""
    rho = float(np.exp((pair.r_minus - pair.r_plus) / (2.0 * cfg.a)))
    q = -0.5 * (pair.r_plus + pair.r_minus) * rho
    return PhysicalState(rho=rho, q=q)


def riemann_source(pair: RiemannPair, theta: float) -> tuple[float, float]:
    """Friction source of the diagonal system; equal in both components."""
    s = pair.r_plus + pair.r_minus
    val = 0.125 * theta * s * abs(s)
    return (val, val)


def eigenvalues(u_total, a):
    """Characteristic speeds (u - a, u + a) of the velocity wave equation."""
    return (u_total - a, u_total + a)


def velocity_from_riemann(pair: RiemannPair) -> float:
    """Velocity recovered from the characteristic pair, -(R+ + R-)/2."""
    return -0.5 * (pair.r_plus + pair.r_minus)


def reconstruct_log_density(xs, u_tilde, u_tilde_t, u_tilde_x, rho_at_0, cfg: PipeConfig):
    """Reconstruct ln(rho) along the pipe from a total-velocity snapshot.

    Integrates the closure relation
    (ln rho)_x = -(u_t + u u_x + (theta/2)|u|u)/a^2 from the anchor density at
    x=0 with the composite trapezoid rule.
    """
    if rho_at_0 <= 0:
        raise ValueError("anchor density must be positive")
    xs = np.asarray(xs, dtype=float)
    integrand = -(u_tilde_t + u_tilde * u_tilde_x + 0.5 * cfg.theta * np.abs(u_tilde) * u_tilde) / cfg.a**2
    dx = np.diff(xs)
    acc = np.concatenate(([0.0], np.cumsum(0.5 * dx * (integrand[1:] + integrand[:-1]))))
    return np.log(rho_at_0) + acc


def euler_residual(ts, xs, rho, q, cfg: PipeConfig) -> tuple[float, float]:
    """Max-norm finite-difference residuals of the two balance laws.

    ``rho`` and ``q`` are sampled on the tensor grid ts x xs (time along the
    first axis).  Returns (mass residual, momentum residual), both second
    order in the grid spacings for smooth exact solutions.
    """
    rho = np.asarray(rho, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("density samples must be positive")
    rho_t = np.gradient(rho, ts, axis=0, edge_order=2)
    q_x = np.gradient(q, xs, axis=1, edge_order=2)
    q_t = np.gradient(q, ts, axis=0, edge_order=2)
    flux = q**2 / rho + cfg.a**2 * rho
    flux_x = np.gradient(flux, xs, axis=1, edge_order=2)
    res_mass = rho_t + q_x
    res_mom = q_t + flux_x + 0.5 * cfg.theta * q * np.abs(q) / rho
    return float(np.max(np.abs(res_mass))), float(np.max(np.abs(res_mom)))
