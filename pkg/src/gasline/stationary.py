"""Stationary subsonic velocity profiles of the friction pipe.

A positive stationary velocity that is compatible with a steady physical
flow satisfies the first-order equation

    (a^2 - ubar^2) ubar' = (theta/2) ubar^3,

whose solution is available in closed form through the lower real branch of
the Lambert W function.  This module provides that special function, the
profile construction with analytic first and second derivatives, the
associated stationary density, and an explorative integrator for the general
constant-lambda first-order equation (whose non-zero-lambda solutions do not
correspond to steady physical flows and are never certified).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import PipeConfig

__all__ = [
    "lambert_w_minus1",
    "StationaryProfile",
    "build_profile",
    "zero_profile",
    "stationary_density",
    "admissible_max_length",
    "LambdaOdeReport",
    "general_lambda_ode",
]

_INV_E = float(np.exp(-1.0))


def lambert_w_minus1(x):
    """Lower real branch of the Lambert W function on (-1/e, 0).

    Returns w <= -1 with w*exp(w) = x.  The branch point x = -1/e maps to -1
    exactly; inputs outside [-1/e, 0) raise ValueError.

    Initial guesses: a branch-point series in sqrt(2(1+e*x)) near -1/e and
    the asymptotic log-log form elsewhere, both polished by Halley steps.
    """
    x_arr = np.asarray(x, dtype=float)
    scalar = x_arr.ndim == 0
    x_arr = np.atleast_1d(x_arr)
    if np.any(x_arr >= 0.0):
        raise ValueError("domain is (-1/e, 0)")
    t = 1.0 + np.e * x_arr
    if np.any(t < -1e-12):
        raise ValueError("domain is (-1/e, 0)")
    t = np.maximum(t, 0.0)

    w = np.empty_like(x_arr)
    # series around the branch point, in p = -sqrt(2(1 + e x))
    p = -np.sqrt(2.0 * t)
    w_series = -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0 + p * 769.0 / 17280.0))))
    near = t < 1e-8  # series truncation error ~ p^6 < 1e-24 here
    w[near] = w_series[near]

    rest = ~near
    if np.any(rest):
        xr = x_arr[rest]
        l1 = np.log(-xr)
        w0 = np.where(t[rest] < 0.25, w_series[rest], l1 - np.log(-l1))
        for _ in range(50):
            ew = np.exp(w0)
            f = w0 * ew - xr
            w1 = w0 + 1.0
            dw = f / (ew * w1 - (w0 + 2.0) * f / (2.0 * w1))
            w0 = w0 - dw
            if np.all(np.abs(dw) <= 1e-16 * (2.0 + np.abs(w0))):
                break
        w[rest] = w0

    w[t == 0.0] = -1.0
    return float(w[0]) if scalar else w


def _xi_from_target(c):
    """Solve xi - ln(xi) = c for xi >= 1 (vectorized Newton).

    Equivalent to -W_{-1}(-exp(-c)) but stable for arbitrarily large c, where
    exp(-c) underflows.
    """
    c = np.asarray(c, dtype=float)
    scalar = c.ndim == 0
    c = np.atleast_1d(c)
    if np.any(c < 1.0 - 1e-9):
        raise ValueError("target must be >= 1")
    m = np.maximum(c - 1.0, 0.0)
    # two-term branch expansion; for large targets start from xi ~ c + ln c
    xi = 1.0 + np.sqrt(2.0 * m) + (2.0 / 3.0) * m
    big = c > 1.5
    xi[big] = c[big] + np.log(c[big])
    for _ in range(100):
        g = xi - np.log(xi) - c
        gp = 1.0 - 1.0 / xi
        step = np.where(gp > 0.0, g / np.where(gp > 0.0, gp, 1.0), 0.0)
        xi = np.maximum(xi - step, 1.0)
        if np.all(np.abs(g) <= 1e-14 * np.maximum(1.0, c)):
            break
    return float(xi[0]) if scalar else xi


def admissible_max_length(cfg: PipeConfig, u_bar_0: float) -> float:
    """Largest pipe length on which the closed-form profile stays subsonic."""
    if cfg.theta == 0.0:
        return float("inf")
    xi0 = (cfg.a / u_bar_0) ** 2
    return (xi0 - np.log(xi0) - 1.0) / cfg.theta


@dataclass(frozen=True)
class StationaryProfile:
    """Sampled stationary velocity with its closed-form evaluators.

    ``u_bar``, ``u_bar_x`` and ``u_bar_xx`` are samples on ``xs``; ``value``,
    ``slope`` and ``curvature`` evaluate the same closed form at arbitrary
    positions.  ``c_bar`` is the constant of the closed form,
    ln(xi0) - xi0 with xi0 = (a/u_bar_0)^2.
    """

    cfg: PipeConfig
    u_bar_0: float
    c_bar: float
    xs: np.ndarray
    u_bar: np.ndarray
    u_bar_x: np.ndarray
    u_bar_xx: np.ndarray
    lambda_const: float = 0.0
    at_branch_point: bool = False

    def value(self, x):
        if self.u_bar_0 == 0.0:
            return np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0
        cfg = self.cfg
        xi0 = (cfg.a / self.u_bar_0) ** 2
        target = xi0 - np.log(xi0) - cfg.theta * np.asarray(x, dtype=float)
        return cfg.a / np.sqrt(_xi_from_target(target))

    def slope(self, x):
        ub = self.value(x)
        return 0.5 * self.cfg.theta * ub**3 / (self.cfg.a**2 - ub**2)

    def curvature(self, x):
        ub = self.value(x)
        a2 = self.cfg.a**2
        return 0.25 * self.cfg.theta**2 * ub**5 * (3.0 * a2 - ub**2) / (a2 - ub**2) ** 3

    def on_grid(self, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(u_bar, u_bar_x) on ``xs``; reuses the stored samples when it is
        the construction grid."""
        if xs.shape == self.xs.shape and np.array_equal(xs, self.xs):
            return self.u_bar, self.u_bar_x
        ub = self.value(xs)
        return ub, 0.5 * self.cfg.theta * ub**3 / (self.cfg.a**2 - ub**2)

    def sup_norm(self) -> float:
        """Largest velocity on the pipe (profiles are nondecreasing)."""
        return float(self.value(self.cfg.L)) if self.u_bar_0 > 0 else 0.0

    def slope_sup_norm(self) -> float:
        return float(self.slope(self.cfg.L)) if self.u_bar_0 > 0 else 0.0


def build_profile(cfg: PipeConfig, u_bar_0: float, n: int = 256) -> StationaryProfile:
    """Construct the stationary profile anchored at inflow velocity u_bar_0.

    Parameters
    ----------
    cfg : pipe configuration
    u_bar_0 : inflow velocity, in (0, gamma*a)
    n : number of grid cells; the profile is sampled on n+1 uniform points

    Raises
    ------
    ValueError
        If the anchor is out of range or the closed form would go sonic
        before x = L (the message reports the admissible maximal length).
    """
    if not (0.0 < u_bar_0 < cfg.gamma * cfg.a):
        raise ValueError(f"u_bar_0 must lie in (0, gamma*a) = (0, {cfg.gamma * cfg.a})")
    x_max = admissible_max_length(cfg, u_bar_0)
    if cfg.L > x_max:
        raise ValueError(
            f"profile goes sonic before x = L = {cfg.L}; admissible maximal length is {x_max:.6g}"
        )
    xi0 = (cfg.a / u_bar_0) ** 2
    c_bar = float(np.log(xi0) - xi0)
    xs = np.linspace(0.0, cfg.L, n + 1)
    target = xi0 - np.log(xi0) - cfg.theta * xs
    xi = _xi_from_target(target)
    u_bar = cfg.a / np.sqrt(xi)
    u_bar = u_bar.copy()
    u_bar[0] = u_bar_0  # anchor exactly
    a2 = cfg.a**2
    u_bar_x = 0.5 * cfg.theta * u_bar**3 / (a2 - u_bar**2)
    u_bar_xx = 0.25 * cfg.theta**2 * u_bar**5 * (3.0 * a2 - u_bar**2) / (a2 - u_bar**2) ** 3
    return StationaryProfile(
        cfg=cfg,
        u_bar_0=u_bar_0,
        c_bar=c_bar,
        xs=xs,
        u_bar=u_bar,
        u_bar_x=u_bar_x,
        u_bar_xx=u_bar_xx,
        at_branch_point=bool(abs(cfg.L - x_max) <= 1e-12 * max(1.0, abs(x_max))),
    )


def zero_profile(cfg: PipeConfig, n: int = 256) -> StationaryProfile:
    """Identically-zero stationary state (the only admissible constant one)."""
    xs = np.linspace(0.0, cfg.L, n + 1)
    z = np.zeros(n + 1)
    return StationaryProfile(
        cfg=cfg, u_bar_0=0.0, c_bar=float("-inf"), xs=xs,
        u_bar=z, u_bar_x=z.copy(), u_bar_xx=z.copy(),
    )


def stationary_density(profile: StationaryProfile, q_const: float) -> np.ndarray:
    """Stationary density q/ubar for a constant mass flux q > 0."""
    if q_const <= 0:
        raise ValueError("mass flux must be positive")
    if np.any(profile.u_bar <= 0):
        raise ValueError("profile velocity must be positive")
    return q_const / profile.u_bar


@dataclass(frozen=True)
class LambdaOdeReport:
    """Outcome of integrating the constant-lambda first-order equation."""

    xs: np.ndarray
    u: np.ndarray
    x_stop: float
    reached_end: bool
    monotone: str  # "increasing" | "decreasing" | "constant"


def general_lambda_ode(cfg: PipeConfig, u_bar_0: float, lam: float,
                       n_steps: int = 4096, x_end: float | None = None) -> LambdaOdeReport:
    """Integrate (a^2 - u^2) u' = lambda + (theta/2)|u|u^2 by classical RK4.

    Blow-up toward the sonic lines is reported (truncated trace, x_stop and
    the monotonicity case), never raised.  Exploratory only: non-zero lambda
    does not correspond to a steady physical flow.
    """
    if not abs(u_bar_0) < cfg.a:
        raise ValueError("anchor must be strictly subsonic")
    x_end = cfg.L if x_end is None else x_end
    a2 = cfg.a**2
    drive = lam + 0.5 * cfg.theta * abs(u_bar_0) * u_bar_0**2
    if drive > 0:
        monotone = "increasing"
    elif drive < 0:
        monotone = "decreasing"
    else:
        monotone = "constant"

    def rhs(u):
        return (lam + 0.5 * cfg.theta * abs(u) * u * u) / (a2 - u * u)

    h = x_end / n_steps
    xs = [0.0]
    us = [u_bar_0]
    u = u_bar_0
    guard = cfg.a * (1.0 - 1e-9)
    for i in range(n_steps):
        k1 = rhs(u)
        k2 = rhs(u + 0.5 * h * k1)
        k3 = rhs(u + 0.5 * h * k2)
        k4 = rhs(u + h * k3)
        u_new = u + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.isfinite(u_new) or abs(u_new) >= guard:
            return LambdaOdeReport(np.array(xs), np.array(us), xs[-1], False, monotone)
        u = u_new
        xs.append((i + 1) * h)
        us.append(u)
    return LambdaOdeReport(np.array(xs), np.array(us), xs[-1], True, monotone)
