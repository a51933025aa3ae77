"""Weighted energy functional of the closed-loop deviation system.

The functional is a weighted quadratic form in the deviation derivatives,

    E = E1 + E2,
    E1 = int chi(u, u_x, u_t),   E2 = int chi(u, u_xx, u_tx),

with the pointwise form chi defined through the weights (|k|, exp(-x/L)).
This module evaluates E1, E2, the Sobolev-type norms, the running sup-bound,
and the boundary/interior decomposition of dE/dt used by the run monitors.
Quadrature is composite trapezoid on the snapshot grid, matching the
solver's second-order accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .certifier import weights
from .model import FieldSnapshot, PipeConfig, source_f_arrays, source_f_x
from .stationary import StationaryProfile

__all__ = [
    "chi_x",
    "chi_x_completion_v1",
    "chi_x_completion_v2",
    "e1",
    "e2",
    "norms",
    "t_li",
    "DeDecomposition",
    "de_decomposition",
    "LyapunovSample",
    "evaluate_sample",
]


def chi_x(x, v0, v1, v2, cfg: PipeConfig, profile: StationaryProfile):
    """Pointwise energy form at position x; direct (authoritative) form."""
    ubar = profile.value(x)
    h1, h2 = weights(x, cfg)
    w = ubar + v0
    if np.any(np.abs(w) >= cfg.a):
        raise ValueError("total velocity at or beyond the sonic line")
    return h1 * ((cfg.a**2 - w**2) * v1**2 + v2**2) - 2.0 * h2 * (w * v1**2 + v1 * v2)


def _k1_of(x, v0, cfg, profile):
    ubar = profile.value(x)
    h1, h2 = weights(x, cfg)
    w = ubar + v0
    return h1 * (cfg.a**2 - w**2) - 2.0 * h2 * w, h1, h2


def chi_x_completion_v1(x, v0, v1, v2, cfg: PipeConfig, profile: StationaryProfile):
    """Square-completed form isolating the v1 direction (test-only)."""
    k1, h1, h2 = _k1_of(x, v0, cfg, profile)
    return (k1 - h2**2 / h1) * v1**2 + (np.sqrt(h1) * v2 - h2 / np.sqrt(h1) * v1) ** 2


def chi_x_completion_v2(x, v0, v1, v2, cfg: PipeConfig, profile: StationaryProfile):
    """Square-completed form isolating the v2 direction; needs k1 != 0."""
    k1, h1, h2 = _k1_of(x, v0, cfg, profile)
    return (h1 * k1 - h2**2) / k1 * v2**2 + (k1 * v1 - h2 * v2) ** 2 / k1


def _grid_data(snapshot: FieldSnapshot, cfg: PipeConfig, profile: StationaryProfile):
    ubar, ubar_x = profile.on_grid(snapshot.xs)
    h1, h2 = weights(snapshot.xs, cfg)
    return ubar, ubar_x, h1, h2


def e1(snapshot: FieldSnapshot, cfg: PipeConfig, profile: StationaryProfile) -> float:
    """First-derivative part of the energy (trapezoid quadrature)."""
    ubar, _, h1, h2 = _grid_data(snapshot, cfg, profile)
    w = ubar + snapshot.u
    integrand = h1 * ((cfg.a**2 - w**2) * snapshot.u_x**2 + snapshot.u_t**2) - 2.0 * h2 * (
        w * snapshot.u_x**2 + snapshot.u_t * snapshot.u_x
    )
    return float(np.trapezoid(integrand, snapshot.xs))


def e2(snapshot: FieldSnapshot, cfg: PipeConfig, profile: StationaryProfile) -> float:
    """Second-derivative part of the energy (trapezoid quadrature)."""
    ubar, _, h1, h2 = _grid_data(snapshot, cfg, profile)
    w = ubar + snapshot.u
    integrand = h1 * ((cfg.a**2 - w**2) * snapshot.u_xx**2 + snapshot.u_tx**2) - 2.0 * h2 * (
        w * snapshot.u_xx**2 + snapshot.u_tx * snapshot.u_xx
    )
    return float(np.trapezoid(integrand, snapshot.xs))


def norms(snapshot: FieldSnapshot) -> tuple[float, float, float, float]:
    """(squared H2 norm of u, squared H1 norm of u_t, composite C1 norm,
    squared L2 norm of u)."""
    xs = snapshot.xs
    h2_sq = float(np.trapezoid(snapshot.u**2 + snapshot.u_x**2 + snapshot.u_xx**2, xs))
    h1t_sq = float(np.trapezoid(snapshot.u_t**2 + snapshot.u_tx**2, xs))
    c1 = float(max(np.max(np.abs(snapshot.u) + np.abs(snapshot.u_x)), np.max(np.abs(snapshot.u_t))))
    l2 = float(np.trapezoid(snapshot.u**2, xs))
    return h2_sq, h1t_sq, c1, l2


def t_li(snapshot: FieldSnapshot, profile: StationaryProfile) -> float:
    """Running sup-bound max{|u|, |u_x|, |u_t|, ubar, |ubar'|} on the grid."""
    ubar, ubar_x = profile.on_grid(snapshot.xs)
    return float(
        max(
            np.max(np.abs(snapshot.u)),
            np.max(np.abs(snapshot.u_x)),
            np.max(np.abs(snapshot.u_t)),
            np.max(np.abs(ubar)),
            np.max(np.abs(ubar_x)),
        )
    )


@dataclass(frozen=True)
class DeDecomposition:
    """Interior/boundary split of dE/dt, first- and second-derivative parts.

    ``i3_L``/``i3_0`` are the closed boundary expressions obtained from the
    boundary conditions; ``i3`` itself is the raw bracket difference, so a
    broken boundary enforcement shows up as a mismatch rather than being
    masked.
    """

    i1: float
    i2: float
    i3: float
    i1t: float
    i2t: float
    i3t: float
    i3_L: float
    i3_0: float

    def total(self) -> float:
        return self.i1 + self.i2 + self.i3 + self.i1t + self.i2t + self.i3t


def de_decomposition(snapshot: FieldSnapshot, cfg: PipeConfig,
                     profile: StationaryProfile) -> DeDecomposition:
    """Decompose dE/dt into weight-decay, remainder and boundary terms."""
    xs = snapshot.xs
    u, ut, ux, uxx, utx = snapshot.u, snapshot.u_t, snapshot.u_x, snapshot.u_xx, snapshot.u_tx
    ubar, ubar_x, h1, h2 = (*profile.on_grid(xs), *weights(xs, cfg))
    w = ubar + u
    if np.any(np.abs(w) >= cfg.a):
        raise ValueError("total velocity at or beyond the sonic line")
    a2 = cfg.a**2
    d = a2 - w**2
    h2x = -h2 / cfg.L
    slope_tot = ubar_x + ux

    f_val = source_f_arrays(u, ux, ut, ubar, ubar_x, cfg)
    fx_val = source_f_x(u, ux, ut, uxx, utx, ubar, cfg)

    i1 = float(np.trapezoid(h2x * (d * ux**2 + ut**2), xs))
    i2 = float(
        np.trapezoid(
            2.0 * h1 * slope_tot * ut**2
            - 2.0 * h1 * w * ut * ux**2
            + 4.0 * h1 * w * slope_tot * ux * ut
            + 2.0 * h1 * f_val * ut
            - 2.0 * h2 * ut * ux**2
            - 2.0 * h2 * w * slope_tot * ux**2
            - 2.0 * h2 * f_val * ux,
            xs,
        )
    )
    bracket = d * (2.0 * h1 * ux * ut - h2 * ux**2) - (2.0 * h1 * w + h2) * ut**2
    i3 = float(bracket[-1] - bracket[0])

    i1t = float(np.trapezoid(h2x * (d * uxx**2 + utx**2), xs))
    i2t = float(
        np.trapezoid(
            4.0 * h2 * slope_tot * uxx * utx
            - 2.0 * h2 * ut * uxx**2
            + 2.0 * h2 * w * slope_tot * uxx**2
            - 2.0 * h2 * fx_val * uxx
            - 2.0 * h1 * w * ut * uxx**2
            - 2.0 * h1 * slope_tot * utx**2
            + 2.0 * h1 * fx_val * utx,
            xs,
        )
    )
    bracket_t = d * (2.0 * h1 * uxx * utx - h2 * uxx**2) - (2.0 * h1 * w + h2) * utx**2
    i3t = float(bracket_t[-1] - bracket_t[0])

    ubar_L = ubar[-1]
    i3_L = float(-(a2 - ubar_L**2) * np.exp(-1.0) * ux[-1] ** 2)
    i3_0 = float((a2 - (w[0] + 1.0 / cfg.k) ** 2) * ux[0] ** 2)
    return DeDecomposition(i1=i1, i2=i2, i3=i3, i1t=i1t, i2t=i2t, i3t=i3t,
                           i3_L=i3_L, i3_0=i3_0)


@dataclass(frozen=True)
class LyapunovSample:
    """One trace row: time, energies, norms, dE/dt terms and the certified
    decay envelope."""

    t: float
    e1: float
    e2: float
    e: float
    h2_sq: float
    h1t_sq: float
    c1: float
    i1: float
    i2: float
    i3: float
    i1t: float
    i2t: float
    i3t: float
    envelope: float

    CSV_HEADER = "t,E1,E2,E,H2_sq,H1t_sq,C1,I1,I2,I3,I1t,I2t,I3t,envelope"

    def csv_row(self) -> str:
        vals = (self.t, self.e1, self.e2, self.e, self.h2_sq, self.h1t_sq, self.c1,
                self.i1, self.i2, self.i3, self.i1t, self.i2t, self.i3t, self.envelope)
        return ",".join(f"{v:.17g}" for v in vals)


def evaluate_sample(snapshot: FieldSnapshot, cfg: PipeConfig, profile: StationaryProfile,
                    envelope: float) -> LyapunovSample:
    """Assemble one trace row from a snapshot."""
    v1 = e1(snapshot, cfg, profile)
    v2 = e2(snapshot, cfg, profile)
    h2_sq, h1t_sq, c1, _ = norms(snapshot)
    dec = de_decomposition(snapshot, cfg, profile)
    return LyapunovSample(
        t=snapshot.t, e1=v1, e2=v2, e=v1 + v2, h2_sq=h2_sq, h1t_sq=h1t_sq, c1=c1,
        i1=dec.i1, i2=dec.i2, i3=dec.i3, i1t=dec.i1t, i2t=dec.i2t, i3t=dec.i3t,
        envelope=envelope,
    )
