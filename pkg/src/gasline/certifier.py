"""Machine-checked certificate for the exponential-decay guarantee.

Every hypothesis under which the closed-loop deviation system is certified to decay is
turned into a named numerical condition with an explicit margin, and every
constant that the guarantee produces (weighted-norm equivalence constants,
boundary-matrix radii, decay rate, reduction times) is computed and reported.

The certificate is conditional on a user-supplied design bound for the
running sup-norm of (deviation, its first derivatives, profile, profile
slope); the solver monitors the realized value of that quantity against the
bound during a run.  Reports are deterministic: identical inputs produce
identical bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import PipeConfig
from .stationary import StationaryProfile

__all__ = [
    "weights",
    "k1_fn",
    "check_weight_inequalities",
    "b11",
    "matrix_b3",
    "c_g",
    "c_g_from_slope",
    "matrix_a3",
    "find_eps1",
    "find_eps2",
    "k1_and_norm_constants",
    "p0",
    "p1",
    "k_partial",
    "c_e1",
    "ConditionEntry",
    "CertificateReport",
    "check_decay_conditions",
    "report_to_json",
]

EPS_CAP_FRACTION = 0.45  # search caps for the eps1/eps2 radii, in units of a
A3_PUNCTURE = 1e-12      # relative puncture around 0 where c_g is singular


def weights(x, cfg: PipeConfig):
    """Weight pair of the energy functional: (|k|, exp(-x/L))."""
    return abs(cfg.k), np.exp(-np.asarray(x, dtype=float) / cfg.L)


def k1_fn(x, v0, cfg: PipeConfig, ubar):
    """Quadratic-form pivot h1*(a^2-(ubar+v0)^2) - 2*h2*(ubar+v0)."""
    h1, h2 = weights(x, cfg)
    w = ubar + v0
    return h1 * (cfg.a**2 - w**2) - 2.0 * h2 * w


@dataclass(frozen=True)
class ConditionEntry:
    """One certified inequality: lhs (<=|<) rhs with margin = rhs - lhs."""

    name: str
    lhs: float
    rhs: float
    passed: bool

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


def _entry(name: str, lhs: float, rhs: float, strict: bool = True) -> ConditionEntry:
    ok = lhs < rhs if strict else lhs <= rhs
    return ConditionEntry(name=name, lhs=float(lhs), rhs=float(rhs), passed=bool(ok))


def check_weight_inequalities(cfg: PipeConfig, profile: StationaryProfile,
                              n_scan: int = 1001) -> list[ConditionEntry]:
    """Pointwise weight dominance and the profile-smallness supremum.

    Checks h2 < (a - ubar) h1 on a scan grid, and
    sup ubar (a^2-ubar^2)/(a^2+3 ubar^2) < 1/(2 e k).  Margins are taken at
    the worst scan point.
    """
    xs = np.linspace(0.0, cfg.L, n_scan)
    ub = profile.value(xs)
    h1, h2 = weights(xs, cfg)
    lhs_a = float(np.max(h2 - (cfg.a - ub) * h1))
    sup = float(np.max(ub * (cfg.a**2 - ub**2) / (cfg.a**2 + 3.0 * ub**2)))
    return [
        _entry("weight_h2_dominated", lhs_a, 0.0),
        _entry("ubar_smallness_sup", sup, 1.0 / (2.0 * math.e * cfg.k)),
    ]


def b11(z, cfg: PipeConfig):
    """Leading entry of the inflow boundary matrix."""
    g = 1.0 + 2.0 * z * cfg.k
    return g - g**2 / (cfg.k**2 * (cfg.a**2 - z**2))


def matrix_b3(z: float, cfg: PipeConfig, upsilon: float) -> np.ndarray:
    """Symmetric 2x2 matrix controlling the inflow boundary terms."""
    if abs(z) >= cfg.a:
        raise ValueError("matrix only defined strictly inside the sonic interval")
    if upsilon <= cfg.k**2:
        raise ValueError("upsilon must exceed k^2")
    d = cfg.a**2 - z**2
    off = (1.0 + 2.0 * z * cfg.k) / (cfg.k * d) - cfg.k
    return np.array([[b11(z, cfg), off], [off, upsilon - 1.0 / d]])


def c_g(z, cfg: PipeConfig):
    """Outflow quadratic-gain coefficient; singular at z = 0."""
    z = np.asarray(z, dtype=float)
    d = cfg.a**2 - z**2
    bracket = 2.0 + 1.5 * cfg.theta * z + 2.0 * cfg.theta * z**3 / d
    with np.errstate(divide="ignore"):
        return d / (math.e * z**2 * bracket**2)


def c_g_from_slope(z: float, ubar_x_L: float, cfg: PipeConfig) -> float:
    """Equivalent outflow gain written with the profile slope at x = L."""
    d = cfg.a**2 - z**2
    return d / (math.e * z**2 * (1.5 * cfg.theta * z + 4.0 * abs(ubar_x_L) + 2.0) ** 2)


def matrix_a3(z: float, cfg: PipeConfig) -> np.ndarray:
    """Symmetric 2x2 matrix controlling the outflow boundary terms."""
    if abs(z) >= cfg.a:
        raise ValueError("matrix only defined strictly inside the sonic interval")
    if z == 0.0:
        raise ValueError("outflow matrix is singular at z = 0")
    d = cfg.a**2 - z**2
    inv_e = 1.0 / math.e
    lead = inv_e * (cfg.a**2 + 3.0 * z**2) / d - 2.0 * cfg.k * z
    off = cfg.k - inv_e * 2.0 * z / d
    return np.array([[lead, off], [off, float(c_g(z, cfg)) + inv_e / d]])


def _boundary_matrices_ok(z: float, cfg: PipeConfig, upsilon: float) -> bool:
    """Positivity scan predicate: leading entries and determinants positive."""
    d = cfg.a**2 - z**2
    if d <= 0:
        return False
    g = 1.0 + 2.0 * z * cfg.k
    b = g - g**2 / (cfg.k**2 * d)
    if not b > 0.0:
        return False
    off_b = g / (cfg.k * d) - cfg.k
    if not b * (upsilon - 1.0 / d) - off_b**2 > 0.0:
        return False
    if abs(z) >= A3_PUNCTURE * cfg.a:
        inv_e = 1.0 / math.e
        lead = inv_e * (cfg.a**2 + 3.0 * z**2) / d - 2.0 * cfg.k * z
        if not lead > 0.0:
            return False
        cg = float(c_g(z, cfg))
        off_a = cfg.k - inv_e * 2.0 * z / d
        if not lead * (cg + inv_e / d) - off_a**2 > 0.0:
            return False
    return True


def find_eps1(cfg: PipeConfig, upsilon: float | None = None,
              n_scan: int = 1001, bisect_iters: int = 60) -> float:
    """Largest radius eps1 <= 0.45a such that both boundary matrices are
    positive definite for all |z| <= 2*eps1.

    A sign scan over n_scan symmetric grid points locates the first failure;
    bisection refines the boundary.  Returns 0.0 when no positive radius
    exists.
    """
    if upsilon is None:
        upsilon = 2.0 * cfg.k**2
    cap = 2.0 * EPS_CAP_FRACTION * cfg.a
    zs = np.linspace(-cap, cap, n_scan)
    order = np.argsort(np.abs(zs), kind="stable")
    r_bad = None
    for idx in order:
        if not _boundary_matrices_ok(float(zs[idx]), cfg, upsilon):
            r_bad = abs(float(zs[idx]))
            break
    if r_bad is None:
        return 0.5 * cap
    if r_bad == 0.0 or not _boundary_matrices_ok(0.0, cfg, upsilon):
        return 0.0
    lo, hi = 0.0, r_bad
    for _ in range(bisect_iters):
        mid = 0.5 * (lo + hi)
        if _boundary_matrices_ok(mid, cfg, upsilon) and _boundary_matrices_ok(-mid, cfg, upsilon):
            lo = mid
        else:
            hi = mid
    return 0.5 * lo


def _k_minima(cfg: PipeConfig, profile: StationaryProfile, eps2: float,
              n_x: int, n_v: int) -> tuple[float, float, float]:
    """(K1, K1_tilde, K_sup) over the x times v0 tensor grid.

    K_sup is the grid maximum of k1 + h2^2/h1, an ingredient of K_max.
    """
    xs = np.linspace(0.0, cfg.L, n_x)
    ub = profile.value(xs)
    h1, h2 = weights(xs, cfg)
    v0 = np.linspace(-eps2, eps2, n_v)
    w = ub[:, None] + v0[None, :]
    k1 = h1 * (cfg.a**2 - w**2) - 2.0 * h2[:, None] * w
    corr = (h2**2 / h1)[:, None]
    k1_min = np.min(k1 - corr)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(k1 > 0.0, (h1 * k1 - h2[:, None] ** 2) / np.where(k1 > 0.0, k1, 1.0), -np.inf)
    return float(k1_min), float(np.min(ratio)), float(np.max(k1 + corr))


def find_eps2(cfg: PipeConfig, profile: StationaryProfile,
              n_x: int = 1001, n_v: int = 1001, bisect_iters: int = 40) -> float:
    """Largest deviation radius eps2 <= 0.45a keeping both weighted-norm
    minima positive (monotone in eps2, so plain bisection)."""
    cap = EPS_CAP_FRACTION * cfg.a

    def ok(e):
        kmin, ktmin, _ = _k_minima(cfg, profile, e, n_x, n_v)
        return kmin > 0.0 and ktmin > 0.0

    if ok(cap):
        return cap
    if not ok(0.0):
        return 0.0
    lo, hi = 0.0, cap
    for _ in range(bisect_iters):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def k1_and_norm_constants(cfg: PipeConfig, profile: StationaryProfile, eps2: float,
                          n_x: int = 1001, n_v: int = 1001) -> tuple[float, float, float, float]:
    """(K1, K1_tilde, K_max, K_min) at a given deviation radius."""
    k1_min, kt_min, k_sup = _k_minima(cfg, profile, eps2, n_x, n_v)
    k_max = max(2.0 * cfg.k, k_sup)
    k_min = 0.5 * min(k1_min, kt_min)
    return k1_min, kt_min, k_max, k_min


def _check_p_domain(t: float, cfg: PipeConfig):
    if not 0.0 <= t < cfg.a:
        raise ValueError("argument must lie in [0, a)")


def p0(t: float, cfg: PipeConfig) -> float:
    """First remainder-budget polynomial; continuous, vanishes at 0."""
    _check_p_domain(t, cfg)
    a2 = cfg.a**2
    th = cfg.theta
    k = cfg.k
    d = a2 - t * t
    half = 1.0 + 0.5 * th
    bracket = (
        th**2 * (3 * a2**2 * t**4 + 2 * a2 * t**6 + t**8) / (2 * d**3)
        + th * a2 * t / d
        + th * (t**4 + 3 * a2 * t**2) / (2 * d)
        + th**2 * (2 * t**7 + 3 * a2 * t**5 + 3 * a2**2 * t**3) * t / (4 * d**3)
        + 2 * t**2
        + th * (3 * a2 * t + t**3) * t / d
        + 2 * t
        + 2 * t**2
        + 1.5 * th * t**2
        + th * t
    )
    return (
        4 * k * t**2
        + 2 * k * half * t
        + 4 * k * half * t**2
        + 2 * t
        + 4 * half * t**2
        + 2 * (k + 1) * bracket
    )


def p1(t: float, cfg: PipeConfig) -> float:
    """Second remainder-budget polynomial; continuous, vanishes at 0."""
    _check_p_domain(t, cfg)
    a = cfg.a
    a2 = a * a
    th = cfg.theta
    k = cfg.k
    d = a2 - t * t
    bracket = (
        th**3 * (9 * a2**3 * t**2 + 2 * t**9 + 6 * a2**2 * t**5 + 11 * a2 * t**7) * t / (8 * d**4)
        + th**2 * (t**7 + 6 * a2**2 * t**3 + 3 * a**7) * t / (2 * d**3)
        + th * t**3 * t / d
        + 4 * t**2
        + th * (3 * a2 * t + t**3) * 2 * t / d
        + th**3 * (6 * a2**3 * t**6 + 4 * a2 * t**10 + t**12 + 3 * a2**2 * t**8) / (2 * d**5)
        + th**2 * (a2**2 * t**3 + a2 * t**5) / (2 * d**3)
        + th**2 * 3 * a2**2 * t**4 / d**3
        + th * a2 * t / d
        + th * (3 * a2 * t**2 + t**4) / (2 * d)
        + 2 * t
        + 2 * t
        + 2 * t**2
        + 4 * t**2
        + 3 * th * t**2
        + 1.5 * th * t**2
        + th * t
        + th * t
    )
    return 8 * t + 2 * t + 8 * t**2 + 4 * k * t**2 + 4 * k * t + 2 * (k + 1) * bracket


def k_partial(cfg: PipeConfig, ubar0: float) -> float:
    """Squared inflow-source gain against the slope trace."""
    if abs(ubar0) >= cfg.a:
        raise ValueError("anchor velocity must be strictly subsonic")
    a2 = cfg.a**2
    th = cfg.theta
    k = cfg.k
    d = a2 - ubar0**2
    bracket = (
        4.0 / k**2
        + 2.0 * ubar0 / k
        + th * (ubar0**4 + 3 * a2 * ubar0**2 + (2.0 / k) * a2 * ubar0) / (2 * d)
        + 2.5 * th / k**2
        + (th / k) * (3 * a2 * ubar0 - ubar0**3) / d
    )
    return 2.0 * bracket**2


def c_e1(cfg: PipeConfig, ubar0: float) -> float:
    """Squared inflow-source gain against the state trace (order ubar0^6)."""
    if abs(ubar0) >= cfg.a:
        raise ValueError("anchor velocity must be strictly subsonic")
    a2 = cfg.a**2
    th = cfg.theta
    k = cfg.k
    d = a2 - ubar0**2
    num = (
        6 * k * a2**2 * ubar0**4
        - 4 * k * a2 * ubar0**6
        + 2 * k * ubar0**8
        + 2 * ubar0**7
        - 3 * a2 * ubar0**5
        + 3 * a2**2 * ubar0**3
    )
    return 2.0 * (th**4 / k**2) * (num / (4 * d**3)) ** 2


@dataclass(frozen=True)
class CertificateReport:
    """Named-condition ledger plus all derived constants."""

    cfg: PipeConfig
    profile_summary: dict
    t_li_bound: float
    upsilon: float
    conditions: list[ConditionEntry]
    constants: dict
    notes: list[str]
    passed: bool

    def condition(self, name: str) -> ConditionEntry:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def failing(self) -> list[str]:
        return [c.name for c in self.conditions if not c.passed]


def check_decay_conditions(cfg: PipeConfig, profile: StationaryProfile,
                             t_li_bound: float) -> CertificateReport:
    """Evaluate every decay-certificate hypothesis and all derived constants.

    ``t_li_bound`` is the design bound on the running sup-norm of
    {|u|, |u_x|, |u_t|, ubar, ubar'}; the remainder budget is evaluated at
    this bound and the solver later monitors the realized value against it.
    Failures are recorded as entries, never raised.
    """
    if not 0.0 <= t_li_bound < cfg.a:
        raise ValueError("t_li_bound must lie in [0, a)")
    e = math.e
    ubar_sup = profile.sup_norm()
    ubar_slope_sup = profile.slope_sup_norm()
    ubar0 = profile.u_bar_0
    ubar_L = float(profile.value(cfg.L)) if ubar0 > 0 else 0.0
    upsilon = 2.0 * cfg.k**2
    notes = []

    conditions = [
        _entry("c2c1", 1.0 / (cfg.a * cfg.k), 1.0 - cfg.gamma),
        _entry("ubar_subsonic_margin", ubar_sup, cfg.gamma * cfg.a),
    ]
    eps1 = find_eps1(cfg, upsilon)
    conditions.append(_entry("eps1_positive", 0.0, eps1))
    conditions.append(_entry("ubar_below_eps1", ubar_sup, eps1))
    conditions.extend(check_weight_inequalities(cfg, profile))

    eps2 = find_eps2(cfg, profile)
    conditions.append(_entry("eps2_positive", 0.0, eps2))
    k1_min, kt_min, k_max, k_min = k1_and_norm_constants(cfg, profile, eps2)

    kp = k_partial(cfg, ubar0) if ubar0 > 0 else 2.0 * (4.0 / cfg.k**2 + 2.5 * cfg.theta / cfg.k**2) ** 2
    rhs_kp = cfg.a**2 - (ubar0 + 2.0 / cfg.k) ** 2
    conditions.append(_entry("kpartial", 2.0 * cfg.k**2 * kp, rhs_kp, strict=False))

    ce1 = c_e1(cfg, ubar0) if ubar0 > 0 else 0.0
    budget = (p0(t_li_bound, cfg) + p1(t_li_bound, cfg)) * (1.0 + cfg.L**2)
    if k1_min > 0 and kt_min > 0:
        kappa = budget * (1.0 / k1_min + 1.0 / kt_min) + 2.0 * cfg.k**2 * ce1 * cfg.L / k1_min
    else:
        kappa = float("inf")
        notes.append("weighted-norm minima nonpositive; remainder budget undefined")
    floor = 1.0 / (4.0 * e * cfg.L * cfg.k)
    conditions.append(_entry("kappa", kappa, floor, strict=False))
    mu = 1.0 / (2.0 * e * cfg.L * cfg.k) - kappa
    conditions.append(_entry("mu_floor", floor, mu, strict=False))

    # reduction-time and norm-equivalence constants
    if k_min > 0:
        t0_third = 4.0 * e * cfg.L * cfg.k * math.log(9.0 * (1.0 + 2.0 * cfg.L**2) * k_max / k_min)
        tau1 = k_min / (1.0 + 2.0 * cfg.L**2)
        tau2 = k_max
        eta1 = 2.0 * math.sqrt(tau2 / tau1)
    else:
        t0_third = float("inf")
        tau1 = 0.0
        tau2 = k_max
        eta1 = float("inf")
    # explicit embedding constant for the pointwise norm (states vanish at x=L)
    eta2 = (1.0 + math.sqrt(1.0 + 1.0 / cfg.L)) * eta1
    t_half = 8.0 * e * cfg.L * cfg.k * math.log(2.0 * max(eta1, eta2)) if np.isfinite(eta1) else float("inf")

    if ubar0 > 0:
        cg_direct = float(c_g(ubar_L, cfg))
        cg_slope = c_g_from_slope(ubar_L, float(profile.slope(cfg.L)), cfg)
        if abs(cg_direct - cg_slope) > 1e-12 * abs(cg_direct):
            notes.append("outflow gain cross-check mismatch beyond 1e-12")
    else:
        cg_direct = float("inf")
        notes.append("zero profile: outflow gain singular at 0 (limit +inf)")
    notes.append("outflow matrix scan punctured at 0 where the gain diverges")
    if profile.at_branch_point:
        notes.append("profile length sits exactly at the closed-form branch point")
    t_li_covers = t_li_bound >= max(ubar_sup, ubar_slope_sup)
    if not t_li_covers:
        notes.append("t_li_bound is below the profile sup-norms; no run can satisfy the monitor")

    constants = {
        "K1": k1_min,
        "K1_tilde": kt_min,
        "K_max": k_max,
        "K_min": k_min,
        "eps1": eps1,
        "eps2": eps2,
        "kappa": kappa,
        "mu": mu,
        "K_partial": kp,
        "C_E1": ce1,
        "C_g_at_L": cg_direct,
        "T0_third": t0_third,
        "T_half": t_half,
        "eta1": eta1,
        "eta2": eta2,
        "tau1": tau1,
        "tau2": tau2,
    }
    passed = all(c.passed for c in conditions)
    profile_summary = {
        "u_bar_0": ubar0,
        "c_bar": profile.c_bar,
        "u_bar_sup": ubar_sup,
        "u_bar_slope_sup": ubar_slope_sup,
        "at_branch_point": profile.at_branch_point,
        "t_li_bound_covers_profile": t_li_covers,
    }
    return CertificateReport(
        cfg=cfg,
        profile_summary=profile_summary,
        t_li_bound=t_li_bound,
        upsilon=upsilon,
        conditions=conditions,
        constants=constants,
        notes=notes,
        passed=passed,
    )


def _json_scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        if math.isnan(v):
            return '"nan"'
        if math.isinf(v):
            return '"inf"' if v > 0 else '"-inf"'
        return f"{v:.17g}"
    return '"' + str(v).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _json_value(v, indent: int) -> str:
    pad = " " * indent
    if isinstance(v, dict):
        if not v:
            return "{}"
        rows = [f'{pad}  "{k}": {_json_value(val, indent + 2)}' for k, val in v.items()]
        return "{\n" + ",\n".join(rows) + "\n" + pad + "}"
    if isinstance(v, (list, tuple)):
        if not v:
            return "[]"
        rows = [f"{pad}  {_json_value(val, indent + 2)}" for val in v]
        return "[\n" + ",\n".join(rows) + "\n" + pad + "]"
    return _json_scalar(v)


def report_to_json(report: CertificateReport) -> str:
    """Serialize a report with fixed key order and 17-significant-digit
    floats; byte-identical across invocations on identical inputs."""
    doc = {
        "format": "gasline-certificate/1",
        "pipe": {
            "a": report.cfg.a,
            "theta": report.cfg.theta,
            "L": report.cfg.L,
            "k": report.cfg.k,
            "gamma": report.cfg.gamma,
        },
        "profile": report.profile_summary,
        "t_li_bound": report.t_li_bound,
        "upsilon": report.upsilon,
        "conditions": [
            {"name": c.name, "lhs": c.lhs, "rhs": c.rhs, "margin": c.margin, "pass": c.passed}
            for c in report.conditions
        ],
        "constants": report.constants,
        "notes": list(report.notes),
        "pass": report.passed,
    }
    return _json_value(doc, 0) + "\n"
