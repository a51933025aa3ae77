import math

import numpy as np
import pytest

from gasline.certifier import find_eps2, k1_and_norm_constants, k1_fn, weights
from gasline.lyapunov import (
    chi_x,
    chi_x_completion_v1,
    chi_x_completion_v2,
    de_decomposition,
    e1,
    e2,
    norms,
    t_li,
)
from gasline.model import FieldSnapshot, PipeConfig
from gasline.stationary import build_profile

CFG = PipeConfig(a=1.0, theta=1.0, L=1.0, k=20.0, gamma=0.5)


@pytest.fixture(scope="module")
def profile():
    return build_profile(CFG, 1e-5, n=128)


def simpson(f, xs):
    """Composite Simpson oracle (odd point count)."""
    h = xs[1] - xs[0]
    return h / 3.0 * (f[0] + f[-1] + 4 * np.sum(f[1:-1:2]) + 2 * np.sum(f[2:-1:2]))


def synthetic_snapshot(n, amp=0.01):
    xs = np.linspace(0.0, CFG.L, n + 1)
    L = CFG.L
    u = amp * xs * (L - xs) * np.sin(3 * np.pi * xs / L) ** 2
    du = amp * ((L - 2 * xs) * np.sin(3 * np.pi * xs / L) ** 2
                + xs * (L - xs) * 2 * np.sin(3 * np.pi * xs / L) * np.cos(3 * np.pi * xs / L) * 3 * np.pi / L)
    ddu = np.gradient(du, xs, edge_order=2)
    ut = 0.5 * amp * np.sin(np.pi * xs / L) ** 2 * (L - xs)
    utx = 0.5 * amp * (np.pi / L * np.sin(2 * np.pi * xs / L) * (L - xs) - np.sin(np.pi * xs / L) ** 2)
    return FieldSnapshot(t=0.0, xs=xs, u=u, u_t=ut, u_x=du, u_xx=ddu, u_tx=utx)


# -- pointwise form and its completions -------------------------------------------

def test_chi_trivial_values(profile):
    assert chi_x(0.3, 0.0, 0.0, 0.0, CFG, profile) == 0.0
    h1, _ = weights(0.3, CFG)
    v2 = 0.7
    assert chi_x(0.3, 0.0, 0.0, v2, CFG, profile) == pytest.approx(h1 * v2**2, rel=1e-14)


def test_chi_three_forms_agree(profile):
    rng = np.random.default_rng(23)
    n = 10_000
    x = rng.uniform(0.0, CFG.L, n)
    v0 = rng.uniform(-0.4, 0.4, n)
    v1 = rng.uniform(-2.0, 2.0, n)
    v2 = rng.uniform(-2.0, 2.0, n)
    ubar = profile.value(x)
    h1, h2 = weights(x, CFG)
    k1 = k1_fn(x, v0, CFG, ubar)
    keep = k1 > h2**2 / h1  # the second completion divides by k1
    x, v0, v1, v2 = x[keep], v0[keep], v1[keep], v2[keep]
    direct = chi_x(x, v0, v1, v2, CFG, profile)
    c1 = chi_x_completion_v1(x, v0, v1, v2, CFG, profile)
    c2 = chi_x_completion_v2(x, v0, v1, v2, CFG, profile)
    scale = np.abs(direct) + np.abs(c1) + np.abs(c2) + CFG.k * (v1**2 + v2**2)
    assert np.max(np.abs(direct - c1) / scale) <= 1e-12
    assert np.max(np.abs(direct - c2) / scale) <= 1e-12


def test_chi_sonic_guard(profile):
    with pytest.raises(ValueError):
        chi_x(0.5, 1.2, 0.1, 0.1, CFG, profile)


# -- energy quadrature ----------------------------------------------------------------

def test_energy_zero_field(profile):
    snap = synthetic_snapshot(64, amp=0.0)
    assert e1(snap, CFG, profile) == 0.0
    assert e2(snap, CFG, profile) == 0.0
    dec = de_decomposition(snap, CFG, profile)
    assert dec.i1 == dec.i2 == dec.i3 == dec.i1t == dec.i2t == dec.i3t == 0.0


def test_energy_against_fine_simpson(profile):
    snap = synthetic_snapshot(1000)
    got = e1(snap, CFG, profile)
    # high-order oracle on a 10001-node grid of the same analytic field
    fine = synthetic_snapshot(10_000)
    ubar = profile.value(fine.xs)
    h1, h2 = weights(fine.xs, CFG)
    w = ubar + fine.u
    integrand = h1 * ((CFG.a**2 - w**2) * fine.u_x**2 + fine.u_t**2) \
        - 2 * h2 * (w * fine.u_x**2 + fine.u_t * fine.u_x)
    oracle = simpson(integrand, fine.xs)
    assert got == pytest.approx(oracle, rel=5e-6)


def test_energy_quadrature_order(profile):
    fine = synthetic_snapshot(12_800)
    ubar = profile.value(fine.xs)
    h1, h2 = weights(fine.xs, CFG)
    w = ubar + fine.u
    integrand = h1 * ((CFG.a**2 - w**2) * fine.u_x**2 + fine.u_t**2) \
        - 2 * h2 * (w * fine.u_x**2 + fine.u_t * fine.u_x)
    oracle = simpson(integrand, fine.xs)
    errs = [abs(e1(synthetic_snapshot(n), CFG, profile) - oracle) for n in (200, 400, 800)]
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) >= 1.9


# -- norms ---------------------------------------------------------------------------

def test_norms_zero_field():
    snap = synthetic_snapshot(64, amp=0.0)
    assert norms(snap) == (0.0, 0.0, 0.0, 0.0)


def test_norms_sine_closed_form():
    L = CFG.L
    xs = np.linspace(0.0, L, 4001)
    eps = 1e-3
    u = eps * np.sin(np.pi * xs / L)
    ux = eps * np.pi / L * np.cos(np.pi * xs / L)
    uxx = -eps * (np.pi / L) ** 2 * np.sin(np.pi * xs / L)
    z = np.zeros_like(xs)
    snap = FieldSnapshot(t=0.0, xs=xs, u=u, u_t=z, u_x=ux, u_xx=uxx, u_tx=z)
    h2_sq, h1t_sq, c1, l2 = norms(snap)
    # int sin^2 = L/2 etc.
    expect = eps**2 * (L / 2) * (1 + (np.pi / L) ** 2 + (np.pi / L) ** 4)
    assert h2_sq == pytest.approx(expect, rel=1e-6)
    assert h1t_sq == 0.0
    assert l2 == pytest.approx(eps**2 * L / 2, rel=1e-6)
    # max of |sin| + (pi/L)|cos| is sqrt(1 + (pi/L)^2)
    assert c1 == pytest.approx(eps * math.sqrt(1.0 + (np.pi / L) ** 2), rel=1e-4)


def test_poincare_on_synthetic_snapshots():
    # u(L) = 0 fields obey the length-weighted gradient bound
    rng = np.random.default_rng(31)
    xs = np.linspace(0.0, CFG.L, 801)
    for _ in range(20):
        coeffs = rng.normal(size=4)
        u = sum(c * np.sin((j + 1) * np.pi * xs / CFG.L) for j, c in enumerate(coeffs))
        ux = sum(c * (j + 1) * np.pi / CFG.L * np.cos((j + 1) * np.pi * xs / CFG.L)
                 for j, c in enumerate(coeffs))
        assert np.trapezoid(u**2, xs) <= 2 * CFG.L**2 * np.trapezoid(ux**2, xs) * (1 + 1e-6)


def test_t_li_includes_profile(profile):
    snap = synthetic_snapshot(128, amp=0.0)
    assert t_li(snap, profile) == pytest.approx(profile.sup_norm(), rel=1e-12)
    snap2 = synthetic_snapshot(128, amp=0.02)
    assert t_li(snap2, profile) >= np.max(np.abs(snap2.u_x))


# -- two-sided bounds ------------------------------------------------------------------

def test_lower_and_upper_bounds_pointwise(profile):
    eps2 = find_eps2(CFG, profile)
    k1, k1t, kmax, kmin = k1_and_norm_constants(CFG, profile, eps2)
    snap = synthetic_snapshot(400, amp=0.005)
    assert np.max(np.abs(snap.u)) <= eps2
    E1 = e1(snap, CFG, profile)
    E2 = e2(snap, CFG, profile)
    xs = snap.xs
    assert E1 >= k1 * np.trapezoid(snap.u_x**2, xs) * (1 - 1e-12)
    assert E1 >= k1t * np.trapezoid(snap.u_t**2, xs) * (1 - 1e-12)
    assert E2 >= k1 * np.trapezoid(snap.u_xx**2, xs) * (1 - 1e-12)
    assert E2 >= k1t * np.trapezoid(snap.u_tx**2, xs) * (1 - 1e-12)
    total = E1 + E2
    deriv_norms = np.trapezoid(snap.u_x**2 + snap.u_t**2 + snap.u_tx**2 + snap.u_xx**2, xs)
    all_norms = deriv_norms + np.trapezoid(snap.u**2, xs)
    assert kmin * deriv_norms <= total * (1 + 1e-12)
    assert total <= kmax * all_norms * (1 + 1e-12)


def test_upper_bound_weighted_forms(profile):
    # both energy parts are dominated by the pivot-weighted and the
    # speed-weighted quadratic forms
    snap = synthetic_snapshot(400, amp=0.005)
    xs = snap.xs
    ubar = profile.value(xs)
    h1, h2 = weights(xs, CFG)
    k1v = k1_fn(xs, snap.u, CFG, ubar)
    w = ubar + snap.u
    E1 = e1(snap, CFG, profile)
    b1 = np.trapezoid((k1v + h2**2 / h1) * snap.u_x**2 + 2 * h1 * snap.u_t**2, xs)
    b2 = np.trapezoid(2 * h1 * (CFG.a**2 - w**2) * snap.u_x**2 + 2 * h1 * snap.u_t**2, xs)
    assert E1 <= b1 * (1 + 1e-12)
    assert E1 <= b2 * (1 + 1e-12)
    E2 = e2(snap, CFG, profile)
    b1t = np.trapezoid((k1v + h2**2 / h1) * snap.u_xx**2 + 2 * h1 * snap.u_tx**2, xs)
    b2t = np.trapezoid(2 * h1 * (CFG.a**2 - w**2) * snap.u_xx**2 + 2 * h1 * snap.u_tx**2, xs)
    assert E2 <= b1t * (1 + 1e-12)
    assert E2 <= b2t * (1 + 1e-12)
