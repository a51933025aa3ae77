"""Figure rendering for the report paths.

PNG companions to the delimited outputs; the CSV files remain the machine
contract and nothing downstream depends on these figures.
"""

from __future__ import annotations

import logging

import numpy as np

log = logging.getLogger("gasline.plots")


def _mpl():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def save_decay_figure(samples, mu: float, path: str) -> None:
    """Semilog energy trace with the certified envelope."""
    plt = _mpl()
    ts = np.array([s.t for s in samples])
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9.6, 3.6), constrained_layout=True)
    for name in ("e", "e1", "e2"):
        vals = np.array([getattr(s, name) for s in samples])
        ax0.semilogy(ts, np.maximum(vals, 1e-300), label=name.upper())
    ax0.semilogy(ts, np.maximum([s.envelope for s in samples], 1e-300), "k--",
                 label=f"envelope (mu={mu:.3g})")
    ax0.set_xlabel("t")
    ax0.set_ylabel("energy")
    ax0.legend(fontsize=8)
    ax0.set_title("weighted energy decay")

    for name in ("i1", "i2", "i3", "i1t", "i2t", "i3t"):
        ax1.plot(ts, [getattr(s, name) for s in samples], label=name.upper(), lw=0.9)
    ax1.set_xlabel("t")
    ax1.set_ylabel("dE/dt terms")
    ax1.legend(fontsize=7, ncol=2)
    ax1.set_title("decomposition of dE/dt")
    fig.savefig(path, dpi=130)
    plt.close(fig)
    log.info("wrote %s", path)


def save_profile_figure(xs, u_bar, u_bar_x, u_bar_xx, rho_bar, path: str) -> None:
    """Stationary velocity, its derivatives and the matching density."""
    plt = _mpl()
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9.6, 3.4), constrained_layout=True)
    ax0.plot(xs, u_bar, label="u_bar")
    ax0.plot(xs, u_bar_x, label="u_bar'")
    ax0.plot(xs, u_bar_xx, label="u_bar''")
    ax0.set_xlabel("x")
    ax0.legend(fontsize=8)
    ax0.set_title("stationary velocity")
    ax1.plot(xs, rho_bar, color="tab:red")
    ax1.set_xlabel("x")
    ax1.set_ylabel("rho_bar")
    ax1.set_title("stationary density")
    fig.savefig(path, dpi=130)
    plt.close(fig)
    log.info("wrote %s", path)


def save_sweep_figure(rows, param: str, path: str) -> None:
    """Certified rate vs fitted rate across the sweep."""
    plt = _mpl()
    xs = [r["param"] for r in rows]
    fig, ax = plt.subplots(figsize=(5.2, 3.4), constrained_layout=True)
    ax.plot(xs, [r["mu"] for r in rows], "o-", label="mu (certified)")
    fitted = [(x, r["mu_fit"]) for x, r in zip(xs, rows) if np.isfinite(r["mu_fit"])]
    if fitted:
        ax.plot([f[0] for f in fitted], [f[1] for f in fitted], "s--", label="mu_fit")
    ax.set_xlabel(param)
    ax.set_ylabel("decay rate")
    ax.legend(fontsize=8)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    log.info("wrote %s", path)
