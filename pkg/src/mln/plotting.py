"""Figures written next to the CSV outputs (non-interactive backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_trace", "plot_profile", "plot_spectrum", "plot_scan", "plot_slopes"]


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_trace(trace, path):
    """Path max energy and relative dual residual per iteration."""
    it = [r.iter for r in trace]
    fig, (a1, a2) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    a1.plot(it, [r.J_max for r in trace], lw=1.2)
    a1.set_ylabel("J (max node)")
    a2.semilogy(it, [r.dual_residual for r in trace], lw=1.2, color="C1")
    a2.set_ylabel("dual residual")
    a2.set_xlabel("iteration")
    switch = [r.iter for r in trace if r.phase == "ray"]
    if switch:
        for ax in (a1, a2):
            ax.axvline(switch[0], color="0.6", ls="--", lw=0.8)
    return _save(fig, path)


def plot_profile(u, phi, path, labels=("u", "Phi")):
    """Samples along the positive x axis through the origin."""
    g = u.grid
    c = g.n // 2
    x = g.axis[c:]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(x, u.values[c:, c, c], "o-", ms=3, label=labels[0])
    ax.plot(x, phi.values[c:, c, c], "s-", ms=3, label=labels[1])
    ax.axhline(0.0, color="0.7", lw=0.6)
    ax.set_xlabel("x")
    ax.legend()
    return _save(fig, path)


def plot_spectrum(eigvals, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    k = np.arange(1, len(eigvals) + 1)
    ax.plot(k, eigvals, "o")
    ax.axhline(0.0, color="0.7", lw=0.6)
    ax.set_xlabel("k")
    ax.set_ylabel("eigenvalue")
    return _save(fig, path)


def plot_scan(rows, path, xlabel="lambda or t"):
    x = [r[0] for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogx(x, [r[1] for r in rows], "o-", base=2)
    ax.axhline(0.0, color="0.7", lw=0.6)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("J")
    return _save(fig, path)


def plot_slopes(report, path):
    """Log-log scaling of each quantity with the expected slope overlaid."""
    lam = np.asarray(report.lambdas, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 4))
    for i, (k, vals) in enumerate(report.values.items()):
        vals = np.asarray(vals)
        ax.loglog(lam, vals / vals[0], "o", color=f"C{i}", label=f"{k} ({report.slopes[k]:.4f})", base=2)
        ax.loglog(lam, (lam / lam[0]) ** report.expected[k], "-", color=f"C{i}", lw=0.8, base=2)
    ax.set_xlabel("lambda")
    ax.set_ylabel("Q(lambda) / Q(lambda_0)")
    ax.legend(fontsize=8)
    return _save(fig, path)
