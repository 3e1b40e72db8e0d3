"""PNG figures for the CLI report path.

Figures are drawn on the Agg canvas without touching pyplot state, and PNG
metadata is stripped so that reruns produce identical bytes.
"""

from __future__ import annotations

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

__all__ = ["save_figure", "plot_rectify", "plot_sparkle", "plot_frequencies",
           "plot_sweep", "plot_rotation", "plot_certificate"]

_SIZE = (6.4, 4.0)
_DPI = 100


def _figure(nrows=1):
    fig = Figure(figsize=(_SIZE[0], _SIZE[1] * (1 + 0.6 * (nrows - 1))), dpi=_DPI)
    FigureCanvasAgg(fig)
    axes = fig.subplots(nrows, 1, squeeze=False)[:, 0]
    return fig, axes


def save_figure(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="png", dpi=_DPI, metadata={"Software": None})


def _positive(values):
    v = np.abs(np.asarray(values, dtype=float))
    floor = v[v > 0].min() if (v > 0).any() else 1e-300
    return np.maximum(v, floor * 1e-3)


def plot_rectify(rows, path):
    x = np.array([r["x"] for r in rows])
    fig, (ax, ax2) = _figure(2)
    ax.semilogx(x, [r["xi"] for r in rows], "o-", label="chart xi(x)")
    ax.semilogx(x, np.log(-np.log(x)), "--", label="ln(-ln x)")
    ax.set_ylabel("xi")
    ax.legend()
    ax2.loglog(x, _positive([r["residual"] for r in rows]), "s-")
    ax2.set_xlabel("x")
    ax2.set_ylabel("conjugacy residual")
    save_figure(fig, path)


def plot_sparkle(rows, path):
    n = np.array([r["n"] for r in rows])
    fig, (ax, ax2) = _figure(2)
    ax.plot(n, [r["xi_value"] for r in rows], "o-")
    ax.set_ylabel("ln(-ln eps_n)")
    ax2.semilogy(n, _positive([r["residual"] for r in rows]), "s-")
    ax2.set_xlabel("n")
    ax2.set_ylabel("|residual|")
    save_figure(fig, path)


def plot_frequencies(records, path):
    k = np.array([r["k"] for r in records])
    fig, (ax,) = _figure()
    ax.bar(k - 0.2, [r["psi"] for r in records], width=0.4, label="psi_k")
    ax.bar(k + 0.2, [r["predicted"] for r in records], width=0.4, label="Phi_k / phi")
    ax.set_xticks(k)
    ax.set_xlabel("arc k")
    ax.set_ylabel("frequency")
    ax.legend()
    save_figure(fig, path)


def plot_sweep(rows, path):
    fig, (ax,) = _figure()
    for k in sorted({r["k"] for r in rows}):
        sel = [r for r in rows if r["k"] == k]
        ax.loglog([r["cut"] for r in sel], _positive([r["abs_error"] for r in sel]), "o-",
                  label=f"k = {k}")
    ax.set_xlabel("cut n")
    ax.set_ylabel("|psi_k - Phi_k/phi|")
    ax.legend()
    save_figure(fig, path)


def plot_rotation(rows, length, path):
    fig, (ax,) = _figure()
    ax.semilogx([r["n"] for r in rows], [r["psi"] for r in rows], "-")
    ax.axhline(length, color="k", ls="--", lw=0.8, label="|J|")
    ax.set_xlabel("n")
    ax.set_ylabel("psi_n")
    ax.legend()
    save_figure(fig, path)


def plot_certificate(rows, path):
    names = [f"{r['model']}:{r['property']}" for r in rows]
    colors = {"pass": "tab:green", "fail": "tab:red", "exempt": "tab:orange", "n/a": "0.7"}
    fig = Figure(figsize=(_SIZE[0], 0.22 * len(rows) + 1), dpi=_DPI)
    FigureCanvasAgg(fig)
    ax = fig.subplots()
    ax.barh(range(len(rows)), [1] * len(rows),
            color=[colors.get(r["status"], "0.5") for r in rows])
    ax.set_yticks(range(len(rows)))
    ax.set_yticklabels(names, fontsize=6)
    ax.set_xticks([])
    ax.invert_yaxis()
    save_figure(fig, path)
