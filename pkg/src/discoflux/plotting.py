"""SVG figures for CLI reports.

Figures are built on a bare ``Figure`` (no pyplot state) and written with a
fixed hash salt and no date stamp, so identical inputs give identical files.
"""

from __future__ import annotations

import io
from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from .io import atomic_write_text

matplotlib.rcParams["svg.hashsalt"] = "discoflux"


def _save(fig: Figure, path: Path) -> None:
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    atomic_write_text(Path(path), buf.getvalue())


def fig1_svg(curves, path, window: float | None = None) -> None:
    """|Psi| from propagation next to the short-time form and its terms."""
    x = curves.x
    if window is None:
        window = 12.0 * np.sqrt(curves.time)
    m = np.abs(x) <= window
    fig = Figure(figsize=(6.4, 4.2))
    ax = fig.add_subplot()
    ax.plot(x[m], np.abs(curves.numerical[m]), color="k", lw=2.2, label="propagated")
    ax.plot(x[m], np.abs(curves.approx[m]), color="tab:red", ls="--", lw=1.4, label="short-time form")
    styles = {"value_jump": ":", "slope_jump": "-."}
    for name, ls in styles.items():
        ax.plot(x[m], np.abs(curves.terms[name][m]), ls=ls, lw=1.0, label=name.replace("_", " "))
    ax.set_xlabel("x")
    ax.set_ylabel("|psi(x, t)|")
    ax.set_title(f"{curves.which}: t = {curves.time:.3g}, L2 distance {curves.l2_distance:.4f}")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def scaling_svg(times, j_num, law, path, label: str = "") -> None:
    """Log-log current from propagation against the leading law."""
    t = np.asarray(times)
    fig = Figure(figsize=(5.6, 4.0))
    ax = fig.add_subplot()
    ax.loglog(t, np.abs(j_num), "o", ms=4, color="k", label="propagated")
    ax.loglog(t, np.abs(law(t)), "-", color="tab:blue", label=f"case {law.case_label}, t^{law.exponent:+g}")
    ax.set_xlabel("t")
    ax.set_ylabel("|J(t)|")
    if label:
        ax.set_title(label, fontsize=9)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def trace_svg(trace, path, label: str = "") -> None:
    fig = Figure(figsize=(5.6, 4.0))
    ax = fig.add_subplot()
    ax.plot(trace.times, trace.p_right, color="k")
    ax.set_xlabel("t")
    ax.set_ylabel("P_R(t)")
    if label:
        ax.set_title(label, fontsize=9)
    fig.tight_layout()
    _save(fig, path)
