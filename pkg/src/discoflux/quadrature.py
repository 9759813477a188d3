"""Adaptive panel quadrature for smooth, possibly oscillatory complex integrands."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

_LO_NODES, _LO_WEIGHTS = np.polynomial.legendre.leggauss(10)
_HI_NODES, _HI_WEIGHTS = np.polynomial.legendre.leggauss(20)


class QuadratureError(RuntimeError):
    """Adaptive quadrature ran out of subdivisions before meeting tolerance."""

    def __init__(self, message: str, value: complex, error: float):
        super().__init__(message)
        self.value = value
        self.error = error


@dataclass(frozen=True)
class QuadResult:
    value: complex
    error: float


def _panel_rules(f, left: np.ndarray, right: np.ndarray):
    mid = 0.5 * (left + right)
    half = 0.5 * (right - left)
    x_lo = mid[:, None] + half[:, None] * _LO_NODES[None, :]
    x_hi = mid[:, None] + half[:, None] * _HI_NODES[None, :]
    lo = half * (f(x_lo.ravel()).reshape(x_lo.shape) @ _LO_WEIGHTS)
    hi = half * (f(x_hi.ravel()).reshape(x_hi.shape) @ _HI_WEIGHTS)
    return hi, np.abs(hi - lo)


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    breakpoints,
    tol: float = 1e-10,
    max_panels: int = 200_000,
) -> QuadResult:
    """Integrate ``f`` over the span of ``breakpoints``.

    The initial panels are the intervals between consecutive breakpoints.  Each
    panel is integrated with 10- and 20-point Gauss-Legendre rules; panels whose
    difference exceeds their share of ``tol`` are bisected.  ``f`` must accept
    a 1-D float array and return an array of the same length.
    """
    edges = np.asarray(breakpoints, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("breakpoints must be strictly increasing")
    span = edges[-1] - edges[0]
    left, right = edges[:-1], edges[1:]
    total = 0.0 + 0.0j
    err_total = 0.0
    n_used = left.size
    while left.size:
        val, err = _panel_rules(f, left, right)
        share = tol * (right - left) / span
        done = (err <= share) | ((right - left) < 1e-14 * span)
        total += val[done].sum()
        err_total += err[done].sum()
        left, right = left[~done], right[~done]
        if not left.size:
            break
        n_used += left.size
        if n_used > max_panels:
            val_rest = val[~done].sum()
            raise QuadratureError(
                f"no convergence within {max_panels} panels",
                complex(total + val_rest),
                float(err_total + err[~done].sum()),
            )
        mid = 0.5 * (left + right)
        left, right = np.concatenate([left, mid]), np.concatenate([mid, right])
    return QuadResult(complex(total), float(err_total))
