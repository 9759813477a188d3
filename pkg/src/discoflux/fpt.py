"""Exact splitting of box evolution at the origin, checked on the grid.

A real left part Psi^L (zero on x > 0) is expanded in eigenfunctions of the
left sub-box [a, 0] with a Robin condition phi(0) cos(theta) +
phi'(0) sin(theta) = 0 at the origin, choosing theta so that Psi^L itself
satisfies it.  Full-box evolution then equals the Robin-box evolution plus a
time convolution of the full propagator with the boundary traces of the
Robin-evolved state:

    e^{-iHt} Psi = U_theta(t) Psi
        + int_0^t e^{-iH(t - t1)} (i/2M) [phi(0, t1) D - phi'(0, t1) S] dt1,

with D = d/dx' delta(x') and S = delta(x') discretised at the cell edge x = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .propagate import DiscreteHamiltonian, Grid1D, Potential, zero_potential
from .states import PiecewiseState

TRACE_MODES = ("extrapolate", "ghost")


@dataclass(frozen=True)
class BoundaryAngle:
    theta: float
    degenerate: bool = False

    @property
    def alpha(self) -> float:
        """alpha = tan(theta); infinite for the Neumann angle."""
        if abs(self.theta - 0.5 * math.pi) < 1e-15:
            return math.inf
        return math.tan(self.theta)


def alpha_from_component(value0: float, deriv0: float) -> BoundaryAngle:
    """Angle theta in [0, pi) with value0 cos(theta) + deriv0 sin(theta) = 0."""
    if value0 == 0 and deriv0 == 0:
        return BoundaryAngle(0.0, degenerate=True)
    theta = math.atan2(-value0, deriv0) % math.pi
    # atan2 can land exactly on pi after the fold
    if theta >= math.pi:
        theta -= math.pi
    return BoundaryAngle(theta)


def ghost_ratio(theta: float, dx: float) -> float:
    """Ghost-node factor r with phi_ghost = r phi_last for the Robin closure.

    The condition is imposed at the cell edge using the mean and the
    difference of the last node and its mirror, which is second-order
    accurate and keeps the matrix symmetric.
    """
    s, c = math.sin(theta), math.cos(theta)
    den = 2.0 * s + dx * c
    if abs(den) < 1e-12:
        raise ValueError("Robin angle coincides with the ghost-node singularity tan(theta) = -dx/2")
    return (2.0 * s - dx * c) / den


@dataclass(frozen=True)
class RobinBasis:
    theta: float
    dx: float
    mass: float
    ratio: float
    energies: np.ndarray
    vectors: np.ndarray

    @property
    def n_left(self) -> int:
        return self.vectors.shape[0]

    def coefficients(self, f_left):
        return np.asarray(f_left)[..., : self.n_left] @ self.vectors

    def project(self, f):
        """P_theta f, zero-extended to the full grid length of ``f``."""
        f = np.asarray(f)
        out = np.zeros(f.shape, dtype=np.result_type(f, float))
        out[..., : self.n_left] = self.coefficients(f) @ self.vectors.T
        return out

    def matrix(self) -> np.ndarray:
        return self.vectors @ self.vectors.T

    def ghost_traces(self, last):
        """Value and slope at x = 0 from the last node through the closure."""
        return 0.5 * (1.0 + self.ratio) * last, (self.ratio - 1.0) * last / self.dx


def robin_eigensolve(grid: Grid1D, theta: float, potential: Potential | None = None) -> RobinBasis:
    """All eigenpairs of the left sub-box with a Dirichlet wall at a and Robin at 0."""
    if not 0 <= theta < math.pi:
        raise ValueError("theta must lie in [0, pi)")
    nl, dx, M = grid.n_left, grid.dx, grid.mass
    if nl < 3:
        raise ValueError("need at least three cells left of the origin")
    c = -1.0 / (2.0 * M * dx * dx)
    r = ghost_ratio(theta, dx)
    d = np.full(nl, -2.0 * c)
    d[0] = -3.0 * c
    d[-1] = c * (-2.0 + r)
    if potential is not None:
        d = d + potential(grid.x[:nl])
    w, v = eigh_tridiagonal(d, np.full(nl - 1, c))
    return RobinBasis(theta, dx, M, r, w, v)


# --- commutator ---------------------------------------------------------------


def _on_grid(f, grid: Grid1D) -> np.ndarray:
    if callable(f):
        return np.asarray(f(grid.x), dtype=complex)
    f = np.asarray(f, dtype=complex)
    if f.shape != (grid.n_cells,):
        raise ValueError("test function must be sampled on the full grid")
    return f


def commutator_elements(
    f,
    g,
    theta: float,
    grid: Grid1D,
    potential: Potential | None = None,
    n_modes: int | None = None,
) -> complex:
    """<f|[H, P_theta]|g> on the grid, with P built from the Robin modes.

    ``f`` and ``g`` are callables or full-grid samples and must vanish at the
    left wall.  ``n_modes`` keeps only the lowest modes in P.
    """
    for h in (f, g):
        if callable(h):
            wall = abs(complex(np.asarray(h(np.array([grid.domain.a])))[0]))
            scale = float(np.max(np.abs(h(grid.x)))) or 1.0
            if wall > 1e-10 * scale:
                raise ValueError("test functions must vanish at the left wall")
    fv, gv = _on_grid(f, grid), _on_grid(g, grid)
    basis = robin_eigensolve(grid, theta, potential)
    phi = basis.vectors if n_modes is None else basis.vectors[:, :n_modes]
    ham = DiscreteHamiltonian(grid, potential or zero_potential())
    nl = grid.n_left

    def proj(v):
        out = np.zeros_like(v)
        out[:nl] = phi @ (phi.T @ v[:nl])
        return out

    comm = ham.apply(proj(gv)) - proj(ham.apply(gv))
    return complex(grid.dx * np.vdot(fv, comm))


def commutator_boundary(f0: complex, df0: complex, g0: complex, dg0: complex, mass: float) -> complex:
    """Continuum value -[f'*(0) g(0) - f*(0) g'(0)] / 2M."""
    return complex(-(np.conj(df0) * g0 - np.conj(f0) * dg0) / (2.0 * mass))


# --- decomposition residual ---------------------------------------------------


def _kernel_weights(w):
    """Exact weights for int_0^1 e^{w(1-u)} (1-u, u) du, the product trapezoid rule."""
    w = np.asarray(w, dtype=complex)
    g0 = np.empty_like(w)
    g1 = np.empty_like(w)
    small = np.abs(w) < 0.1
    ws = w[small]
    s0 = np.zeros_like(ws)
    s1 = np.zeros_like(ws)
    term = np.ones_like(ws)
    fact = 1.0
    for m in range(16):
        s0 += term / fact * (1.0 / (m + 1) - 1.0 / (m + 2))
        s1 += term / fact / (m + 2)
        term = term * ws
        fact *= m + 1
    g0[small], g1[small] = s0, s1
    wl = w[~small]
    em1 = np.expm1(wl)
    g0[~small] = (em1 - wl) / wl**2
    g1[~small] = (em1 * (wl - 1.0) + wl) / wl**2
    return g0, g1


def _edge_history(basis: RobinBasis, coef: np.ndarray, times: np.ndarray, n_rows: int, chunk: int = 512):
    """Last ``n_rows`` node values of the Robin-evolved state at each time."""
    rows = basis.vectors[-1 : -n_rows - 1 : -1, :]  # nearest node first
    weighted = (coef[:, None] * rows.T).astype(complex)
    out = np.empty((times.size, n_rows), dtype=complex)
    for s in range(0, times.size, chunk):
        ph = np.exp(-1j * np.outer(times[s : s + chunk], basis.energies))
        out[s : s + chunk] = ph @ weighted
    return out


def extrapolated_traces(u1, u2, u3, dx: float):
    """Quadratic one-sided extrapolation to the cell edge from the three nearest nodes."""
    value = (15.0 * u1 - 10.0 * u2 + 3.0 * u3) / 8.0
    slope = (2.0 * u1 - 3.0 * u2 + u3) / dx
    return value, slope


@dataclass(frozen=True)
class ResidualReport:
    residual: float
    theta: float
    n_cells: int
    n_quad: int
    t: float
    residual_half_quad: float | None = None

    @property
    def under_resolved(self) -> bool | None:
        if self.residual_half_quad is None:
            return None
        return abs(self.residual_half_quad - self.residual) > 0.5 * self.residual


def _split_evolution(component, theta, grid, t, n_quad, traces, potential):
    """Both sides of the splitting identity for one real component."""
    if traces not in TRACE_MODES:
        raise ValueError(f"traces must be one of {TRACE_MODES}")
    if n_quad < 1:
        raise ValueError("n_quad must be positive")
    if not t > 0:
        raise ValueError("t must be positive")
    psi0 = np.asarray(component(grid.x) if callable(component) else component)
    if np.iscomplexobj(psi0):
        if np.any(psi0.imag != 0):
            raise ValueError("component must be real; decompose real and imaginary parts separately")
        psi0 = psi0.real
    psi0 = psi0.astype(float)
    nl, dx, M = grid.n_left, grid.dx, grid.mass
    if np.any(psi0[nl:] != 0):
        raise ValueError("component must vanish right of the origin")
    spec = DiscreteHamiltonian(grid, potential or zero_potential()).spectrum()
    lhs = spec.evolve(psi0, t)

    basis = robin_eigensolve(grid, theta, potential)
    coef = basis.coefficients(psi0)
    reduced = np.zeros(grid.n_cells, dtype=complex)
    reduced[:nl] = basis.vectors @ (np.exp(-1j * basis.energies * t) * coef)

    tq = np.linspace(0.0, t, n_quad + 1)
    if traces == "ghost":
        edge = _edge_history(basis, coef, tq, 1)
        val, der = basis.ghost_traces(edge[:, 0])
    else:
        edge = _edge_history(basis, coef, tq, 3)
        val, der = extrapolated_traces(edge[:, 0], edge[:, 1], edge[:, 2], dx)

    D = np.zeros(grid.n_cells)
    D[nl], D[nl - 1] = 1.0 / dx**2, -1.0 / dx**2
    S = np.zeros(grid.n_cells)
    S[nl] = S[nl - 1] = 1.0 / (2.0 * dx)
    d_hat, s_hat = spec.transform(D), spec.transform(S)

    h = t / n_quad
    z = np.exp(-1j * spec.energies * h)
    g0, g1 = _kernel_weights(1j * spec.energies * h)
    # Horner sums over the time nodes of e^{-iE(t - t_j)} c_j and of e^{-iE(t - t_j)} c_{j+1}
    acc = np.zeros((4, spec.energies.size), dtype=complex)
    for j in range(n_quad):
        acc[0] = (acc[0] + val[j]) * z
        acc[1] = (acc[1] + val[j + 1]) * z
        acc[2] = (acc[2] + der[j]) * z
        acc[3] = (acc[3] + der[j + 1]) * z
    conv_val = h * (g0 * acc[0] + g1 * acc[1])
    conv_der = h * (g0 * acc[2] + g1 * acc[3])
    boundary = (1j / (2.0 * M)) * (d_hat * conv_val - s_hat * conv_der)
    return lhs, reduced + spec.inverse(boundary), (val, der)


def decomposition_residual(
    component,
    theta: float,
    grid: Grid1D,
    t: float,
    n_quad: int,
    traces: str = "extrapolate",
    potential: Potential | None = None,
    check_quadrature: bool = False,
) -> ResidualReport:
    """Relative L2 mismatch between full-box evolution and its splitting.

    ``component`` is a real left part, given as full-grid samples or as a
    callable.  The splitting is exact in the continuum, so the residual
    measures discretisation error only.  With ``check_quadrature`` the
    calculation is repeated with half the time nodes.
    """
    lhs, rhs, _ = _split_evolution(component, theta, grid, t, n_quad, traces, potential)
    res = float(np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs))
    half = None
    if check_quadrature and n_quad >= 2:
        lh, rh, _ = _split_evolution(component, theta, grid, t, n_quad // 2, traces, potential)
        half = float(np.linalg.norm(lh - rh) / np.linalg.norm(lh))
    return ResidualReport(res, theta, grid.n_cells, n_quad, t, half)


def boundary_trace_history(component, theta: float, grid: Grid1D, t: float, n_quad: int, traces: str = "extrapolate"):
    """Times and the (value, slope) traces of the Robin-evolved component."""
    _, _, (val, der) = _split_evolution(component, theta, grid, t, n_quad, traces, None)
    return np.linspace(0.0, t, n_quad + 1), val, der


@dataclass(frozen=True)
class DecompositionReport:
    theta1: float
    theta2: float | None
    residual: float
    n_cells: int
    n_quad: int
    convergence_ratio: float | None = None

    def as_dict(self) -> dict:
        return {
            "theta1": self.theta1,
            "theta2": self.theta2,
            "residual": self.residual,
            "n_cells": self.n_cells,
            "n_quad": self.n_quad,
            "convergence_ratio": self.convergence_ratio,
        }


def decompose(
    state: PiecewiseState,
    grid: Grid1D,
    t: float,
    n_quad: int,
    traces: str = "extrapolate",
    potential: Potential | None = None,
    thetas: tuple[float | None, float | None] = (None, None),
) -> DecompositionReport:
    """Split the real and imaginary left parts with their own angles and recombine.

    The right part of ``state`` is ignored; the splitting concerns Psi^L only.
    Angles default to those matched to the boundary data of each part.
    """
    psi = np.asarray(state(grid.x))
    psi = np.where(grid.x < 0, psi, 0.0)
    th1 = thetas[0] if thetas[0] is not None else alpha_from_component(state.psi_left0.real, state.dpsi_left0.real).theta
    lhs = np.zeros(grid.n_cells, dtype=complex)
    rhs = np.zeros(grid.n_cells, dtype=complex)
    l1, r1, _ = _split_evolution(psi.real, th1, grid, t, n_quad, traces, potential)
    lhs += l1
    rhs += r1
    th2 = None
    if np.any(psi.imag != 0):
        th2 = thetas[1] if thetas[1] is not None else alpha_from_component(state.psi_left0.imag, state.dpsi_left0.imag).theta
        l2, r2, _ = _split_evolution(psi.imag, th2, grid, t, n_quad, traces, potential)
        lhs += 1j * l2
        rhs += 1j * r2
    res = float(np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs))
    return DecompositionReport(th1, th2, res, grid.n_cells, n_quad)


def convergence_study(
    state: PiecewiseState,
    grid: Grid1D,
    t: float,
    n_quad: int,
    traces: str = "extrapolate",
    potential: Potential | None = None,
    thetas: tuple[float | None, float | None] = (None, None),
) -> DecompositionReport:
    """Residual at (grid, n_quad) and the ratio to the run with both doubled."""
    coarse = decompose(state, grid, t, n_quad, traces, potential, thetas)
    fine = decompose(state, grid.refined(2), t, 2 * n_quad, traces, potential, thetas)
    ratio = coarse.residual / fine.residual if fine.residual > 0 else math.inf
    return DecompositionReport(coarse.theta1, coarse.theta2, coarse.residual, coarse.n_cells, coarse.n_quad, ratio)
