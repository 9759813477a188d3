"""Reference evolution on a hard-wall box.

Nodes are cell centres x_i = a + (i + 1/2) dx, so x = 0 is a cell edge and
the jump of a piecewise state falls between two nodes.  Antisymmetric ghost
nodes put the Dirichlet walls exactly at a and b.  For V = 0 the discrete
Hamiltonian is diagonalised by the type-II discrete sine transform; other
potentials use a dense tridiagonal eigensolve.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.fft import dst, idst
from scipy.linalg import eigh_tridiagonal, lapack

from .asymptotics import current_law, fit_power_law, leading_coefficient, short_time_state
from .states import BoxDomain, PiecewiseState, box_ground_state, truncated_well, wall_removed

DENSE_LIMIT = 8192


class PropagationError(RuntimeError):
    """A linear solve or eigendecomposition failed."""


@dataclass(frozen=True)
class Grid1D:
    domain: BoxDomain
    n_cells: int

    def __post_init__(self):
        if self.n_cells < 64:
            raise ValueError(f"n_cells must be at least 64, got {self.n_cells}")
        nl = -self.domain.a / self.dx
        if abs(nl - round(nl)) > 1e-8:
            raise ValueError("x = 0 must be a cell edge: |a| must be a whole number of cells")

    @property
    def dx(self) -> float:
        return self.domain.length / self.n_cells

    @property
    def n_left(self) -> int:
        """Number of cells left of the origin."""
        return int(round(-self.domain.a / self.dx))

    @property
    def x(self) -> np.ndarray:
        return self.domain.a + (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def mass(self) -> float:
        return self.domain.mass

    def resolves(self, t_min: float) -> bool:
        """dx <= sqrt(t_min/M)/8, the rule for resolving the source wave at t_min."""
        return self.dx <= math.sqrt(t_min / self.mass) / 8.0

    def refined(self, factor: int = 2) -> "Grid1D":
        return Grid1D(self.domain, self.n_cells * factor)


# --- potentials --------------------------------------------------------------


@dataclass(frozen=True)
class Potential:
    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    is_zero: bool = False

    def __call__(self, x):
        return np.broadcast_to(np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float), np.shape(x))


def zero_potential() -> Potential:
    return Potential("zero", lambda x: np.zeros_like(x), is_zero=True)


def harmonic(kappa: float) -> Potential:
    return Potential(f"harmonic(kappa={kappa:g})", lambda x: 0.5 * kappa * x * x)


def step(height: float, position: float = 0.0) -> Potential:
    return Potential(f"step(height={height:g}, position={position:g})", lambda x: np.where(x > position, height, 0.0))


def tabulated(xs, vs) -> Potential:
    xs = np.asarray(xs, dtype=float)
    vs = np.asarray(vs, dtype=float)
    if xs.shape != vs.shape or xs.ndim != 1 or np.any(np.diff(xs) <= 0):
        raise ValueError("tabulated potential needs increasing x with matching V")
    return Potential("tabulated", lambda x: np.interp(x, xs, vs))


# --- Hamiltonian and spectrum ------------------------------------------------


@dataclass(frozen=True)
class Spectrum:
    energies: np.ndarray
    kind: str
    vectors: np.ndarray | None = None

    def transform(self, psi):
        if self.kind == "dst":
            return dst(psi, type=2, norm="ortho", axis=-1)
        return psi @ self.vectors

    def inverse(self, coef):
        if self.kind == "dst":
            return idst(coef, type=2, norm="ortho", axis=-1)
        return coef @ self.vectors.T

    def evolve(self, psi, t: float):
        """exp(-i H t) psi; negative t runs the evolution backwards."""
        return self.inverse(np.exp(-1j * self.energies * t) * self.transform(np.asarray(psi, dtype=complex)))


@dataclass(frozen=True)
class DiscreteHamiltonian:
    grid: Grid1D
    potential: Potential = field(default_factory=zero_potential)

    @property
    def coupling(self) -> float:
        return -1.0 / (2.0 * self.grid.mass * self.grid.dx**2)

    @property
    def diagonal(self) -> np.ndarray:
        c = self.coupling
        d = np.full(self.grid.n_cells, -2.0 * c)
        d[0] = d[-1] = -3.0 * c
        return d + self.potential(self.grid.x)

    @property
    def off_diagonal(self) -> np.ndarray:
        return np.full(self.grid.n_cells - 1, self.coupling)

    def apply(self, psi):
        psi = np.asarray(psi)
        out = self.diagonal * psi
        c = self.coupling
        out[..., :-1] += c * psi[..., 1:]
        out[..., 1:] += c * psi[..., :-1]
        return out

    def spectrum(self) -> Spectrum:
        n, dx, M = self.grid.n_cells, self.grid.dx, self.grid.mass
        if self.potential.is_zero:
            k = np.arange(1, n + 1)
            return Spectrum((2.0 / (M * dx * dx)) * np.sin(np.pi * k / (2 * n)) ** 2, "dst")
        if n > DENSE_LIMIT:
            raise ValueError(f"dense eigensolve limited to {DENSE_LIMIT} cells for V != 0")
        try:
            w, v = eigh_tridiagonal(self.diagonal, self.off_diagonal)
        except np.linalg.LinAlgError as exc:
            raise PropagationError(f"eigensolve failed: {exc}") from exc
        return Spectrum(w, "dense", v)


# --- traces ------------------------------------------------------------------


@dataclass(frozen=True)
class EvolutionTrace:
    times: np.ndarray
    p_right: np.ndarray
    current: np.ndarray
    norm: np.ndarray
    field: np.ndarray | None = None

    def to_csv(self, path, comments=()) -> None:
        from .io import atomic_write_text, format_rows

        text = format_rows(
            ["t", "p_right", "current", "norm"],
            [self.times, self.p_right, self.current, self.norm],
            comments=comments,
        )
        atomic_write_text(path, text)


def p_right_of(psi, grid: Grid1D):
    """Probability on the right of the origin (cells split exactly at x = 0)."""
    return grid.dx * np.sum(np.abs(np.asarray(psi)[..., grid.n_left :]) ** 2, axis=-1)


def norm_of(psi, grid: Grid1D):
    return grid.dx * np.sum(np.abs(np.asarray(psi)) ** 2, axis=-1)


def l2_distance(f, g, grid: Grid1D) -> float:
    return float(math.sqrt(grid.dx * np.sum(np.abs(np.asarray(f) - np.asarray(g)) ** 2)))


def sample_state(state: PiecewiseState, grid: Grid1D) -> np.ndarray:
    if state.domain != grid.domain:
        raise ValueError("state and grid live on different boxes")
    return state(grid.x)


def spectral_propagate(
    state: PiecewiseState,
    grid: Grid1D,
    times,
    potential: Potential | None = None,
    h_rel: float = 0.05,
) -> EvolutionTrace:
    """Exact-in-time evolution in the discrete eigenbasis.

    The current at each time is the centred difference of P^R with spacing
    h = h_rel * t, so it stays accurate across decades of t.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times <= 0):
        raise ValueError("times must be positive")
    spec = DiscreteHamiltonian(grid, potential or zero_potential()).spectrum()
    coef = spec.transform(sample_state(state, grid).astype(complex))
    p = np.empty_like(times)
    j = np.empty_like(times)
    nrm = np.empty_like(times)
    psi = None
    for i, t in enumerate(times):
        h = h_rel * t
        fields = [spec.inverse(np.exp(-1j * spec.energies * s) * coef) for s in (t, t - h, t + h)]
        psi = fields[0]
        p[i] = p_right_of(psi, grid)
        nrm[i] = norm_of(psi, grid)
        j[i] = (p_right_of(fields[2], grid) - p_right_of(fields[1], grid)) / (2 * h)
    return EvolutionTrace(times, p, j, nrm, psi)


class CrankNicolson:
    """(1 + i H dt/2) psi_{n+1} = (1 - i H dt/2) psi_n with one LU factorisation."""

    def __init__(self, hamiltonian: DiscreteHamiltonian, dt: float):
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.dt = dt
        self._d = hamiltonian.diagonal.astype(complex)
        self._e = hamiltonian.off_diagonal.astype(complex)
        half = 0.5j * dt
        dl = half * self._e
        dl_, d_, du_, du2, ipiv, info = lapack.zgttrf(dl, 1.0 + half * self._d, dl.copy())
        if info != 0:
            raise PropagationError(f"tridiagonal factorisation failed (info={info})")
        self._lu = (dl_, d_, du_, du2, ipiv)

    def step(self, psi, n: int = 1):
        half = 0.5j * self.dt
        psi = np.asarray(psi, dtype=complex)
        for _ in range(n):
            rhs = (1.0 - half * self._d) * psi
            rhs[:-1] -= half * self._e * psi[1:]
            rhs[1:] -= half * self._e * psi[:-1]
            psi, info = lapack.zgttrs(*self._lu, rhs)
            if info != 0:
                raise PropagationError(f"tridiagonal solve failed (info={info})")
        return psi


def crank_nicolson_propagate(
    state: PiecewiseState,
    grid: Grid1D,
    dt: float,
    n_steps: int,
    record_every: int = 1,
    potential: Potential | None = None,
) -> EvolutionTrace:
    """Crank-Nicolson run recording P^R and the norm every ``record_every`` steps."""
    if n_steps < 1 or record_every < 1:
        raise ValueError("n_steps and record_every must be positive")
    if dt > grid.mass * grid.dx**2:
        warnings.warn("dt exceeds M dx^2; the scheme stays stable but loses accuracy", RuntimeWarning, stacklevel=2)
    stepper = CrankNicolson(DiscreteHamiltonian(grid, potential or zero_potential()), dt)
    psi = sample_state(state, grid).astype(complex)
    times, p, nrm = [0.0], [p_right_of(psi, grid)], [norm_of(psi, grid)]
    done = 0
    while done < n_steps:
        k = min(record_every, n_steps - done)
        psi = stepper.step(psi, k)
        done += k
        times.append(done * dt)
        p.append(p_right_of(psi, grid))
        nrm.append(norm_of(psi, grid))
    times, p = np.asarray(times), np.asarray(p)
    current = np.gradient(p, times) if times.size > 2 else np.diff(p) / np.diff(times)
    if current.size < times.size:
        current = np.concatenate([current, current[-1:]])
    return EvolutionTrace(times, p, current, np.asarray(nrm), psi)


def time_reversal_error(state: PiecewiseState, grid: Grid1D, t: float, potential: Potential | None = None) -> float:
    """L2 distance after evolving forward by t and back by -t."""
    spec = DiscreteHamiltonian(grid, potential or zero_potential()).spectrum()
    psi0 = sample_state(state, grid).astype(complex)
    return l2_distance(spec.evolve(spec.evolve(psi0, t), -t), psi0, grid)


# --- figure curves and scaling -----------------------------------------------

FIG1_CASES = ("truncated", "wall_removed")
DEFAULT_DOMAIN = BoxDomain(-1.0, 1.0)
DEFAULT_CELLS = 16384


@dataclass(frozen=True)
class Fig1Curves:
    which: str
    time: float
    x: np.ndarray
    numerical: np.ndarray
    approx: np.ndarray
    terms: dict
    l2_distance: float


def fig1_state(which: str, x0: float = 1.0, domain: BoxDomain | None = None) -> PiecewiseState:
    domain = domain or DEFAULT_DOMAIN
    if which == "truncated":
        return truncated_well(x0, 0.75, domain)
    if which == "wall_removed":
        return wall_removed(x0, domain)
    raise ValueError(f"unknown case {which!r}; expected one of {FIG1_CASES}")


def fig1_curves(which: str, t_over_t0: float, grid: Grid1D | None = None, x0: float = 1.0) -> Fig1Curves:
    """Numerical field next to the short-time approximation and its terms."""
    if not 0 < t_over_t0 <= 0.1:
        raise ValueError("t/t0 must lie in (0, 0.1]")
    grid = grid or Grid1D(DEFAULT_DOMAIN, DEFAULT_CELLS)
    state = fig1_state(which, x0, grid.domain)
    t = t_over_t0 * state.t0
    spec = DiscreteHamiltonian(grid).spectrum()
    num = spec.evolve(sample_state(state, grid), t)
    approx = short_time_state(state, t, grid.x)
    return Fig1Curves(which, t, grid.x, num, approx.values, approx.terms, l2_distance(num, approx.values, grid))


@dataclass(frozen=True)
class ScalingReport:
    case: str
    exp_fit: float
    exp_theory: float
    prefactor_fit: float
    prefactor_theory: float
    rel_err: float
    fit_residual: float
    exp_tol: float
    pref_tol: float

    @property
    def passed(self) -> bool:
        return abs(self.exp_fit - self.exp_theory) <= self.exp_tol and self.rel_err <= self.pref_tol

    def as_dict(self) -> dict:
        return {
            "case": self.case,
            "exp_fit": self.exp_fit,
            "exp_theory": self.exp_theory,
            "prefactor_fit": self.prefactor_fit,
            "prefactor_theory": self.prefactor_theory,
            "rel_err": self.rel_err,
            "pass": self.passed,
        }


def scaling_report(
    state: PiecewiseState,
    grid: Grid1D,
    times,
    potential: Potential | None = None,
    exp_tol: float = 0.05,
    pref_tol: float = 0.05,
) -> tuple[ScalingReport, EvolutionTrace]:
    """Propagate, fit the exponent and the leading prefactor, compare with theory."""
    trace = spectral_propagate(state, grid, times, potential)
    law = current_law(state)
    fit = fit_power_law(trace.times, trace.current)
    pref, _ = leading_coefficient(trace.times, trace.current, law.exponent)
    rel = abs(pref - law.prefactor) / abs(law.prefactor) if law.prefactor else math.inf
    rep = ScalingReport(law.case_label, fit.exponent, law.exponent, pref, law.prefactor, rel, fit.residual, exp_tol, pref_tol)
    return rep, trace


def stationary_drift(grid: Grid1D, times) -> float:
    """Largest |P^R(t) - P^R(0)| for the box ground state."""
    state = box_ground_state(grid.domain)
    spec = DiscreteHamiltonian(grid).spectrum()
    psi0 = sample_state(state, grid).astype(complex)
    p0 = p_right_of(psi0, grid)
    return float(max(abs(p_right_of(spec.evolve(psi0, t), grid) - p0) for t in times))
