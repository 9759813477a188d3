"""Short-time reconstruction of a discontinuous state and its leading current.

For short times the evolved state is approximated by

    Psi(x, t) ~ Psi(x) - i t (H Psi)(x) - [dpsi'(x, t) DPsi + dpsi(x, t) DPsi'],

with H applied on each side of the origin separately.  The bracket is the
source wave that closes the jumps DPsi = Psi(+0) - Psi(-0) and
DPsi' = Psi'(+0) - Psi'(-0).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .quadrature import integrate
from .source_wave import MassTime, Side, delta_psi, delta_psi_prime, delta_psi_second
from .states import PiecewiseState, classify

LONG_TIME_RATIO = 0.1


class LongTimeWarning(RuntimeWarning):
    """Requested time is not small compared with M x0^2."""


@dataclass(frozen=True)
class ShortTimeField:
    x: np.ndarray
    values: np.ndarray
    time: float
    terms: dict = field(default_factory=dict)
    order_dropped: str = "O(t) corrections to the source terms; O(t^2) in the smooth part"


def _check_time(state: PiecewiseState, t: float) -> MassTime:
    if not t > 0:
        raise ValueError(f"time must be positive, got {t}")
    if t > LONG_TIME_RATIO * state.t0:
        warnings.warn(
            f"t/t0 = {t / state.t0:.3g} exceeds {LONG_TIME_RATIO}; the expansion is unreliable",
            LongTimeWarning,
            stacklevel=3,
        )
    return MassTime(state.mass, t)


def short_time_state(
    state: PiecewiseState,
    t: float,
    x,
    potential=None,
    side: Side | None = None,
) -> ShortTimeField:
    """Evaluate the short-time field at positions ``x``.

    ``side`` selects the one-sided limit for any entries with x == 0.  The
    returned field carries the four contributions separately in ``terms``:
    ``initial``, ``hamiltonian``, ``value_jump`` and ``slope_jump``.
    """
    mt = _check_time(state, t)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    at0 = x == 0
    if np.any(at0) and side is None:
        raise ValueError("x contains 0; pass side=Side.LEFT or Side.RIGHT")
    psi = np.empty(x.shape, dtype=complex)
    hpsi = np.empty(x.shape, dtype=complex)
    off = ~at0
    psi[off] = state(x[off])
    hpsi[off] = state.h_piecewise(x[off], potential)
    if np.any(at0):
        hl, hr = state.h_limits(potential)
        left = side is Side.LEFT
        psi[at0] = state.psi_left0 if left else state.psi_right0
        hpsi[at0] = hl if left else hr
    value_jump = -delta_psi_prime(x, mt, side=side) * state.jump
    slope_jump = -delta_psi(x, mt) * state.slope_jump
    hamiltonian = -1j * t * hpsi
    terms = {"initial": psi, "hamiltonian": hamiltonian, "value_jump": value_jump, "slope_jump": slope_jump}
    return ShortTimeField(x, psi + hamiltonian + value_jump + slope_jump, t, terms)


def edge_limits(state: PiecewiseState, t: float, potential=None) -> tuple[complex, complex]:
    """Left and right limits of the short-time field at the origin."""
    lo = short_time_state(state, t, [0.0], potential, side=Side.LEFT).values[0]
    hi = short_time_state(state, t, [0.0], potential, side=Side.RIGHT).values[0]
    return complex(lo), complex(hi)


def edge_derivative_limit(state: PiecewiseState, t: float, side: Side) -> complex:
    """Derivative of the field at +-0, excluding the O(t) Hamiltonian term."""
    mt = MassTime(state.mass, t)
    d0 = state.dpsi_left0 if side is Side.LEFT else state.dpsi_right0
    dd = complex(delta_psi_second(0.0, mt))
    dp = complex(delta_psi_prime(0.0, mt, side=side))
    return d0 - (dd * state.jump + dp * state.slope_jump)


# --- probability on the right ------------------------------------------------

_NEAR_CUTOFF = 40.0


def _chirp_edges(L: float, stop: float) -> np.ndarray:
    edges = [0.0]
    while edges[-1] < stop:
        xi = edges[-1] / L
        edges.append(edges[-1] + L * math.sqrt(2.0 * math.pi) / (4.0 * (xi + 1.0)))
    edges[-1] = stop
    return np.asarray(edges)


def _merge(edges: np.ndarray, extra, lo: float, hi: float) -> np.ndarray:
    pts = [p for p in extra if lo < p < hi]
    return np.unique(np.concatenate([edges, pts])) if pts else edges


def p_right_expansion(state: PiecewiseState, t: float, quad_tol: float = 1e-10, potential=None) -> float:
    """Probability on (0, b] carried by the short-time field.

    Near the origin the integrand is handled with panels that follow the
    chirp of the source wave.  Beyond 40 sqrt(t/M) the oscillating cross
    term between the smooth part and the source wave is integrated by parts,
    and the two non-oscillating squares are integrated directly.
    """
    mt = _check_time(state, t)
    L = mt.length
    b = state.domain.b
    stop = min(b, _NEAR_CUTOFF * L)

    def smooth(x):
        return state(x) - 1j * t * state.h_piecewise(x, potential)

    def source(x):
        return -(delta_psi_prime(x, mt) * state.jump + delta_psi(x, mt) * state.slope_jump)

    def near(x):
        return np.abs(smooth(x) + source(x)) ** 2 + 0j

    edges = _merge(_chirp_edges(L, stop), state.breakpoints, 0.0, stop)
    total = integrate(near, edges, tol=quad_tol).value.real
    if stop >= b:
        return float(total)

    def squares(x):
        return np.abs(smooth(x)) ** 2 + np.abs(source(x)) ** 2 + 0j

    far_edges = _merge(np.linspace(stop, b, 65), state.breakpoints, stop, b)
    total += integrate(squares, far_edges, tol=quad_tol).value.real
    total += 2.0 * _chirp_cross_term(smooth, source, stop, b, mt).real
    return float(total)


def _chirp_cross_term(smooth, source, lo: float, hi: float, mt: MassTime) -> complex:
    """int_lo^hi conj(smooth) * source dx for a source ~ exp(i M x^2 / 2t) g(x)."""
    M, t = mt.mass, mt.time

    def envelope(x):
        x = np.asarray(x, dtype=float)
        return np.conj(smooth(x)) * source(x) * np.exp(-0.5j * M * x * x / t)

    def h0(x):
        return envelope(x) / (1j * M * x / t)

    def boundary(x):
        step = 1e-4 * x
        dh = (h0(np.array([x + step])) - h0(np.array([x - step])))[0] / (2 * step)
        h1 = dh / (1j * M * x / t)
        return np.exp(0.5j * M * x * x / t) * (h0(np.array([x]))[0] - h1)

    return complex(boundary(hi) - boundary(lo))


# --- leading current laws ----------------------------------------------------

EXPONENTS = {"A": 0.0, "B": -0.5, "C": 0.0, "D": 0.5}
MARGINAL_RATIO = 1e-10


@dataclass(frozen=True)
class CurrentLaw:
    case_label: str
    exponent: float
    prefactor: float
    marginal: bool = False

    def __call__(self, t):
        return self.prefactor * np.asarray(t, dtype=float) ** self.exponent

    def p_right(self, t):
        """Probability transferred by time t under this law (integral from 0)."""
        t = np.asarray(t, dtype=float)
        return self.prefactor * t ** (self.exponent + 1.0) / (self.exponent + 1.0)


def current_law(state: PiecewiseState, eps_val: float = 1e-8, eps_deriv: float = 1e-8) -> CurrentLaw:
    """Leading short-time current J = dP^R/dt through the origin.

    With A = Psi(-0), B = Psi(+0) and primes for slopes:

    * A: Im[Psi*(0) Psi'(0)] / M
    * B: (|A|^2 - |B|^2 + 2 Im[A* B]) / (4 sqrt(pi M)) * t^(-1/2)
    * C: Im{Psi*(0) [Psi'(+0) + Psi'(-0)]} / (2M)
    * D: (|A'|^2 - |B'|^2 - 2 Im[A'* B']) / (4 sqrt(pi M^3)) * t^(1/2)
    """
    desc = classify(state, eps_val, eps_deriv)
    M = state.mass
    a, b = state.psi_left0, state.psi_right0
    da, db = state.dpsi_left0, state.dpsi_right0
    label = desc.case_label
    if label == "B":
        pref = (abs(a) ** 2 - abs(b) ** 2 + 2.0 * (np.conj(a) * b).imag) / (4.0 * math.sqrt(math.pi * M))
        scale = (abs(a) ** 2 + abs(b) ** 2) / (4.0 * math.sqrt(math.pi * M))
    elif label == "D":
        pref = (abs(da) ** 2 - abs(db) ** 2 - 2.0 * (np.conj(da) * db).imag) / (4.0 * math.sqrt(math.pi * M**3))
        scale = (abs(da) ** 2 + abs(db) ** 2) / (4.0 * math.sqrt(math.pi * M**3))
    else:
        v0 = 0.5 * (a + b)
        pref = (np.conj(v0) * (da + db)).imag / (2.0 * M)
        scale = abs(v0) * (abs(da) + abs(db)) / (2.0 * M)
    pref = float(pref)
    marginal = desc.marginal or scale == 0 or abs(pref) < MARGINAL_RATIO * scale
    return CurrentLaw(label, EXPONENTS[label], pref, bool(marginal))


# --- fitting -----------------------------------------------------------------


class SignChangeError(ValueError):
    """The current changes sign or vanishes, so a log-log fit is undefined."""

    def __init__(self, index: int):
        super().__init__(f"current changes sign or vanishes at sample {index}")
        self.index = index


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    residual: float


def fit_power_law(times, currents) -> PowerLawFit:
    """Least-squares fit of log|J| = p log t + log|C|; C keeps the sign of J."""
    t = np.asarray(times, dtype=float)
    j = np.asarray(currents, dtype=float)
    if t.shape != j.shape or t.ndim != 1:
        raise ValueError("times and currents must be 1-D arrays of equal length")
    if t.size < 5:
        raise ValueError("need at least 5 samples")
    if np.any(t <= 0):
        raise ValueError("times must be positive")
    sgn = np.sign(j)
    bad = np.nonzero((sgn == 0) | (sgn != sgn[0]))[0]
    if bad.size:
        raise SignChangeError(int(bad[0]))
    A = np.column_stack([np.log(t), np.ones_like(t)])
    y = np.log(np.abs(j))
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    rms = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return PowerLawFit(float(coef[0]), float(sgn[0] * math.exp(coef[1])), rms)


def leading_coefficient(times, currents, exponent: float) -> tuple[float, float]:
    """Fit J = C t^p + D t^(p + 1/2) with p fixed; returns (C, D).

    The next-order term absorbs the bias that a pure power law would leak
    into the prefactor over a finite time window.
    """
    t = np.asarray(times, dtype=float)
    j = np.asarray(currents, dtype=float)
    # weight by t^-p so every sample counts equally in relative terms
    w = t ** (-exponent)
    A = np.column_stack([t**exponent * w, t ** (exponent + 0.5) * w])
    coef, *_ = np.linalg.lstsq(A, j * w, rcond=None)
    return float(coef[0]), float(coef[1])
