"""The wave emitted by a discontinuity at the origin, and its moments.

Units have hbar = 1.  With the length scale L = sqrt(t/M) and xi = |x|/L the
wave collapses onto one universal profile,

    delta_psi(x, t; M)  = L * F(xi),
    delta_psi'(x, t; M) = sign(x) * G(xi),

    F(xi) = -e^{i pi/4} e^{i xi^2/2} / sqrt(2 pi) + (xi/2) erfc(xi e^{-i pi/4} / sqrt 2)
    G(xi) = (1/2) erfc(xi e^{-i pi/4} / sqrt 2).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .cerf import SQRT_I, SQRT_MINUS_I, erfc_complex
from .quadrature import QuadResult, integrate

_PREFACTOR = SQRT_I / math.sqrt(2.0 * math.pi)
_ERFC_SCALE = SQRT_MINUS_I / math.sqrt(2.0)


@dataclass(frozen=True)
class MassTime:
    mass: float
    time: float

    def __post_init__(self):
        if not (self.mass > 0 and np.isfinite(self.mass)):
            raise ValueError(f"mass must be positive and finite, got {self.mass}")
        if not (self.time > 0 and np.isfinite(self.time)):
            raise ValueError(f"time must be positive and finite, got {self.time}")

    @property
    def length(self) -> float:
        """Spreading length sqrt(t/M)."""
        return math.sqrt(self.time / self.mass)


class Side(enum.Enum):
    """Which one-sided limit to take at x = 0."""

    LEFT = -1
    RIGHT = 1


def profile(xi):
    """Dimensionless wave F(xi) for xi >= 0."""
    xi = np.asarray(xi, dtype=float)
    return -_PREFACTOR * np.exp(0.5j * xi * xi) + 0.5 * xi * erfc_complex(_ERFC_SCALE * xi)


def profile_prime(xi):
    """Dimensionless slope G(xi) = F'(xi) for xi >= 0."""
    xi = np.asarray(xi, dtype=float)
    return 0.5 * erfc_complex(_ERFC_SCALE * xi)


def delta_psi(x, mt: MassTime):
    """Source wave at position(s) ``x``; even in x."""
    L = mt.length
    return L * profile(np.abs(np.asarray(x, dtype=float)) / L)


def delta_psi_prime(x, mt: MassTime, side: Side | None = None):
    """Spatial derivative of the source wave.

    The derivative jumps from -1/2 to +1/2 at the origin, so ``side`` must be
    given whenever ``x`` contains an exact zero.
    """
    x = np.asarray(x, dtype=float)
    sign = np.sign(x)
    if np.any(x == 0):
        if side is None:
            raise ValueError("delta_psi_prime is two-valued at x = 0; pass side=Side.LEFT or Side.RIGHT")
        sign = np.where(x == 0, float(side.value), sign)
    return sign * profile_prime(np.abs(x) / mt.length)


def delta_psi_second(x, mt: MassTime):
    """Second derivative away from the origin, -G0(x, t) (smooth across x = 0)."""
    x = np.asarray(x, dtype=float)
    return -np.sqrt(mt.mass / (2.0 * np.pi * mt.time)) * SQRT_MINUS_I * np.exp(
        0.5j * mt.mass * x * x / mt.time
    )


def far_field(x, mt: MassTime):
    """Leading large-|x| asymptote of ``delta_psi``."""
    x = np.asarray(x, dtype=float)
    return (
        SQRT_MINUS_I
        / (math.sqrt(2.0 * math.pi) * x * x)
        * (mt.time / mt.mass) ** 1.5
        * np.exp(0.5j * mt.mass * x * x / mt.time)
    )


@dataclass(frozen=True)
class MomentSet:
    """Half-line integrals of the source wave over x in [0, inf)."""

    int_dpsi: complex
    int_x_dpsi: complex
    int_x_dpsi_prime: complex
    int_abs2_dpsi: float
    int_abs2_dpsi_prime: float
    int_dpsi_prime: complex

    def identity_residuals(self, mt: MassTime) -> dict[str, float]:
        return {
            "abs2_vs_re_x": abs(self.int_abs2_dpsi - self.int_x_dpsi.real),
            "one_vs_x_prime": abs(self.int_dpsi + self.int_x_dpsi_prime),
            "prime_vs_origin": abs(self.int_dpsi_prime + complex(delta_psi(0.0, mt))),
        }


def moments(mt: MassTime) -> MomentSet:
    M, t = mt.mass, mt.time
    return MomentSet(
        int_dpsi=-0.25j * t / M,
        int_x_dpsi=complex(t**1.5 / (3.0 * math.sqrt(2.0 * math.pi * M**3)) * SQRT_MINUS_I),
        int_x_dpsi_prime=0.25j * t / M,
        int_abs2_dpsi=t**1.5 / (6.0 * math.sqrt(math.pi * M**3)),
        int_abs2_dpsi_prime=0.5 * math.sqrt(t / (math.pi * M)),
        int_dpsi_prime=complex(math.sqrt(t / (2.0 * math.pi * M)) * SQRT_I),
    )


# --- quadrature oracle -------------------------------------------------------

WEIGHTS = ("one", "x", "abs2", "x_prime", "abs2_prime", "prime")

_N_ASYMPTOTIC = 14


def _double_factorial_odd(k: int) -> float:
    # (2k-1)!! with (-1)!! = 1
    return float(np.prod(np.arange(1, 2 * k, 2))) if k > 0 else 1.0


def _asymptotic_laurent(kind: str) -> dict[int, complex]:
    """Laurent coefficients of F or G with the factor e^{i xi^2/2} removed."""
    coeffs: dict[int, complex] = {}
    if kind == "F":
        for k in range(1, _N_ASYMPTOTIC + 1):
            coeffs[-2 * k] = _PREFACTOR * _double_factorial_odd(k) * (-1j) ** k
    else:
        for k in range(0, _N_ASYMPTOTIC + 1):
            coeffs[-2 * k - 1] = _PREFACTOR * _double_factorial_odd(k) * (-1j) ** k
    return coeffs


def _shift(poly: dict[int, complex], by: int) -> dict[int, complex]:
    return {p + by: c for p, c in poly.items()}


def _oscillatory_tail(poly: dict[int, complex], c: float) -> tuple[complex, float]:
    """int_c^inf e^{i xi^2/2} poly(xi) dxi by repeated integration by parts."""
    h = {p - 1: a / 1j for p, a in poly.items()}
    total = 0.0 + 0.0j
    sign = 1.0
    last = np.inf
    for _ in range(60):
        term = sum(a * c**p for p, a in h.items())
        if abs(term) > last:
            break
        total += sign * term
        last = abs(term)
        if last < 1e-18:
            break
        sign = -sign
        h = {p - 2: a * p / 1j for p, a in h.items() if p != 0}
    return -np.exp(0.5j * c * c) * total, float(last)


def _power_tail(poly: dict[int, complex], c: float) -> tuple[float, float]:
    """int_c^inf |poly(xi)|^2 dxi for a Laurent polynomial with powers <= -1."""
    sq: dict[int, complex] = {}
    for p, a in poly.items():
        for q, b in poly.items():
            sq[p + q] = sq.get(p + q, 0.0) + a * np.conj(b)
    total = 0.0
    smallest = np.inf
    for p in sorted(sq, reverse=True):
        term = (sq[p] * c ** (p + 1) / -(p + 1)).real
        total += term
        smallest = min(smallest, abs(term))
    return total, smallest


def _integrand(weight: str):
    if weight == "one":
        return lambda xi: profile(xi)
    if weight == "x":
        return lambda xi: xi * profile(xi)
    if weight == "abs2":
        return lambda xi: np.abs(profile(xi)) ** 2 + 0j
    if weight == "x_prime":
        return lambda xi: xi * profile_prime(xi)
    if weight == "abs2_prime":
        return lambda xi: np.abs(profile_prime(xi)) ** 2 + 0j
    return lambda xi: profile_prime(xi)


def _tail(weight: str, c: float) -> tuple[complex, float]:
    F = _asymptotic_laurent("F")
    G = _asymptotic_laurent("G")
    if weight == "one":
        return _oscillatory_tail(F, c)
    if weight == "x":
        return _oscillatory_tail(_shift(F, 1), c)
    if weight == "x_prime":
        return _oscillatory_tail(_shift(G, 1), c)
    if weight == "prime":
        return _oscillatory_tail(G, c)
    if weight == "abs2":
        return _power_tail(F, c)
    return _power_tail(G, c)


# power of L carrying each dimensionless integral back to physical units
_SCALE_POWER = {"one": 2, "x": 3, "abs2": 3, "x_prime": 2, "abs2_prime": 1, "prime": 1}


def _panel_edges(c: float) -> np.ndarray:
    # quarter of the local oscillation length sqrt(2 pi)/(xi + 1)
    edges = [0.0]
    while edges[-1] < c:
        edges.append(edges[-1] + math.sqrt(2.0 * math.pi) / (4.0 * (edges[-1] + 1.0)))
    edges[-1] = c
    return np.asarray(edges)


def quad_moment(weight: str, mt: MassTime, cutoff: float | None = None, tol: float = 1e-10) -> QuadResult:
    """Moment of the source wave by adaptive quadrature plus an asymptotic tail.

    ``weight`` selects the integrand: ``one`` (dpsi), ``x`` (x dpsi), ``abs2``
    (|dpsi|^2), ``x_prime`` (x dpsi'), ``abs2_prime`` (|dpsi'|^2) or ``prime``
    (dpsi').  The tail beyond ``cutoff`` comes from the large-|x| expansion of
    the wave, integrated term by term.
    """
    if weight not in WEIGHTS:
        raise ValueError(f"unknown weight {weight!r}; expected one of {WEIGHTS}")
    if not 1e-12 <= tol <= 1e-4:
        raise ValueError("tol must lie in [1e-12, 1e-4]")
    L = mt.length
    if cutoff is None:
        cutoff = 20.0 * L
    if cutoff < 20.0 * L * (1 - 1e-12):
        raise ValueError("cutoff must be at least 20*sqrt(t/M)")
    c = cutoff / L
    scale = L ** _SCALE_POWER[weight]
    tail, tail_err = _tail(weight, c)
    body = integrate(_integrand(weight), _panel_edges(c), tol=0.5 * tol / scale)
    value = (body.value + tail) * scale
    if weight in ("abs2", "abs2_prime"):
        value = complex(value.real, 0.0)
    return QuadResult(value, (body.error + tail_err) * scale)
