"""Piecewise initial states on a hard-wall box with a jump at x = 0.

A state is a pair of smooth one-sided parts, Psi^L on [a, 0] and Psi^R on
[0, b], together with their one-sided limits Psi(-0), Psi(+0), Psi'(-0) and
Psi'(+0).  The limits are stored explicitly and never recovered by
differencing across the jump.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

ArrayFn = Callable[[np.ndarray], np.ndarray]

DEFAULT_EPS = 1e-8
_MANY_BREAKPOINTS = 100
# exact for |cubic|^2
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(5)


@dataclass(frozen=True)
class BoxDomain:
    a: float
    b: float
    mass: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise ValueError("box edges must be finite")
        if not self.a < 0 < self.b:
            raise ValueError(f"need a < 0 < b, got a={self.a}, b={self.b}")
        if not (self.mass > 0 and np.isfinite(self.mass)):
            raise ValueError(f"mass must be positive, got {self.mass}")

    @property
    def length(self) -> float:
        return self.b - self.a


def _zero(x):
    return np.zeros(np.shape(x), dtype=complex)


@dataclass(frozen=True)
class Profile:
    """A smooth complex function with its first two derivatives."""

    value: ArrayFn
    deriv: ArrayFn
    second: ArrayFn

    def __call__(self, x):
        return np.asarray(self.value(np.asarray(x, dtype=float)), dtype=complex)

    def scaled(self, c: complex) -> "Profile":
        return Profile(
            lambda x: c * self.value(x),
            lambda x: c * self.deriv(x),
            lambda x: c * self.second(x),
        )

    def boosted(self, k: float) -> "Profile":
        """Multiply by exp(i k x)."""
        if k == 0:
            return self

        def phase(x):
            return np.exp(1j * k * np.asarray(x, dtype=float))

        return Profile(
            lambda x: self.value(x) * phase(x),
            lambda x: (self.deriv(x) + 1j * k * self.value(x)) * phase(x),
            lambda x: (self.second(x) + 2j * k * self.deriv(x) - k * k * self.value(x)) * phase(x),
        )


ZERO = Profile(_zero, _zero, _zero)


def _sine_profile(amp: float, k: float, x_node: float, lo: float = -np.inf, hi: float = np.inf) -> Profile:
    """amp * sin(k (x - x_node)) on [lo, hi], zero outside."""

    def inside(x):
        return (x >= lo) & (x <= hi)

    return Profile(
        lambda x: np.where(inside(x), amp * np.sin(k * (x - x_node)), 0.0).astype(complex),
        lambda x: np.where(inside(x), amp * k * np.cos(k * (x - x_node)), 0.0).astype(complex),
        lambda x: np.where(inside(x), -amp * k * k * np.sin(k * (x - x_node)), 0.0).astype(complex),
    )


@dataclass(frozen=True)
class PiecewiseState:
    domain: BoxDomain
    left: Profile
    right: Profile
    psi_left0: complex
    psi_right0: complex
    dpsi_left0: complex
    dpsi_right0: complex
    label: str = ""
    x0: float | None = None
    marginal: bool = False
    # extra kinks inside either half, passed to quadrature as breakpoints
    breakpoints: tuple[float, ...] = field(default=())

    @property
    def mass(self) -> float:
        return self.domain.mass

    @property
    def char_length(self) -> float:
        return self.x0 if self.x0 is not None else self.domain.length

    @property
    def t0(self) -> float:
        """Characteristic time M x0^2."""
        return self.mass * self.char_length**2

    @property
    def jump(self) -> complex:
        return self.psi_right0 - self.psi_left0

    @property
    def slope_jump(self) -> complex:
        return self.dpsi_right0 - self.dpsi_left0

    def _split(self, x, side_fn_left, side_fn_right):
        x = np.asarray(x, dtype=float)
        if np.any(x == 0):
            raise ValueError("the state is two-valued at x = 0; sample on cell centres or use the stored limits")
        out = np.zeros(x.shape, dtype=complex)
        lm = (x < 0) & (x >= self.domain.a)
        rm = (x > 0) & (x <= self.domain.b)
        out[lm] = side_fn_left(x[lm])
        out[rm] = side_fn_right(x[rm])
        return out

    def __call__(self, x):
        return self._split(x, self.left.value, self.right.value)

    def deriv(self, x):
        return self._split(x, self.left.deriv, self.right.deriv)

    def second(self, x):
        return self._split(x, self.left.second, self.right.second)

    def h_piecewise(self, x, potential: ArrayFn | None = None):
        """H applied on each side separately, with no contact terms at 0."""
        out = -self.second(x) / (2.0 * self.mass)
        if potential is not None:
            out = out + np.asarray(potential(np.asarray(x, dtype=float))) * self(x)
        return out

    def h_limits(self, potential: ArrayFn | None = None) -> tuple[complex, complex]:
        """One-sided limits of the piecewise H Psi at the origin."""
        vl = -complex(self.left.second(np.array([0.0]))[0]) / (2.0 * self.mass)
        vr = -complex(self.right.second(np.array([0.0]))[0]) / (2.0 * self.mass)
        if potential is not None:
            v0 = float(np.asarray(potential(np.array([0.0])))[0])
            vl += v0 * self.psi_left0
            vr += v0 * self.psi_right0
        return vl, vr

    def sample(self, x):
        return self(x)

    def half_norms(self) -> tuple[float, float]:
        """Integrals of |Psi|^2 over [a, 0] and [0, b]."""
        a, b = self.domain.a, self.domain.b
        pts = sorted(p for p in self.breakpoints if a < p < b)

        def part(prof, lo, hi):
            inner = [p for p in pts if lo < p < hi]
            if len(inner) > _MANY_BREAKPOINTS:
                # spline-like states: Gauss-Legendre on every sub-interval
                edges = np.array([lo, *inner, hi])
                mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
                xs = mid[:, None] + half[:, None] * _GL_NODES[None, :]
                vals = np.abs(prof.value(xs.ravel()).reshape(xs.shape)) ** 2
                return float(np.sum(half * (vals @ _GL_WEIGHTS)))
            val, _ = integrate.quad(
                lambda s: float(np.abs(prof.value(np.array([s]))[0]) ** 2),
                lo, hi, points=inner or None, limit=400, epsabs=1e-14, epsrel=1e-13,
            )
            return val

        return part(self.left, a, 0.0), part(self.right, 0.0, b)

    def norm(self) -> float:
        return float(sum(self.half_norms()))

    def scaled(self, c: complex) -> "PiecewiseState":
        return replace(
            self,
            left=self.left.scaled(c),
            right=self.right.scaled(c),
            psi_left0=c * self.psi_left0,
            psi_right0=c * self.psi_right0,
            dpsi_left0=c * self.dpsi_left0,
            dpsi_right0=c * self.dpsi_right0,
        )

    def normalized(self) -> "PiecewiseState":
        return self.scaled(1.0 / math.sqrt(self.norm()))

    def wall_values(self) -> tuple[complex, complex]:
        return (
            complex(self.left.value(np.array([self.domain.a]))[0]),
            complex(self.right.value(np.array([self.domain.b]))[0]),
        )

    def to_csv(self, path, x) -> None:
        """Write samples as ``x,re,im`` with 17 significant digits."""
        from .io import atomic_write_text, format_rows

        x = np.asarray(x, dtype=float)
        psi = self(x)
        text = format_rows(["x", "re", "im"], [x, psi.real, psi.imag], comments=[f"state: {self.label}"])
        atomic_write_text(Path(path), text)


# --- builders ----------------------------------------------------------------


def _check_contains(domain: BoxDomain, lo: float, hi: float, what: str):
    tol = 1e-12 * domain.length
    if lo < domain.a - tol or hi > domain.b + tol:
        raise ValueError(f"{what} [{lo}, {hi}] does not fit in the box [{domain.a}, {domain.b}]")


def truncated_well(
    x0: float = 1.0,
    fraction: float = 0.75,
    domain: BoxDomain | None = None,
    renormalize: bool = False,
) -> PiecewiseState:
    """Ground state of a well of width ``x0``, cut at ``fraction`` of its length.

    The well occupies [-fraction*x0, (1-fraction)*x0] and everything right of
    the origin is removed.  By default the parent-well normalization
    sqrt(2/x0) is kept, so Psi(-0) = sqrt(2/x0) sin(pi*fraction); pass
    ``renormalize=True`` for a unit-norm state.
    """
    if not 0 < fraction < 1:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    if x0 <= 0:
        raise ValueError("x0 must be positive")
    domain = domain or BoxDomain(-1.0, 1.0)
    lo = -fraction * x0
    _check_contains(domain, lo, (1 - fraction) * x0, "well")
    amp = math.sqrt(2.0 / x0)
    k = math.pi / x0
    left = _sine_profile(amp, k, lo, lo=lo)
    s = math.sin(math.pi * fraction)
    state = PiecewiseState(
        domain=domain,
        left=left,
        right=ZERO,
        psi_left0=amp * s,
        psi_right0=0.0,
        dpsi_left0=amp * k * math.cos(math.pi * fraction),
        dpsi_right0=0.0,
        label=f"truncated_well(x0={x0:g}, fraction={fraction:g})",
        x0=x0,
        marginal=abs(s) < 1e-6,
        breakpoints=(lo,) if lo > domain.a else (),
    )
    if state.marginal:
        warnings.warn("truncation close to a node; the value jump nearly vanishes", RuntimeWarning, stacklevel=2)
    return state.normalized() if renormalize else state


def wall_removed(x0: float = 1.0, domain: BoxDomain | None = None) -> PiecewiseState:
    """Ground state of the well [-x0, 0] after its right wall is removed."""
    if x0 <= 0:
        raise ValueError("x0 must be positive")
    domain = domain or BoxDomain(-1.0, 1.0)
    _check_contains(domain, -x0, 0.0, "well")
    amp = math.sqrt(2.0 / x0)
    k = math.pi / x0
    return PiecewiseState(
        domain=domain,
        left=_sine_profile(amp, k, -x0, lo=-x0),
        right=ZERO,
        psi_left0=0.0,
        psi_right0=0.0,
        dpsi_left0=-amp * k,
        dpsi_right0=0.0,
        label=f"wall_removed(x0={x0:g})",
        x0=x0,
        breakpoints=(-x0,) if -x0 > domain.a else (),
    )


def box_ground_state(domain: BoxDomain | None = None) -> PiecewiseState:
    """Ground state of the whole box; continuous at the origin."""
    domain = domain or BoxDomain(-1.0, 1.0)
    L = domain.length
    amp = math.sqrt(2.0 / L)
    k = math.pi / L
    prof = _sine_profile(amp, k, domain.a)
    v0 = amp * math.sin(-k * domain.a)
    d0 = amp * k * math.cos(-k * domain.a)
    return PiecewiseState(domain, prof, prof, v0, v0, d0, d0, label="box_ground_state", x0=L)


def kink_state(
    k_left: float,
    k_right: float,
    value0: complex = 1.0,
    domain: BoxDomain | None = None,
    boost: float = 0.0,
) -> PiecewiseState:
    """Continuous value at the origin with a slope jump.

    Psi^L = value0 sin(k_left (x - a)) / sin(k_left |a|) and
    Psi^R = value0 sin(k_right (b - x)) / sin(k_right b), optionally
    multiplied by exp(i boost x) so that the state carries a current.
    """
    domain = domain or BoxDomain(-1.0, 1.0)
    if value0 == 0:
        raise ValueError("value0 must be nonzero")
    a, b = domain.a, domain.b
    sl = math.sin(k_left * -a)
    sr = math.sin(k_right * b)
    if abs(sl) < 1e-8 or abs(sr) < 1e-8:
        raise ValueError("a node of the requested sine falls on the origin")
    left = _sine_profile(1.0 / sl, k_left, a).scaled(value0).boosted(boost)
    # sin(k (b - x)) = -sin(k (x - b))
    right = _sine_profile(-1.0 / sr, k_right, b).scaled(value0).boosted(boost)
    v = complex(value0)
    return PiecewiseState(
        domain=domain,
        left=left,
        right=right,
        psi_left0=v,
        psi_right0=v,
        dpsi_left0=v * (k_left * math.cos(k_left * -a) / sl + 1j * boost),
        dpsi_right0=v * (-k_right * math.cos(k_right * b) / sr + 1j * boost),
        label=f"kink(k_left={k_left:g}, k_right={k_right:g}, boost={boost:g})",
        x0=domain.length,
    )


def phase_jump_state(dphi: float, profile: PiecewiseState | None = None, tol: float = 1e-10) -> PiecewiseState:
    """Multiply the right part of a continuous-modulus state by exp(i dphi)."""
    profile = profile or box_ground_state()
    ml, mr = abs(profile.psi_left0), abs(profile.psi_right0)
    if ml == 0 or abs(ml - mr) > tol * max(ml, mr):
        raise ValueError("profile must have equal nonzero moduli on both sides of the origin")
    ph = complex(np.exp(1j * dphi))
    return replace(
        profile,
        right=profile.right.scaled(ph),
        psi_right0=ph * profile.psi_right0,
        dpsi_right0=ph * profile.dpsi_right0,
        label=f"phase_jump(dphi={dphi:g})",
        marginal=abs(math.sin(dphi)) < 1e-8 and abs(ph - 1) > 1e-8,
    )


def gaussian_packet(
    sigma: float = 0.08,
    k0: float = 5.0,
    center: float = 0.0,
    domain: BoxDomain | None = None,
) -> PiecewiseState:
    """Unit-norm Gaussian packet exp(-(x-c)^2/(4 sigma^2) + i k0 x)."""
    domain = domain or BoxDomain(-1.0, 1.0)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    amp = (2.0 * math.pi * sigma**2) ** -0.25

    def f(x):
        u = np.asarray(x, dtype=float) - center
        return amp * np.exp(-(u * u) / (4 * sigma**2) + 1j * k0 * np.asarray(x, dtype=float))

    def g(x):
        u = np.asarray(x, dtype=float) - center
        return (-u / (2 * sigma**2) + 1j * k0) * f(x)

    def h(x):
        u = np.asarray(x, dtype=float) - center
        q = -u / (2 * sigma**2) + 1j * k0
        return (q * q - 1 / (2 * sigma**2)) * f(x)

    prof = Profile(f, g, h)
    v0 = complex(f(np.array([0.0]))[0])
    d0 = complex(g(np.array([0.0]))[0])
    ends = np.abs(f(np.array([domain.a, domain.b])))
    if np.any(ends > 1e-12):
        raise ValueError("packet does not fit inside the box (tail exceeds 1e-12 at a wall)")
    return PiecewiseState(domain, prof, prof, v0, v0, d0, d0, label="gaussian_packet", x0=4 * sigma)


def _spline_profile(spline: CubicSpline) -> Profile:
    d1, d2 = spline.derivative(1), spline.derivative(2)
    return Profile(lambda x: spline(x), lambda x: d1(x), lambda x: d2(x))


def from_samples(x, psi, domain: BoxDomain, label: str = "samples") -> PiecewiseState:
    """Build a state from cell-centred samples with the jump at a cell edge.

    Each side is interpolated by a cubic spline through its samples and the
    wall zero; the limits at the origin are the spline extrapolations.
    """
    x = np.asarray(x, dtype=float)
    psi = np.asarray(psi, dtype=complex)
    if x.shape != psi.shape or x.ndim != 1:
        raise ValueError("x and psi must be 1-D arrays of equal length")
    if np.any(np.diff(x) <= 0):
        raise ValueError("sample positions must be strictly increasing")
    if np.any(x == 0):
        raise ValueError("x = 0 must fall between samples, not on one")
    lm, rm = x < 0, x > 0
    if lm.sum() < 3 or rm.sum() < 3:
        raise ValueError("need at least three samples on each side of the origin")
    if x[0] <= domain.a or x[-1] >= domain.b:
        raise ValueError("samples must lie strictly inside the box")
    xl = np.concatenate([[domain.a], x[lm]])
    xr = np.concatenate([x[rm], [domain.b]])
    sl = CubicSpline(xl, np.concatenate([[0.0], psi[lm]]))
    sr = CubicSpline(xr, np.concatenate([psi[rm], [0.0]]))
    left, right = _spline_profile(sl), _spline_profile(sr)
    zero = np.array([0.0])
    return PiecewiseState(
        domain=domain,
        left=left,
        right=right,
        psi_left0=complex(sl(zero)[0]),
        psi_right0=complex(sr(zero)[0]),
        dpsi_left0=complex(sl(zero, 1)[0]),
        dpsi_right0=complex(sr(zero, 1)[0]),
        label=label,
        breakpoints=tuple(x),
    )


def read_samples(path, domain: BoxDomain) -> PiecewiseState:
    """Load a state from an ``x,re,im`` CSV file (``#`` comments allowed)."""
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip() and not ln.startswith("#")]
    if lines and not _is_number(lines[0].split(",")[0]):
        lines = lines[1:]
    arr = np.loadtxt(lines, delimiter=",", ndmin=2)
    if arr.shape[1] != 3:
        raise ValueError(f"{path}: expected 3 columns x,re,im")
    return from_samples(arr[:, 0], arr[:, 1] + 1j * arr[:, 2], domain, label=str(path))


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


# --- classification ----------------------------------------------------------


@dataclass(frozen=True)
class JumpDescriptor:
    d_psi: complex
    d_dpsi: complex
    d_phi1: float | None
    d_phi2: float | None
    case_label: str
    marginal: bool = False


def _wrapped_phase_difference(right: complex, left: complex) -> float:
    # angle of right/left, in (-pi, pi]
    return float(np.angle(right * np.conj(left)))


def characteristic_scales(state: PiecewiseState) -> tuple[float, float]:
    """Value and slope scales used to make jump thresholds relative."""
    L = state.domain.length
    v = math.sqrt(state.norm() / L)
    return v, v / L


def classify(state: PiecewiseState, eps_val: float = DEFAULT_EPS, eps_deriv: float = DEFAULT_EPS) -> JumpDescriptor:
    """Sort a state into the four jump cases.

    B: value jump.  C: slope jump at a nonzero value.  D: slope jump at a
    node.  A: none of these.  Thresholds are relative to the state's value
    and slope scales.
    """
    if eps_val <= 0 or eps_deriv <= 0:
        raise ValueError("thresholds must be positive")
    vs, ds = characteristic_scales(state)
    tv, td = eps_val * vs, eps_deriv * ds
    d_psi, d_dpsi = state.jump, state.slope_jump
    value0 = 0.5 * (state.psi_left0 + state.psi_right0)
    if abs(d_psi) > tv:
        label = "B"
    elif abs(d_dpsi) > td and abs(value0) > tv:
        label = "C"
    elif abs(d_dpsi) > td:
        label = "D"
    else:
        label = "A"
    phi1 = phi2 = None
    if abs(state.psi_left0) > tv and abs(state.psi_right0) > tv:
        phi1 = _wrapped_phase_difference(state.psi_right0, state.psi_left0)
    if abs(state.dpsi_left0) > td and abs(state.dpsi_right0) > td:
        phi2 = _wrapped_phase_difference(state.dpsi_right0, state.dpsi_left0)
    return JumpDescriptor(complex(d_psi), complex(d_dpsi), phi1, phi2, label, state.marginal)
