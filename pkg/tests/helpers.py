"""Hand-built piecewise states shared by several test modules."""

import math

import numpy as np

from discoflux.asymptotics import short_time_state
from discoflux.source_wave import Side
from discoflux.states import BoxDomain, PiecewiseState, Profile

DOMAIN = BoxDomain(-1.0, 1.0)


def quartic_side(v, d, q, c, wall):
    """v + d x + q x^2 + c x^3 + e x^4 with e fixed by a zero at ``wall``."""
    e = -(v + d * wall + q * wall**2 + c * wall**3) / wall**4

    def val(x):
        x = np.asarray(x, dtype=float)
        return v + d * x + q * x**2 + c * x**3 + e * x**4

    def der(x):
        x = np.asarray(x, dtype=float)
        return d + 2 * q * x + 3 * c * x**2 + 4 * e * x**3 + 0j

    def sec(x):
        x = np.asarray(x, dtype=float)
        return 2 * q + 6 * c * x + 12 * e * x**2 + 0j

    return Profile(val, der, sec)


def quartic_state(rng, domain=DOMAIN, curvature=False):
    """Random jumps in value and slope.

    With ``curvature=False`` both sides have zero curvature at the origin and a
    common cubic coefficient, so H Psi and its slope are continuous there.
    """
    cplx = lambda: complex(rng.normal(), rng.normal())  # noqa: E731
    vl, vr, dl, dr, c = cplx(), cplx(), cplx(), cplx(), cplx()
    ql, qr = (cplx(), cplx()) if curvature else (0.0, 0.0)
    return PiecewiseState(
        domain,
        quartic_side(vl, dl, ql, c, domain.a),
        quartic_side(vr, dr, qr, c, domain.b),
        vl, vr, dl, dr, label="quartic", x0=1.0,
    )


def retained_order_edges(s, t):
    """Edge limits of initial + source terms (the O(t) Hamiltonian part left out)."""
    out = []
    for side in (Side.LEFT, Side.RIGHT):
        f = short_time_state(s, t, [0.0], side=side)
        out.append(complex(f.values[0] - f.terms["hamiltonian"][0]))
    return out


def sine_d_state(beta):
    """Node at the origin with slopes -pi (left) and beta*pi (right)."""
    k = math.pi
    left = Profile(
        lambda x: np.sin(k * (np.asarray(x) + 1)) + 0j,
        lambda x: k * np.cos(k * (np.asarray(x) + 1)) + 0j,
        lambda x: -k * k * np.sin(k * (np.asarray(x) + 1)) + 0j,
    )
    right = Profile(
        lambda x: beta * np.sin(k * np.asarray(x)),
        lambda x: beta * k * np.cos(k * np.asarray(x)),
        lambda x: -beta * k * k * np.sin(k * np.asarray(x)),
    )
    return PiecewiseState(DOMAIN, left, right, 0j, 0j, -k + 0j, beta * k, label="sine_d", x0=1.0)
