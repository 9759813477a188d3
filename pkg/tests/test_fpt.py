import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from discoflux.fpt import (
    alpha_from_component,
    boundary_trace_history,
    commutator_boundary,
    commutator_elements,
    convergence_study,
    decompose,
    decomposition_residual,
    extrapolated_traces,
    ghost_ratio,
    robin_eigensolve,
)
from discoflux.propagate import Grid1D
from discoflux.states import BoxDomain, truncated_well

DOMAIN = BoxDomain(-1.0, 1.0)
OWN_BOX = BoxDomain(-0.75, 0.25)


def f_test(x):
    return np.sin(math.pi * (x + 1))


def g_test(x):
    return np.sin(math.pi * (x + 1) / 2)


def well_component(domain=OWN_BOX):
    s = truncated_well(1.0, 0.75, domain)
    return s, alpha_from_component(s.psi_left0.real, s.dpsi_left0.real).theta


# --- boundary angle ----------------------------------------------------------


def test_alpha_examples():
    assert alpha_from_component(0.0, 2.0).theta == 0.0
    b = alpha_from_component(3.0, 0.0)
    assert abs(b.theta - math.pi / 2) <= 1e-15 and b.alpha == math.inf
    b = alpha_from_component(1.0, -2.0)
    assert abs(b.theta - math.atan(0.5)) <= 1e-15 and abs(b.alpha - 0.5) <= 1e-15
    d = alpha_from_component(0.0, 0.0)
    assert d.degenerate and d.theta == 0.0


@settings(max_examples=100, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(0.01, 100))
def test_alpha_projective(v, d, c):
    if abs(v) + abs(d) < 1e-6:
        return
    a = alpha_from_component(v, d)
    assert 0 <= a.theta < math.pi
    assert abs(v * math.cos(a.theta) + d * math.sin(a.theta)) <= 1e-12 * (abs(v) + abs(d))
    assert alpha_from_component(c * v, c * d).theta == pytest.approx(a.theta, abs=1e-12)
    assert alpha_from_component(-v, -d).theta == pytest.approx(a.theta, abs=1e-12)


def test_ghost_ratio_limits():
    assert ghost_ratio(0.0, 0.01) == -1.0  # Dirichlet: mirror with opposite sign
    assert ghost_ratio(math.pi / 2, 0.01) == 1.0  # Neumann: even mirror
    with pytest.raises(ValueError):
        ghost_ratio(math.pi - math.atan(0.005), 0.01)


# --- Robin basis -------------------------------------------------------------


@pytest.mark.parametrize("theta,shift", [(0.0, 0.0), (math.pi / 2, 0.5)])
def test_robin_spectra_second_order(theta, shift):
    errs = []
    for n in (512, 1024):
        b = robin_eigensolve(Grid1D(DOMAIN, n), theta)
        exact = ((np.arange(1, 4) - shift) * math.pi) ** 2 / 2
        errs.append(np.abs(b.energies[:3] / exact - 1))
    assert np.all(errs[1] <= 1e-4)
    assert np.all(errs[0] / errs[1] >= 3.5)


def test_robin_general_angle_matches_transcendental_root():
    # phi = sin(k (x + 1)); cos(th) sin(k) + sin(th) k cos(k) = 0
    from scipy.optimize import brentq

    th = 0.46
    k1 = brentq(lambda k: math.cos(th) * math.sin(k) + math.sin(th) * k * math.cos(k), 1.6, 3.1)
    b = robin_eigensolve(Grid1D(DOMAIN, 2048), th)
    assert abs(b.energies[0] / (k1 * k1 / 2) - 1) <= 1e-5


def test_basis_orthonormal_and_complete(rng):
    b = robin_eigensolve(Grid1D(DOMAIN, 512), 0.8)
    v = b.vectors
    assert np.max(np.abs(v.T @ v - np.eye(v.shape[1]))) <= 1e-10
    f = rng.normal(size=b.n_left) + 1j * rng.normal(size=b.n_left)
    assert abs(np.sum(np.abs(b.coefficients(f)) ** 2) / np.sum(np.abs(f) ** 2) - 1) <= 1e-10


def test_projector_idempotent():
    b = robin_eigensolve(Grid1D(DOMAIN, 256), 1.1)
    p = b.matrix()
    assert np.linalg.norm(p @ p - p, 2) <= 1e-10


def test_projector_fixes_its_component():
    s, th = well_component(DOMAIN)
    g = Grid1D(DOMAIN, 1024)
    psi = np.where(g.x < 0, s(g.x), 0.0).real
    b = robin_eigensolve(g, th)
    assert np.linalg.norm(b.project(psi) - psi) * math.sqrt(g.dx) <= 1e-8


def test_theta_range_checked():
    with pytest.raises(ValueError):
        robin_eigensolve(Grid1D(DOMAIN, 256), math.pi)


# --- commutator --------------------------------------------------------------


def test_boundary_formula_value():
    val = commutator_boundary(f_test(0.0), -math.pi, g_test(0.0), 0.0, 1.0)
    assert abs(val - math.pi / 2) <= 1e-12


def test_commutator_matches_boundary_formula():
    g = Grid1D(DOMAIN, 4096)
    for th in (0.3, 1.2):
        v = commutator_elements(f_test, g_test, th, g)
        assert abs(v - math.pi / 2) <= 0.01 * math.pi / 2


def test_commutator_angle_independent():
    g = Grid1D(DOMAIN, 1024)
    vals = [commutator_elements(f_test, g_test, th, g) for th in (0.0, 0.3, 1.2, math.pi / 2, 2.5)]
    assert max(abs(v - vals[0]) for v in vals) <= 1e-10


def test_commutator_converges_second_order():
    errs = [abs(commutator_elements(f_test, g_test, 0.3, Grid1D(DOMAIN, n)) - math.pi / 2) for n in (256, 512, 1024)]
    assert errs[0] / errs[1] >= 3.5 and errs[1] / errs[2] >= 3.5


def test_commutator_vanishes_for_flat_real_function():
    def f(x):
        return np.sin(math.pi * (x + 1)) ** 2

    v = commutator_elements(f, f, 0.7, Grid1D(DOMAIN, 512))
    assert abs(v) <= 1e-12


def test_commutator_precondition():
    with pytest.raises(ValueError):
        commutator_elements(np.cos, g_test, 0.3, Grid1D(DOMAIN, 256))


# --- decomposition -----------------------------------------------------------


def test_extrapolation_exact_for_quadratics():
    dx = 0.01
    x = -dx * np.array([0.5, 1.5, 2.5])
    u = 2.0 - 3.0 * x + 5.0 * x**2
    v, d = extrapolated_traces(*u, dx)
    assert abs(v - 2.0) <= 1e-13 and abs(d + 3.0) <= 1e-11


def test_residual_small_at_matched_angle():
    s, th = well_component()
    g = Grid1D(OWN_BOX, 2048)
    r = decomposition_residual(np.where(g.x < 0, s(g.x), 0.0).real, th, g, 0.01, 2048)
    assert r.residual <= 1e-3


def test_residual_shrinks_under_refinement():
    s, th = well_component()
    prev = None
    for n in (512, 1024, 2048):
        g = Grid1D(OWN_BOX, n)
        r = decomposition_residual(np.where(g.x < 0, s(g.x), 0.0).real, th, g, 0.01, n).residual
        if prev is not None:
            assert r <= 1.1 * prev / 2
        prev = r


def test_residual_vanishes_as_t_goes_to_zero():
    s, th = well_component()
    g = Grid1D(OWN_BOX, 512)
    comp = np.where(g.x < 0, s(g.x), 0.0).real
    res = [decomposition_residual(comp, th, g, t, 1).residual for t in (1e-4, 1e-5, 1e-6)]
    assert res[0] > res[1] > res[2]


def test_unmatched_angle_still_converges():
    # the splitting is exact for every angle; only the constant changes
    s, _ = well_component()
    out = []
    for n in (512, 1024):
        g = Grid1D(OWN_BOX, n)
        out.append(decomposition_residual(np.where(g.x < 0, s(g.x), 0.0).real, 1.2, g, 0.01, n).residual)
    assert out[1] < out[0]


def test_traces_satisfy_robin_condition():
    s, th = well_component()
    g = Grid1D(OWN_BOX, 1024)
    comp = np.where(g.x < 0, s(g.x), 0.0).real
    _, val, der = boundary_trace_history(comp, th, g, 0.01, 256)
    scale = np.max(np.abs(val)) + np.max(np.abs(der))
    assert np.max(np.abs(math.cos(th) * val + math.sin(th) * der)) <= 1e-4 * scale
    _, val, der = boundary_trace_history(comp, th, g, 0.01, 256, traces="ghost")
    assert np.max(np.abs(math.cos(th) * val + math.sin(th) * der)) <= 1e-12 * scale


def test_under_resolution_flag():
    s, th = well_component()
    g = Grid1D(OWN_BOX, 1024)
    comp = np.where(g.x < 0, s(g.x), 0.0).real
    coarse = decomposition_residual(comp, th, g, 0.01, 8, check_quadrature=True)
    fine = decomposition_residual(comp, th, g, 0.01, 1024, check_quadrature=True)
    assert coarse.under_resolved is True
    assert fine.under_resolved is False
    assert decomposition_residual(comp, th, g, 0.01, 64).under_resolved is None


def test_component_checks():
    g = Grid1D(OWN_BOX, 256)
    with pytest.raises(ValueError):
        decomposition_residual(np.ones(256), 0.3, g, 0.01, 16)
    with pytest.raises(ValueError):
        decomposition_residual(1j * np.where(g.x < 0, 1.0, 0.0), 0.3, g, 0.01, 16)
    with pytest.raises(ValueError):
        decomposition_residual(np.where(g.x < 0, 1.0, 0.0), 0.3, g, 0.01, 16, traces="linear")


def test_complex_state_uses_two_angles():
    s = truncated_well(1.0, 0.75, OWN_BOX).scaled(np.exp(1j * math.pi / 3))
    rep = convergence_study(s, Grid1D(OWN_BOX, 1024), 0.01, 1024)
    assert rep.theta2 is not None
    assert abs(rep.theta1 - rep.theta2) <= 1e-12  # both parts share the profile
    assert rep.residual <= 1e-5 and rep.convergence_ratio >= 2
    d = rep.as_dict()
    assert set(d) == {"theta1", "theta2", "residual", "n_cells", "n_quad", "convergence_ratio"}


def test_decompose_ignores_right_part():
    s = truncated_well(1.0, 0.75, OWN_BOX)
    assert decompose(s, Grid1D(OWN_BOX, 512), 0.01, 512).theta2 is None
