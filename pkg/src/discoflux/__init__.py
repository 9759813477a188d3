"""Probability current emitted by jumps in one-dimensional wavefunctions."""

__version__ = "0.1.0"

from .asymptotics import (  # noqa: E402
    CurrentLaw,
    ShortTimeField,
    current_law,
    fit_power_law,
    leading_coefficient,
    p_right_expansion,
    short_time_state,
)
from .cerf import SQRT_I, SQRT_MINUS_I, erfc_complex, faddeeva  # noqa: E402
from .source_wave import MassTime, MomentSet, Side, delta_psi, delta_psi_prime, far_field, moments, quad_moment  # noqa: E402
from .states import (  # noqa: E402
    BoxDomain,
    JumpDescriptor,
    PiecewiseState,
    box_ground_state,
    classify,
    gaussian_packet,
    kink_state,
    phase_jump_state,
    truncated_well,
    wall_removed,
)

__all__ = [
    "BoxDomain", "CurrentLaw", "JumpDescriptor", "MassTime", "MomentSet", "PiecewiseState",
    "SQRT_I", "SQRT_MINUS_I", "ShortTimeField", "Side", "box_ground_state", "classify",
    "current_law", "delta_psi", "delta_psi_prime", "erfc_complex", "faddeeva", "far_field",
    "fit_power_law", "gaussian_packet", "kink_state", "leading_coefficient", "moments",
    "p_right_expansion", "phase_jump_state", "quad_moment", "short_time_state",
    "truncated_well", "wall_removed",
]
