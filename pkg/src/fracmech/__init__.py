"""Fractional Lagrangian and Hamilton-Jacobi mechanics on uniform grids."""

from fracmech.frac_ops import (
    ClosedFormFn,
    Grid,
    GridFn,
    Order,
    PowerTerm,
    Side,
    apply_power_rule,
    compose_check,
    gamma,
    gl_left_deriv,
    gl_right_deriv,
    power_rule,
    quadrature_rl_deriv,
    rl_integral,
)
from fracmech.hamjac import (
    HJSolution,
    Xi,
    example2_operator_residual,
    momenta_from_solution,
    reconstruct_q,
    solve_separable,
    trajectory_identity,
    verify_action_identity,
    verify_hjpde,
)
from fracmech.variational import (
    MomentaPair,
    QuadraticHamiltonian,
    QuadraticLagrangian,
    action,
    el_residual,
    hamilton_equations_residual,
    legendre_transform,
    momenta,
)

__version__ = "0.1.0"

__all__ = [
    "ClosedFormFn",
    "Grid",
    "GridFn",
    "HJSolution",
    "MomentaPair",
    "Order",
    "PowerTerm",
    "QuadraticHamiltonian",
    "QuadraticLagrangian",
    "Side",
    "Xi",
    "action",
    "apply_power_rule",
    "compose_check",
    "el_residual",
    "example2_operator_residual",
    "gamma",
    "gl_left_deriv",
    "gl_right_deriv",
    "hamilton_equations_residual",
    "legendre_transform",
    "momenta",
    "momenta_from_solution",
    "power_rule",
    "quadrature_rl_deriv",
    "reconstruct_q",
    "rl_integral",
    "solve_separable",
    "trajectory_identity",
    "verify_action_identity",
    "verify_hjpde",
]
