r"""Separable fractional Hamilton-Jacobi solver.

For a time-independent, potential-free quadratic Hamiltonian the principal
function separates as

.. math::

    S(\xi_\alpha, \xi_\beta, t) = W_1(\xi_\alpha) + W_2(\xi_\beta) - E t,
    \qquad \xi_\alpha = {}_aD_t^{\alpha - 1} q, \quad \xi_\beta = {}_tD_b^{\beta - 1} q,

with linear characteristic functions :math:`W_i = c_i \xi_i`. The momenta are
the constant slopes :math:`c_i`, and differentiating :math:`S` with respect to
the energy gives the trajectory constants :math:`\lambda_1, \lambda_2`.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from fracmech.errors import (
    KnownDiscrepancyWarning,
    NegativeEnergyError,
    NonSeparableError,
    UnsupportedShapeError,
    ValidationError,
    ZeroMomentumError,
)
from fracmech.frac_ops import (
    ClosedFormFn,
    Grid,
    GridFn,
    Order,
    Side,
    apply_power_rule,
    gl_left_deriv,
    gl_right_deriv,
    interior_mask,
    quadrature_rl_deriv,
    rl_integral,
)
from fracmech.variational import (
    HamiltonianKind,
    MomentaPair,
    QuadraticHamiltonian,
    QuadraticLagrangian,
)

__all__ = [
    "HJSolution",
    "SolutionShape",
    "Xi",
    "example2_operator_residual",
    "momenta_from_solution",
    "reconstruct_q",
    "solve_separable",
    "trajectory_identity",
    "verify_action_identity",
    "verify_hjpde",
    "xi_from_q",
]

_ENERGY_RTOL = 1.0e-12


class SolutionShape(enum.Enum):
    """Which channels of the principal function are active."""

    #: only the left channel carries momentum (rank one along the left velocity)
    Left = enum.auto()
    #: only the right channel carries momentum
    Right = enum.auto()
    #: rank one with both channels tied together by the constraint
    Coupled = enum.auto()
    #: full-rank diagonal inverse mass, channels independent
    Separated = enum.auto()
    #: zero energy, nothing moves
    Trivial = enum.auto()


@dataclass(frozen=True)
class HJSolution:
    r"""Separated solution :math:`S = c_1 \xi_\alpha + c_2 \xi_\beta - E t`."""

    energy_total: float
    energy_split: tuple[float, float]
    w1_coef: float
    w2_coef: float
    lambda1: float
    lambda2: float
    constrained: bool
    alpha: Order
    beta: Order
    a: float
    b: float
    shape: SolutionShape
    #: nonzero eigenvalue of the mass matrix for rank-one Hamiltonians
    sigma: float | None = None

    def w1(self, xi_alpha):
        return self.w1_coef * np.asarray(xi_alpha, dtype=float)

    def w2(self, xi_beta):
        return self.w2_coef * np.asarray(xi_beta, dtype=float)

    def principal(self, xi_alpha, xi_beta, t):
        """Hamilton's principal function."""
        return self.w1(xi_alpha) + self.w2(xi_beta) - self.energy_total * np.asarray(t)


@dataclass(frozen=True)
class Xi:
    r"""Arguments :math:`({}_aD_t^{\alpha - 1} q, {}_tD_b^{\beta - 1} q)` of :math:`S`."""

    xi_alpha: float | GridFn
    xi_beta: float | GridFn


def xi_from_q(q: GridFn, alpha: float | Order, beta: float | Order) -> Xi:
    """Order :math:`1 - \\alpha` left and :math:`1 - \\beta` right integrals of *q*."""
    alpha = alpha.alpha if isinstance(alpha, Order) else float(alpha)
    beta = beta.alpha if isinstance(beta, Order) else float(beta)
    return Xi(rl_integral(q, 1.0 - alpha, Side.Left),
              rl_integral(q, 1.0 - beta, Side.Right))


def _check_split(energy: float, split) -> tuple[float, float]:
    if split is None:
        return 0.5 * energy, 0.5 * energy
    e1, e2 = (float(e) for e in split)
    if e1 < 0 or e2 < 0:
        raise NegativeEnergyError(f"energy split must be non-negative: {(e1, e2)}")
    if not math.isclose(e1 + e2, energy, rel_tol=_ENERGY_RTOL, abs_tol=1e-300):
        raise ValidationError(f"split {(e1, e2)} does not add up to E = {energy}")
    return e1, e2


def solve_separable(hamiltonian: QuadraticHamiltonian, energy: float,
                    split: tuple[float, float] | None = None, *,
                    lambda1: float = 0.0, lambda2: float = 0.0) -> HJSolution:
    r"""Solve :math:`H + \partial S / \partial t = 0` by separation of variables.

    Rank-one Hamiltonians :math:`((p \cdot w)^2 / 2\sigma)` give momenta
    :math:`p = \sqrt{2 \sigma E}\, w` with a single shared energy; the split is
    ignored and reported as :math:`E w_i^2`. Full-rank Hamiltonians must have a
    diagonal inverse mass :math:`\mathrm{diag}(1/m_1, 1/m_2)` and give
    :math:`c_i = \sqrt{2 m_i E_i}` with *split* defaulting to :math:`(E/2, E/2)`.

    :raises NonSeparableError: for potentials, momentum shifts, or a coupled
        full-rank inverse mass.
    :raises NegativeEnergyError: for :math:`E < 0`.
    """
    energy = float(energy)
    if energy < 0 or not math.isfinite(energy):
        raise NegativeEnergyError(f"energy must be a finite non-negative number, got {energy}")
    if any(c != 0 for c in hamiltonian.potential):
        raise NonSeparableError("separable solver needs a potential-free Hamiltonian")
    if np.any(hamiltonian.shift != 0):
        raise NonSeparableError("separable solver needs a zero linear term in L")

    common = dict(
        energy_total=energy,
        lambda1=float(lambda1),
        lambda2=float(lambda2),
        alpha=hamiltonian.alpha,
        beta=hamiltonian.beta,
        a=hamiltonian.a,
        b=hamiltonian.b,
    )

    kind = hamiltonian.kind
    if kind is HamiltonianKind.RankZero:
        if energy > 0:
            raise NonSeparableError("a Hamiltonian without kinetic part only admits E = 0")
        return HJSolution(energy_split=(0.0, 0.0), w1_coef=0.0, w2_coef=0.0,
                          constrained=False, shape=SolutionShape.Trivial, **common)

    if kind is HamiltonianKind.RankOne:
        w = hamiltonian.direction
        coupled = bool(np.all(np.abs(w) > 1e-14))
        # exact zeros for the inactive channel, so Example 1 gives w2_coef = 0.0
        w = np.where(np.abs(w) > 1e-14, w, 0.0)
        speed = math.sqrt(2.0 * hamiltonian.sigma * energy)
        c1, c2 = speed * float(w[0]), speed * float(w[1])
        if coupled and math.isclose(abs(w[0]), abs(w[1]), rel_tol=1e-12):
            # the symmetric class p_alpha = p_beta: keep the two channels bitwise equal
            c1 = c2 = math.copysign(math.sqrt(hamiltonian.sigma * energy), w[0])
        if energy == 0:
            shape = SolutionShape.Trivial
        elif coupled:
            shape = SolutionShape.Coupled
        else:
            shape = SolutionShape.Left if w[0] != 0 else SolutionShape.Right
        e1 = 0.5 * energy if shape is SolutionShape.Coupled and c1 == c2 else energy * w[0] ** 2
        return HJSolution(energy_split=(e1, energy - e1),
                          w1_coef=c1, w2_coef=c2, constrained=coupled,
                          shape=shape, sigma=hamiltonian.sigma, **common)

    inv = hamiltonian.inverse_matrix
    if abs(inv[0, 1]) > 1e-12 * max(abs(inv[0, 0]), abs(inv[1, 1])):
        raise NonSeparableError(
            f"inverse mass matrix is not diagonal: off-diagonal {inv[0, 1]:g}")
    e1, e2 = _check_split(energy, split)
    m1, m2 = 1.0 / inv[0, 0], 1.0 / inv[1, 1]
    shape = SolutionShape.Trivial if energy == 0 else SolutionShape.Separated
    return HJSolution(energy_split=(e1, e2),
                      w1_coef=math.sqrt(2.0 * m1 * e1), w2_coef=math.sqrt(2.0 * m2 * e2),
                      constrained=False, shape=shape, **common)


def momenta_from_solution(sol: HJSolution) -> MomentaPair:
    r"""Constant momenta :math:`p_\alpha = \partial W_1/\partial\xi_\alpha`,
    :math:`p_\beta = \partial W_2/\partial\xi_\beta`."""
    return MomentaPair(sol.w1_coef, sol.w2_coef)


def trajectory_identity(sol: HJSolution, t, *, channel: str = "alpha"):
    r"""Right-hand side of the trajectory relation obtained from
    :math:`\partial S/\partial E = \lambda`.

    With a shared energy (rank one) the relation is
    :math:`(c_1 \xi_\alpha + c_2 \xi_\beta)/c_1 = 2E (t + \lambda_1)/c_1`, which
    reads :math:`\xi_\alpha = \sqrt{2E}(t + \lambda_1)` for a single left channel
    and :math:`\xi_\alpha + \xi_\beta = \sqrt{2E}(t + \lambda_1)` when
    :math:`p_\alpha = p_\beta`. Independent channels give
    :math:`\xi_\alpha = 2E_1(t + \lambda_1)/c_1` and the analogous
    *channel* ``"beta"`` relation with :math:`\lambda_2`.

    :raises ZeroMomentumError: if the selected channel has no momentum.
    """
    if channel not in ("alpha", "beta"):
        raise ValidationError(f"unknown channel {channel!r}")

    t = np.asarray(t, dtype=float)
    coef = sol.w1_coef if channel == "alpha" else sol.w2_coef
    if coef == 0:
        raise ZeroMomentumError(f"no momentum in the {channel} channel")

    if sol.shape is SolutionShape.Separated:
        energy, lam = ((sol.energy_split[0], sol.lambda1) if channel == "alpha"
                       else (sol.energy_split[1], sol.lambda2))
    else:
        energy, lam = sol.energy_total, sol.lambda1

    out = 2.0 * energy * (t + lam) / coef
    return float(out) if out.ndim == 0 else out


def reconstruct_q(sol: HJSolution, grid: Grid) -> tuple[ClosedFormFn, GridFn]:
    r"""Trajectory for a single left channel.

    Solves :math:`\sigma\, {}_aD_t^\alpha q = c_1` with no homogeneous
    :math:`(t - a)^{\alpha - 1}` component, i.e.
    :math:`q = (c_1/\sigma)(t - a)^\alpha / \Gamma(\alpha + 1)`. This matches
    :math:`\xi_\alpha = \sqrt{2E}(t + \lambda_1)` only for
    :math:`\lambda_1 = -a`.

    :raises UnsupportedShapeError: for coupled or two-channel solutions, whose
        trajectory is not pinned down by the momenta.
    """
    if sol.shape is SolutionShape.Trivial:
        fn = ClosedFormFn((), sol.a, sol.b)
        return fn, fn.sample(grid)
    if sol.shape is not SolutionShape.Left:
        raise UnsupportedShapeError(
            f"trajectory is only determined for a single left channel, not {sol.shape.name}")
    if not math.isclose(sol.lambda1, -sol.a, abs_tol=1e-14):
        raise UnsupportedShapeError(
            f"bounded trajectory needs lambda1 = -a = {-sol.a}, got {sol.lambda1}")

    velocity = sol.w1_coef / sol.sigma
    # invert D^alpha by the fractional integral of the constant velocity
    fn = apply_power_rule(ClosedFormFn.constant(velocity, sol.a, sol.b), -sol.alpha.alpha)
    return fn, fn.sample(grid)


def verify_hjpde(sol: HJSolution, hamiltonian: QuadraticHamiltonian) -> float:
    r"""Residual :math:`H(p) + \partial S/\partial t = H(c_1, c_2) - E`.

    This is also the value of the transformed Hamiltonian :math:`K`, which a
    correct solution makes identically zero.
    """
    h = hamiltonian.kinetic(sol.w1_coef, sol.w2_coef)
    return float(h) - sol.energy_total


def verify_action_identity(sol: HJSolution, lagrangian: QuadraticLagrangian,
                           grid: Grid) -> GridFn:
    r"""Node-wise residual of :math:`dS/dt = L` along the reconstructed trajectory.

    :math:`\xi_\alpha` comes from the exact power rule, :math:`dS/dt` from
    second-order differences of :math:`S`, and :math:`L` from the
    Grünwald-Letnikov velocities of the sampled trajectory.
    """
    fn, q = reconstruct_q(sol, grid)
    xi_alpha = apply_power_rule(fn, -(1.0 - sol.alpha.alpha), Side.Left)(grid.nodes)
    s = sol.principal(xi_alpha, np.zeros(grid.size), grid.nodes)
    ds_dt = np.gradient(s, grid.step, edge_order=2)

    v_alpha = gl_left_deriv(q, lagrangian.alpha)
    v_beta = gl_right_deriv(q, lagrangian.beta)
    lagr = lagrangian(q, v_alpha, v_beta)

    n = grid.num_intervals
    return GridFn(grid, ds_dt - lagr, {0, n})


def example2_operator_residual(sol: HJSolution, grid: Grid, *,
                               scheme: str = "gl") -> GridFn:
    r"""Apply :math:`{}_aD_t^\beta + {}_tD_b^\alpha` to the constant :math:`c_1`.

    For the coupled solution the constant is the value of
    :math:`{}_aD_t^\alpha q + {}_tD_b^\beta q`. Under Riemann-Liouville
    derivatives the result is
    :math:`c_1 [(t - a)^{-\beta}/\Gamma(1 - \beta) + (b - t)^{-\alpha}/\Gamma(1 - \alpha)]`,
    which does not vanish for fractional orders; a
    :class:`~fracmech.errors.KnownDiscrepancyWarning` is issued when the
    interior residual is nonzero.
    """
    if not sol.constrained and sol.shape is not SolutionShape.Trivial:
        raise UnsupportedShapeError("operator residual needs a coupled (constrained) solution")
    if scheme not in ("gl", "quad"):
        raise ValidationError(f"unknown scheme {scheme!r}")

    c = sol.w1_coef
    alpha, beta = sol.alpha.alpha, sol.beta.alpha
    const = GridFn.constant(grid, c)

    def left(order):
        if scheme == "quad" and order < 1:
            return quadrature_rl_deriv(const, order, Side.Left)
        return gl_left_deriv(const, order)

    def right(order):
        if scheme == "quad" and order < 1:
            return quadrature_rl_deriv(const, order, Side.Right)
        return gl_right_deriv(const, order)

    out = left(beta) + right(alpha)
    n = grid.num_intervals
    out = GridFn(grid, out.values, out.unreliable | {0, n})

    mask = interior_mask(grid, left=True, right=True)
    peak = float(np.max(np.abs(out.values[mask]))) if mask.any() else 0.0
    if peak > 1e-10 * max(1.0, abs(c)):
        warnings.warn(
            f"(D^beta + D^alpha) of the constant momentum is nonzero "
            f"(max interior |residual| = {peak:.6g})",
            KnownDiscrepancyWarning, stacklevel=2)
    return out
