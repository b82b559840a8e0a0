r"""Quadratic fractional Lagrangians and their Legendre transform.

A Lagrangian here is a quadratic form in the two fractional velocities
:math:`v = ({}_aD_t^\alpha q, {}_tD_b^\beta q)` plus a quadratic potential,

.. math::

    L(q, v) = \tfrac12 v^T M v + l^T v + c_0 + c_1 q + \tfrac12 c_2 q^2.

The mass matrix :math:`M` may be singular; the Legendre transform then keeps
the constraint on the momenta explicit instead of hiding it in a
pseudo-inverse.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

from fracmech.errors import GridMismatchError, IndefiniteMatrixError, ValidationError
from fracmech.frac_ops import (
    ClosedFormFn,
    GridFn,
    Order,
    as_order,
    gl_left_deriv,
    gl_right_deriv,
)

__all__ = [
    "HamiltonResiduals",
    "HamiltonianKind",
    "MomentaPair",
    "QuadraticHamiltonian",
    "QuadraticLagrangian",
    "action",
    "el_residual",
    "hamilton_equations_residual",
    "legendre_transform",
    "momenta",
]

Carrier = Union[GridFn, ClosedFormFn, float]

#: relative eigenvalue cutoff below which a direction of M counts as null
RANK_TOL = 1.0e-10


def _as_array(x) -> np.ndarray:
    if isinstance(x, GridFn):
        return x.values
    return np.asarray(x, dtype=float)


@dataclass(frozen=True, eq=False)
class QuadraticLagrangian:
    """Quadratic Lagrangian in the left and right fractional velocities."""

    alpha: Order
    beta: Order
    a: float = 0.0
    b: float = 1.0
    mass: np.ndarray = field(default_factory=lambda: np.eye(2))
    linear: np.ndarray = field(default_factory=lambda: np.zeros(2))
    potential: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        alpha, beta = as_order(self.alpha), as_order(self.beta)
        for name, order in (("alpha", alpha), ("beta", beta)):
            if not 0 < order.alpha <= 1:
                raise ValidationError(f"{name} must lie in (0, 1], got {order.alpha}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

        mass = np.array(self.mass, dtype=float)
        if mass.shape != (2, 2) or not np.allclose(mass, mass.T, rtol=0, atol=1e-14):
            raise ValidationError(f"mass matrix must be symmetric 2x2, got {mass!r}")
        linear = np.array(self.linear, dtype=float)
        if linear.shape != (2,):
            raise ValidationError(f"linear term must have 2 entries, got {linear!r}")
        mass.setflags(write=False)
        linear.setflags(write=False)
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "linear", linear)
        object.__setattr__(self, "potential", tuple(float(c) for c in self.potential))

        if self.b <= self.a:
            raise ValidationError(f"invalid interval [{self.a}, {self.b}]")

    @classmethod
    def example1(cls, alpha: float, beta: float = 1.0,
                 a: float = 0.0, b: float = 1.0) -> QuadraticLagrangian:
        r""":math:`L = \frac12 ({}_0D_t^\alpha q)^2`."""
        return cls(Order(alpha), Order(beta), a, b, mass=[[1.0, 0.0], [0.0, 0.0]])

    @classmethod
    def example2(cls, alpha: float, beta: float,
                 a: float = 0.0, b: float = 1.0) -> QuadraticLagrangian:
        r""":math:`L = \frac12 (v_\alpha + v_\beta)^2`, exactly rank one."""
        return cls(Order(alpha), Order(beta), a, b, mass=[[1.0, 1.0], [1.0, 1.0]])

    def potential_value(self, q):
        c0, c1, c2 = self.potential
        return c0 + c1 * q + 0.5 * c2 * q * q

    def dpotential(self, q):
        _, c1, c2 = self.potential
        return c1 + c2 * q

    def __call__(self, q, v_alpha, v_beta) -> np.ndarray:
        """Node-wise value of the Lagrangian."""
        q, va, vb = _as_array(q), _as_array(v_alpha), _as_array(v_beta)
        (m11, m12), (_, m22) = self.mass
        kinetic = 0.5 * (m11 * va * va + 2.0 * m12 * va * vb + m22 * vb * vb)
        return kinetic + self.linear[0] * va + self.linear[1] * vb + self.potential_value(q)


@dataclass(frozen=True)
class MomentaPair:
    r"""Generalized momenta :math:`(p_\alpha, p_\beta)`."""

    p_alpha: Carrier
    p_beta: Carrier


def _check_same_grid(*fns) -> None:
    grids = {fn.grid for fn in fns if isinstance(fn, GridFn)}
    if len(grids) > 1:
        raise GridMismatchError("inputs live on different grids")


def momenta(lagrangian: QuadraticLagrangian, v_alpha: Carrier,
            v_beta: Carrier) -> MomentaPair:
    r"""Momenta :math:`p = M v + l`, node by node.

    Works for any carrier supporting scalar arithmetic: :class:`GridFn`,
    :class:`ClosedFormFn` or plain floats.
    """
    _check_same_grid(v_alpha, v_beta)
    (m11, m12), (m21, m22) = lagrangian.mass
    l1, l2 = lagrangian.linear
    return MomentaPair(
        v_alpha * m11 + v_beta * m12 + l1,
        v_alpha * m21 + v_beta * m22 + l2,
    )


def el_residual(lagrangian: QuadraticLagrangian, q: GridFn) -> GridFn:
    r"""Residual of the fractional Euler-Lagrange equation

    .. math::

        \frac{\partial L}{\partial q}
        + {}_tD_b^\alpha \frac{\partial L}{\partial ({}_aD_t^\alpha q)}
        + {}_aD_t^\beta \frac{\partial L}{\partial ({}_tD_b^\beta q)}.

    All fractional derivatives use the Grünwald-Letnikov scheme. The result
    is a diagnostic: it is not forced to vanish.
    """
    v_alpha = gl_left_deriv(q, lagrangian.alpha)
    v_beta = gl_right_deriv(q, lagrangian.beta)
    p = momenta(lagrangian, v_alpha, v_beta)

    p_alpha = p.p_alpha if isinstance(p.p_alpha, GridFn) else GridFn.constant(q.grid, p.p_alpha)
    p_beta = p.p_beta if isinstance(p.p_beta, GridFn) else GridFn.constant(q.grid, p.p_beta)

    n = q.grid.num_intervals
    dq = GridFn(q.grid, lagrangian.dpotential(q.values))
    out = dq + gl_right_deriv(p_alpha, lagrangian.alpha) + gl_left_deriv(p_beta, lagrangian.beta)
    return GridFn(q.grid, out.values, out.unreliable | {0, n})


# {{{ Hamiltonian


class HamiltonianKind(enum.Enum):
    FullRank = enum.auto()
    RankOne = enum.auto()
    RankZero = enum.auto()


@dataclass(frozen=True, eq=False)
class QuadraticHamiltonian:
    r"""Legendre image of a :class:`QuadraticLagrangian`.

    * ``FullRank``: :math:`H = \frac12 (p - l)^T M^{-1} (p - l) + V_H(q)`.
    * ``RankOne``: :math:`M = \sigma w w^T` and
      :math:`H = ((p - l) \cdot w)^2 / (2 \sigma) + V_H(q)`, valid on the constraint
      surface :math:`(p - l) \parallel w`.
    * ``RankZero``: :math:`H = V_H(q)` on the surface :math:`p = l`.

    *potential* stores :math:`V_H = -V`, the Lagrangian potential with its sign
    flipped.
    """

    kind: HamiltonianKind
    alpha: Order
    beta: Order
    a: float
    b: float
    shift: np.ndarray
    potential: tuple[float, float, float]
    inverse_matrix: np.ndarray | None = None
    sigma: float | None = None
    direction: np.ndarray | None = None

    def potential_value(self, q):
        c0, c1, c2 = self.potential
        return c0 + c1 * q + 0.5 * c2 * q * q

    @property
    def null_direction(self) -> np.ndarray | None:
        """Unit vector orthogonal to :attr:`direction` (rank-one case only)."""
        if self.direction is None:
            return None
        w1, w2 = self.direction
        return np.array([-w2, w1])

    def kinetic(self, p_alpha, p_beta):
        pa = _as_array(p_alpha) - self.shift[0]
        pb = _as_array(p_beta) - self.shift[1]
        if self.kind is HamiltonianKind.FullRank:
            (i11, i12), (_, i22) = self.inverse_matrix
            return 0.5 * (i11 * pa * pa + 2.0 * i12 * pa * pb + i22 * pb * pb)
        if self.kind is HamiltonianKind.RankOne:
            s = pa * self.direction[0] + pb * self.direction[1]
            return s * s / (2.0 * self.sigma)
        return np.zeros(np.broadcast(pa, pb).shape)

    def __call__(self, q, p_alpha, p_beta):
        """Node-wise value of the Hamiltonian."""
        return self.kinetic(p_alpha, p_beta) + self.potential_value(_as_array(q))

    def grad_p(self, p_alpha, p_beta):
        r"""Gradient :math:`(\partial H/\partial p_\alpha, \partial H/\partial p_\beta)`."""
        pa = _as_array(p_alpha) - self.shift[0]
        pb = _as_array(p_beta) - self.shift[1]
        if self.kind is HamiltonianKind.FullRank:
            (i11, i12), (i21, i22) = self.inverse_matrix
            return i11 * pa + i12 * pb, i21 * pa + i22 * pb
        if self.kind is HamiltonianKind.RankOne:
            w1, w2 = self.direction
            s = (pa * w1 + pb * w2) / self.sigma
            return s * w1, s * w2
        zero = np.zeros(np.broadcast(pa, pb).shape)
        return zero, zero

    def grad_q(self, q):
        _, c1, c2 = self.potential
        return c1 + c2 * _as_array(q)

    def constraint_residual(self, p_alpha, p_beta):
        """Distance of the momenta from the constraint surface (zero if none)."""
        pa = _as_array(p_alpha) - self.shift[0]
        pb = _as_array(p_beta) - self.shift[1]
        if self.kind is HamiltonianKind.FullRank:
            return np.zeros(np.broadcast(pa, pb).shape)
        if self.kind is HamiltonianKind.RankOne:
            u1, u2 = self.null_direction
            return pa * u1 + pb * u2
        return np.hypot(pa, pb)


def legendre_transform(lagrangian: QuadraticLagrangian) -> QuadraticHamiltonian:
    r"""Hamiltonian :math:`H = p_\alpha v_\alpha + p_\beta v_\beta - L`.

    The rank of :math:`M` is read off its eigenvalues with the cutoff
    ``RANK_TOL * max(1, trace M)``.

    :raises IndefiniteMatrixError: if :math:`M` has a negative eigenvalue.
    """
    mass = lagrangian.mass
    tol = RANK_TOL * max(1.0, float(np.trace(mass)))
    eigvals, eigvecs = np.linalg.eigh(mass)
    if eigvals[0] < -tol:
        raise IndefiniteMatrixError(f"mass matrix has eigenvalues {eigvals}")

    common = dict(
        alpha=lagrangian.alpha,
        beta=lagrangian.beta,
        a=lagrangian.a,
        b=lagrangian.b,
        shift=lagrangian.linear,
        potential=tuple(-c for c in lagrangian.potential),
    )

    rank = int(np.sum(eigvals > tol))
    if rank == 2:
        return QuadraticHamiltonian(HamiltonianKind.FullRank,
                                    inverse_matrix=np.linalg.inv(mass), **common)
    if rank == 1:
        w = eigvecs[:, 1]
        # fix the sign: first nonzero component positive
        if w[np.flatnonzero(np.abs(w) > 1e-14)[0]] < 0:
            w = -w
        return QuadraticHamiltonian(HamiltonianKind.RankOne,
                                    sigma=float(eigvals[1]), direction=w, **common)
    return QuadraticHamiltonian(HamiltonianKind.RankZero, **common)


class HamiltonResiduals(NamedTuple):
    r"""Defects of the three fractional Hamilton equations."""

    #: :math:`\partial H/\partial p_\alpha - {}_aD_t^\alpha q`
    velocity_alpha: GridFn
    #: :math:`\partial H/\partial p_\beta - {}_tD_b^\beta q`
    velocity_beta: GridFn
    #: :math:`\partial H/\partial q - {}_tD_b^\alpha p_\alpha - {}_aD_t^\beta p_\beta`
    force: GridFn


def _on_grid(x: Carrier, like: GridFn) -> GridFn:
    if isinstance(x, GridFn):
        if x.grid != like.grid:
            raise GridMismatchError("momenta and trajectory live on different grids")
        return x
    if isinstance(x, ClosedFormFn):
        return x.sample(like.grid)
    return GridFn.constant(like.grid, x)


def hamilton_equations_residual(hamiltonian: QuadraticHamiltonian, q: GridFn,
                                p: MomentaPair) -> HamiltonResiduals:
    r"""Evaluate

    .. math::

        \frac{\partial H}{\partial p_\alpha} = {}_aD_t^\alpha q, \quad
        \frac{\partial H}{\partial p_\beta} = {}_tD_b^\beta q, \quad
        \frac{\partial H}{\partial q} = {}_tD_b^\alpha p_\alpha + {}_aD_t^\beta p_\beta

    as three residual series. The last equation is used with exactly this sign.
    """
    p_alpha, p_beta = _on_grid(p.p_alpha, q), _on_grid(p.p_beta, q)
    grid = q.grid

    dh_dpa, dh_dpb = hamiltonian.grad_p(p_alpha.values, p_beta.values)
    dh_dq = GridFn(grid, np.broadcast_to(hamiltonian.grad_q(q.values), (grid.size,)))

    r_alpha = GridFn(grid, dh_dpa) - gl_left_deriv(q, hamiltonian.alpha)
    r_beta = GridFn(grid, dh_dpb) - gl_right_deriv(q, hamiltonian.beta)
    r_force = (dh_dq
               - gl_right_deriv(p_alpha, hamiltonian.alpha)
               - gl_left_deriv(p_beta, hamiltonian.beta))
    return HamiltonResiduals(r_alpha, r_beta, r_force)


# }}}


def action(lagrangian: QuadraticLagrangian, q: GridFn, t1: float, t2: float) -> float:
    r"""Trapezoid-rule value of :math:`\int_{t_1}^{t_2} L \,\mathrm{d}t` along *q*.

    Velocities come from the Grünwald-Letnikov scheme on the whole grid;
    *t1* and *t2* must be grid nodes.
    """
    grid = q.grid
    if not grid.a <= t1 <= t2 <= grid.b + 1e-12 * (grid.b - grid.a):
        raise ValidationError(f"[{t1}, {t2}] is not inside [{grid.a}, {grid.b}]")
    i, j = grid.index_of(t1), grid.index_of(t2)

    v_alpha = gl_left_deriv(q, lagrangian.alpha)
    v_beta = gl_right_deriv(q, lagrangian.beta)
    values = lagrangian(q, v_alpha, v_beta)[i:j + 1]
    return float(np.trapezoid(values, dx=grid.step)) if j > i else 0.0
