"""Douglas-Rachford splitting operator for the saddle-point inclusion.

The equilibrium problem splits into the normal cone of the product of
simplices plus the linear skew payoff operator F.  One splitting step
from z is

    T(z) = z - P(z) + (I + gamma F)^(-1) (2 P(z) - z),

where P projects blockwise onto the simplices.  Fixed points of T
correspond to equilibria through the lift map z = profile - gamma
F(profile).  The solver works with the displacement R = Id - T, which
is monotone, 1-Lipschitz, and piecewise affine, so a semi-smooth Newton
method applies to R(z) = 0.

The linear solve with M = I + gamma F reduces by Schur complement to a
single symmetric positive definite system on the smaller side, whose
Cholesky factor is computed once per context and reused.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .game import (LiftedPoint, MatrixGame, StrategyProfile, as_vector,
                   project_pair, project_product, saddle_operator)


@dataclass(frozen=True)
class DrsContext:
    """A game, a splitting parameter, and the factored resolvent.

    ``chol`` is the Cholesky factorization of I + gamma^2 A A' when
    n <= m ("row" side), else of I + gamma^2 A'A ("col" side).
    Immutable; safe to share across threads and solver phases.
    """

    game: MatrixGame
    gamma: float
    chol: tuple
    side: str


def build_context(game: MatrixGame, gamma: float) -> DrsContext:
    """Factor the resolvent of the payoff operator for reuse.

    Builds the smaller of the two Gram-regularized matrices and takes
    its Cholesky factor.  Cost is one dense factorization of size
    min(n, m); every subsequent solve is two triangular solves plus two
    products with A.
    """
    if not np.isfinite(gamma) or gamma <= 0.0:
        raise ValueError(f"gamma must be positive and finite, got {gamma}")
    a = game.payoff
    g2 = gamma * gamma
    if game.n <= game.m:
        gram = np.eye(game.n) + g2 * (a @ a.T)
        side = "row"
    else:
        gram = np.eye(game.m) + g2 * (a.T @ a)
        side = "col"
    return DrsContext(game=game, gamma=float(gamma),
                      chol=cho_factor(gram, lower=True), side=side)


def resolve(ctx: DrsContext, w: np.ndarray) -> np.ndarray:
    """Solve M u = w with M = [[I, gamma A], [-gamma A', I]].

    Accepts a vector of length n + m or a matrix with n + m rows, and
    returns the solution with the same shape.  Uses the cached Cholesky
    factor of the Schur complement on the factored side.
    """
    game, gamma = ctx.game, ctx.gamma
    a = game.payoff
    p, q = w[:game.n], w[game.n:]
    if ctx.side == "row":
        u = cho_solve(ctx.chol, p - gamma * (a @ q))
        v = q + gamma * (a.T @ u)
    else:
        v = cho_solve(ctx.chol, q + gamma * (a.T @ p))
        u = p - gamma * (a @ v)
    return np.concatenate([u, v])


def apply_drs(ctx: DrsContext, z) -> LiftedPoint:
    """One Douglas-Rachford step z -> z - P(z) + M^(-1)(2 P(z) - z)."""
    zv = _checked(ctx, z)
    p = project_pair(ctx.game.n, zv)
    return LiftedPoint(zv - p + resolve(ctx, 2.0 * p - zv))


@dataclass(frozen=True)
class ResidualValue:
    """A splitting residual vector with its Euclidean norm cached."""

    r: np.ndarray
    norm: float


def residual(ctx: DrsContext, z) -> ResidualValue:
    """Displacement R(z) = z - T(z) = P(z) - M^(-1)(2 P(z) - z).

    Zeros of R are the fixed points of the splitting step; the norm is
    the convergence measure driven to zero by the Newton solver.
    """
    zv = _checked(ctx, z)
    p = project_pair(ctx.game.n, zv)
    r = p - resolve(ctx, 2.0 * p - zv)
    return ResidualValue(r=r, norm=float(np.linalg.norm(r)))


def lift(ctx: DrsContext, profile: StrategyProfile) -> LiftedPoint:
    """Map a profile into the splitting space: z = v - gamma F(v).

    At an exact equilibrium the image is a fixed point of the splitting
    step, which is how first-order iterates warm-start the Newton phase.
    """
    v = profile.concatenated()
    return LiftedPoint(v - ctx.gamma * saddle_operator(ctx.game, v))


def restrict(ctx: DrsContext, z) -> StrategyProfile:
    """Map a lifted point back to a feasible profile by projection."""
    return project_product(ctx.game, as_vector(z))


def _checked(ctx: DrsContext, z) -> np.ndarray:
    zv = as_vector(z)
    d = ctx.game.n + ctx.game.m
    if zv.shape[0] != d:
        raise ValueError(f"point has dimension {zv.shape[0]}, expected {d}")
    return zv
