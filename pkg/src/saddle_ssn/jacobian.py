"""Generalized Jacobians of the splitting residual and the Newton solve.

The simplex projection is piecewise affine, so away from kinks its
Jacobian is the matrix G = diag(a) - a a' / |a| built from the active
set a of strictly positive output coordinates.  Stacking both players
gives D, and the chain rule through the splitting step yields

    J = D - M^(-1) (2 D - I),

a valid generalized Jacobian of the residual.  J has positive
semidefinite symmetric part, so J + mu I is invertible for every
mu > 0 with inverse norm at most 1/mu; the regularized Newton system
(J + mu I) dz = -r is solved densely by LU factorization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .game import as_vector, project_simplex
from .splitting import DrsContext, ResidualValue, resolve

# Projection coordinates above this are treated as active.  The
# thresholded projection produces exact zeros, so the cut is safe; at a
# kink the rule picks one valid element of the generalized Jacobian.
ACTIVATION_TOL = 1e-12


class LinearSolveError(RuntimeError):
    """The Newton system produced no usable solution."""


@dataclass(frozen=True)
class ProjectionJacobian:
    """Active-set form of the simplex projection Jacobian."""

    active_mask: np.ndarray

    def matrix(self) -> np.ndarray:
        """Materialize G = diag(a) - a a' / k with k active coordinates."""
        a = self.active_mask.astype(float)
        return np.diag(a) - np.outer(a, a) / a.sum()


def projection_jacobian(p, force_active=None) -> ProjectionJacobian:
    """Generalized Jacobian of project_simplex at p.

    The active set is read off the projection output itself; at least
    one coordinate is always active because the output sums to one.
    ``force_active`` optionally lists extra coordinate indices to
    include, which selects a neighboring-piece element when the point
    sits beside a kink.
    """
    x = project_simplex(as_vector(p))
    mask = x > ACTIVATION_TOL
    if force_active is not None and len(force_active) > 0:
        mask[np.asarray(force_active, dtype=int)] = True
    mask.setflags(write=False)
    return ProjectionJacobian(active_mask=mask)


def boundary_margins(ctx: DrsContext, z) -> np.ndarray:
    """Distance of each unsupported coordinate to its block threshold.

    Returns a stacked n+m vector: +inf on the support of the blockwise
    simplex projection, and for the remaining coordinates the
    (nonnegative) amount by which the pre-projection value falls short
    of activating.  Small entries flag weakly active coordinates whose
    piece boundary passes right next to z.
    """
    zv = as_vector(z)
    n = ctx.game.n
    out = np.full(zv.size, np.inf)
    for lo, hi in ((0, n), (n, zv.size)):
        block = zv[lo:hi]
        x = project_simplex(block)
        active = x > ACTIVATION_TOL
        tau = float(np.mean(block[active] - x[active]))
        out[lo:hi] = np.where(active, np.inf,
                              np.maximum(tau - block, 0.0))
    return out


@dataclass(frozen=True)
class ResidualJacobian:
    """Dense generalized Jacobian of the splitting residual at a point."""

    matrix: np.ndarray


def residual_jacobian(ctx: DrsContext, z,
                      force_active=()) -> ResidualJacobian:
    """Assemble J = D - M^(-1)(2 D - I) at z by a block resolvent solve.

    D is the block-diagonal projection Jacobian of both simplex blocks.
    The resolvent is applied to all n + m columns of 2D - I at once
    through the cached Cholesky factor.  ``force_active`` takes stacked
    coordinate indices to add to the active sets, selecting an element
    of a neighboring piece.
    """
    zv = as_vector(z)
    n = ctx.game.n
    idx = np.asarray(tuple(force_active), dtype=int)
    gx = projection_jacobian(zv[:n], idx[idx < n]).matrix()
    gy = projection_jacobian(zv[n:], idx[idx >= n] - n).matrix()
    d = np.zeros((zv.size, zv.size))
    d[:n, :n] = gx
    d[n:, n:] = gy
    b = 2.0 * d - np.eye(zv.size)
    j = d - resolve(ctx, b)
    return ResidualJacobian(matrix=j)


def newton_solve(jac: ResidualJacobian, mu: float,
                 res: ResidualValue) -> np.ndarray:
    """Solve the regularized Newton system (J + mu I) dz = -r.

    mu > 0 guarantees solvability because the symmetric part of J is
    positive semidefinite, which also bounds |dz| <= |r| / mu.  The
    solve is verified a posteriori; NaN contamination or an excessive
    backward error raises LinearSolveError.
    """
    if not np.isfinite(mu) or mu <= 0.0:
        raise ValueError(f"regularization mu must be positive, got {mu}")
    m = jac.matrix + mu * np.eye(jac.matrix.shape[0])
    try:
        dz = scipy.linalg.solve(m, -res.r)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise LinearSolveError(f"Newton system solve failed: {exc}") from exc
    if not np.all(np.isfinite(dz)):
        raise LinearSolveError("Newton system produced non-finite step")
    backward = np.linalg.norm(m @ dz + res.r)
    if backward > 1e-10 * (res.norm + 1.0):
        raise LinearSolveError(
            f"Newton system solve residual {backward:.3e} exceeds tolerance")
    return dz
