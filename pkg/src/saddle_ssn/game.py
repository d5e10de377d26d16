"""Matrix game model, simplex geometry, and exact duality-gap certificates.

A game is a payoff matrix A of shape (n, m).  The row player chooses a
mixed strategy x on the n-simplex and pays x'Ay to the column player,
who chooses y on the m-simplex.  Because best responses to a fixed
opponent strategy are attained at vertices, the duality gap of a
strategy profile is computable exactly from the payoff columns/rows,
and gap zero certifies a Nash equilibrium.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Coordinates this far below zero are treated as roundoff and clamped.
COORD_SLACK = 1e-12
# Profiles must sum to one within this tolerance before renormalization.
SUM_TOL = 1e-10

_NORM_EST_ITERS = 200
_NORM_EST_RTOL = 1e-12
_NORM_EST_SEED = 0x5EED


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def estimate_spectral_norm(payoff: np.ndarray,
                           iters: int = _NORM_EST_ITERS,
                           rtol: float = _NORM_EST_RTOL) -> float:
    """Estimate the largest singular value of ``payoff`` by power iteration.

    Iterates on the Gram matrix of the smaller side with a seeded random
    start vector, stopping after ``iters`` rounds or once the estimate
    stabilizes to relative tolerance ``rtol``.
    """
    a = np.asarray(payoff, dtype=float)
    n, m = a.shape
    rng = np.random.Generator(np.random.Philox(key=_NORM_EST_SEED))
    if n <= m:
        gram = lambda v: a @ (a.T @ v)
        v = rng.standard_normal(n)
    else:
        gram = lambda v: a.T @ (a @ v)
        v = rng.standard_normal(m)
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return 0.0
    v /= nv
    est = 0.0
    for _ in range(iters):
        w = gram(v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        new_est = np.sqrt(nw)
        if est > 0.0 and abs(new_est - est) <= rtol * est:
            est = new_est
            break
        est = new_est
        v = w / nw
    return float(est)


@dataclass(frozen=True)
class MatrixGame:
    """A two-player zero-sum game given by its payoff matrix.

    The row player minimizes x'Ay over the n-simplex, the column player
    maximizes over the m-simplex.  ``spectral_norm_estimate`` is a
    power-iteration estimate of the matrix 2-norm, used for step sizes
    and diagnostic bounds.
    """

    payoff: np.ndarray
    n: int
    m: int
    spectral_norm_estimate: float

    @classmethod
    def from_payoff(cls, payoff) -> "MatrixGame":
        a = np.array(payoff, dtype=float)
        if a.ndim != 2:
            raise ValueError(f"payoff must be a 2-d array, got ndim={a.ndim}")
        n, m = a.shape
        if n < 1 or m < 1:
            raise ValueError(f"payoff must be nonempty, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            bad = np.argwhere(~np.isfinite(a))[0]
            raise ValueError(
                f"payoff contains a non-finite entry at ({bad[0]}, {bad[1]})")
        return cls(payoff=_freeze(a), n=n, m=m,
                   spectral_norm_estimate=estimate_spectral_norm(a))


@dataclass(frozen=True)
class StrategyProfile:
    """A pair of mixed strategies, one per player.

    Construction through :meth:`from_vectors` tolerates coordinates down
    to ``-COORD_SLACK`` (clamped to zero) and sums off by ``SUM_TOL``
    (renormalized), so profiles assembled from solver output are always
    exactly feasible up to roundoff.
    """

    x: np.ndarray
    y: np.ndarray

    @classmethod
    def from_vectors(cls, x, y) -> "StrategyProfile":
        return cls(x=_clean_strategy(np.asarray(x, dtype=float), "x"),
                   y=_clean_strategy(np.asarray(y, dtype=float), "y"))

    @classmethod
    def uniform(cls, n: int, m: int) -> "StrategyProfile":
        return cls(x=_freeze(np.full(n, 1.0 / n)),
                   y=_freeze(np.full(m, 1.0 / m)))

    def concatenated(self) -> np.ndarray:
        """The profile as a single vector in R^(n+m)."""
        return np.concatenate([self.x, self.y])


def _clean_strategy(v: np.ndarray, name: str) -> np.ndarray:
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"{name} must be a nonempty vector")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite coordinates")
    lo = v.min()
    if lo < -COORD_SLACK:
        raise ValueError(
            f"{name} has coordinate {lo} below the -{COORD_SLACK} slack")
    s = v.sum()
    if abs(s - 1.0) > SUM_TOL:
        raise ValueError(f"{name} sums to {s}, expected 1 within {SUM_TOL}")
    w = np.maximum(v, 0.0)
    w /= w.sum()
    return _freeze(w)


@dataclass(frozen=True)
class LiftedPoint:
    """An unconstrained point in R^(n+m) used by the splitting method."""

    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        if z.ndim != 1:
            raise ValueError("lifted point must be a vector")
        if not np.all(np.isfinite(z)):
            raise ValueError("lifted point contains non-finite coordinates")
        object.__setattr__(self, "z", _freeze(z))


@dataclass(frozen=True)
class GapCertificate:
    """Exact duality gap together with the optimal pure best responses."""

    gap: float
    best_response_row: int
    best_response_col: int


def as_vector(z) -> np.ndarray:
    """Unwrap a LiftedPoint or pass an array through."""
    if isinstance(z, LiftedPoint):
        return z.z
    return np.asarray(z, dtype=float)


def duality_gap(game: MatrixGame, profile: StrategyProfile) -> GapCertificate:
    """Exact duality gap of a profile via pure-strategy best responses.

    gap = max_j (x'A)_j - min_i (Ay)_i.  The maximizing column and
    minimizing row are reported; ties break to the lowest index.  The
    gap is zero exactly at Nash equilibria and positive elsewhere.
    """
    x, y = profile.x, profile.y
    if x.shape[0] != game.n or y.shape[0] != game.m:
        raise ValueError(
            f"profile shape ({x.shape[0]}, {y.shape[0]}) does not match "
            f"game shape ({game.n}, {game.m})")
    col_payoffs = x @ game.payoff
    row_payoffs = game.payoff @ y
    best_col = int(np.argmax(col_payoffs))
    best_row = int(np.argmin(row_payoffs))
    gap = float(col_payoffs[best_col] - row_payoffs[best_row])
    return GapCertificate(gap=gap, best_response_row=best_row,
                          best_response_col=best_col)


def project_simplex(p) -> np.ndarray:
    """Euclidean projection of a vector onto the probability simplex.

    Sort-based thresholding: with u the coordinates sorted in descending
    order, find the largest k with u_k - (sum of the top k - 1)/k > 0
    and clip at that threshold.  O(d log d), exact for exact arithmetic.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("projection input must be a nonempty vector")
    if not np.all(np.isfinite(p)):
        raise ValueError("projection input contains non-finite coordinates")
    u = np.sort(p)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, p.size + 1)
    k = ks[u - css / ks > 0.0][-1]
    tau = css[k - 1] / k
    return np.maximum(p - tau, 0.0)


def project_pair(n: int, z) -> np.ndarray:
    """Blockwise simplex projection of a vector split at index n."""
    z = as_vector(z)
    return np.concatenate([project_simplex(z[:n]), project_simplex(z[n:])])


def project_product(game: MatrixGame, z) -> StrategyProfile:
    """Project a lifted point onto the product of the two simplices."""
    z = as_vector(z)
    if z.shape[0] != game.n + game.m:
        raise ValueError(
            f"lifted point has dimension {z.shape[0]}, expected "
            f"{game.n + game.m}")
    return StrategyProfile.from_vectors(project_simplex(z[:game.n]),
                                        project_simplex(z[game.n:]))


def saddle_operator(game: MatrixGame, z) -> np.ndarray:
    """Apply the skew payoff operator z = (x, y) -> (Ay, -A'x).

    This is the simultaneous-gradient field of the bilinear saddle
    objective; it is linear and skew-symmetric, so z'Fz = 0 for all z.
    """
    z = as_vector(z)
    if z.shape[0] != game.n + game.m:
        raise ValueError(
            f"operator input has dimension {z.shape[0]}, expected "
            f"{game.n + game.m}")
    x, y = z[:game.n], z[game.n:]
    return np.concatenate([game.payoff @ y, -(x @ game.payoff)])
