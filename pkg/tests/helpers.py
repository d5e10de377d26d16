"""Shared helpers for the test suite.

The gap oracle here deliberately uses plain Python loops instead of
vectorized numpy so that it stays an independent cross-check of the
library's vectorized certificate.
"""

import numpy as np

from saddle_ssn.game import MatrixGame, StrategyProfile


def philox(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def random_game(rng: np.random.Generator, n: int, m: int,
                kind: str = "uniform") -> MatrixGame:
    if kind == "uniform":
        payoff = rng.uniform(-1.0, 1.0, size=(n, m))
    else:
        payoff = rng.standard_normal((n, m))
    return MatrixGame.from_payoff(payoff)


def random_profile(rng: np.random.Generator, n: int, m: int) -> StrategyProfile:
    x = rng.random(n) + 1e-9
    y = rng.random(m) + 1e-9
    return StrategyProfile.from_vectors(x / x.sum(), y / y.sum())


def brute_force_gap(payoff: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    """Duality gap by explicit enumeration of pure-strategy responses."""
    n, m = payoff.shape
    best_col = max(sum(x[i] * payoff[i][j] for i in range(n)) for j in range(m))
    best_row = min(sum(payoff[i][j] * y[j] for j in range(m)) for i in range(n))
    return best_col - best_row
