"""Projected first-order baselines: extragradient and optimistic gradient.

Both iterate on the stacked point z = (x, y) with the skew payoff
operator F(z) = (Ay, -A'x) and blockwise simplex projection.  The
default step size is 1 / (2 |A|_2), using the game's spectral norm
estimate, which keeps both methods inside their convergence regime.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .game import MatrixGame, StrategyProfile, duality_gap, project_pair
from .trace import PHASE_FO, TraceRow

STATUS_CONVERGED = "converged"
STATUS_BUDGET = "fo_budget_exhausted"


@dataclass(frozen=True)
class FomConfig:
    """Step size and budgets for the first-order baselines.

    ``step_size`` of None selects 1 / (2 |A|_2) per game.  The gap of
    the current iterate is checked every ``check_every`` iterations.
    """

    step_size: float | None = None
    max_iters: int = 100_000
    target_gap: float = 1e-12
    check_every: int = 100

    def __post_init__(self):
        if self.step_size is not None and (not np.isfinite(self.step_size)
                                           or self.step_size <= 0.0):
            raise ValueError(f"step size must be positive, got {self.step_size}")
        if self.max_iters < 1 or self.check_every < 1:
            raise ValueError("iteration budgets must be positive")


@dataclass
class FomResult:
    """Outcome of a first-order baseline run."""

    profile: StrategyProfile
    status: str
    iterations: int
    trace: list[TraceRow] = field(default_factory=list)


def _resolve_step(game: MatrixGame, config: FomConfig) -> float:
    if config.step_size is not None:
        return config.step_size
    norm = game.spectral_norm_estimate
    if norm <= 0.0:
        return 0.5
    return 1.0 / (2.0 * norm)


def extragradient_run(game: MatrixGame, config: FomConfig,
                      trace: list[TraceRow] | None = None,
                      clock_start: float | None = None) -> FomResult:
    """Extragradient: probe a half step, then step through its operator.

        z_half = P(z - eta F(z));  z_next = P(z - eta F(z_half)).

    Two operator evaluations and two projections per iteration.
    """
    return _run_fom(game, config, "eg", trace, clock_start)


def ogda_run(game: MatrixGame, config: FomConfig,
             trace: list[TraceRow] | None = None,
             clock_start: float | None = None) -> FomResult:
    """Optimistic gradient: reuse the previous operator as a predictor.

        z_next = P(z - 2 eta F(z) + eta F(z_prev)).

    One fresh operator evaluation and one projection per iteration.
    """
    return _run_fom(game, config, "ogda", trace, clock_start)


def _run_fom(game: MatrixGame, config: FomConfig, kind: str,
             trace: list[TraceRow] | None,
             clock_start: float | None) -> FomResult:
    t0 = time.perf_counter() if clock_start is None else clock_start
    rows = [] if trace is None else trace
    eta = _resolve_step(game, config)
    a = game.payoff
    n = game.n

    def operator(z: np.ndarray) -> np.ndarray:
        return np.concatenate([a @ z[n:], -(z[:n] @ a)])

    z = StrategyProfile.uniform(game.n, game.m).concatenated()
    cert = duality_gap(game, _profile_of(game, z))
    rows.append(TraceRow(0, PHASE_FO, cert.gap,
                         elapsed=time.perf_counter() - t0))
    if cert.gap <= config.target_gap:
        return FomResult(_profile_of(game, z), STATUS_CONVERGED, 0, rows)

    f_prev = operator(z)  # only consumed by the optimistic update
    for t in range(1, config.max_iters + 1):
        if kind == "eg":
            z_half = project_pair(n, z - eta * operator(z))
            z = project_pair(n, z - eta * operator(z_half))
        else:
            f_cur = operator(z)
            z = project_pair(n, z - 2.0 * eta * f_cur + eta * f_prev)
            f_prev = f_cur
        if t % config.check_every == 0 or t == config.max_iters:
            cert = duality_gap(game, _profile_of(game, z))
            rows.append(TraceRow(t, PHASE_FO, cert.gap,
                                 elapsed=time.perf_counter() - t0))
            if cert.gap <= config.target_gap:
                return FomResult(_profile_of(game, z), STATUS_CONVERGED,
                                 t, rows)
    return FomResult(_profile_of(game, z), STATUS_BUDGET,
                     config.max_iters, rows)


def _profile_of(game: MatrixGame, z: np.ndarray) -> StrategyProfile:
    return StrategyProfile.from_vectors(z[:game.n], z[game.n:])
