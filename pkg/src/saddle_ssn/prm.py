"""Predictive regret matching with alternation and quadratic averaging.

Each player keeps a clipped cumulative regret vector.  The next
strategy is proportional to the positive part of the regrets shifted by
a prediction of the coming loss (here: the previous observed loss); a
zero regret vector falls back to uniform.  Updates alternate: the row
player moves first, then the column player, and by default both losses
for the round are measured against the opponent's end-of-round
strategy, which keeps each prediction only one update stale.  Averaged
output weights round t by t^2, which empirically tightens the gap by
orders of magnitude over the last iterate.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .game import MatrixGame, StrategyProfile, duality_gap
from .trace import PHASE_FO, TraceRow

STATUS_CONVERGED = "converged"
STATUS_BUDGET = "fo_budget_exhausted"

SCHEME_LAST_ITERATE = "li"
SCHEME_QUADRATIC_AVG = "qa"

LOSS_ROUND_END = "round-end"
LOSS_IMMEDIATE = "immediate"


@dataclass
class RegretMatchingState:
    """One player's regret accumulator, current strategy, and last loss."""

    cum_regret: np.ndarray
    current: np.ndarray
    last_loss: np.ndarray

    @classmethod
    def uniform(cls, dim: int) -> "RegretMatchingState":
        if dim < 1:
            raise ValueError(f"dimension must be positive, got {dim}")
        return cls(cum_regret=np.zeros(dim),
                   current=np.full(dim, 1.0 / dim),
                   last_loss=np.zeros(dim))


def next_strategy(state: RegretMatchingState,
                  prediction: np.ndarray) -> np.ndarray:
    """Strategy proportional to predicted positive regret.

    theta = [cum_regret + <prediction, current> 1 - prediction]_+ and
    the result is theta normalized to the simplex, or uniform when
    theta is identically zero.  Does not mutate the state.
    """
    theta = state.cum_regret + (prediction @ state.current) - prediction
    np.maximum(theta, 0.0, out=theta)
    total = theta.sum()
    if total > 0.0:
        return theta / total
    return np.full(state.current.size, 1.0 / state.current.size)


def observe_loss(state: RegretMatchingState, loss: np.ndarray,
                 played: np.ndarray) -> RegretMatchingState:
    """Fold an observed loss into the clipped regret accumulator.

    cum_regret <- [cum_regret + <loss, played> 1 - loss]_+ with the
    strategy actually played this round; the loss is retained as the
    next round's prediction and ``played`` becomes the current strategy.
    """
    state.cum_regret += (loss @ played) - loss
    np.maximum(state.cum_regret, 0.0, out=state.cum_regret)
    state.last_loss = loss
    state.current = played
    return state


def alternating_round(game: MatrixGame, row: RegretMatchingState,
                      col: RegretMatchingState, predictive: bool = True,
                      loss_timing: str = LOSS_ROUND_END,
                      ) -> tuple[np.ndarray, np.ndarray]:
    """One alternating update of both players; mutates both states.

    The row player minimizes, so its loss vector is A y; the column
    player maximizes, so its loss is -A'x.  Strategies update in order
    (row first, then column), each predicting its previous observed
    loss (zero when ``predictive`` is off).  With "round-end" timing
    both losses are then measured against the opponent's updated
    strategy, so predictions lag a single update; "immediate" timing
    measures each loss the moment the player moves, so the row player
    sees the column strategy from the previous round and predictions
    lag a full round.  Round-end timing converges markedly faster and
    is the default.
    """
    a = game.payoff
    x_new = next_strategy(row, row.last_loss if predictive
                          else np.zeros(game.n))
    if loss_timing == LOSS_IMMEDIATE:
        observe_loss(row, a @ col.current, x_new)
        y_new = next_strategy(col, col.last_loss if predictive
                              else np.zeros(game.m))
    elif loss_timing == LOSS_ROUND_END:
        y_new = next_strategy(col, col.last_loss if predictive
                              else np.zeros(game.m))
        observe_loss(row, a @ y_new, x_new)
    else:
        raise ValueError(f"unknown loss timing {loss_timing!r}")
    observe_loss(col, -(x_new @ a), y_new)
    return x_new, y_new


@dataclass
class AverageAccumulator:
    """Weighted running average of strategy profiles."""

    weighted_x: np.ndarray
    weighted_y: np.ndarray
    weight_total: float = 0.0

    @classmethod
    def empty(cls, n: int, m: int) -> "AverageAccumulator":
        return cls(weighted_x=np.zeros(n), weighted_y=np.zeros(m))

    def add(self, x: np.ndarray, y: np.ndarray, weight: float) -> None:
        if weight <= 0.0 or not np.isfinite(weight):
            raise ValueError(f"weight must be positive and finite, got {weight}")
        self.weighted_x += weight * x
        self.weighted_y += weight * y
        self.weight_total += weight

    def profile(self) -> StrategyProfile:
        """The averaged profile, renormalized against accumulation drift."""
        if self.weight_total <= 0.0:
            raise ValueError("cannot average zero accumulated weight")
        return StrategyProfile.from_vectors(self.weighted_x / self.weight_total,
                                            self.weighted_y / self.weight_total)


@dataclass
class PrmResult:
    """Outcome of a regret-matching run."""

    profile: StrategyProfile
    status: str
    iterations: int
    trace: list[TraceRow] = field(default_factory=list)


def run_prm(game: MatrixGame, scheme: str = SCHEME_QUADRATIC_AVG,
            max_iters: int = 500_000, target_gap: float = 1e-12,
            check_every: int = 100, predictive: bool = True,
            loss_timing: str = LOSS_ROUND_END,
            trace: list[TraceRow] | None = None,
            clock_start: float | None = None) -> PrmResult:
    """Run alternating regret matching until the target gap or budget.

    The emitted profile follows ``scheme``: "qa" averages post-update
    strategies with weight t^2, "li" reports the current iterates.  The
    gap is evaluated on the emitted profile every ``check_every`` rounds
    and once at round zero, each check appending a first-order trace row.
    """
    if scheme not in (SCHEME_LAST_ITERATE, SCHEME_QUADRATIC_AVG):
        raise ValueError(f"unknown averaging scheme {scheme!r}")
    if check_every < 1:
        raise ValueError(f"check_every must be positive, got {check_every}")
    t0 = time.perf_counter() if clock_start is None else clock_start
    rows = [] if trace is None else trace
    row = RegretMatchingState.uniform(game.n)
    col = RegretMatchingState.uniform(game.m)
    averager = AverageAccumulator.empty(game.n, game.m)
    averaging = scheme == SCHEME_QUADRATIC_AVG

    profile = StrategyProfile.uniform(game.n, game.m)
    cert = duality_gap(game, profile)
    rows.append(TraceRow(0, PHASE_FO, cert.gap,
                         elapsed=time.perf_counter() - t0))
    if cert.gap <= target_gap:
        return PrmResult(profile, STATUS_CONVERGED, 0, rows)

    for t in range(1, max_iters + 1):
        x_new, y_new = alternating_round(game, row, col, predictive=predictive,
                                         loss_timing=loss_timing)
        if averaging:
            averager.add(x_new, y_new, float(t) * float(t))
        if t % check_every == 0 or t == max_iters:
            if averaging:
                profile = averager.profile()
            else:
                profile = StrategyProfile.from_vectors(x_new, y_new)
            cert = duality_gap(game, profile)
            rows.append(TraceRow(t, PHASE_FO, cert.gap,
                                 elapsed=time.perf_counter() - t0))
            if cert.gap <= target_gap:
                return PrmResult(profile, STATUS_CONVERGED, t, rows)
    return PrmResult(profile, STATUS_BUDGET, max_iters, rows)
