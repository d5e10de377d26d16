"""Shared per-iteration trace records for solvers and the benchmark CLI."""

from __future__ import annotations

import math
from dataclasses import dataclass

PHASE_FO = "FO"
PHASE_SSN = "SSN"


@dataclass(frozen=True)
class TraceRow:
    """One progress checkpoint of a solver run.

    ``residual_norm`` and ``damping`` are NaN during first-order phases,
    where no Newton system exists.  ``elapsed`` is seconds of solver
    compute since the run clock started.
    """

    iteration: int
    phase: str
    gap: float
    residual_norm: float = math.nan
    damping: float = math.nan
    elapsed: float = 0.0
