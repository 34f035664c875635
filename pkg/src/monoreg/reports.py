"""Trajectory reports shared by the continuation flows and the iterations."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .core import HilbertVector

STOPPED_BY_DISCREPANCY = "stopped_by_discrepancy"
EXHAUSTED_HORIZON = "exhausted_horizon"
STEP_FLOOR = "step_floor"


@dataclass(frozen=True)
class SolveReport:
    """What a continuation run produced and why it stopped.

    Exactly one of t_stop / n_stop is set.  For iterations, n_stop is the
    schedule index of the step that produced the accepted iterate (0 with
    no steps when the start already passes the test); the number of steps
    actually taken is `steps_taken`.  residual_history holds
    (time-or-iterate-index, data residual) pairs for every recorded state,
    starting from the initial one.
    """

    u_final: HilbertVector
    status: str
    a_at_stop: float
    threshold: float
    t_stop: float | None = None
    n_stop: int | None = None
    residual_history: tuple[tuple[float, float], ...] = ()
    iterates: tuple[HilbertVector, ...] | None = None
    notes: tuple[str, ...] = ()

    @property
    def residual_at_stop(self) -> float:
        return self.residual_history[-1][1] if self.residual_history else math.nan

    @property
    def steps_taken(self) -> int:
        return max(len(self.residual_history) - 1, 0)

    def to_dict(self, include_history: bool = False) -> dict:
        out = {
            "status": self.status,
            "t_stop": self.t_stop,
            "n_stop": self.n_stop,
            "steps_taken": self.steps_taken,
            "residual_at_stop": self.residual_at_stop,
            "a_at_stop": self.a_at_stop,
            "threshold": self.threshold,
            "final_norm": self.u_final.norm(),
            "notes": list(self.notes),
        }
        if include_history:
            out["residual_history"] = [list(p) for p in self.residual_history]
        return out
