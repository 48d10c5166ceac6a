"""Policy evaluation measures: average cost, ESS benefit, Q-table RMS change
and regrets against an optimal reference."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class EvalWindow:
    costs: np.ndarray
    rewards: np.ndarray
    ess: np.ndarray
    prices: np.ndarray
    start: int = 0

    def __post_init__(self):
        n = len(self.costs)
        if n == 0:
            raise ValueError("evaluation window is empty")
        if not (len(self.rewards) == len(self.ess) == len(self.prices) == n):
            raise ValueError("evaluation window sequences differ in length")

    @property
    def end(self) -> int:
        return self.start + len(self.costs)

    def __len__(self) -> int:
        return len(self.costs)


def average_cost(window: EvalWindow) -> float:
    return float(np.sum(window.costs) / len(window))


def ess_benefit(window: EvalWindow) -> float:
    """Mean of price * ESS flow; discharging at high prices scores positive."""
    return float(np.sum(np.asarray(window.prices) * np.asarray(window.ess)) / len(window))


def q_value_difference(current, previous) -> float:
    cur = getattr(current, "values", current)
    prev = getattr(previous, "values", previous)
    cur, prev = np.asarray(cur, dtype=float), np.asarray(prev, dtype=float)
    if cur.shape != prev.shape:
        raise DimensionMismatch(f"{cur.shape} vs {prev.shape}")
    return float(np.sqrt(np.mean((cur - prev) ** 2)))


def regrets(ac_policy: float, eb_policy: float, ac_optimal: float, eb_optimal: float) -> tuple[float, float]:
    """(average-cost regret, ESS-benefit regret)."""
    return ac_policy - ac_optimal, eb_optimal - eb_policy


def summarize(window: EvalWindow) -> dict:
    return {"avg_cost": average_cost(window), "ess_benefit": ess_benefit(window)}
