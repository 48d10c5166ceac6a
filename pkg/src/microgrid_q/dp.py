"""Exact finite-horizon optimum on a fixed trace and policy rollouts.

With the exogenous sequence pinned by the trace, the decision state at time t
reduces to (prev_dg level, soc level). Terminal value is zero: energy left in
the ESS at the end of the horizon is not credited.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .env import Action, InfeasibleAction, State, cost_of, feasible_actions, step
from .learner import QTable, greedy_action
from .metrics import EvalWindow
from .spaces import snap
from .tabular import TabularMDP

ORACLE_LIMIT = 10**7


class InstanceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class DpPolicy:
    action: np.ndarray  # (T, n_dg, n_soc) optimal action index
    value: np.ndarray  # (T + 1, n_dg, n_soc) optimal cost-to-go; value[T] == 0

    @property
    def horizon(self) -> int:
        return self.action.shape[0]

    def __call__(self, t: int, i_dg: int, i_soc: int, s: int, feasible) -> int:
        return int(self.action[t, i_dg, i_soc])


def stage_costs(mdp: TabularMDP, value_next: np.ndarray, t: int) -> np.ndarray:
    """cost[t, a] + V_{t+1}(next state) over (dg, soc, a); infeasible entries are +inf."""
    cont = value_next[mdp.next_dg[None, :], np.maximum(mdp.next_soc, 0)]  # (n_soc, A)
    total = mdp.cost[t][None, None, :] + cont[None, :, :]
    mask = mdp.feasible[:, :, mdp.demand_idx[t], :]
    return np.where(mask, total, np.inf)


def backward_induction(mdp: TabularMDP) -> DpPolicy:
    T = mdp.horizon
    n_dg, _, _, n_soc, _ = mdp.sspace.shape
    value = np.zeros((T + 1, n_dg, n_soc))
    action = np.zeros((T, n_dg, n_soc), dtype=np.int64)
    for t in range(T - 1, -1, -1):
        q = stage_costs(mdp, value[t + 1], t)
        action[t] = np.argmin(q, axis=-1)
        value[t] = np.take_along_axis(q, action[t][..., None], axis=-1)[..., 0]
    return DpPolicy(action=action, value=value)


def bellman_residual(policy: DpPolicy, mdp: TabularMDP) -> float:
    """max |V_t - min_a (C_t + V_{t+1})| over all (t, dg, soc), by explicit loops."""
    worst = 0.0
    n_dg, _, _, n_soc, _ = mdp.sspace.shape
    for t in range(mdp.horizon):
        for i_dg in range(n_dg):
            for i_soc in range(n_soc):
                best = min(
                    mdp.cost[t, a] + policy.value[t + 1, mdp.next_dg[a], mdp.next_soc[i_soc, a]]
                    for a in mdp.feasible_at(t, i_dg, i_soc)
                )
                worst = max(worst, abs(policy.value[t, i_dg, i_soc] - best))
    return worst


def brute_force_oracle(mdp: TabularMDP, initial: State | None = None) -> tuple[float, list[int]]:
    """Enumerate every feasible action sequence with the scalar model.

    Works from :mod:`microgrid_q.env` directly (not the precomputed tables);
    SOC is snapped to its grid after each step, as in the tabular model.
    """
    T, A = mdp.horizon, mdp.n_actions
    if A**T > ORACLE_LIMIT:
        raise InstanceTooLarge(f"|A|^T = {A}^{T} exceeds {ORACLE_LIMIT}")
    params, aspace, levels = mdp.params, mdp.aspace, mdp.sspace.soc_levels
    if initial is None:
        initial = State(prev_dg=mdp.sspace.prev_dg_levels[mdp.init_dg], exog=mdp.exog(0), soc=levels[mdp.init_soc])

    best_cost = np.inf
    best_seq: list[int] = []

    def rec(t: int, state: State, acc: float, seq: list[int]):
        nonlocal best_cost, best_seq
        if t == T:
            if acc < best_cost:
                best_cost, best_seq = acc, list(seq)
            return
        for a in feasible_actions(state, params, aspace):
            act = Action.balanced(state, *aspace.components(a))
            c = cost_of(state, act, params)
            if t + 1 < T:
                nxt = step(state, act, mdp.exog(t + 1), params, degenerate_reward_zero=True).next_state
                nxt = State(prev_dg=nxt.prev_dg, exog=nxt.exog, soc=snap(nxt.soc, levels))
            else:
                nxt = state
            seq.append(a)
            rec(t + 1, nxt, acc + c, seq)
            seq.pop()

    rec(0, initial, 0.0, [])
    return float(best_cost), best_seq


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    demand: np.ndarray
    pv: np.ndarray
    price: np.ndarray
    dg: np.ndarray
    ess: np.ndarray
    dr: np.ndarray
    grid: np.ndarray
    soc: np.ndarray  # at the start of each period
    cost: np.ndarray
    reward: np.ndarray
    actions: np.ndarray

    COLUMNS = ("t", "demand", "pv", "price", "dg", "ess", "dr", "grid", "soc", "cost", "reward")

    def window(self, start: int = 0) -> EvalWindow:
        return EvalWindow(costs=self.cost, rewards=self.reward, ess=self.ess, prices=self.price, start=start)

    def total_cost(self) -> float:
        return float(np.sum(self.cost))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for i in range(len(self.t)):
                w.writerow([int(self.t[i])] + [repr(float(getattr(self, c)[i])) for c in self.COLUMNS[1:]])


def q_policy(q: QTable):
    """Greedy policy over a Q-table; unvisited rows are all zero and fall back to the lowest feasible index."""

    def policy(t, i_dg, i_soc, s, feasible):
        return greedy_action(q, s, feasible)

    return policy


def evaluate_policy(policy, mdp: TabularMDP, check: bool = True) -> Trajectory:
    """Deterministic rollout from (prev_dg=init, soc=init) over every period of ``mdp``.

    ``policy`` is a :class:`DpPolicy`, a :class:`QTable` (greedy) or a callable
    ``(t, i_dg, i_soc, state_index, feasible) -> action index``.
    """
    if isinstance(policy, QTable):
        policy = q_policy(policy)
    T = mdp.horizon
    rows = {c: np.zeros(T) for c in Trajectory.COLUMNS}
    actions = np.zeros(T, dtype=np.int64)
    i_dg, i_soc = mdp.init_dg, mdp.init_soc
    for t in range(T):
        feas = mdp.feasible_at(t, i_dg, i_soc)
        s = mdp.state_index(t, i_dg, i_soc)
        a = policy(t, i_dg, i_soc, s, feas)
        if check and a not in feas:
            raise InfeasibleAction(f"policy chose infeasible action {a} at t={t}")
        actions[t] = a
        rows["t"][t] = t
        rows["demand"][t], rows["pv"][t], rows["price"][t] = mdp.demand[t], mdp.pv[t], mdp.price[t]
        rows["dg"][t], rows["ess"][t], rows["dr"][t] = mdp.dg[a], mdp.ess[a], mdp.dr[a]
        rows["grid"][t] = mdp.demand[t] - mdp.pv[t] - mdp.dg[a] - mdp.ess[a] - mdp.dr[a]
        rows["soc"][t] = mdp.sspace.soc_levels[i_soc]
        rows["cost"][t] = mdp.cost[t, a]
        rows["reward"][t] = mdp.reward[t, a]
        i_dg, i_soc = int(mdp.next_dg[a]), int(mdp.next_soc[i_soc, a])
    return Trajectory(actions=actions, **rows)


def dump_policy(policy: DpPolicy, mdp: TabularMDP, path) -> None:
    """CSV of (t, soc, prev_dg, dg, ess, dr, cost_to_go) for every decision state."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "soc", "prev_dg", "dg", "ess", "dr", "cost_to_go"])
        for t in range(policy.horizon):
            for i_dg, prev in enumerate(mdp.sspace.prev_dg_levels):
                for i_soc, soc in enumerate(mdp.sspace.soc_levels):
                    a = policy.action[t, i_dg, i_soc]
                    w.writerow([t, soc, prev, mdp.dg[a], mdp.ess[a], mdp.dr[a], repr(float(policy.value[t, i_dg, i_soc]))])
