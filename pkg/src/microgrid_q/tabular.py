"""Dense lookup tables for the discretized microgrid MDP on a fixed trace.

The learner kernels and the DP solver work on integer level indices only.
Everything they need (costs, rewards, feasibility masks, SOC transitions) is
precomputed here from the scalar model in :mod:`microgrid_q.env`.

SOC after a transition is snapped to the nearest SOC level. With unit
efficiency every feasible transition lands exactly on a level.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import (
    DegenerateBaseline,
    Exogenous,
    MicrogridParams,
    State,
    feasible_actions,
    soc_next,
)
from .spaces import ActionSpace, StateSpace, level_index, snap_index


@dataclass(frozen=True)
class TabularMDP:
    params: MicrogridParams
    sspace: StateSpace
    aspace: ActionSpace
    demand: np.ndarray  # (T,) kWh on grid
    pv: np.ndarray
    price: np.ndarray
    demand_idx: np.ndarray  # (T,) level indices
    pv_idx: np.ndarray
    price_idx: np.ndarray
    cost: np.ndarray  # (T, A)
    reward: np.ndarray  # (T, A)
    feasible: np.ndarray  # (n_dg, n_soc, n_demand, A) bool
    next_soc: np.ndarray  # (n_soc, A) soc level index, -1 where the flow is out of bounds
    next_dg: np.ndarray  # (A,) dg level index
    dg: np.ndarray  # (A,) action component values
    ess: np.ndarray
    dr: np.ndarray
    init_dg: int
    init_soc: int

    @property
    def horizon(self) -> int:
        return len(self.demand)

    @property
    def n_states(self) -> int:
        return self.sspace.size

    @property
    def n_actions(self) -> int:
        return self.aspace.size

    def exog(self, t: int) -> Exogenous:
        return Exogenous(demand=float(self.demand[t]), pv=float(self.pv[t]), price=float(self.price[t]))

    def state_index(self, t: int, i_dg: int, i_soc: int) -> int:
        return self.sspace.index_of_levels(
            i_dg, int(self.pv_idx[t]), int(self.demand_idx[t]), i_soc, int(self.price_idx[t])
        )

    def state(self, t: int, i_dg: int, i_soc: int) -> State:
        return State(
            prev_dg=self.sspace.prev_dg_levels[i_dg],
            exog=self.exog(t),
            soc=self.sspace.soc_levels[i_soc],
        )

    def feasible_at(self, t: int, i_dg: int, i_soc: int) -> np.ndarray:
        return np.flatnonzero(self.feasible[i_dg, i_soc, self.demand_idx[t]])

    def kernel_args(self) -> tuple:
        """Positional arrays consumed by the compiled kernels."""
        n_dg, n_pv, n_d, n_soc, n_p = self.sspace.shape
        return (
            self.pv_idx,
            self.demand_idx,
            self.price_idx,
            self.price,
            self.cost,
            self.reward,
            self.feasible,
            self.next_soc,
            self.next_dg,
            self.ess,
            n_pv,
            n_d,
            n_soc,
            n_p,
            self.init_dg,
            self.init_soc,
        )


def build_tabular(
    demand,
    pv,
    price,
    sspace: StateSpace,
    aspace: ActionSpace,
    params: MicrogridParams,
    degenerate_reward_zero: bool = False,
) -> TabularMDP:
    demand = np.asarray(demand, dtype=float)
    pv = np.asarray(pv, dtype=float)
    price = np.asarray(price, dtype=float)
    if not (demand.shape == pv.shape == price.shape) or demand.ndim != 1 or len(demand) < 1:
        raise ValueError("demand, pv and price must be equal-length 1-d sequences")

    d_idx = np.array([level_index(v, sspace.demand_levels, "demand") for v in demand], dtype=np.int64)
    pv_idx = np.array([level_index(v, sspace.pv_levels, "pv") for v in pv], dtype=np.int64)
    p_idx = np.array([level_index(v, sspace.price_levels, "price") for v in price], dtype=np.int64)

    dg, ess, dr = aspace.component_arrays()
    grid = demand[:, None] - pv[:, None] - dg[None, :] - ess[None, :] - dr[None, :]
    cost = (
        params.c_dg * dg[None, :]
        + params.c_b * np.maximum(ess, 0.0)[None, :]
        + price[:, None] * grid
        + params.c_dr * dr[None, :]
    )
    net = demand - pv
    reward = np.zeros_like(cost)
    for t in range(len(demand)):
        if net[t] <= 0:
            if not degenerate_reward_zero:
                raise DegenerateBaseline(f"net demand {net[t]} <= 0 at t={t}")
            continue
        base = params.c_dg * net[t]
        reward[t] = -(cost[t] - base) / base

    n_dg, _, n_d, n_soc, _ = sspace.shape
    A = aspace.size
    feas = np.zeros((n_dg, n_soc, n_d, A), dtype=np.bool_)
    for i_dg, prev in enumerate(sspace.prev_dg_levels):
        for i_soc, soc in enumerate(sspace.soc_levels):
            for i_d, dem in enumerate(sspace.demand_levels):
                st = State(prev_dg=prev, exog=Exogenous(demand=dem, pv=0.0, price=0.0), soc=soc)
                feas[i_dg, i_soc, i_d, feasible_actions(st, params, aspace)] = True

    next_soc = np.full((n_soc, A), -1, dtype=np.int64)
    for i_soc, soc in enumerate(sspace.soc_levels):
        for a in range(A):
            if feas[:, i_soc, :, a].any():
                next_soc[i_soc, a] = snap_index(soc_next(soc, ess[a], params), sspace.soc_levels)
    next_dg = np.array([level_index(v, sspace.prev_dg_levels, "dg") for v in dg], dtype=np.int64)

    return TabularMDP(
        params=params,
        sspace=sspace,
        aspace=aspace,
        demand=demand,
        pv=pv,
        price=price,
        demand_idx=d_idx,
        pv_idx=pv_idx,
        price_idx=p_idx,
        cost=cost,
        reward=reward,
        feasible=feas,
        next_soc=next_soc,
        next_dg=next_dg,
        dg=dg,
        ess=ess,
        dr=dr,
        init_dg=snap_index(0.0, sspace.prev_dg_levels),
        init_soc=0,
    )
