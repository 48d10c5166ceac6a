"""Deterministic grid-connected microgrid model.

Energy quantities are kWh per period, prices are money per kWh. The ESS flow
``ess`` is positive when discharging and negative when charging; the grid
exchange ``grid`` is positive when buying and is always derived from the
supply/demand balance.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

FEAS_TOL = 1e-9


class MicrogridError(Exception):
    pass


class DegenerateBaseline(MicrogridError):
    """Net demand is not positive, so the worst-case baseline cost is zero."""


class SocBoundsViolation(MicrogridError):
    pass


class InfeasibleAction(MicrogridError):
    pass


@dataclass(frozen=True)
class MicrogridParams:
    dt: float = 1.0
    c_dg: float = 500.0
    c_dr: float = 200.0
    c_b: float = 50.0
    p_dg_max: float = 60.0
    p_dg_min: float = 0.0
    ramp: float = 30.0
    ess_power_cap: float = 50.0
    ess_storage_cap: float = 50.0
    dr_rate: float = 0.2
    ess_efficiency: float = 1.0

    def __post_init__(self):
        if self.p_dg_min > self.p_dg_max:
            raise ValueError("p_dg_min must not exceed p_dg_max")
        if self.ramp <= 0:
            raise ValueError("ramp must be positive")
        if self.ess_power_cap < 0 or self.ess_storage_cap < 0:
            raise ValueError("ESS capacities must be non-negative")
        if not 0.0 <= self.dr_rate <= 1.0:
            raise ValueError("dr_rate must lie in [0, 1]")
        if not 0.0 < self.ess_efficiency <= 1.0:
            raise ValueError("ess_efficiency must lie in (0, 1]")
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    def replace(self, **changes) -> "MicrogridParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class Exogenous:
    demand: float
    pv: float
    price: float

    def __post_init__(self):
        if self.demand < 0 or self.pv < 0 or self.price < 0:
            raise ValueError(f"exogenous values must be non-negative: {self}")


@dataclass(frozen=True)
class State:
    prev_dg: float
    exog: Exogenous
    soc: float

    @property
    def demand(self) -> float:
        return self.exog.demand

    @property
    def pv(self) -> float:
        return self.exog.pv

    @property
    def price(self) -> float:
        return self.exog.price


@dataclass(frozen=True)
class Action:
    dg: float
    ess: float
    dr: float
    grid: float = field(default=0.0)

    @classmethod
    def balanced(cls, state: State, dg: float, ess: float, dr: float) -> "Action":
        """Build an action whose grid exchange closes the energy balance."""
        grid = state.demand - state.pv - dg - ess - dr
        return cls(dg=dg, ess=ess, dr=dr, grid=grid)


@dataclass(frozen=True)
class StepResult:
    next_state: State
    cost: float
    reward: float


def cost_of(state: State, action: Action, params: MicrogridParams) -> float:
    return (
        params.c_dg * action.dg
        + params.c_b * max(action.ess, 0.0)
        + state.price * action.grid
        + params.c_dr * action.dr
    )


def worst_case_cost(state: State, params: MicrogridParams) -> float:
    """Cost of covering all net demand with the dispatchable generator."""
    net = state.demand - state.pv
    if net <= 0:
        raise DegenerateBaseline(
            f"net demand {net} <= 0 (demand={state.demand}, pv={state.pv})"
        )
    return params.c_dg * net


def reward_from_cost(cost: float, baseline: float) -> float:
    return -(cost - baseline) / baseline


def reward_of(state: State, action: Action, params: MicrogridParams) -> float:
    return reward_from_cost(cost_of(state, action, params), worst_case_cost(state, params))


def soc_next(soc: float, ess: float, params: MicrogridParams) -> float:
    rho = params.ess_efficiency
    nxt = soc - ess / rho if ess >= 0 else soc - rho * ess
    if nxt < -FEAS_TOL or nxt > params.ess_storage_cap + FEAS_TOL:
        raise SocBoundsViolation(f"soc {soc} with ess {ess} leaves [0, {params.ess_storage_cap}]: {nxt}")
    return min(max(nxt, 0.0), params.ess_storage_cap)


def ess_bounds(soc: float, params: MicrogridParams) -> tuple[float, float]:
    """(lowest, highest) admissible ESS flow at ``soc``; lowest is the largest charge."""
    rho = params.ess_efficiency
    cap = params.ess_power_cap * params.dt
    lo = -min((params.ess_storage_cap - soc) / rho, cap)
    hi = min(rho * soc, cap)
    return lo, hi


def violations(state: State, action: Action, params: MicrogridParams) -> list[str]:
    """Names of every constraint the (state, action) pair breaks."""
    out = []
    tol = FEAS_TOL
    balance = action.grid + action.dg + action.ess + action.dr + state.pv
    if abs(state.demand - balance) > tol:
        out.append("balance")
    if not params.p_dg_min - tol <= action.dg <= params.p_dg_max + tol:
        out.append("dg_bounds")
    if abs(action.dg - state.prev_dg) > params.ramp * params.dt + tol:
        out.append("ramp")
    lo, hi = ess_bounds(state.soc, params)
    if not lo - tol <= action.ess <= hi + tol:
        out.append("ess_bounds")
    if not -tol <= action.dr <= params.dr_rate * state.demand + tol:
        out.append("dr_bounds")
    return out


def is_feasible(state: State, action: Action, params: MicrogridParams) -> bool:
    return not violations(state, action, params)


def feasible_actions(state: State, params: MicrogridParams, aspace) -> list[int]:
    """Indices of the discrete actions admissible in ``state``, ascending."""
    out = []
    for idx in range(aspace.size):
        dg, ess, dr = aspace.components(idx)
        if is_feasible(state, Action.balanced(state, dg, ess, dr), params):
            out.append(idx)
    return out


def step(
    state: State,
    action: Action,
    next_exog: Exogenous,
    params: MicrogridParams,
    degenerate_reward_zero: bool = False,
) -> StepResult:
    bad = violations(state, action, params)
    if bad:
        raise InfeasibleAction(f"{action} violates {bad} in {state}")
    cost = cost_of(state, action, params)
    try:
        reward = reward_from_cost(cost, worst_case_cost(state, params))
    except DegenerateBaseline:
        if not degenerate_reward_zero:
            raise
        reward = 0.0
    nxt = State(prev_dg=action.dg, exog=next_exog, soc=soc_next(state.soc, action.ess, params))
    return StepResult(next_state=nxt, cost=cost, reward=reward)
