"""Finite state and action grids and their dense integer indexing.

Index order is row-major over (prev_dg, pv, demand, soc, price) for states
and over (dg, ess, dr) for actions. Serialized Q-tables rely on this order.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import floor

import numpy as np

from .env import Action, Exogenous, MicrogridParams, State

GRID_STEP = 10.0
LEVEL_TOL = 1e-9

# Observed bins of the campus data set after rounding to tens.
CAMPUS_PV_BINS = (0.0, 10.0, 20.0, 30.0)
CAMPUS_DEMAND_BINS = (40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0, 110.0)
CAMPUS_PRICE_BINS = (70.0, 130.0, 140.0)


class InvalidBins(ValueError):
    pass


class OffGridState(ValueError):
    pass


def _check_bins(name: str, bins) -> tuple[float, ...]:
    vals = tuple(float(b) for b in bins)
    if not vals:
        raise InvalidBins(f"{name} bins are empty")
    if any(b >= a for b, a in zip(vals, vals[1:])):
        raise InvalidBins(f"{name} bins are not strictly increasing: {vals}")
    return vals


def _grid(lo: float, hi: float, step: float) -> tuple[float, ...]:
    n = int(floor((hi - lo) / step + LEVEL_TOL)) + 1
    return tuple(lo + i * step + 0.0 for i in range(n))


def snap_index(value: float, levels) -> int:
    """Index of the nearest level; exact midpoints go to the upper level."""
    arr = np.asarray(levels, dtype=float)
    i = int(np.searchsorted(arr, value, side="left"))
    if i <= 0:
        return 0
    if i >= len(arr):
        return len(arr) - 1
    below, above = value - arr[i - 1], arr[i] - value
    return i - 1 if below < above else i


def snap(value: float, levels) -> float:
    return float(levels[snap_index(value, levels)])


def level_index(value: float, levels, name: str = "value") -> int:
    i = snap_index(value, levels)
    if abs(levels[i] - value) > LEVEL_TOL:
        raise OffGridState(f"{name}={value} is not one of {tuple(levels)}")
    return i


@dataclass(frozen=True)
class StateSpace:
    prev_dg_levels: tuple[float, ...]
    pv_levels: tuple[float, ...]
    demand_levels: tuple[float, ...]
    soc_levels: tuple[float, ...]
    price_levels: tuple[float, ...]

    def __post_init__(self):
        for name in ("prev_dg", "pv", "demand", "soc", "price"):
            _check_bins(name, getattr(self, f"{name}_levels"))

    @property
    def shape(self) -> tuple[int, int, int, int, int]:
        return (
            len(self.prev_dg_levels),
            len(self.pv_levels),
            len(self.demand_levels),
            len(self.soc_levels),
            len(self.price_levels),
        )

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def index_of_levels(self, i_dg: int, i_pv: int, i_d: int, i_soc: int, i_p: int) -> int:
        n_dg, n_pv, n_d, n_soc, n_p = self.shape
        return (((i_dg * n_pv + i_pv) * n_d + i_d) * n_soc + i_soc) * n_p + i_p

    def levels_of_index(self, idx: int) -> tuple[int, int, int, int, int]:
        if not 0 <= idx < self.size:
            raise IndexError(f"state index {idx} outside [0, {self.size})")
        return tuple(int(i) for i in np.unravel_index(idx, self.shape))


@dataclass(frozen=True)
class ActionSpace:
    dg_levels: tuple[float, ...]
    ess_levels: tuple[float, ...]
    dr_levels: tuple[float, ...]

    def __post_init__(self):
        for name in ("dg", "ess", "dr"):
            _check_bins(name, getattr(self, f"{name}_levels"))

    @property
    def shape(self) -> tuple[int, int, int]:
        return len(self.dg_levels), len(self.ess_levels), len(self.dr_levels)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def components(self, idx: int) -> tuple[float, float, float]:
        if not 0 <= idx < self.size:
            raise IndexError(f"action index {idx} outside [0, {self.size})")
        n_ess, n_dr = self.shape[1:]
        i_dg, rest = divmod(idx, n_ess * n_dr)
        i_ess, i_dr = divmod(rest, n_dr)
        return self.dg_levels[i_dg], self.ess_levels[i_ess], self.dr_levels[i_dr]

    def component_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(dg, ess, dr) values for every action index."""
        dg, ess, dr = np.meshgrid(self.dg_levels, self.ess_levels, self.dr_levels, indexing="ij")
        return dg.ravel(), ess.ravel(), dr.ravel()


def build_spaces(
    params: MicrogridParams,
    pv_bins=CAMPUS_PV_BINS,
    demand_bins=CAMPUS_DEMAND_BINS,
    price_bins=CAMPUS_PRICE_BINS,
    step: float = GRID_STEP,
) -> tuple[StateSpace, ActionSpace]:
    pv = _check_bins("pv", pv_bins)
    demand = _check_bins("demand", demand_bins)
    price = _check_bins("price", price_bins)

    dg = _grid(params.p_dg_min, params.p_dg_max, step)
    ess = _grid(-params.ess_storage_cap, params.ess_power_cap, step)
    dr_max = floor(max(params.dr_rate * d for d in demand) / step + LEVEL_TOL) * step
    dr = _grid(0.0, dr_max, step)
    soc = _grid(0.0, params.ess_storage_cap, step)

    sspace = StateSpace(dg, pv, demand, soc, price)
    aspace = ActionSpace(dg, ess, dr)
    return sspace, aspace


def discretize_observation(raw: Exogenous, spaces: StateSpace) -> Exogenous:
    return Exogenous(
        demand=snap(raw.demand, spaces.demand_levels),
        pv=snap(raw.pv, spaces.pv_levels),
        price=snap(raw.price, spaces.price_levels),
    )


def state_levels(state: State, spaces: StateSpace) -> tuple[int, int, int, int, int]:
    return (
        level_index(state.prev_dg, spaces.prev_dg_levels, "prev_dg"),
        level_index(state.pv, spaces.pv_levels, "pv"),
        level_index(state.demand, spaces.demand_levels, "demand"),
        level_index(state.soc, spaces.soc_levels, "soc"),
        level_index(state.price, spaces.price_levels, "price"),
    )


def state_index(state: State, spaces: StateSpace) -> int:
    return spaces.index_of_levels(*state_levels(state, spaces))


def state_from_index(idx: int, spaces: StateSpace) -> State:
    i_dg, i_pv, i_d, i_soc, i_p = spaces.levels_of_index(idx)
    exog = Exogenous(
        demand=spaces.demand_levels[i_d],
        pv=spaces.pv_levels[i_pv],
        price=spaces.price_levels[i_p],
    )
    return State(prev_dg=spaces.prev_dg_levels[i_dg], exog=exog, soc=spaces.soc_levels[i_soc])


def action_index(action, spaces: ActionSpace) -> int:
    i_dg = level_index(action.dg, spaces.dg_levels, "dg")
    i_ess = level_index(action.ess, spaces.ess_levels, "ess")
    i_dr = level_index(action.dr, spaces.dr_levels, "dr")
    n_ess, n_dr = spaces.shape[1:]
    return (i_dg * n_ess + i_ess) * n_dr + i_dr


def action_from_index(idx: int, spaces: ActionSpace, state: State):
    """Concrete balanced :class:`Action` for ``idx`` in ``state``."""
    dg, ess, dr = spaces.components(idx)
    return Action.balanced(state, dg, ess, dr)
