import pytest

from microgrid_q.env import Exogenous, MicrogridParams, State
from microgrid_q.spaces import build_spaces


@pytest.fixture(scope="session")
def params():
    return MicrogridParams()


@pytest.fixture(scope="session")
def spaces(params):
    return build_spaces(params)


def make_state(demand=60.0, pv=0.0, price=70.0, soc=0.0, prev_dg=0.0):
    return State(prev_dg=prev_dg, exog=Exogenous(demand=demand, pv=pv, price=price), soc=soc)


def random_instance(rng, max_horizon=4):
    """Small random MDP on a fixed trace: at most 16 actions, horizon <= max_horizon."""
    import numpy as np

    from microgrid_q.tabular import build_tabular

    params = MicrogridParams(
        c_dg=float(rng.integers(100, 600)),
        c_dr=float(rng.integers(50, 300)),
        c_b=float(rng.integers(0, 80)),
        p_dg_max=10.0,
        ramp=float(rng.choice([5.0, 10.0])),
        ess_power_cap=10.0,
        ess_storage_cap=float(rng.choice([10.0, 20.0])),
        dr_rate=0.25,
        ess_efficiency=float(rng.choice([1.0, 1.0, 0.9])),
    )
    demand_bins = (40.0, 60.0, 70.0)
    pv_bins = (0.0, 10.0)
    price_bins = tuple(sorted(rng.choice(np.arange(20, 400, 10), size=3, replace=False).astype(float)))
    sspace, aspace = build_spaces(params, pv_bins, demand_bins, price_bins)
    T = int(rng.integers(1, max_horizon + 1))
    mdp = build_tabular(
        rng.choice(demand_bins, T),
        rng.choice(pv_bins, T),
        rng.choice(price_bins, T),
        sspace,
        aspace,
        params,
    )
    return mdp
