import numpy as np
import pytest

from microgrid_q.data import synth_trace
from microgrid_q.dp import (
    InstanceTooLarge,
    backward_induction,
    bellman_residual,
    brute_force_oracle,
    dump_policy,
    evaluate_policy,
)
from microgrid_q.env import MicrogridParams, feasible_actions, is_feasible, Action
from microgrid_q.learner import Hyperparams, QTable, train
from microgrid_q.spaces import build_spaces
from microgrid_q.tabular import build_tabular

from conftest import random_instance


def test_single_step_grid_only():
    # no storage, no DR, ramp pins dg at 0; price below c_dg -> buy everything
    params = MicrogridParams(ess_power_cap=0, ess_storage_cap=0, dr_rate=0.0, ramp=5.0)
    ss, aa = build_spaces(params, (0.0,), (80.0,), (130.0,))
    mdp = build_tabular([80.0], [0.0], [130.0], ss, aa, params)
    pol = backward_induction(mdp)
    a = pol.action[0, mdp.init_dg, 0]
    assert aa.components(a) == (0.0, 0.0, 0.0)
    assert pol.value[0, mdp.init_dg, 0] == 130.0 * 80.0


@pytest.mark.parametrize("seed", range(12))
def test_matches_brute_force(seed):
    mdp = random_instance(np.random.default_rng(seed))
    pol = backward_induction(mdp)
    best, seq = brute_force_oracle(mdp)
    assert abs(pol.value[0, mdp.init_dg, mdp.init_soc] - best) <= 1e-9
    traj = evaluate_policy(pol, mdp)
    assert abs(traj.total_cost() - best) <= 1e-9
    assert len(seq) == mdp.horizon


def test_single_period_oracle_is_myopic_min():
    mdp = random_instance(np.random.default_rng(100), max_horizon=1)
    best, seq = brute_force_oracle(mdp)
    feas = mdp.feasible_at(0, mdp.init_dg, mdp.init_soc)
    assert best == min(mdp.cost[0, a] for a in feas)


def test_oracle_sequences_are_feasible():
    rng = np.random.default_rng(7)
    for _ in range(5):
        mdp = random_instance(rng)
        _, seq = brute_force_oracle(mdp)
        i_dg, i_soc = mdp.init_dg, mdp.init_soc
        for t, a in enumerate(seq):
            st = mdp.state(t, i_dg, i_soc)
            assert is_feasible(st, Action.balanced(st, *mdp.aspace.components(a)), mdp.params)
            i_dg, i_soc = mdp.next_dg[a], mdp.next_soc[i_soc, a]


def test_oracle_never_enumerates_ramp_violations(monkeypatch):
    import microgrid_q.dp as dp_mod

    mdp = random_instance(np.random.default_rng(3))
    seen = []
    real = dp_mod.feasible_actions

    def spy(state, params, aspace):
        out = real(state, params, aspace)
        for a in out:
            dg = aspace.components(a)[0]
            seen.append(abs(dg - state.prev_dg) <= params.ramp * params.dt + 1e-9)
        return out

    monkeypatch.setattr(dp_mod, "feasible_actions", spy)
    brute_force_oracle(mdp)
    assert seen and all(seen)


def test_oracle_guard():
    params = MicrogridParams()
    ss, aa = build_spaces(params)
    tr = synth_trace(0, 4)
    mdp = build_tabular(tr.demand, tr.pv, tr.price, ss, aa, params)
    with pytest.raises(InstanceTooLarge):
        brute_force_oracle(mdp)


def test_flat_price_never_charges():
    rng = np.random.default_rng(11)
    for _ in range(10):
        mdp = random_instance(rng)
        if mdp.params.ess_efficiency != 1.0 or mdp.params.c_b == 0:
            continue
        flat = build_tabular(mdp.demand, mdp.pv, np.full(mdp.horizon, mdp.sspace.price_levels[1]), mdp.sspace, mdp.aspace, mdp.params)
        pol = backward_induction(flat)
        traj = evaluate_policy(pol, flat)
        assert (traj.ess >= 0).all()
        best, seq = brute_force_oracle(flat)
        assert best == traj.total_cost()
        assert all(flat.ess[a] >= 0 for a in seq)


def test_bellman_residual_table_ii(params, spaces):
    tr = synth_trace(1, 24)
    mdp = build_tabular(tr.demand, tr.pv, tr.price, *spaces, params)
    pol = backward_induction(mdp)
    assert np.all(pol.value[-1] == 0)
    assert bellman_residual(pol, mdp) <= 1e-9
    traj = evaluate_policy(pol, mdp)
    assert traj.total_cost() == pytest.approx(pol.value[0, mdp.init_dg, mdp.init_soc], abs=1e-9)
    assert evaluate_policy(pol, mdp).actions.tolist() == traj.actions.tolist()


def test_q_policies_rollout(params, spaces, tmp_path):
    tr = synth_trace(2, 96)
    train_t, val_t = tr.split(24)
    mk = lambda x: build_tabular(x.demand, x.pv, x.price, *spaces, params)
    mt, mv = mk(train_t), mk(val_t)
    dp_cost = backward_induction(mv).value[0, mv.init_dg, mv.init_soc]
    for beta in (1e-5, 0.0):
        res = train(mt, Hyperparams(episodes=20, adaptation_rate=beta), mv)
        traj = evaluate_policy(res.q, mv)
        assert traj.total_cost() >= dp_cost - 1e-9
        assert evaluate_policy(res.q, mv).cost.tolist() == traj.cost.tolist()
        # balance holds on every dispatched period
        assert np.allclose(traj.grid + traj.dg + traj.ess + traj.dr + traj.pv, traj.demand)
    # unvisited table: greedy falls back to the lowest feasible index
    zero = evaluate_policy(QTable(mv.n_states, mv.n_actions), mv)
    assert zero.actions[0] == mv.feasible_at(0, mv.init_dg, mv.init_soc)[0]
    dump_policy(backward_induction(mv), mv, tmp_path / "p.csv")
    assert (tmp_path / "p.csv").read_text().count("\n") == 1 + 24 * 7 * 6
