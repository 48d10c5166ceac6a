"""Experiment driver: delayed-update Q-learning vs vanilla Q-learning vs the
DP optimum on the validation window, with file artifacts.

Every run directory receives

* ``curves.csv`` (delayed-update run) and ``curves_vanilla.csv`` with columns
  ``episode, avg_cost, ess_benefit, q_diff``;
* ``dispatch_<policy>.csv`` for ``delayed``, ``vanilla`` and ``dp``;
* ``summary.json``: measures and regrets per policy plus a comparison table.

``summary.json`` is written with sorted keys and no timestamps, so identical
configs give byte-identical files. Files are written as soon as each stage
finishes; if a later stage raises, ``summary.json`` is still written with the
completed stages and an ``"error"`` entry before the exception propagates.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import metrics
from .config import RunConfig
from .dp import Trajectory, backward_induction, dump_policy, evaluate_policy
from .learner import ConfigMismatch, Curves, Hyperparams, QTable, TrainResult, train
from .tabular import TabularMDP, build_tabular

log = logging.getLogger(__name__)

POLICIES = ("delayed", "vanilla", "dp")
TABLE_COLUMNS = ("policy", "avg_cost", "ess_benefit", "ac_regret", "eb_regret")


@dataclass(frozen=True)
class Instance:
    """Training and validation MDPs built from one config."""

    train: TabularMDP
    validation: TabularMDP


def build_instance(config: RunConfig) -> Instance:
    trace = config.load_trace()
    train_t, val_t = trace.split(config.validation_hours)
    sspace, aspace = config.spaces()

    def mk(tr):
        return build_tabular(tr.demand, tr.pv, tr.price, sspace, aspace, config.params,
                             degenerate_reward_zero=config.degenerate_reward_zero)

    return Instance(mk(train_t), mk(val_t))


def write_curves(curves: Curves, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["episode", "avg_cost", "ess_benefit", "q_diff"])
        for k, ac, eb, qd in curves.rows():
            w.writerow([k, repr(ac), repr(eb), repr(qd)])


def read_curves(path) -> Curves:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Curves(avg_cost=data[:, 1], ess_benefit=data[:, 2], q_diff=data[:, 3])


def measures(traj: Trajectory, optimal: Trajectory | None = None) -> dict:
    w = traj.window()
    out = {"avg_cost": metrics.average_cost(w), "ess_benefit": metrics.ess_benefit(w),
           "total_cost": traj.total_cost()}
    if optimal is not None:
        ow = optimal.window()
        r_ac, r_eb = metrics.regrets(out["avg_cost"], out["ess_benefit"],
                                     metrics.average_cost(ow), metrics.ess_benefit(ow))
        out["ac_regret"], out["eb_regret"] = r_ac, r_eb
    return out


def comparison_table(policies: dict) -> list[dict]:
    """Rows in the order vanilla, delayed, dp (whichever are present)."""
    rows = []
    for name in ("vanilla", "delayed", "dp"):
        if name in policies:
            m = policies[name]
            rows.append({"policy": name, **{c: m[c] for c in TABLE_COLUMNS[1:]}})
    return rows


def _dump_json(doc: dict, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def solve_dp(inst: Instance, out: Path | None = None) -> Trajectory:
    pol = backward_induction(inst.validation)
    traj = evaluate_policy(pol, inst.validation)
    if out is not None:
        traj.to_csv(out / "dispatch_dp.csv")
        dump_policy(pol, inst.validation, out / "policy_dp.csv")
    return traj


def train_policy(inst: Instance, hp: Hyperparams, name: str, out: Path | None = None,
                 save_qtable: bool = True, config: RunConfig | None = None) -> tuple[TrainResult, Trajectory]:
    res = train(inst.train, hp, inst.validation)
    traj = evaluate_policy(res.q, inst.validation)
    if out is not None:
        write_curves(res.curves, out / ("curves.csv" if name == "delayed" else f"curves_{name}.csv"))
        traj.to_csv(out / f"dispatch_{name}.csv")
        if save_qtable:
            header = {"policy": name, "hyperparams": asdict(hp)}
            if config is not None:
                header["config"] = config.to_json()
            res.q.save(out / f"qtable_{name}.bin", header)
    return res, traj


def _policy_entry(res: TrainResult, traj: Trajectory, optimal: Trajectory) -> dict:
    entry = measures(traj, optimal)
    entry["final_q_diff"] = float(res.curves.q_diff[-1])
    entry["unmatched_discharge_kwh"] = float(res.unmatched_kwh)
    entry["seed"] = res.hyperparams.seed
    entry["adaptation_rate"] = res.hyperparams.adaptation_rate
    return entry


def run_experiment(config: RunConfig, out_dir, seed: int | None = None, policies=POLICIES,
                   save_qtables: bool = True, instance: Instance | None = None) -> dict:
    """Train/solve the requested ``policies`` for one learning seed and write the run directory.

    The DP optimum is always computed because regrets need it; ``dispatch_dp.csv``
    is only written when ``"dp"`` is requested. Returns the summary document.
    """
    unknown = set(policies) - set(POLICIES)
    if unknown:
        raise ValueError(f"unknown policies: {sorted(unknown)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = config.hyperparams.seed if seed is None else seed
    hp = config.hyperparams.replace(seed=seed)
    summary = {"config": config.to_json(), "seed": seed, "policies": {}}
    try:
        inst = instance if instance is not None else build_instance(config)
        summary["train_hours"] = inst.train.horizon
        summary["validation_hours"] = inst.validation.horizon
        optimal = solve_dp(inst, out if "dp" in policies else None)
        if "dp" in policies:
            summary["policies"]["dp"] = measures(optimal, optimal)
        for name, beta in (("delayed", hp.adaptation_rate), ("vanilla", 0.0)):
            if name not in policies:
                continue
            log.info("training %s policy (seed %d, beta %g)", name, seed, beta)
            res, traj = train_policy(inst, hp.replace(adaptation_rate=beta), name, out, save_qtables, config)
            summary["policies"][name] = _policy_entry(res, traj, optimal)
    except Exception as exc:
        summary["error"] = f"{type(exc).__name__}: {exc}"
        _dump_json(summary, out / "summary.json")
        raise
    summary["table"] = comparison_table(summary["policies"])
    _dump_json(summary, out / "summary.json")
    return summary


def evaluate_qtable(path, config: RunConfig, instance: Instance | None = None) -> dict:
    """Greedy rollout of a saved Q-table on the config's validation window."""
    q, meta = QTable.load(path)
    inst = instance if instance is not None else build_instance(config)
    if q.shape != (inst.validation.n_states, inst.validation.n_actions):
        raise ConfigMismatch(
            f"{path}: table is {q.shape}, config spaces are "
            f"{(inst.validation.n_states, inst.validation.n_actions)}"
        )
    optimal = solve_dp(inst)
    traj = evaluate_policy(q, inst.validation)
    return {"policy": meta.get("policy"), **measures(traj, optimal)}


def _seed_list(config: RunConfig, n: int | None) -> tuple[int, ...]:
    if n is None:
        return config.seeds
    if n < 1:
        raise ValueError("need at least one seed")
    seeds = list(config.seeds[:n])
    nxt = max(config.seeds) + 1
    while len(seeds) < n:
        seeds.append(nxt)
        nxt += 1
    return tuple(seeds)


def aggregate(per_seed: list[dict]) -> dict:
    """Win counts and mean/std of both regrets for delayed vs vanilla."""
    d_ac = np.array([s["policies"]["delayed"]["ac_regret"] for s in per_seed])
    v_ac = np.array([s["policies"]["vanilla"]["ac_regret"] for s in per_seed])
    d_eb = np.array([s["policies"]["delayed"]["eb_regret"] for s in per_seed])
    v_eb = np.array([s["policies"]["vanilla"]["eb_regret"] for s in per_seed])
    out = {
        "n_seeds": len(per_seed),
        "delayed_lower_ac_regret": int(np.sum(d_ac < v_ac)),
        "delayed_lower_eb_regret": int(np.sum(d_eb < v_eb)),
        "delayed_lower_both": int(np.sum((d_ac < v_ac) & (d_eb < v_eb))),
    }
    for name, arr in (("delayed_ac_regret", d_ac), ("vanilla_ac_regret", v_ac),
                      ("delayed_eb_regret", d_eb), ("vanilla_eb_regret", v_eb)):
        out[name] = {"mean": float(np.mean(arr)), "std": float(np.std(arr))}
    v_mean = out["vanilla_ac_regret"]["mean"]
    out["ac_regret_ratio"] = out["delayed_ac_regret"]["mean"] / v_mean if v_mean != 0 else None
    return out


def compare(config: RunConfig, out_dir, n_seeds: int | None = None) -> dict:
    """Run the three-way comparison over several learning seeds on one trace.

    Per-seed artifacts (without Q-tables) go to ``seed_<s>/``; the top-level
    ``summary.json`` holds per-seed tables and the aggregate.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = _seed_list(config, n_seeds)
    inst = build_instance(config)
    optimal = solve_dp(inst, out)
    per_seed = []
    doc = {"config": config.to_json(), "seeds": list(seeds), "dp": measures(optimal, optimal)}
    try:
        for s in seeds:
            per_seed.append(run_experiment(config, out / f"seed_{s}", s, policies=("delayed", "vanilla"),
                                           save_qtables=False, instance=inst))
    except Exception as exc:
        doc["error"] = f"{type(exc).__name__}: {exc}"
        doc["per_seed"] = [{"seed": p["seed"], "table": p["table"]} for p in per_seed]
        _dump_json(doc, out / "summary.json")
        raise
    dp_row = {"policy": "dp", **{c: doc["dp"][c] for c in TABLE_COLUMNS[1:]}}
    doc["per_seed"] = [{"seed": p["seed"], "table": p["table"] + [dp_row]} for p in per_seed]
    doc["aggregate"] = aggregate(per_seed)
    _dump_json(doc, out / "summary.json")
    return doc

