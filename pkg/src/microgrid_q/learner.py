"""Tabular Q-learning with feasibility masking and delayed Q-update.

The delayed Q-update keeps a FIFO queue of charging decisions. When the ESS
later discharges, the discharged energy is matched against the oldest
outstanding charges and each matched charging decision receives

    Q(s_tau, a_tau) += beta * gamma**(t - tau) * (p_t - p_tau) * matched_kwh

in addition to the ordinary TD update of every step.

Two training paths exist: :func:`train`, which runs the compiled kernel, and
:func:`train_reference`, a plain-Python loop built from the public helpers
below. They consume the same random draws and agree bitwise.
"""
from __future__ import annotations

import json
import logging
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .tabular import TabularMDP

log = logging.getLogger(__name__)

QTABLE_MAGIC = "microgrid-q-table v1"


class EmptyFeasibleSet(ValueError):
    pass


class ConfigMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Hyperparams:
    episodes: int = 3000
    learning_rate: float = 0.3
    adaptation_rate: float = 1e-5
    discount: float = 0.9
    epsilon_start: float = 1.0
    epsilon_end: float = 0.01
    epsilon_decay_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        # alpha = 0 is accepted for no-learning checks
        if not 0.0 <= self.learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in [0, 1]")
        if self.adaptation_rate < 0:
            raise ValueError("adaptation_rate must be >= 0")
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError("discount must lie in [0, 1]")
        if not 0.0 < self.epsilon_decay_fraction <= 1.0:
            raise ValueError("epsilon_decay_fraction must lie in (0, 1]")

    def replace(self, **changes) -> "Hyperparams":
        return Hyperparams(**{**asdict(self), **changes})


class QTable:
    """Dense |S| x |A| action values with an optional previous-epoch snapshot."""

    def __init__(self, n_states: int, n_actions: int, values: np.ndarray | None = None):
        if values is None:
            values = np.zeros((n_states, n_actions), dtype=np.float64)
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.shape != (n_states, n_actions):
            raise ConfigMismatch(f"values shape {values.shape} != {(n_states, n_actions)}")
        self.values = values
        self.snapshot: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def take_snapshot(self) -> None:
        self.snapshot = self.values.copy()

    def greedy(self, s: int, feasible) -> int:
        return greedy_action(self, s, feasible)

    def save(self, path, header: dict | None = None) -> None:
        """Write a one-line JSON header followed by little-endian float64 data."""
        meta = {
            "format": QTABLE_MAGIC,
            "n_states": self.shape[0],
            "n_actions": self.shape[1],
            "dtype": "<f8",
            "state_order": ["prev_dg", "pv", "demand", "soc", "price"],
            "action_order": ["dg", "ess", "dr"],
        }
        meta.update(header or {})
        with open(path, "wb") as fh:
            fh.write((json.dumps(meta, sort_keys=True) + "\n").encode("utf-8"))
            fh.write(self.values.astype("<f8").tobytes())

    @classmethod
    def load(cls, path) -> tuple["QTable", dict]:
        raw = Path(path).read_bytes()
        nl = raw.index(b"\n")
        meta = json.loads(raw[:nl].decode("utf-8"))
        if meta.get("format") != QTABLE_MAGIC:
            raise ConfigMismatch(f"{path} is not a Q-table file")
        vals = np.frombuffer(raw[nl + 1 :], dtype="<f8").astype(np.float64)
        n_s, n_a = meta["n_states"], meta["n_actions"]
        if vals.size != n_s * n_a:
            raise ConfigMismatch(f"{path}: expected {n_s * n_a} values, found {vals.size}")
        return cls(n_s, n_a, vals.reshape(n_s, n_a)), meta


def _values(q) -> np.ndarray:
    return q.values if isinstance(q, QTable) else q


def greedy_action(q, s: int, feasible) -> int:
    """Highest-valued feasible action; ties go to the lowest index."""
    feasible = np.asarray(feasible, dtype=np.int64)
    if feasible.size == 0:
        raise EmptyFeasibleSet(f"no feasible action in state {s}")
    feasible = np.sort(feasible)
    row = _values(q)[s, feasible]
    return int(feasible[int(np.argmax(row))])


def select_from_draws(q, s: int, feasible, epsilon: float, u_explore: float, u_pick: float) -> int:
    feasible = np.sort(np.asarray(feasible, dtype=np.int64))
    if feasible.size == 0:
        raise EmptyFeasibleSet(f"no feasible action in state {s}")
    if u_explore < epsilon:
        return int(feasible[int(u_pick * feasible.size)])
    return greedy_action(q, s, feasible)


def select_action(q, s: int, feasible, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy choice restricted to ``feasible``.

    Always consumes exactly two uniforms from ``rng``: the exploration coin and
    the index of the random pick.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    u = rng.random(2)
    return select_from_draws(q, s, feasible, epsilon, u[0], u[1])


def td_update(q, s: int, a: int, r: float, s_next: int, feasible_next, alpha: float, gamma: float) -> None:
    vals = _values(q)
    feasible_next = np.asarray(feasible_next, dtype=np.int64)
    if feasible_next.size == 0:
        raise EmptyFeasibleSet(f"no feasible action in state {s_next}")
    g = r + gamma * vals[s_next, feasible_next].max()
    vals[s, a] = vals[s, a] + alpha * (g - vals[s, a])


@dataclass
class ChargeRecord:
    state_index: int
    action_index: int
    remaining: float
    period: int
    price: float


@dataclass
class ChargeQueue:
    records: deque = field(default_factory=deque)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def total_remaining(self) -> float:
        return sum(r.remaining for r in self.records)

    def clear(self) -> None:
        self.records.clear()


def on_charge(queue: ChargeQueue, s: int, a: int, ess: float, t: int, price: float) -> None:
    if not ess < 0:
        raise ValueError(f"on_charge needs a charging flow (ess < 0), got {ess}")
    if queue.records and queue.records[-1].period >= t:
        raise ValueError(f"charge period {t} is not after the last queued period")
    queue.records.append(ChargeRecord(s, a, -ess, t, price))


def on_discharge(q, queue: ChargeQueue, ess: float, t: int, p_t: float, beta: float, gamma: float):
    """Match a discharge against queued charges and credit them retroactively.

    Returns the list of ``(period, matched_kwh)`` pairs in matching order.
    """
    if not ess > 0:
        raise ValueError(f"on_discharge needs a discharging flow (ess > 0), got {ess}")
    vals = _values(q)
    matched = []
    amt = ess
    while amt > 0 and queue.records:
        rec = queue.records[0]
        if rec.remaining <= amt:
            m = rec.remaining
            amt = amt - rec.remaining
            queue.records.popleft()
        else:
            m = amt
            rec.remaining = rec.remaining - amt
            amt = 0.0
        if beta != 0.0:
            vals[rec.state_index, rec.action_index] = (
                vals[rec.state_index, rec.action_index]
                + beta * math.pow(gamma, float(t - rec.period)) * (p_t - rec.price) * m
            )
        matched.append((rec.period, m))
    if amt > 0:
        log.debug("discharge of %s at t=%s left %s kWh unmatched", ess, t, amt)
    return matched


def epsilon_schedule(k: int, hp: Hyperparams) -> float:
    """Linear decay from epsilon_start at k=1 to epsilon_end, then flat."""
    n_decay = max(1, round(hp.epsilon_decay_fraction * hp.episodes))
    if n_decay <= 1:
        return hp.epsilon_end
    frac = min(1.0, (k - 1) / (n_decay - 1))
    return hp.epsilon_start + (hp.epsilon_end - hp.epsilon_start) * frac


@dataclass
class Curves:
    avg_cost: np.ndarray
    ess_benefit: np.ndarray
    q_diff: np.ndarray

    def rows(self):
        for k in range(len(self.q_diff)):
            yield k + 1, float(self.avg_cost[k]), float(self.ess_benefit[k]), float(self.q_diff[k])


@dataclass
class TrainResult:
    q: QTable
    curves: Curves
    hyperparams: Hyperparams
    unmatched_kwh: float = 0.0


def _check_spaces(mdp: TabularMDP, other: TabularMDP | None) -> None:
    if mdp.horizon < 2:
        raise ConfigMismatch("training trace needs at least 2 records")
    if other is not None and (other.sspace != mdp.sspace or other.aspace != mdp.aspace):
        raise ConfigMismatch("validation spaces differ from training spaces")


def train(mdp: TabularMDP, hp: Hyperparams, validation: TabularMDP | None = None) -> TrainResult:
    """Run ``hp.episodes`` passes over ``mdp`` with the compiled kernel.

    Per-episode curves hold the greedy policy's average cost and ESS benefit
    on ``validation`` (NaN when none is given) and the RMS change of the
    Q-table over the episode.
    """
    _check_spaces(mdp, validation)
    rng = np.random.default_rng(hp.seed)
    q = QTable(mdp.n_states, mdp.n_actions)
    prev = q.values.copy()
    args = mdp.kernel_args()
    vargs = validation.kernel_args() if validation is not None else None
    M = hp.episodes
    ac = np.full(M, np.nan)
    eb = np.full(M, np.nan)
    qd = np.zeros(M)
    unmatched = 0.0
    for k in range(1, M + 1):
        eps = epsilon_schedule(k, hp)
        draws = rng.random((mdp.horizon - 1, 2))
        if k == M:
            q.take_snapshot()
        lost, bad = _kernels.run_episode(
            q.values, draws, eps, hp.learning_rate, hp.adaptation_rate, hp.discount, *args
        )
        if bad:
            raise AssertionError(f"episode {k} executed {bad} infeasible actions")
        unmatched += lost
        qd[k - 1] = _kernels.rms_diff_and_copy(q.values, prev)
        if vargs is not None:
            total, benefit = _kernels.greedy_rollout(q.values, *vargs)
            ac[k - 1] = total / validation.horizon
            eb[k - 1] = benefit / validation.horizon
    if unmatched:
        log.info("%.1f kWh of discharge found no queued charge", unmatched)
    return TrainResult(q=q, curves=Curves(ac, eb, qd), hyperparams=hp, unmatched_kwh=unmatched)


def train_reference(mdp: TabularMDP, hp: Hyperparams, delayed: bool = True) -> QTable:
    """Pure-Python training loop; ``delayed=False`` never touches the charge queue."""
    _check_spaces(mdp, None)
    rng = np.random.default_rng(hp.seed)
    q = QTable(mdp.n_states, mdp.n_actions)
    queue = ChargeQueue()
    for k in range(1, hp.episodes + 1):
        eps = epsilon_schedule(k, hp)
        draws = rng.random((mdp.horizon - 1, 2))
        queue.clear()
        i_dg, i_soc = mdp.init_dg, mdp.init_soc
        for t in range(mdp.horizon - 1):
            s = mdp.state_index(t, i_dg, i_soc)
            feas = mdp.feasible_at(t, i_dg, i_soc)
            a = select_from_draws(q, s, feas, eps, draws[t, 0], draws[t, 1])
            r = mdp.reward[t, a]
            flow = mdp.ess[a]
            n_dg, n_soc = int(mdp.next_dg[a]), int(mdp.next_soc[i_soc, a])
            if delayed:
                if flow < 0:
                    on_charge(queue, s, a, flow, t, mdp.price[t])
                elif flow > 0:
                    on_discharge(q, queue, flow, t, mdp.price[t], hp.adaptation_rate, hp.discount)
            s2 = mdp.state_index(t + 1, n_dg, n_soc)
            td_update(q, s, a, r, s2, mdp.feasible_at(t + 1, n_dg, n_soc), hp.learning_rate, hp.discount)
            i_dg, i_soc = n_dg, n_soc
    return q
