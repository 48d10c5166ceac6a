# Compiled inner loops. Arithmetic order mirrors the pure-Python helpers in
# learner.py exactly so that both paths produce bitwise-identical tables.
import math

import numpy as np
from numba import njit


@njit(cache=True)
def _sidx(i_dg, i_pv, i_d, i_soc, i_p, n_pv, n_d, n_soc, n_p):
    return (((i_dg * n_pv + i_pv) * n_d + i_d) * n_soc + i_soc) * n_p + i_p


@njit(cache=True)
def _greedy(q, s, mask):
    best = -1
    best_v = 0.0
    for a in range(mask.shape[0]):
        if mask[a]:
            v = q[s, a]
            if best < 0 or v > best_v:
                best = a
                best_v = v
    return best


@njit(cache=True)
def _max_feasible(q, s, mask):
    return q[s, _greedy(q, s, mask)]


@njit(cache=True)
def _pick_random(mask, u):
    n = 0
    for a in range(mask.shape[0]):
        if mask[a]:
            n += 1
    k = int(u * n)
    for a in range(mask.shape[0]):
        if mask[a]:
            if k == 0:
                return a
            k -= 1
    return -1


@njit(cache=True)
def run_episode(
    q, draws, eps, alpha, beta, gamma,
    pv_idx, d_idx, p_idx, price, cost, reward, feasible, next_soc, next_dg, ess,
    n_pv, n_d, n_soc, n_p, init_dg, init_soc,
):
    """One training pass over the trace. Returns (unmatched discharge kWh, masking violations)."""
    T = pv_idx.shape[0]
    q_s = np.empty(T, np.int64)
    q_a = np.empty(T, np.int64)
    q_rem = np.empty(T, np.float64)
    q_tau = np.empty(T, np.int64)
    q_price = np.empty(T, np.float64)
    head = 0
    tail = 0
    unmatched = 0.0
    bad = 0

    i_dg = init_dg
    i_soc = init_soc
    for t in range(T - 1):
        s = _sidx(i_dg, pv_idx[t], d_idx[t], i_soc, p_idx[t], n_pv, n_d, n_soc, n_p)
        mask = feasible[i_dg, i_soc, d_idx[t]]
        if draws[t, 0] < eps:
            a = _pick_random(mask, draws[t, 1])
        else:
            a = _greedy(q, s, mask)
        if not mask[a]:
            bad += 1
        r = reward[t, a]
        flow = ess[a]
        n_soc_i = next_soc[i_soc, a]
        n_dg_i = next_dg[a]

        if flow < 0:
            q_s[tail] = s
            q_a[tail] = a
            q_rem[tail] = -flow
            q_tau[tail] = t
            q_price[tail] = price[t]
            tail += 1
        elif flow > 0:
            amt = flow
            p_t = price[t]
            while amt > 0 and head < tail:
                rem = q_rem[head]
                if rem <= amt:
                    m = rem
                    amt = amt - rem
                    tau = q_tau[head]
                    ss = q_s[head]
                    aa = q_a[head]
                    pp = q_price[head]
                    head += 1
                else:
                    m = amt
                    q_rem[head] = rem - amt
                    amt = 0.0
                    tau = q_tau[head]
                    ss = q_s[head]
                    aa = q_a[head]
                    pp = q_price[head]
                if beta != 0.0:
                    q[ss, aa] = q[ss, aa] + beta * math.pow(gamma, float(t - tau)) * (p_t - pp) * m
            if amt > 0:
                unmatched += amt

        s2 = _sidx(n_dg_i, pv_idx[t + 1], d_idx[t + 1], n_soc_i, p_idx[t + 1], n_pv, n_d, n_soc, n_p)
        g = r + gamma * _max_feasible(q, s2, feasible[n_dg_i, n_soc_i, d_idx[t + 1]])
        q[s, a] = q[s, a] + alpha * (g - q[s, a])
        i_dg = n_dg_i
        i_soc = n_soc_i
    return unmatched, bad


@njit(cache=True)
def greedy_rollout(
    q,
    pv_idx, d_idx, p_idx, price, cost, reward, feasible, next_soc, next_dg, ess,
    n_pv, n_d, n_soc, n_p, init_dg, init_soc,
):
    """Greedy pass over every period. Returns (sum of cost, sum of price * ess)."""
    T = pv_idx.shape[0]
    i_dg = init_dg
    i_soc = init_soc
    total = 0.0
    benefit = 0.0
    for t in range(T):
        s = _sidx(i_dg, pv_idx[t], d_idx[t], i_soc, p_idx[t], n_pv, n_d, n_soc, n_p)
        a = _greedy(q, s, feasible[i_dg, i_soc, d_idx[t]])
        total += cost[t, a]
        benefit += price[t] * ess[a]
        i_soc = next_soc[i_soc, a]
        i_dg = next_dg[a]
    return total, benefit


@njit(cache=True)
def rms_diff_and_copy(q, prev):
    """RMS of (q - prev) over all entries; overwrites prev with q."""
    acc = 0.0
    n_s, n_a = q.shape
    for i in range(n_s):
        for j in range(n_a):
            d = q[i, j] - prev[i, j]
            acc += d * d
            prev[i, j] = q[i, j]
    return math.sqrt(acc / (n_s * n_a))
