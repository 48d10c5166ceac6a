"""
Delayed-update vs vanilla Q-learning
====================================

Train both learners on a synthetic week, evaluate their greedy policies on the
final day and measure the regret against the DP optimum. A short run: the
acceptance suite uses 3000 episodes on 30 days.
"""

from microgrid_q.data import synth_trace
from microgrid_q.dp import backward_induction, evaluate_policy
from microgrid_q.env import MicrogridParams
from microgrid_q.learner import Hyperparams, train
from microgrid_q.metrics import average_cost, ess_benefit, regrets
from microgrid_q.spaces import build_spaces
from microgrid_q.tabular import build_tabular

params = MicrogridParams()
spaces = build_spaces(params)
train_t, val_t = synth_trace(seed=1, hours=24 * 8).split(24)
mk = lambda tr: build_tabular(tr.demand, tr.pv, tr.price, *spaces, params)
m_train, m_val = mk(train_t), mk(val_t)

opt = evaluate_policy(backward_induction(m_val), m_val).window()
ac_opt, eb_opt = average_cost(opt), ess_benefit(opt)
print("optimal: AC %.2f EB %.2f" % (ac_opt, eb_opt))

for beta in (1e-5, 0.0):
    res = train(m_train, Hyperparams(episodes=500, adaptation_rate=beta, seed=0), m_val)
    w = evaluate_policy(res.q, m_val).window()
    r_ac, r_eb = regrets(average_cost(w), ess_benefit(w), ac_opt, eb_opt)
    print("beta=%g: AC %.2f EB %.2f  regrets (%.2f, %.2f)  final Qdif %.2e"
          % (beta, average_cost(w), ess_benefit(w), r_ac, r_eb, res.curves.q_diff[-1]))
