"""
The exact optimum on a validation day
=====================================

Backward induction over (hour, previous diesel output, state of charge) gives
the cost-minimising dispatch for a known 24-hour trace. On tiny instances it
agrees with exhaustive search.
"""

import numpy as np

from microgrid_q.data import synth_trace
from microgrid_q.dp import backward_induction, brute_force_oracle, evaluate_policy
from microgrid_q.env import MicrogridParams
from microgrid_q.metrics import average_cost, ess_benefit
from microgrid_q.spaces import build_spaces
from microgrid_q.tabular import build_tabular

params = MicrogridParams()
spaces = build_spaces(params)
day = synth_trace(seed=0, hours=24)
mdp = build_tabular(day.demand, day.pv, day.price, *spaces, params)

policy = backward_induction(mdp)
traj = evaluate_policy(policy, mdp)
w = traj.window()
print("optimal average cost %.2f, ESS benefit %.2f" % (average_cost(w), ess_benefit(w)))
print("hour price  ess   soc")
for t in range(24):
    print("%4d %5.0f %5.0f %5.0f" % (t, traj.price[t], traj.ess[t], traj.soc[t]))

# a 3-hour slice with a small battery is small enough to enumerate
small = MicrogridParams(p_dg_max=10, ess_power_cap=10, ess_storage_cap=20, dr_rate=0.25, ramp=10)
ss, aa = build_spaces(small, (0.0, 10.0), (40.0, 60.0, 70.0), (70.0, 130.0, 140.0))
tiny = build_tabular([60, 70, 40], [0, 10, 0], [70, 140, 130], ss, aa, small)
best, seq = brute_force_oracle(tiny)
dp_value = backward_induction(tiny).value[0, tiny.init_dg, tiny.init_soc]
print("brute force %.1f, backward induction %.1f" % (best, dp_value))
assert np.isclose(best, dp_value)
