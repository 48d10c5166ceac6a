"""
One hour of microgrid operation
===============================

Build a state, look at which dispatch actions are allowed, and step the
model forward.
"""

from microgrid_q.env import Action, Exogenous, MicrogridParams, State, feasible_actions, step
from microgrid_q.spaces import build_spaces, state_index

# default parameters: diesel 0-60 kWh with 30 kWh ramp, 50 kWh battery, DR up to 20% of demand
params = MicrogridParams()
sspace, aspace = build_spaces(params)
print("state factors", sspace.shape, "->", sspace.size, "states;", aspace.size, "actions")

# an empty battery at night, diesel off
s = State(prev_dg=0.0, exog=Exogenous(demand=60.0, pv=0.0, price=70.0), soc=0.0)
feas = feasible_actions(s, params, aspace)
print(len(feas), "of", aspace.size, "actions are feasible")

# charge 30 kWh from the grid while prices are low
a = Action.balanced(s, dg=0.0, ess=-30.0, dr=0.0)
res = step(s, a, Exogenous(demand=90.0, pv=10.0, price=140.0), params)
print("grid purchase", a.grid, "cost", res.cost, "reward", round(res.reward, 4))
print("next SOC", res.next_state.soc, "state index", state_index(res.next_state, sspace))

# discharge it at the peak price
b = Action.balanced(res.next_state, dg=0.0, ess=30.0, dr=0.0)
res2 = step(res.next_state, b, res.next_state.exog, params)
print("peak-hour cost with discharge", res2.cost)
