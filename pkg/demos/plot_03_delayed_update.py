"""
Crediting a charge when it pays off
===================================

Charging looks bad in the hour it happens: the energy is bought and nothing
is gained yet. The delayed Q-update remembers each charge and, when the energy
is discharged, credits the charging (state, action) pair with the discounted
price spread.
"""

import numpy as np

from microgrid_q.learner import ChargeQueue, on_charge, on_discharge

q = np.zeros((3, 4))
queue = ChargeQueue()

# hour 4: state 1 charges 20 kWh at price 70 with action 2
on_charge(queue, 1, 2, -20.0, 4, 70.0)
# hour 7: 20 kWh discharged at price 140
matched = on_discharge(q, queue, 20.0, 7, 140.0, beta=1e-5, gamma=0.9)
print("matched", matched, "-> Q[1, 2] =", q[1, 2])  # 1e-5 * 0.9**3 * 70 * 20

# first-in first-out matching across two charges
on_charge(queue, 0, 0, -20.0, 8, 70.0)
on_charge(queue, 0, 1, -10.0, 9, 70.0)
print(on_discharge(q, queue, 25.0, 10, 140.0, 1e-5, 0.9), "left in queue:", queue.total_remaining())
