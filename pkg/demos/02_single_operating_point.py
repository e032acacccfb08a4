"""
Shaping one operating point
===========================

For a weight ``theta`` the optimizer maximizes
``theta R1 + (1 - theta) R2`` over the joint table and the symbol positions,
subject to the average power budget. We compare the uniform layered 4-PAM with
the optimized superposition modulation and with unconstrained superposition
coding.
"""

import numpy as np

from bcshaping import channel_from_snr, general_sc, optimize_rates, superposition_modulation
from bcshaping.optimizer import OptimizerOptions

channel = channel_from_snr(10.0, 8.0)
theta = 0.45
opts = OptimizerOptions(restarts=4)

for name, constraint in (
    ("SM, uniform taps", superposition_modulation(2, 2, probs_free=False)),
    ("SM, optimized", superposition_modulation(2, 2)),
    ("SC, optimized", general_sc(4)),
):
    res = optimize_rates(channel, theta, constraint, 4, opts)
    print(f"\n{name}: R1 = {res.r1:.4f}, R2 = {res.r2:.4f}, "
          f"objective = {res.objective:.5f}, power = {res.achieved_power:.6f}")
    print("  positions:", np.round(res.constellation.symbols, 4))
    print("  P_UX:\n", np.round(res.joint.probs, 4))
