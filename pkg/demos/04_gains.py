"""
Shaping gain and rate gain
==========================

Two ways to score strategy A against a baseline B:

* SNR savings: the smallest common SNR increase (dB) after which B's region
  contains a point of A's boundary, maximized along the boundary.
* Rate gain: the relative increase of the strong user's total rate at equal
  common rate, maximized along ``R2``.
"""

import numpy as np

from bcshaping import channel_from_snr, max_rate_gain, max_shaping_gain, strategy_frontier
from bcshaping.optimizer import OptimizerOptions
from bcshaping.region import frontier_builder

channel = channel_from_snr(10.0, 8.0)
thetas = tuple(np.linspace(0.0, 0.5, 21))
opts = OptimizerOptions(restarts=3)

a = strategy_frontier(channel, "sm-opt", 4, thetas, opts)
b = strategy_frontier(channel, "sm-uniform", 4, thetas, opts)
rate = max_rate_gain(a, b)
print(f"MG_R1  = {rate.mg_r1_percent:.2f} % at R2 = {rate.argmax_r2_rate:.3f}")

# B is recomputed on shifted channels, so it is passed as a builder
snr = max_shaping_gain(a, frontier_builder("sm-uniform", 4, thetas, opts), channel,
                       np.linspace(0.0, a.max_r2, 41))
print(f"MG_SNR = {snr.mg_snr_db:.3f} dB at R2 = {snr.argmax_r2_snr:.3f}")

# sanity check: a frontier against itself on a channel 1 dB worse
worse = frontier_builder("ts", 4)
check = max_shaping_gain(worse(channel), lambda ch: worse(ch.shifted(-1.0)), channel)
print(f"time sharing vs itself at -1 dB: {check.mg_snr_db:.3f} dB")
