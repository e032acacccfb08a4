"""
Achievable rate regions
=======================

Sweeping ``theta`` over ``[0, 1/2]`` traces the boundary of each strategy's
region in the ``(R2, R1 + R2)`` plane. Time sharing is a straight segment;
superposition modulation bends above it in the middle range of ``R2``.
The frontiers are written to CSV for any plotting tool.
"""

from pathlib import Path

import numpy as np

from bcshaping import channel_from_snr, strategy_frontier, upper_envelope
from bcshaping.cli import write_frontier_csv
from bcshaping.optimizer import OptimizerOptions

channel = channel_from_snr(10.0, 8.0)
thetas = np.linspace(0.0, 0.5, 11)
opts = OptimizerOptions(restarts=2)
out = Path("demo_output")
out.mkdir(exist_ok=True)

envelopes = {}
for tag in ("ts", "sm-uniform", "sm-opt"):
    env = upper_envelope(strategy_frontier(channel, tag, 4, thetas, opts))
    envelopes[tag] = env
    write_frontier_csv(out / f"frontier_{tag}.csv", env)

# boundary values on a common grid of R2
grid = np.linspace(0.0, 1.3, 14)
print("   R2    " + "  ".join(f"{t:>10s}" for t in envelopes))
for r2 in grid:
    row = [envelopes[t].value_at(r2) for t in envelopes]
    print(f"{r2:6.3f}   " + "  ".join("       ---" if np.isnan(v) else f"{v:10.4f}" for v in row))
print(f"\nfrontiers written to {out}/")
