"""Alternate filtering and re-optimisation to obtain band-limited controls."""
import numpy as np

from chaincontrol import IdealLowPass, OptimizerConfig, iterate_filter_optimize, load_optimum

seq, target, _ = load_optimum("x3_T0.5")
filt = IdealLowPass(np.pi / 2)

# Each round: filter, average the filtered field over every pulse, run one
# BFGS ascent from there, then measure the fidelity of the filtered result.
for r in iterate_filter_optimize(seq, target, filt, rounds=3,
                                 cfg=OptimizerConfig(max_iterations=300)):
    print(f"round {r.round}: resampled {r.resampled_fidelity:.4f}, "
          f"re-optimised {r.optimized_fidelity:.6f}, filtered {r.filtered_fidelity:.4f}")
