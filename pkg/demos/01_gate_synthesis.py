"""Synthesise the end-spin flip on a three-spin chain with BFGS."""
import numpy as np

from chaincontrol import ChainSpec, ControlSequence, GateTarget, OptimizerConfig, optimize_gate
from chaincontrol.propagation import evolve_sequence

target = GateTarget("X_end", 3)  # sigma_x on the last spin, identity elsewhere

# Control acts on spin 1 only, alternating x and y pulses of equal length.
# A fixed total time of 30/J is split into more and more pulses.
cfg = OptimizerConfig(n_restarts=5)
for n_pulses in (10, 30, 70):
    report = optimize_gate(target, "alternating_xy", n_pulses, 30.0, cfg)
    print(f"N_t={n_pulses:3d}  T={30.0 / n_pulses:.3f}  best F = {report.best_fidelity:.8f}")

# The best sequence is an ordinary ControlSequence: inspect it directly.
seq = report.best_sequence
print("first pulses (axis, amplitude):", [(a, round(float(h), 3)) for a, h in zip(seq.axes()[:4], seq.amplitudes[:4])])

# The fidelity ignores the global phase: compare U with the target up to a phase.
u = evolve_sequence(seq)
w = np.kron(np.eye(4), [[0, 1], [1, 0]])
phase = np.vdot(w, u) / abs(np.vdot(w, u))
print("max |U - e^{i phi} W| =", np.max(np.abs(u - phase * w)))

# Without any control the chain just precesses under the exchange coupling.
idle = ControlSequence.zeros(ChainSpec(3), "alternating_xy", 70, 30.0 / 70)
print("idle fidelity:", round(float(abs(np.vdot(w, evolve_sequence(idle))) / 8), 6))
