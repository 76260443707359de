"""Dimension of the dynamical Lie algebra for x/y and x-only control."""
from chaincontrol import ChainSpec, full_controllability_check

# With x and y fields on the first spin the algebra fills su(2^N): every
# unitary (up to phase) is reachable.
for n in (1, 2, 3):
    v = full_controllability_check(ChainSpec(n), "xy")
    print(f"N_s={n} xy: dim={v.dimension:3d} -> {v.algebra}")

# An x field alone leaves a conserved quantity (total S_x commutes with the
# drift and the control), so the algebra is a proper subalgebra.
for n in (2, 3):
    v = full_controllability_check(ChainSpec(n), "x")
    print(f"N_s={n} x : dim={v.dimension:3d} -> {v.algebra}")
