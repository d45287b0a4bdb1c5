"""
Which objective terms matter
============================

Optimize the unconstrained ``drop`` scene four times: target error alone, then
with the trajectory-irregularity term, the potential-energy term, and both.
Dropping a regularizer lets its quantity grow; keeping both trades a little
target error for a smoother, less stretched motion.
"""

from clothopt import optimize, preset

base = preset("drop")
w = base.weights
variants = {
    "G": base.with_overrides(alpha=0.0, beta=0.0),
    "G+T": base.with_overrides(beta=0.0),
    "G+E": base.with_overrides(alpha=0.0),
    "G+T+E": base,
}

print(f"{'variant':8s}{'G':>10s}{'T':>10s}{'E':>12s}")
for name, scene in variants.items():
    m = optimize(scene).final
    print(f"{name:8s}{m.G:10.4f}{m.T:10.4f}{m.E:12.1f}")

# the same study from the shell, with plots:
#   clothopt ablate --scene drop --out runs/drop
