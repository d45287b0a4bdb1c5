"""Shared builders for small randomized scenes."""

import numpy as np

from clothopt.objective import ObjectiveWeights, TargetSpec
from clothopt.optimize import evaluate, gradients
from clothopt.diff import finite_difference_gradient
from clothopt.safety import SphereObstacle
from clothopt.scene import MeshSpec, Scene
from clothopt.xpbd import SimParams


def random_scene(seed, max_side=5, max_horizon=4, max_iterations=20, obstacle=False):
    """Small random scene in the smooth regime (finite stiffness)."""
    rng = np.random.default_rng(seed)
    rows, cols = (int(v) for v in rng.integers(2, max_side + 1, size=2))
    n = rows * cols
    controls = tuple(int(i) for i in rng.choice(n, size=int(rng.integers(1, 3)), replace=False))
    free = [i for i in range(n) if i not in controls]
    tgt = rng.choice(free, size=min(len(free), int(rng.integers(1, 4))), replace=False)
    spec = MeshSpec(rows, cols, float(rng.uniform(0.2, 0.5)), (0.0, 0.0, 0.0), ("x", "-z"))
    x0 = spec.build().positions0
    target = TargetSpec(tgt.tolist(), (x0[tgt] + rng.normal(scale=0.3, size=(len(tgt), 3))).tolist())
    sim = SimParams(gravity=(0.0, 0.0, -9.8), dt=0.1,
                    iterations=int(rng.integers(3, max_iterations + 1)),
                    k_dist=float(10 ** rng.uniform(2, 4)), k_bend=float(10 ** rng.uniform(0, 2)))
    obs, delta = None, None
    if obstacle:
        c = x0.mean(axis=0) + np.array([0.0, 0.6, 0.0])
        obs = SphereObstacle([c], [0.3])
        delta = 0.5
    return Scene(spec, controls, int(rng.integers(1, max_horizon + 1)), sim, target,
                 obstacle=obs, delta=delta,
                 weights=ObjectiveWeights(float(rng.uniform(0.1, 1.0)), float(10 ** rng.uniform(-4, -2))))


def random_controls(scene, seed, scale=0.05):
    rng = np.random.default_rng(seed + 10_000)
    return rng.normal(scale=scale, size=(scene.horizon, scene.n_control, 3))


def gradient_relative_error(scene, U, h=1e-5, floor=1e-8):
    """Max per-coordinate relative error of dL/dU against central differences.

    Coordinates whose finite-difference value is below ``floor`` are excluded.
    """
    g = gradients(scene, U).dL_dU
    fd = finite_difference_gradient(lambda V: evaluate(scene, V).loss, U, h)
    stable = np.abs(fd) >= floor
    if not stable.any():
        return 0.0, g, fd
    return float(np.max(np.abs(g[stable] - fd[stable]) / np.abs(fd[stable]))), g, fd
