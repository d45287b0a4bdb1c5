import numpy as np
import pytest

from clothopt.errors import ConfigurationError, OptimizerError
from clothopt.objective import ObjectiveWeights, TargetSpec
from clothopt.optimize import (OptimizerConfig, evaluate, initialize_controls, lbfgs,
                               optimize, penalized)
from clothopt.diff import finite_difference_gradient
from clothopt.safety import SphereObstacle, sdf
from clothopt.xpbd import rollout
from clothopt.scene import MeshSpec, Scene
from clothopt.xpbd import SimParams

FAST_SIM = SimParams(iterations=15, k_dist=1e3, k_bend=10.0)


def small_scene(target_shift=(0.0, 0.6, 0.0), obstacle=None, delta=None, horizon=4,
                weights=ObjectiveWeights(1.0, 1e-4)):
    spec = MeshSpec(3, 3, 0.2, (0.0, 0.0, 1.0), ("x", "-z"))
    x0 = spec.build().positions0
    idx = [6, 7, 8]
    return Scene(spec, (0, 2), horizon, FAST_SIM,
                 TargetSpec(idx, x0[idx] + np.asarray(target_shift)),
                 obstacle=obstacle, delta=delta, weights=weights)


class TestLbfgs:
    def test_quadratic_bowl(self, rng):
        u0 = rng.normal(size=12)
        start = rng.normal(size=12) * 3

        def fun(u):
            r = u - u0
            return float(r @ r), 2 * r, None

        res = lbfgs(fun, start, grad_tol=1e-8)
        assert res.status == "grad_tol"
        assert np.max(np.abs(res.x - u0)) < 1e-8

    def test_monotone_trace(self, rng):
        A = rng.normal(size=(6, 6))
        A = A @ A.T + np.eye(6)

        def fun(u):
            return float(0.5 * u @ A @ u + np.sum(np.cos(u))), A @ u - np.sin(u), None

        res = lbfgs(fun, rng.normal(size=6))
        assert np.all(np.diff(res.trace) <= 0)

    def test_step_cap(self):
        seen = []

        def fun(u):
            seen.append(u.copy())
            return float(u @ u), 2 * u, None

        lbfgs(fun, np.full(3, 10.0), max_iter=3, max_step=0.05)
        steps = np.diff(np.array(seen), axis=0)
        assert np.max(np.abs(steps)) <= 0.05 + 1e-12

    def test_non_finite_start(self):
        with pytest.raises(OptimizerError) as info:
            lbfgs(lambda u: (np.nan, u, None), np.ones(2))
        assert np.array_equal(info.value.last_iterate, np.ones(2))


class TestInitialization:
    def test_zeros(self):
        scene = small_scene(horizon=10)
        assert np.array_equal(initialize_controls(scene, "zeros"), np.zeros((10, 2, 3)))

    def test_straight_line_goal_equals_start(self):
        scene = small_scene(target_shift=(0, 0, 0))
        assert np.allclose(initialize_controls(scene, "straight-line"), 0, atol=1e-15)

    def test_straight_line_equal_division(self):
        scene = small_scene(target_shift=(1.0, 0, 0), horizon=10)
        U = initialize_controls(scene, "straight-line")
        assert np.allclose(U, np.broadcast_to([0.1, 0, 0], (10, 2, 3)), atol=1e-15)

    def test_control_in_target_heads_for_own_goal(self):
        spec = MeshSpec(2, 2, 1.0)
        scene = Scene(spec, (0, 1), 2, FAST_SIM, TargetSpec([0, 3], [[0, 0, 2.0], [5, 5, 5.0]]))
        U = initialize_controls(scene, "straight-line")
        assert np.allclose(U[:, 0], [0, 0, 1.0])

    def test_unknown_strategy(self):
        with pytest.raises(ConfigurationError):
            initialize_controls(small_scene(), "random")


class TestPenalized:
    def test_penalty_zero_when_feasible(self):
        far = SphereObstacle([[10.0, 10.0, 10.0]], [0.5])
        scene = small_scene(obstacle=far, delta=0.1)
        U = initialize_controls(scene)
        phi, _, m = penalized(scene, U, 1e6)
        assert m.C == 0 and phi == pytest.approx(m.loss)

    def test_penalty_added_when_violating(self):
        blocker = SphereObstacle([[0.2, 0.3, 0.6]], [0.15])
        scene = small_scene(obstacle=blocker, delta=0.2)
        U = initialize_controls(scene)
        phi, _, m = penalized(scene, U, 10.0)
        assert m.C < 0
        X = rollout(scene.x_init, U, scene.control_points, scene.mesh, scene.sim).trajectory
        r = np.maximum(0.2 - sdf(blocker, X), 0.0)
        assert phi == pytest.approx(m.loss + 10.0 * np.sum(r * r), rel=1e-12)

    def test_penalty_gradient_matches_finite_differences(self):
        blocker = SphereObstacle([[0.2, 0.3, 0.6]], [0.15])
        scene = small_scene(obstacle=blocker, delta=0.2)
        U = initialize_controls(scene) + 0.01
        _, g, _ = penalized(scene, U, 100.0, 1e-4)
        fd = finite_difference_gradient(lambda V: penalized(scene, V, 100.0, 1e-4)[0], U, 1e-6)
        assert np.max(np.abs(g - fd)) <= 1e-4 * np.max(np.abs(fd))


class TestOptimize:
    def test_unconstrained_reduces_loss(self):
        scene = small_scene()
        U0 = initialize_controls(scene, "zeros")
        rep = optimize(scene, U0, OptimizerConfig(max_inner_iterations=60))
        assert rep.status == "feasible"
        assert len(rep.history) == 1 and rep.history[0].penalty == 0
        assert rep.final.loss < 0.5 * evaluate(scene, U0).loss
        assert rep.U_star.shape == (4, 2, 3)

    def test_target_only_variant_reaches_target(self):
        scene = small_scene(weights=ObjectiveWeights(0.0, 0.0))
        rep = optimize(scene, config=OptimizerConfig(max_inner_iterations=100))
        assert rep.final.loss == rep.final.G
        assert rep.final.G < 0.05

    def test_constrained_ends_feasible(self):
        blocker = SphereObstacle([[0.2, 0.3, 0.6]], [0.15])
        scene = small_scene(obstacle=blocker, delta=0.1)
        rep = optimize(scene, config=OptimizerConfig(max_inner_iterations=80))
        assert rep.status == "feasible"
        assert abs(rep.final.C) <= 1e-5
        assert rep.final.min_sdf >= 0.1 - 1e-5
        penalties = [r.penalty for r in rep.history]
        assert penalties == [10.0 * 10.0**k for k in range(len(penalties))]

    def test_enclosed_target_is_infeasible(self):
        # the target row sits at the center of a sphere much larger than delta allows
        scene = small_scene(target_shift=(0, 0.6, 0),
                            obstacle=SphereObstacle([[0.2, 0.6, 0.6]], [0.4]), delta=0.2)
        rep = optimize(scene, config=OptimizerConfig(max_outer_rounds=1, max_inner_iterations=40))
        assert rep.status == "infeasible" and not rep.feasible
        assert rep.final.C < -1e-5

    def test_deterministic(self):
        scene = small_scene()
        cfg = OptimizerConfig(max_inner_iterations=20)
        a, b = optimize(scene, config=cfg), optimize(scene, config=cfg)
        assert np.array_equal(a.U_star, b.U_star)

    def test_seeded_jitter(self):
        scene = small_scene()
        cfg = OptimizerConfig(max_inner_iterations=5, init_jitter=0.01, seed=3)
        a, b = optimize(scene, config=cfg), optimize(scene, config=cfg)
        assert np.array_equal(a.U_init, b.U_init)
        assert not np.array_equal(a.U_init, initialize_controls(scene))

    def test_callback_sees_every_round(self):
        rounds = []
        optimize(small_scene(), config=OptimizerConfig(max_inner_iterations=5), callback=rounds.append)
        assert [r.round for r in rounds] == [0]

    def test_bad_initial_shape(self):
        with pytest.raises(ConfigurationError):
            optimize(small_scene(), np.zeros((3, 2, 3)))

    def test_non_finite_start_reports_iterate(self):
        U = np.full((4, 2, 3), np.nan)
        with pytest.raises(OptimizerError) as info:
            optimize(small_scene(), U)
        assert info.value.last_iterate.shape == (4, 2, 3)

    @pytest.mark.parametrize("field,value", [("max_outer_rounds", 0), ("penalty_growth", 1.0),
                                             ("armijo_c", 1.5), ("max_step", 0.0)])
    def test_config_validation(self, field, value):
        with pytest.raises(ConfigurationError):
            OptimizerConfig(**{field: value})
