"""Constrained trajectory optimization over the control sequence.

The safety constraint ``C(X) >= 0`` is handled with a squared-hinge penalty
on every particle clearance,

    Phi_mu(U) = L(X(U), U) + mu * sum_{t,i} relu(delta - sdf(x_i(t)))**2

minimized by L-BFGS with a backtracking Armijo line search. ``mu`` grows
geometrically between outer rounds until ``C >= -feasibility_tol``. Squaring
each hinge separately keeps ``Phi`` continuously differentiable when a
particle crosses the threshold; the penalty is zero exactly when ``C`` is.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, asdict

import numpy as np

from . import objective as obj
from . import safety
from .diff import GradientResult, backward
from .errors import ConfigurationError, OptimizerError, SimulationDiverged
from .xpbd import rollout

__all__ = [
    "OptimizerConfig",
    "RoundRecord",
    "OptimizationReport",
    "Metrics",
    "evaluate",
    "gradients",
    "penalized",
    "lbfgs",
    "optimize",
    "initialize_controls",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimizerConfig:
    max_outer_rounds: int = 6
    max_inner_iterations: int = 200
    penalty_init: float = 10.0
    penalty_growth: float = 10.0
    feasibility_tol: float = 1e-5
    grad_tol: float = 1e-6
    history_size: int = 10
    armijo_c: float = 1e-4
    max_backtracks: int = 30
    max_step: float = 0.2  # cap on the largest single control change per iteration
    norm_smoothing: float = 1e-4  # eps of the smoothed irregularity norm while optimizing
    seed: int = 0
    init_jitter: float = 0.0

    def __post_init__(self):
        for name in ("max_outer_rounds", "max_inner_iterations", "history_size", "max_backtracks"):
            if int(getattr(self, name)) < 1:
                raise ConfigurationError(f"{name} must be a positive integer")
        for name in ("penalty_init", "feasibility_tol", "grad_tol", "max_step"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if not self.penalty_growth > 1:
            raise ConfigurationError("penalty_growth must exceed 1")
        if not 0 < self.armijo_c < 1:
            raise ConfigurationError("armijo_c must lie in (0, 1)")
        if self.init_jitter < 0:
            raise ConfigurationError("init_jitter must be nonnegative")
        if not self.norm_smoothing >= 0:
            raise ConfigurationError("norm_smoothing must be nonnegative")


@dataclass
class Metrics:
    """Objective terms and safety figures of one control sequence."""

    loss: float
    G: float
    T: float
    E: float
    C: float
    min_sdf: float

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class RoundRecord:
    round: int
    penalty: float
    phi: float
    metrics: Metrics
    inner_iterations: int
    inner_status: str
    phi_trace: list = field(default_factory=list)


@dataclass
class OptimizationReport:
    U_star: np.ndarray
    history: list
    status: str  # "feasible" | "infeasible"
    converged: bool
    final: Metrics
    config: OptimizerConfig
    U_init: np.ndarray = field(repr=False, default=None)

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"

    @property
    def phi_trace(self) -> list:
        return [v for rec in self.history for v in rec.phi_trace]


# ---------------------------------------------------------------- evaluation

def _rollout(scene, U, record=True):
    return rollout(scene.x_init, U, scene.control_points, scene.mesh, scene.sim, record=record)


def _metrics(scene, X, U) -> Metrics:
    sim = scene.sim
    G = obj.target_error(X[-1], scene.target)
    T = obj.trajectory_irregularity(U)
    E = obj.potential_energy(X, scene.mesh, sim.k_dist, sim.k_bend)
    C = safety.safety_constraint(X, scene.obstacle, scene.delta or 0.0)
    loss = G + scene.weights.alpha * T + scene.weights.beta * E
    return Metrics(loss, G, T, E, C, safety.min_sdf_over_trajectory(X, scene.obstacle))


def evaluate(scene, U) -> Metrics:
    """Simulate ``U`` and report the objective terms and safety figures."""
    U = np.asarray(U, dtype=float)
    X = _rollout(scene, U, record=False).trajectory
    return _metrics(scene, X, U)


def _loss_adjoints(scene, X, U, smoothing=0.0):
    sim, w = scene.sim, scene.weights
    gX = np.zeros_like(X)
    gX[-1] += obj.target_error_grad(X[-1], scene.target)
    gU = np.zeros_like(U)
    if w.alpha:
        gU += w.alpha * obj.trajectory_irregularity_grad(U, smoothing)
    if w.beta:
        gX += w.beta * obj.potential_energy_grad(X, scene.mesh, sim.k_dist, sim.k_bend)
    return gX, gU


def gradients(scene, U) -> GradientResult:
    """dL/dU and, for constrained scenes, dC/dU at ``U``."""
    U = np.asarray(U, dtype=float)
    ro = _rollout(scene, U)
    X = ro.trajectory
    gX, gU = _loss_adjoints(scene, X, U)
    m = _metrics(scene, X, U)
    dC = None
    if scene.obstacle is not None:
        dC = backward(ro, safety.safety_constraint_grad(X, scene.obstacle, scene.delta))
    return GradientResult(backward(ro, gX, gU), m.loss, dC)


def penalized(scene, U, mu: float, smoothing: float = 0.0):
    """``(phi, dphi/dU, metrics)`` of the squared-hinge penalized objective.

    ``smoothing > 0`` optimizes the smoothed irregularity norm (see
    ``objective.trajectory_irregularity``); ``metrics`` always reports the
    exact terms.
    """
    U = np.asarray(U, dtype=float)
    ro = _rollout(scene, U)
    X = ro.trajectory
    m = _metrics(scene, X, U)
    gX, gU = _loss_adjoints(scene, X, U, smoothing)
    violation = 0.0
    if scene.obstacle is not None and mu > 0:
        r = np.maximum(scene.delta - safety.sdf(scene.obstacle, X), 0.0)
        violation = float(np.sum(r * r))
    loss = m.loss
    if smoothing > 0 and scene.weights.alpha:
        loss += scene.weights.alpha * (obj.trajectory_irregularity(U, smoothing) - m.T)
    phi = loss + mu * violation
    if violation > 0:
        # d/dX [mu * r**2] = -2 mu r dsdf/dX for every active particle
        gX -= 2.0 * mu * r[..., None] * safety.safety_constraint_grad(X, scene.obstacle, scene.delta)
    return phi, backward(ro, gX, gU), m


# ---------------------------------------------------------------- L-BFGS

@dataclass
class _InnerResult:
    x: np.ndarray
    f: float
    g: np.ndarray
    aux: object
    iterations: int
    status: str
    trace: list


def _two_loop(g, s_hist, y_hist):
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(s_hist), reversed(y_hist)):
        rho = 1.0 / (y @ s)
        a = rho * (s @ q)
        alphas.append((a, rho))
        q -= a * y
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= (s @ y) / (y @ y)
    for (s, y), (a, rho) in zip(zip(s_hist, y_hist), reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return -q


def _line_search(fun, x, f, g, d, c1, max_backtracks, max_step):
    """Backtracking Armijo search along ``d`` from a unit step capped at ``max_step``."""
    dnorm = np.max(np.abs(d))
    step = min(1.0, max_step / dnorm)
    slope = g @ d
    for _ in range(max_backtracks + 1):
        xn = x + step * d
        try:
            fn, gn, auxn = fun(xn)
        except SimulationDiverged:
            fn = np.inf
        if np.isfinite(fn) and np.isfinite(gn).all() and fn <= f + c1 * step * slope:
            return True, xn, fn, gn, auxn
        step *= 0.5
    return False, x, f, g, None


def lbfgs(fun, x0, *, max_iter=200, grad_tol=1e-6, history=10, c1=1e-4,
          max_backtracks=30, max_step=np.inf) -> _InnerResult:
    """Minimize ``fun(x) -> (f, grad, aux)`` with limited-memory BFGS.

    Backtracking halves the step until the Armijo condition holds, so accepted
    iterates never increase ``f``. Trial points where ``fun`` raises
    ``SimulationDiverged`` or returns a non-finite value count as failed trials.
    ``max_step`` caps the infinity norm of every step.
    """
    x = np.asarray(x0, dtype=float).ravel().copy()
    try:
        f, g, aux = fun(x)
    except SimulationDiverged as exc:
        raise OptimizerError(f"objective is not finite at the starting point ({exc})", x) from None
    if not np.isfinite(f) or not np.isfinite(g).all():
        raise OptimizerError("objective is not finite at the starting point", x)
    s_hist, y_hist = [], []
    trace = [f]
    status = "max_iter"
    it = 0
    while it < max_iter:
        if np.max(np.abs(g)) <= grad_tol:
            status = "grad_tol"
            break
        d = _two_loop(g, s_hist, y_hist)
        if d @ g >= 0:
            s_hist.clear()
            y_hist.clear()
            d = -g
        accepted, xn, fn, gn, auxn = _line_search(fun, x, f, g, d, c1, max_backtracks,
                                                  max_step)
        if not accepted and s_hist:
            # stale curvature: forget it and retry along steepest descent
            s_hist.clear()
            y_hist.clear()
            accepted, xn, fn, gn, auxn = _line_search(fun, x, f, g, -g, c1, max_backtracks,
                                                      max_step)
        if not accepted:
            status = "line_search"
            break
        s, y = xn - x, gn - g
        if y @ s > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            s_hist.append(s)
            y_hist.append(y)
            if len(s_hist) > history:
                s_hist.pop(0)
                y_hist.pop(0)
        x, f, g, aux = xn, fn, gn, auxn
        trace.append(f)
        it += 1
    return _InnerResult(x, f, g, aux, it, status, trace)


# ---------------------------------------------------------------- driver

def initialize_controls(scene, strategy: str | None = None) -> np.ndarray:
    """Initial ``(T, n_control, 3)`` control sequence.

    ``zeros`` leaves the grasped points in place. ``straight-line`` moves each
    control point along a straight line to its goal in T equal displacements.
    A control point that is itself a target particle heads for its own target;
    the others are translated by the offset between the target centroid and the
    initial centroid of the target particles.
    """
    strategy = strategy or scene.init_strategy
    T, k = scene.horizon, scene.n_control
    if strategy == "zeros":
        return np.zeros((T, k, 3))
    if strategy != "straight-line":
        raise ConfigurationError(f"unknown init strategy {strategy!r}")
    x0 = scene.x_init
    tgt = scene.target
    shift = tgt.positions.mean(axis=0) - x0[tgt.indices].mean(axis=0)
    lookup = {int(i): p for i, p in zip(tgt.indices, tgt.positions)}
    goals = np.array([lookup[c] if c in lookup else x0[c] + shift for c in scene.control_points])
    step = (goals - x0[list(scene.control_points)]) / T
    return np.repeat(step[None], T, axis=0)


def optimize(scene, U_init=None, config: OptimizerConfig | None = None,
             callback=None) -> OptimizationReport:
    """Minimize the scene objective subject to its safety constraint.

    Parameters
    ----------
    scene : Scene
    U_init : array (T, n_control, 3), optional
        Defaults to ``initialize_controls(scene)``.
    config : OptimizerConfig, optional
    callback : callable, optional
        Called with each ``RoundRecord`` as it completes.

    Raises
    ------
    OptimizerError
        If the objective is non-finite at the start of a round.
    """
    config = config or OptimizerConfig()
    U0 = initialize_controls(scene) if U_init is None else np.array(U_init, dtype=float)
    shape = (scene.horizon, scene.n_control, 3)
    if U0.shape != shape:
        raise ConfigurationError(f"U_init must have shape {shape}, got {U0.shape}")
    if config.init_jitter > 0:
        rng = np.random.default_rng(config.seed)
        U0 = U0 + config.init_jitter * rng.standard_normal(shape)

    tol = config.feasibility_tol
    mu = config.penalty_init if scene.constrained else 0.0
    u = U0.ravel().copy()
    history = []
    best = None
    status, converged = "infeasible", False
    for r in range(config.max_outer_rounds if scene.constrained else 1):
        def fun(flat, mu=mu):
            U = flat.reshape(shape)
            phi, grad, m = penalized(scene, U, mu, config.norm_smoothing)
            return phi, grad.ravel(), m

        try:
            res = lbfgs(fun, u, max_iter=config.max_inner_iterations, grad_tol=config.grad_tol,
                        history=config.history_size, c1=config.armijo_c,
                        max_backtracks=config.max_backtracks, max_step=config.max_step)
        except OptimizerError as exc:
            raise OptimizerError(str(exc), u.reshape(shape)) from None
        u = res.x
        m = res.aux
        rec = RoundRecord(r, mu, res.f, m, res.iterations, res.status, res.trace)
        history.append(rec)
        log.info("round %d mu=%g phi=%.6g G=%.4g C=%.3g min_sdf=%.4g (%d its, %s)",
                 r, mu, res.f, m.G, m.C, m.min_sdf, res.iterations, res.status)
        if callback is not None:
            callback(rec)
        key = (max(-m.C, 0.0), m.loss)
        if best is None or key < best[0]:
            best = (key, u.copy(), m)
        if m.C >= -tol:
            status = "feasible"
            converged = res.status == "grad_tol"
            best = (key, u.copy(), m)
            break
        mu *= config.penalty_growth

    _, u_best, m_best = best
    return OptimizationReport(u_best.reshape(shape), history, status, converged, m_best,
                              config, U0)
