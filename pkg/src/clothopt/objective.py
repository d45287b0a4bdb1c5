"""Objective terms: target error, trajectory irregularity, potential energy.

Each term has a value function and a matching ``*_grad`` that returns the
adjoint with respect to its array input. Norms use the subgradient 0 at the
origin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .mesh import ClothMesh

__all__ = [
    "TargetSpec",
    "ObjectiveWeights",
    "target_error",
    "target_error_grad",
    "trajectory_irregularity",
    "trajectory_irregularity_grad",
    "constraint_residuals",
    "constraint_stiffness",
    "potential_energy",
    "potential_energy_grad",
    "total_loss",
]


@dataclass(frozen=True, eq=False)
class TargetSpec:
    indices: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        if idx.size == 0 or idx.size != pos.shape[0]:
            raise ConfigurationError("target indices and positions must be nonempty and of equal length")
        if np.unique(idx).size != idx.size or idx.min() < 0:
            raise ConfigurationError("target indices must be distinct and nonnegative")
        if not np.isfinite(pos).all():
            raise ConfigurationError("target positions must be finite")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "positions", pos)

    def __eq__(self, other):
        return (isinstance(other, TargetSpec)
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.positions, other.positions))


@dataclass(frozen=True)
class ObjectiveWeights:
    alpha: float = 1.0
    beta: float = 1e-4

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ConfigurationError(f"weight {name} must be finite and nonnegative, got {v}")


def _safe_unit(v):
    n = np.linalg.norm(v)
    return (v / n, n) if n > 0 else (np.zeros_like(v), 0.0)


def target_error(x_T, spec: TargetSpec) -> float:
    """Joint L2 norm of ``targets - x_T[indices]`` over all selected particles."""
    x_T = np.asarray(x_T, dtype=float)
    return float(np.linalg.norm(spec.positions - x_T[spec.indices]))


def target_error_grad(x_T, spec: TargetSpec) -> np.ndarray:
    x_T = np.asarray(x_T, dtype=float)
    unit, _ = _safe_unit(x_T[spec.indices] - spec.positions)
    g = np.zeros_like(x_T)
    g[spec.indices] = unit
    return g


def trajectory_irregularity(U, smoothing: float = 0.0) -> float:
    """Sum over consecutive steps of ``|u(t) - u(t-1)|`` (all control points flattened).

    With ``smoothing = eps > 0`` each norm is replaced by
    ``sqrt(|d|**2 + eps**2) - eps``, which is differentiable at ``d = 0`` and
    differs from ``|d|`` by less than ``eps``.
    """
    U = np.asarray(U, dtype=float)
    if U.shape[0] < 2:
        return 0.0
    diffs = np.diff(U.reshape(U.shape[0], -1), axis=0)
    if smoothing > 0:
        return float(np.sum(np.sqrt(np.sum(diffs * diffs, axis=1) + smoothing**2) - smoothing))
    return float(np.linalg.norm(diffs, axis=1).sum())


def trajectory_irregularity_grad(U, smoothing: float = 0.0) -> np.ndarray:
    """Gradient of ``trajectory_irregularity``; subgradient 0 at a zero difference."""
    U = np.asarray(U, dtype=float)
    flat = U.reshape(U.shape[0], -1)
    g = np.zeros_like(flat)
    if flat.shape[0] < 2:
        return g.reshape(U.shape)
    diffs = np.diff(flat, axis=0)
    if smoothing > 0:
        units = diffs / np.sqrt(np.sum(diffs * diffs, axis=1, keepdims=True) + smoothing**2)
    else:
        units = np.array([_safe_unit(d)[0] for d in diffs])
    g[1:] += units
    g[:-1] -= units
    return g.reshape(U.shape)


def constraint_residuals(x, mesh: ClothMesh) -> np.ndarray:
    """Values of all distance constraints followed by all bending constraints.

    ``x`` may be one state ``(N, 3)`` or a stack ``(T, N, 3)``.
    """
    x = np.asarray(x, dtype=float)
    pairs = np.concatenate([mesh.dist_pairs, mesh.bend_pairs])
    rest = np.concatenate([mesh.dist_rest, mesh.bend_rest])
    d = x[..., pairs[:, 0], :] - x[..., pairs[:, 1], :]
    return np.linalg.norm(d, axis=-1) - rest


def constraint_stiffness(mesh: ClothMesh, k_dist: float, k_bend: float) -> np.ndarray:
    """Per-constraint energy stiffness. Hard (infinite) constraints carry no energy."""
    K = np.concatenate([np.full(len(mesh.dist_pairs), float(k_dist)),
                        np.full(len(mesh.bend_pairs), float(k_bend))])
    K[np.isinf(K)] = 0.0
    return K


def potential_energy(X, mesh: ClothMesh, k_dist: float, k_bend: float) -> float:
    """``sum_t 0.5 * C(x_t)^T diag(K) C(x_t)`` over the states in ``X``.

    Constraints with infinite stiffness are enforced by the solver and excluded.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        X = X[None]
    C = constraint_residuals(X, mesh)
    K = constraint_stiffness(mesh, k_dist, k_bend)
    return float(0.5 * np.sum(K * C * C))


def potential_energy_grad(X, mesh: ClothMesh, k_dist: float, k_bend: float) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    squeeze = X.ndim == 2
    if squeeze:
        X = X[None]
    pairs = np.concatenate([mesh.dist_pairs, mesh.bend_pairs])
    rest = np.concatenate([mesh.dist_rest, mesh.bend_rest])
    K = constraint_stiffness(mesh, k_dist, k_bend)
    d = X[:, pairs[:, 0], :] - X[:, pairs[:, 1], :]
    length = np.linalg.norm(d, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        n = np.where(length[..., None] > 0, d / length[..., None], 0.0)
    f = (K * (length - rest))[..., None] * n
    g = np.zeros_like(X)
    for t in range(X.shape[0]):
        np.add.at(g[t], pairs[:, 0], f[t])
        np.add.at(g[t], pairs[:, 1], -f[t])
    return g[0] if squeeze else g


def total_loss(X, U, mesh: ClothMesh, spec: TargetSpec, weights: ObjectiveWeights,
               k_dist: float, k_bend: float) -> float:
    """``G + alpha * T + beta * E`` for trajectory ``X = x(1) .. x(T)``."""
    X = np.asarray(X, dtype=float)
    G = target_error(X[-1], spec)
    return (G + weights.alpha * trajectory_irregularity(U)
            + weights.beta * potential_energy(X, mesh, k_dist, k_bend))
