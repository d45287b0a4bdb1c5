"""Quasi-static XPBD stepping: gravity bias, control application, constraint projection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigurationError, SimulationDiverged
from .mesh import ClothMesh

__all__ = [
    "DEGENERACY_EPS",
    "SimParams",
    "Tape",
    "Rollout",
    "constraint_value",
    "project_constraint",
    "step",
    "rollout",
]

DEGENERACY_EPS = 1e-9


@dataclass(frozen=True)
class SimParams:
    gravity: tuple = (0.0, 0.0, -9.8)
    dt: float = 0.1
    iterations: int = 100
    k_dist: float = 1e4
    k_bend: float = 1e2

    def __post_init__(self):
        object.__setattr__(self, "gravity", tuple(float(g) for g in self.gravity))
        if len(self.gravity) != 3 or not all(np.isfinite(self.gravity)):
            raise ConfigurationError("gravity must be a finite 3-vector")
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if int(self.iterations) < 1 or int(self.iterations) != self.iterations:
            raise ConfigurationError(f"iterations must be a positive integer, got {self.iterations}")
        object.__setattr__(self, "iterations", int(self.iterations))
        for name in ("k_dist", "k_bend"):
            k = getattr(self, name)
            if not k >= 0:
                raise ConfigurationError(f"{name} must be nonnegative, got {k}")

    @property
    def gravity_offset(self) -> np.ndarray:
        """Per-step positional gravity bias ``0.5 * g * dt**2``."""
        return 0.5 * np.asarray(self.gravity) * self.dt**2


def compliance(k: float) -> float:
    """Quasi-static compliance 1/k; infinite stiffness maps to 0, zero stiffness to inf."""
    if k == np.inf:
        return 0.0
    if k == 0:
        return np.inf
    return 1.0 / k


def constraint_value(xi, xj, d0) -> float:
    """Distance/bending constraint ``|xi - xj| - d0``."""
    return float(np.linalg.norm(np.asarray(xi, float) - np.asarray(xj, float)) - d0)


def project_constraint(xi, xj, d0, wi, wj, k, lam=0.0, eps=DEGENERACY_EPS):
    """Single XPBD projection of one pair constraint.

    Returns ``(dxi, dxj, dlam)``. A degenerate pair (coincident points, both
    endpoints pinned, or zero stiffness) yields zero corrections.
    """
    xi = np.asarray(xi, float)
    xj = np.asarray(xj, float)
    a0, a1, a2, b0, b1, b2, dlam, _ = _kernels.project_pair(
        xi[0], xi[1], xi[2], xj[0], xj[1], xj[2], float(d0), float(wi), float(wj),
        compliance(k), float(lam), eps)
    return np.array([a0, a1, a2]), np.array([b0, b1, b2]), dlam


@dataclass(frozen=True, eq=False)
class _Solver:
    """Flattened constraint arrays in projection order for one (mesh, params) pair."""

    pairs: np.ndarray
    rest: np.ndarray
    comp: np.ndarray
    inv_mass: np.ndarray
    iterations: int

    @classmethod
    def build(cls, mesh: ClothMesh, params: SimParams) -> "_Solver":
        pairs, rest, kind, _, _ = mesh.constraint_order()
        comp = np.where(kind == 0, compliance(params.k_dist), compliance(params.k_bend))
        return cls(np.ascontiguousarray(pairs), np.ascontiguousarray(rest), comp,
                   np.ascontiguousarray(mesh.inv_mass, dtype=float), params.iterations)

    @property
    def tape_rows(self) -> int:
        return self.iterations * self.pairs.shape[0]

    def project(self, x, tape=None, mode=_kernels.MODE_PLAIN) -> int:
        if tape is None:
            tape = np.zeros((0, _kernels.TAPE_WIDTH))
        return _kernels.project_all(x, self.pairs, self.rest, self.comp, self.inv_mass,
                                    self.iterations, tape, mode, DEGENERACY_EPS)

    def project_adjoint(self, g, tape) -> None:
        _kernels.project_all_adjoint(g, self.pairs, self.rest, self.comp, self.inv_mass,
                                     self.iterations, tape, DEGENERACY_EPS)


def _check_controls(mesh: ClothMesh, control_indices) -> np.ndarray:
    idx = np.asarray(control_indices, dtype=np.int64).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= mesh.n_particles):
        raise ConfigurationError("control index out of range")
    if np.unique(idx).size != idx.size:
        raise ConfigurationError("control indices must be distinct")
    if np.any(mesh.inv_mass[idx] != 0.0):
        raise ConfigurationError("control particles must be pinned (inv_mass 0) in the mesh")
    return idx


def _pre_projection(x, u, idx, mesh, params):
    x += np.where(mesh.inv_mass[:, None] > 0, params.gravity_offset[None, :], 0.0)
    x[idx] += u


def step(state, control, control_indices, mesh: ClothMesh, params: SimParams, *, t: int = 1):
    """Advance one quasi-static time step and return the new ``(N, 3)`` positions.

    Free particles receive the gravity bias, control particles are displaced by
    ``control`` (one row per control index), then ``params.iterations``
    Gauss-Seidel rounds project distance and bending constraints.
    """
    idx = _check_controls(mesh, control_indices)
    x = np.array(state, dtype=float, copy=True)
    u = np.asarray(control, dtype=float).reshape(idx.size, 3)
    _pre_projection(x, u, idx, mesh, params)
    _Solver.build(mesh, params).project(x)
    if not np.isfinite(x).all():
        raise SimulationDiverged(t)
    return x


@dataclass(eq=False)
class Tape:
    """Projection inputs recorded for every constraint visit of every step.

    ``records[t]`` belongs to the step producing state ``t + 1``; its rows are
    ``(xi, xj, lambda)`` in execution order.
    """

    x_init: np.ndarray
    controls: np.ndarray
    control_indices: np.ndarray
    records: list = field(repr=False)
    solver: _Solver = field(repr=False)
    mesh: ClothMesh = field(repr=False)
    params: SimParams

    def replay(self) -> np.ndarray:
        """Re-execute the recorded step sequence; returns states ``(T + 1, N, 3)``.

        Every projection input is compared against its recording, so any drift
        raises ``TapeMismatchError``.
        """
        from .errors import TapeMismatchError

        x = np.array(self.x_init, dtype=float, copy=True)
        out = [x.copy()]
        for t, (u, rec) in enumerate(zip(self.controls, self.records)):
            _pre_projection(x, u, self.control_indices, self.mesh, self.params)
            bad = self.solver.project(x, rec, _kernels.MODE_VERIFY)
            if bad:
                raise TapeMismatchError(f"{bad} projection inputs differ from the tape at step {t + 1}")
            out.append(x.copy())
        return np.stack(out)


@dataclass(eq=False)
class Rollout:
    """States ``x(0) .. x(T)`` (``states[0]`` is the initial state) plus the tape."""

    states: np.ndarray
    controls: np.ndarray
    control_indices: np.ndarray
    tape: Tape | None = field(default=None, repr=False)

    @property
    def horizon(self) -> int:
        return self.controls.shape[0]

    @property
    def trajectory(self) -> np.ndarray:
        """States ``x(1) .. x(T)``."""
        return self.states[1:]


def rollout(x_init, controls, control_indices, mesh: ClothMesh, params: SimParams,
            record: bool = True) -> Rollout:
    """Chain ``step`` over a ``(T, n_control, 3)`` control sequence."""
    idx = _check_controls(mesh, control_indices)
    U = np.asarray(controls, dtype=float)
    if U.ndim != 3 or U.shape[1:] != (idx.size, 3) or U.shape[0] < 1:
        raise ConfigurationError(f"controls must have shape (T>=1, {idx.size}, 3), got {U.shape}")
    solver = _Solver.build(mesh, params)
    x = np.array(x_init, dtype=float, copy=True)
    if x.shape != (mesh.n_particles, 3):
        raise ConfigurationError(f"initial state must have shape ({mesh.n_particles}, 3)")
    states = np.empty((U.shape[0] + 1,) + x.shape)
    states[0] = x
    records = []
    for t, u in enumerate(U):
        _pre_projection(x, u, idx, mesh, params)
        if record:
            rec = np.empty((solver.tape_rows, _kernels.TAPE_WIDTH))
            solver.project(x, rec, _kernels.MODE_RECORD)
            records.append(rec)
        else:
            solver.project(x)
        if not np.isfinite(x).all():
            raise SimulationDiverged(t + 1)
        states[t + 1] = x
    tape = Tape(states[0].copy(), U.copy(), idx, records, solver, mesh, params) if record else None
    return Rollout(states, U.copy(), idx, tape)
