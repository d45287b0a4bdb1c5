"""Reverse-mode gradients of rollout functionals with respect to the control sequence.

The backward pass walks the tape from the last time step to the first. Within a
step it undoes every recorded projection in reverse order using the closed-form
adjoint of a single pair projection, then reads the control adjoint off the
grasped particles (control application is an additive shift). Only
vector-Jacobian products are formed, so the state-to-control Jacobian is never
materialized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TapeMismatchError
from .xpbd import Rollout

__all__ = ["GradientResult", "backward", "finite_difference_gradient"]


@dataclass
class GradientResult:
    dL_dU: np.ndarray
    loss: float = float("nan")
    dC_dU: np.ndarray | None = None


def backward(rollout: Rollout, state_adjoint, control_adjoint=None) -> np.ndarray:
    """Pull adjoints of the states (and controls) back to the control sequence.

    Parameters
    ----------
    rollout : Rollout
        Result of ``xpbd.rollout(..., record=True)``.
    state_adjoint : array, shape (T, N, 3) or (T + 1, N, 3)
        dS/dx(t) for t = 1..T. With T + 1 entries the first (the fixed initial
        state) is ignored.
    control_adjoint : array, shape (T, n_control, 3), optional
        Explicit dS/dU, added to the result.

    Returns
    -------
    ndarray, shape (T, n_control, 3)
        dS/dU.
    """
    tape = rollout.tape
    T = rollout.horizon
    if tape is None:
        raise TapeMismatchError("rollout was produced without a tape")
    if len(tape.records) != T or tape.controls.shape != rollout.controls.shape:
        raise TapeMismatchError(
            f"tape covers {len(tape.records)} steps but the rollout has {T}")
    gX = np.asarray(state_adjoint, dtype=float)
    N = rollout.states.shape[1]
    if gX.shape == (T + 1, N, 3):
        gX = gX[1:]
    if gX.shape != (T, N, 3):
        raise TapeMismatchError(f"state adjoint has shape {gX.shape}, expected {(T, N, 3)}")
    for rec in tape.records:
        if rec.shape[0] != tape.solver.tape_rows:
            raise TapeMismatchError("tape record length does not match the solver")

    idx = rollout.control_indices
    dU = np.zeros_like(rollout.controls)
    g = np.zeros((N, 3))
    for t in range(T, 0, -1):
        g += gX[t - 1]
        tape.solver.project_adjoint(g, tape.records[t - 1])
        # gravity bias and control shift are additive: identity Jacobians
        dU[t - 1] = g[idx]
    if control_adjoint is not None:
        dU += np.asarray(control_adjoint, dtype=float).reshape(dU.shape)
    return dU


def finite_difference_gradient(loss_fn, U, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function of the control array."""
    if not h > 0:
        raise ValueError("step h must be positive")
    U = np.array(U, dtype=float, copy=True)
    grad = np.zeros_like(U)
    flat, gflat = U.reshape(-1), grad.reshape(-1)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + h
        fp = loss_fn(U)
        flat[k] = orig - h
        fm = loss_fn(U)
        flat[k] = orig
        gflat[k] = (fp - fm) / (2.0 * h)
    return grad
