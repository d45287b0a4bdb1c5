"""Compiled inner loops for constraint projection and its adjoint.

Constraints are visited in the flattened Gauss-Seidel order produced by
``ClothMesh.constraint_order``. Constraints inside one color set touch disjoint
particles, so visiting them one after another gives exactly the result of
projecting the whole set simultaneously from a shared snapshot.

Tape rows hold the projection inputs ``(xi, xj, lambda)`` for every constraint
visit of every iteration, in execution order.
"""

import numpy as np
from numba import njit

TAPE_WIDTH = 7

MODE_PLAIN = 0
MODE_RECORD = 1
MODE_VERIFY = 2


@njit(cache=True)
def project_pair(xi0, xi1, xi2, xj0, xj1, xj2, d0, wi, wj, comp, lam, eps):
    """One XPBD distance projection. Returns (dxi, dxj, dlam, skipped)."""
    d0_ = xi0 - xj0
    d1_ = xi1 - xj1
    d2_ = xi2 - xj2
    length = np.sqrt(d0_ * d0_ + d1_ * d1_ + d2_ * d2_)
    denom = wi + wj + comp
    if length < eps or denom <= 0.0 or not np.isfinite(comp):
        return 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, True
    n0 = d0_ / length
    n1 = d1_ / length
    n2 = d2_ / length
    c = length - d0
    dlam = (-c - comp * lam) / denom
    a = wi * dlam
    b = -wj * dlam
    return a * n0, a * n1, a * n2, b * n0, b * n1, b * n2, dlam, False


@njit(cache=True)
def project_all(x, pairs, rest, comp, w, iterations, tape, mode, eps):
    """Run ``iterations`` Gauss-Seidel rounds over all constraints, in place.

    ``mode`` selects plain solving, recording inputs into ``tape``, or checking
    that the current inputs equal the recorded ones. Returns the number of
    mismatching rows in verify mode (0 otherwise).
    """
    m = pairs.shape[0]
    lam = np.zeros(m)
    mismatches = 0
    row = 0
    for _ in range(iterations):
        for k in range(m):
            i = pairs[k, 0]
            j = pairs[k, 1]
            if mode == MODE_RECORD:
                tape[row, 0] = x[i, 0]
                tape[row, 1] = x[i, 1]
                tape[row, 2] = x[i, 2]
                tape[row, 3] = x[j, 0]
                tape[row, 4] = x[j, 1]
                tape[row, 5] = x[j, 2]
                tape[row, 6] = lam[k]
            elif mode == MODE_VERIFY:
                if (tape[row, 0] != x[i, 0] or tape[row, 1] != x[i, 1]
                        or tape[row, 2] != x[i, 2] or tape[row, 3] != x[j, 0]
                        or tape[row, 4] != x[j, 1] or tape[row, 5] != x[j, 2]
                        or tape[row, 6] != lam[k]):
                    mismatches += 1
            row += 1
            a0, a1, a2, b0, b1, b2, dlam, skipped = project_pair(
                x[i, 0], x[i, 1], x[i, 2], x[j, 0], x[j, 1], x[j, 2],
                rest[k], w[i], w[j], comp[k], lam[k], eps)
            if skipped:
                continue
            x[i, 0] += a0
            x[i, 1] += a1
            x[i, 2] += a2
            x[j, 0] += b0
            x[j, 1] += b1
            x[j, 2] += b2
            lam[k] += dlam
    return mismatches


@njit(cache=True)
def project_all_adjoint(g, pairs, rest, comp, w, iterations, tape, eps):
    """Reverse sweep of ``project_all``; maps dOut/dx_after to dOut/dx_before in place."""
    m = pairs.shape[0]
    glam = np.zeros(m)
    row = iterations * m - 1
    for _ in range(iterations):
        for k in range(m - 1, -1, -1):
            i = pairs[k, 0]
            j = pairs[k, 1]
            xi0 = tape[row, 0]
            xi1 = tape[row, 1]
            xi2 = tape[row, 2]
            xj0 = tape[row, 3]
            xj1 = tape[row, 4]
            xj2 = tape[row, 5]
            lam = tape[row, 6]
            row -= 1
            wi = w[i]
            wj = w[j]
            alpha = comp[k]
            denom = wi + wj + alpha
            d0_ = xi0 - xj0
            d1_ = xi1 - xj1
            d2_ = xi2 - xj2
            length = np.sqrt(d0_ * d0_ + d1_ * d1_ + d2_ * d2_)
            if length < eps or denom <= 0.0 or not np.isfinite(alpha):
                continue
            n0 = d0_ / length
            n1 = d1_ / length
            n2 = d2_ / length
            c = length - rest[k]
            dlam = (-c - alpha * lam) / denom

            # xi' = xi + wi*dlam*n, xj' = xj - wj*dlam*n, lam' = lam + dlam
            s0 = wi * g[i, 0] - wj * g[j, 0]
            s1 = wi * g[i, 1] - wj * g[j, 1]
            s2 = wi * g[i, 2] - wj * g[j, 2]
            gdlam = glam[k] + s0 * n0 + s1 * n1 + s2 * n2
            gn0 = dlam * s0
            gn1 = dlam * s1
            gn2 = dlam * s2
            glam[k] = glam[k] - gdlam * alpha / denom
            gc = -gdlam / denom
            # n = d/|d|  ->  dn/dd = (I - n n^T)/|d|;  c = |d| - d0  ->  dc/dd = n
            gnn = gn0 * n0 + gn1 * n1 + gn2 * n2
            gd0 = gc * n0 + (gn0 - gnn * n0) / length
            gd1 = gc * n1 + (gn1 - gnn * n1) / length
            gd2 = gc * n2 + (gn2 - gnn * n2) / length
            g[i, 0] += gd0
            g[i, 1] += gd1
            g[i, 2] += gd2
            g[j, 0] -= gd0
            g[j, 1] -= gd1
            g[j, 2] -= gd2
