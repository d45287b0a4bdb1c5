"""Sphere-union signed distance and the hinge obstacle-avoidance constraint."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "SphereObstacle",
    "sdf",
    "sdf_grad",
    "safety_constraint",
    "safety_constraint_grad",
    "min_sdf_over_trajectory",
    "clearance_per_step",
    "build_u_shape",
]


@dataclass(frozen=True, eq=False)
class SphereObstacle:
    centers: np.ndarray  # (S, 3)
    radii: np.ndarray  # (S,)

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float).reshape(-1, 3)
        r = np.asarray(self.radii, dtype=float).reshape(-1)
        if c.shape[0] == 0 or c.shape[0] != r.shape[0]:
            raise ConfigurationError("obstacle needs a nonempty list of spheres with one radius each")
        if not (np.isfinite(c).all() and np.isfinite(r).all()) or np.any(r <= 0):
            raise ConfigurationError("sphere centers must be finite and radii positive")
        c.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "radii", r)

    @classmethod
    def from_spheres(cls, spheres) -> "SphereObstacle":
        """From ``[(center, radius), ...]``."""
        spheres = list(spheres)
        if not spheres:
            raise ConfigurationError("obstacle needs at least one sphere")
        return cls(np.array([s[0] for s in spheres], dtype=float),
                   np.array([s[1] for s in spheres], dtype=float))

    def __len__(self):
        return self.radii.shape[0]

    def __eq__(self, other):
        return (isinstance(other, SphereObstacle)
                and np.array_equal(self.centers, other.centers)
                and np.array_equal(self.radii, other.radii))


def _sphere_distances(obstacle: SphereObstacle, x):
    x = np.asarray(x, dtype=float)
    diff = x[..., None, :] - obstacle.centers
    dist = np.linalg.norm(diff, axis=-1)
    return diff, dist, dist - obstacle.radii


def sdf(obstacle: SphereObstacle, x):
    """Signed distance ``min_s |x - c_s| - r_s``; accepts any ``(..., 3)`` input."""
    _, _, per_sphere = _sphere_distances(obstacle, x)
    out = per_sphere.min(axis=-1)
    return float(out) if out.ndim == 0 else out


def sdf_grad(obstacle: SphereObstacle, x) -> np.ndarray:
    """Gradient of ``sdf`` at each point; ties resolve to the lowest-index sphere."""
    diff, dist, per_sphere = _sphere_distances(obstacle, x)
    k = np.argmin(per_sphere, axis=-1)
    d = np.take_along_axis(diff, k[..., None, None], axis=-2)[..., 0, :]
    n = np.take_along_axis(dist, k[..., None], axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(n > 0, d / n, 0.0)


def safety_constraint(X, obstacle: SphereObstacle | None, delta: float) -> float:
    """``sum_{t,i} -relu(delta - sdf(x_i(t)))``; zero iff every clearance is at least delta."""
    if obstacle is None:
        return 0.0
    d = sdf(obstacle, np.asarray(X, dtype=float))
    total = float(np.sum(np.maximum(delta - d, 0.0)))
    return -total if total > 0 else 0.0


def safety_constraint_grad(X, obstacle: SphereObstacle | None, delta: float) -> np.ndarray:
    """dC/dX. Particles exactly at the threshold get subgradient 0."""
    X = np.asarray(X, dtype=float)
    if obstacle is None:
        return np.zeros_like(X)
    d = sdf(obstacle, X)
    active = (np.asarray(d) < delta)[..., None]
    return np.where(active, sdf_grad(obstacle, X), 0.0)


def min_sdf_over_trajectory(X, obstacle: SphereObstacle | None) -> float:
    """Smallest signed distance over every particle of every state in ``X``."""
    if obstacle is None:
        return float("inf")
    return float(np.min(sdf(obstacle, np.asarray(X, dtype=float))))


def clearance_per_step(X, obstacle: SphereObstacle | None) -> np.ndarray:
    """Minimum signed distance of each state in ``X`` (shape ``(T,)``)."""
    X = np.asarray(X, dtype=float)
    if obstacle is None:
        return np.full(X.shape[0], np.inf)
    return np.asarray(sdf(obstacle, X)).reshape(X.shape[0], -1).min(axis=1)


def build_u_shape(dimensions, sphere_count: int = 18, origin=(0.0, 0.0, 0.0),
                  overlap: float = 1.1) -> SphereObstacle:
    """Sphere approximation of an upright U (two arms joined by a base).

    ``dimensions`` is ``(depth, height, width)``: wall thickness along y, arm
    height along z and outer width along x. ``origin`` is the bottom center of
    the U. One third of the spheres go on the base, spanning its full width,
    and one third on each arm, stacked up to the top. All spheres share one
    radius, at least half the depth and large enough that neighbours overlap by
    the factor ``overlap``.
    """
    depth, height, width = (float(v) for v in dimensions)
    if min(depth, height, width) <= 0:
        raise ConfigurationError("U-shape dimensions must be positive")
    if sphere_count < 3 or sphere_count % 3:
        raise ConfigurationError("sphere_count must be a positive multiple of 3")
    if width <= depth or height <= depth:
        raise ConfigurationError("U-shape must be wider and taller than its wall depth")
    k = sphere_count // 3
    inset = depth / 2
    left, right = -width / 2 + inset, width / 2 - inset
    if k == 1:
        base_x = np.array([0.0])
    else:
        base_x = np.linspace(left, right, k)
    base = np.column_stack([base_x, np.zeros(k), np.full(k, inset)])
    arm_z = inset + (height - 2 * inset) * np.arange(1, k + 1) / k
    arm_l = np.column_stack([np.full(k, left), np.zeros(k), arm_z])
    arm_r = np.column_stack([np.full(k, right), np.zeros(k), arm_z])
    centers = np.concatenate([arm_l[::-1], base, arm_r]) + np.asarray(origin, float)
    gaps = np.linalg.norm(np.diff(centers, axis=0), axis=1)
    radius = max(inset, 0.5 * overlap * gaps.max())
    return SphereObstacle(centers, np.full(sphere_count, radius))
