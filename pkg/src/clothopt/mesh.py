"""Grid cloth topology: particles, triangles, constraint pairs and their coloring."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError

__all__ = ["ClothMesh", "build_grid", "make_mesh", "color_constraints", "axis_vector"]

_AXES = {"x": 0, "y": 1, "z": 2}


def axis_vector(name: str) -> np.ndarray:
    """Unit vector for an axis label such as ``"x"`` or ``"-z"``."""
    sign = 1.0
    label = name.strip().lower()
    if label.startswith(("-", "+")):
        sign = -1.0 if label[0] == "-" else 1.0
        label = label[1:]
    if label not in _AXES:
        raise ConfigurationError(f"unknown axis label {name!r}")
    v = np.zeros(3)
    v[_AXES[label]] = sign
    return v


@dataclass(frozen=True, eq=False)
class ClothMesh:
    n_rows: int
    n_cols: int
    spacing: float
    positions0: np.ndarray
    triangles: np.ndarray
    dist_pairs: np.ndarray  # (m, 2) int
    dist_rest: np.ndarray  # (m,)
    bend_pairs: np.ndarray
    bend_rest: np.ndarray
    dist_colors: tuple = field(repr=False)
    bend_colors: tuple = field(repr=False)
    inv_mass: np.ndarray = field(repr=False)

    @property
    def n_particles(self) -> int:
        return self.n_rows * self.n_cols

    @property
    def pinned(self) -> np.ndarray:
        return np.flatnonzero(self.inv_mass == 0.0)

    def index(self, row: int, col: int) -> int:
        return row * self.n_cols + col

    def corners(self) -> tuple[int, int, int, int]:
        """Indices of (row0,col0), (row0,last col), (last row,col0), (last row,last col)."""
        r, c = self.n_rows - 1, self.n_cols - 1
        return (self.index(0, 0), self.index(0, c), self.index(r, 0), self.index(r, c))

    def with_pinned(self, indices) -> "ClothMesh":
        """Copy of the mesh with ``indices`` given zero inverse mass."""
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_particles):
            raise ConfigurationError("pinned index out of range")
        w = np.ones(self.n_particles)
        w[idx] = 0.0
        w.setflags(write=False)
        return replace(self, inv_mass=w)

    def constraint_order(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Flatten the colored constraint sets into the Gauss-Seidel projection order.

        Returns ``(pairs, rest, kind, set_bounds, source)`` where ``kind`` is 0 for
        distance and 1 for bending constraints, ``set_bounds`` holds the start offset
        of every color set (plus the total), and ``source`` maps each ordered entry
        back to its position in ``dist_pairs`` (kind 0) or ``bend_pairs`` (kind 1).
        """
        pairs, rest, kind, bounds, source = [], [], [], [0], []
        for k, (colors, p, d0) in enumerate(
            ((self.dist_colors, self.dist_pairs, self.dist_rest),
             (self.bend_colors, self.bend_pairs, self.bend_rest))
        ):
            for members in colors:
                members = np.asarray(members, dtype=np.int64)
                pairs.append(p[members])
                rest.append(d0[members])
                kind.append(np.full(members.size, k, dtype=np.int64))
                source.append(members)
                bounds.append(bounds[-1] + members.size)
        if not pairs:
            return (np.zeros((0, 2), np.int64), np.zeros(0), np.zeros(0, np.int64),
                    np.zeros(1, np.int64), np.zeros(0, np.int64))
        return (np.concatenate(pairs), np.concatenate(rest), np.concatenate(kind),
                np.asarray(bounds, dtype=np.int64), np.concatenate(source))


def color_constraints(pairs) -> list[list[int]]:
    """Greedy sequential coloring of constraints into particle-disjoint sets.

    Each constraint goes to the lowest-numbered set that has no constraint touching
    either of its particles. Returns a list of sets, each a list of indices into
    ``pairs`` in construction order.
    """
    pairs = np.asarray(pairs)
    if pairs.ndim != 2 or pairs.shape[0] == 0:
        raise ConfigurationError("color_constraints needs a nonempty list of pairs")
    sets: list[list[int]] = []
    used: list[set[int]] = []
    for k, row in enumerate(pairs):
        i, j = int(row[0]), int(row[1])
        for members, touched in zip(sets, used):
            if i not in touched and j not in touched:
                members.append(k)
                touched.update((i, j))
                break
        else:
            sets.append([k])
            used.append({i, j})
    return sets


def build_grid(n_rows: int, n_cols: int, spacing: float, origin=(0.0, 0.0, 0.0),
               orientation=("x", "y"), pinned=()) -> ClothMesh:
    """Build a regular triangulated grid cloth.

    Parameters
    ----------
    n_rows, n_cols : int
        Grid dimensions, both at least 2.
    spacing : float
        Edge length between neighboring grid particles.
    origin : 3-vector
        Position of particle (row 0, col 0).
    orientation : pair of axis labels
        Directions of increasing column and increasing row, e.g. ``("x", "-z")``
        for a vertical sheet whose row 0 is on top.
    pinned : iterable of int
        Particles given zero inverse mass (the grasped control points).

    Every cell ``(r, c)`` is split along the diagonal ``(r, c)-(r+1, c+1)``.
    """
    if int(n_rows) < 2 or int(n_cols) < 2:
        raise ConfigurationError(f"grid must be at least 2x2, got {n_rows}x{n_cols}")
    if not np.isfinite(spacing) or spacing <= 0:
        raise ConfigurationError(f"spacing must be positive, got {spacing}")
    n_rows, n_cols = int(n_rows), int(n_cols)
    col_dir = axis_vector(orientation[0])
    row_dir = axis_vector(orientation[1])
    if abs(col_dir @ row_dir) > 0:
        raise ConfigurationError(f"orientation axes must differ: {orientation}")

    rr, cc = np.meshgrid(np.arange(n_rows), np.arange(n_cols), indexing="ij")
    positions0 = (np.asarray(origin, dtype=float)[None, :]
                  + spacing * cc.reshape(-1, 1) * col_dir
                  + spacing * rr.reshape(-1, 1) * row_dir)

    def idx(r, c):
        return r * n_cols + c

    triangles = []
    for r in range(n_rows - 1):
        for c in range(n_cols - 1):
            a, b, d, e = idx(r, c), idx(r, c + 1), idx(r + 1, c + 1), idx(r + 1, c)
            triangles.append((a, b, d))
            triangles.append((a, d, e))
    triangles = np.asarray(triangles, dtype=np.int64)

    # edge -> opposite vertices of incident triangles, in first-seen order
    edges: dict[tuple[int, int], list[int]] = {}
    for tri in triangles:
        for k in range(3):
            i, j, opp = int(tri[k]), int(tri[(k + 1) % 3]), int(tri[(k + 2) % 3])
            edges.setdefault((min(i, j), max(i, j)), []).append(opp)

    dist_pairs = np.asarray(list(edges.keys()), dtype=np.int64)
    bend_pairs = np.asarray(
        [(min(o), max(o)) for o in edges.values() if len(o) == 2], dtype=np.int64
    ).reshape(-1, 2)

    def rest(p):
        return np.linalg.norm(positions0[p[:, 0]] - positions0[p[:, 1]], axis=1)

    dist_colors = tuple(tuple(s) for s in color_constraints(dist_pairs))
    bend_colors = tuple(tuple(s) for s in color_constraints(bend_pairs)) if len(bend_pairs) else ()

    arrays = [positions0, triangles, dist_pairs, bend_pairs]
    dist_rest, bend_rest = rest(dist_pairs), rest(bend_pairs)
    for a in arrays + [dist_rest, bend_rest]:
        a.setflags(write=False)
    mesh = ClothMesh(n_rows, n_cols, float(spacing), positions0, triangles,
                     dist_pairs, dist_rest, bend_pairs, bend_rest,
                     dist_colors, bend_colors, np.ones(n_rows * n_cols))
    return mesh.with_pinned(pinned)


def make_mesh(positions, dist_pairs=(), bend_pairs=(), pinned=(), triangles=()) -> ClothMesh:
    """Mesh from explicit particles and constraint pairs (small test systems).

    The result reports ``n_rows = N`` and ``n_cols = 1``; rest lengths come from
    ``positions``.
    """
    positions0 = np.array(positions, dtype=float).reshape(-1, 3)
    n = positions0.shape[0]
    if n < 1:
        raise ConfigurationError("mesh needs at least one particle")

    def prep(p):
        p = np.asarray(p, dtype=np.int64).reshape(-1, 2)
        if p.size and (p.min() < 0 or p.max() >= n or np.any(p[:, 0] == p[:, 1])):
            raise ConfigurationError("constraint pair indices must be valid and distinct")
        d0 = np.linalg.norm(positions0[p[:, 0]] - positions0[p[:, 1]], axis=1)
        colors = tuple(tuple(s) for s in color_constraints(p)) if len(p) else ()
        p.setflags(write=False)
        d0.setflags(write=False)
        return p, d0, colors

    dp, dd, dc = prep(dist_pairs)
    bp, bd, bc = prep(bend_pairs)
    tris = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    positions0.setflags(write=False)
    mesh = ClothMesh(n, 1, 0.0, positions0, tris, dp, dd, bp, bd, dc, bc, np.ones(n))
    return mesh.with_pinned(pinned)
