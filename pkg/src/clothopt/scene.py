"""Task definitions: JSON scene documents and the built-in presets.

A scene document is a single JSON object with these top-level keys::

    name          optional label
    mesh          {rows, cols, spacing, origin, orientation}
    control_points  [particle index, ...]
    horizon       number of control steps T
    sim           {gravity, dt, iterations, k_dist, k_bend}
    target        {indices: [...], positions: [[x, y, z], ...]}
    obstacle      {spheres: [{center, radius}, ...]} or null
    delta         clearance threshold (required with an obstacle)
    weights       {alpha, beta}
    init          {strategy: "straight-line" | "zeros"}
    target_tolerance  optional success threshold on the final target error

Unknown keys are rejected at every level. Particle indices are row-major grid
indices (``row * cols + col``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, SceneFileError
from .mesh import ClothMesh, build_grid
from .objective import ObjectiveWeights, TargetSpec
from .safety import SphereObstacle, build_u_shape
from .xpbd import SimParams

__all__ = [
    "MeshSpec",
    "Scene",
    "load_scene",
    "parse_scene",
    "scene_to_dict",
    "save_scene",
    "preset",
    "PRESETS",
    "resolve_scene",
]

INIT_STRATEGIES = ("straight-line", "zeros")
PRESETS = ("ushape", "swing", "drop")


@dataclass(frozen=True)
class MeshSpec:
    rows: int = 10
    cols: int = 10
    spacing: float = 1.0
    origin: tuple = (0.0, 0.0, 0.0)
    orientation: tuple = ("x", "y")

    def __post_init__(self):
        self.build()  # same validation as the mesh itself

    def build(self, pinned=()) -> ClothMesh:
        return build_grid(self.rows, self.cols, self.spacing, self.origin,
                          self.orientation, pinned=pinned)


@dataclass(frozen=True)
class Scene:
    mesh_spec: MeshSpec
    control_points: tuple
    horizon: int
    sim: SimParams
    target: TargetSpec
    obstacle: SphereObstacle | None = None
    delta: float | None = None
    weights: ObjectiveWeights = field(default_factory=ObjectiveWeights)
    init_strategy: str = "straight-line"
    name: str = ""
    target_tolerance: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "control_points", tuple(int(i) for i in self.control_points))
        n = self.mesh_spec.rows * self.mesh_spec.cols
        cp = self.control_points
        if not cp:
            raise ConfigurationError("scene needs at least one control point")
        if len(set(cp)) != len(cp) or min(cp) < 0 or max(cp) >= n:
            raise ConfigurationError("control_points must be distinct indices below rows*cols")
        if int(self.horizon) < 1:
            raise ConfigurationError("horizon must be at least 1")
        if self.target.indices.max() >= n:
            raise ConfigurationError("target index out of range")
        if self.obstacle is not None and not (self.delta is not None and self.delta > 0):
            raise ConfigurationError("delta must be positive when an obstacle is present")
        if self.init_strategy not in INIT_STRATEGIES:
            raise ConfigurationError(f"init strategy must be one of {INIT_STRATEGIES}")

    @cached_property
    def mesh(self) -> ClothMesh:
        return self.mesh_spec.build(pinned=self.control_points)

    @property
    def x_init(self) -> np.ndarray:
        return np.array(self.mesh.positions0)

    @property
    def n_control(self) -> int:
        return len(self.control_points)

    @property
    def constrained(self) -> bool:
        return self.obstacle is not None

    def with_overrides(self, delta=None, alpha=None, beta=None) -> "Scene":
        """Copy with the clearance threshold and/or objective weights replaced."""
        w = self.weights
        weights = ObjectiveWeights(w.alpha if alpha is None else alpha,
                                   w.beta if beta is None else beta)
        return replace(self, delta=self.delta if delta is None else float(delta),
                       weights=weights)

    def __getstate__(self):
        # cached mesh is rebuilt on demand
        state = dict(self.__dict__)
        state.pop("mesh", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)


# ---------------------------------------------------------------- parsing

_TOP_KEYS = {"name", "mesh", "control_points", "horizon", "sim", "target", "obstacle",
             "delta", "weights", "init", "target_tolerance"}
_REQUIRED = {"mesh", "control_points", "horizon", "target"}


def _check_keys(obj, allowed, where, required=()):
    if not isinstance(obj, dict):
        raise SceneFileError("expected an object", where)
    for key in obj:
        if key not in allowed:
            raise SceneFileError(f"unknown field {key!r}", f"{where}.{key}" if where else key)
    for key in required:
        if key not in obj:
            raise SceneFileError("missing required field", f"{where}.{key}" if where else key)


def _vec(value, where, length=3):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise SceneFileError("expected numbers", where) from None
    if arr.shape != (length,) or not np.isfinite(arr).all():
        raise SceneFileError(f"expected a finite {length}-vector", where)
    return tuple(float(v) for v in arr)


def _num(value, where, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SceneFileError("expected a number", where)
    if integer and int(value) != value:
        raise SceneFileError("expected an integer", where)
    return int(value) if integer else float(value)


def _stiffness(value, where):
    if value in ("inf", "Infinity"):
        return float("inf")
    return _num(value, where)


def parse_scene(doc: dict) -> Scene:
    """Validate a decoded scene document and build the ``Scene``."""
    _check_keys(doc, _TOP_KEYS, "", _REQUIRED)
    m = doc["mesh"]
    _check_keys(m, {"rows", "cols", "spacing", "origin", "orientation"}, "mesh",
                ("rows", "cols", "spacing"))
    orientation = tuple(m.get("orientation", ("x", "y")))
    if len(orientation) != 2 or not all(isinstance(a, str) for a in orientation):
        raise SceneFileError("expected two axis labels", "mesh.orientation")
    mesh_args = (_num(m["rows"], "mesh.rows", True), _num(m["cols"], "mesh.cols", True),
                 _num(m["spacing"], "mesh.spacing"), _vec(m.get("origin", (0, 0, 0)), "mesh.origin"),
                 orientation)
    try:
        mesh_spec = MeshSpec(*mesh_args)
    except ConfigurationError as exc:
        raise SceneFileError(str(exc), "mesh") from None

    cps = doc["control_points"]
    if not isinstance(cps, list):
        raise SceneFileError("expected a list of particle indices", "control_points")
    control_points = tuple(_num(c, f"control_points[{k}]", True) for k, c in enumerate(cps))

    sim_doc = doc.get("sim", {})
    _check_keys(sim_doc, {"gravity", "dt", "iterations", "k_dist", "k_bend"}, "sim")
    defaults = SimParams()
    sim_kwargs = {
        "gravity": _vec(sim_doc.get("gravity", defaults.gravity), "sim.gravity"),
        "dt": _num(sim_doc.get("dt", defaults.dt), "sim.dt"),
        "iterations": _num(sim_doc.get("iterations", defaults.iterations), "sim.iterations", True),
        "k_dist": _stiffness(sim_doc.get("k_dist", defaults.k_dist), "sim.k_dist"),
        "k_bend": _stiffness(sim_doc.get("k_bend", defaults.k_bend), "sim.k_bend"),
    }

    t = doc["target"]
    _check_keys(t, {"indices", "positions"}, "target", ("indices", "positions"))
    if not isinstance(t["indices"], list) or not isinstance(t["positions"], list):
        raise SceneFileError("expected lists", "target")
    indices = [_num(i, f"target.indices[{k}]", True) for k, i in enumerate(t["indices"])]
    positions = [_vec(p, f"target.positions[{k}]") for k, p in enumerate(t["positions"])]

    obstacle = None
    o = doc.get("obstacle")
    if o is not None:
        _check_keys(o, {"spheres"}, "obstacle", ("spheres",))
        if not isinstance(o["spheres"], list) or not o["spheres"]:
            raise SceneFileError("expected a nonempty list", "obstacle.spheres")
        spheres = []
        for k, s in enumerate(o["spheres"]):
            where = f"obstacle.spheres[{k}]"
            _check_keys(s, {"center", "radius"}, where, ("center", "radius"))
            spheres.append((_vec(s["center"], f"{where}.center"), _num(s["radius"], f"{where}.radius")))
        obstacle = spheres

    w = doc.get("weights", {})
    _check_keys(w, {"alpha", "beta"}, "weights")
    init = doc.get("init", {})
    _check_keys(init, {"strategy"}, "init")
    delta = doc.get("delta")
    tol = doc.get("target_tolerance")
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise SceneFileError("expected a string", "name")

    # remaining checks run in the domain constructors; tag them with the field they concern
    stage = "sim"
    try:
        sim = SimParams(**sim_kwargs)
        stage = "target"
        target = TargetSpec(indices, positions)
        stage = "obstacle"
        obstacle = SphereObstacle.from_spheres(obstacle) if obstacle is not None else None
        stage = "weights"
        weights = ObjectiveWeights(_num(w.get("alpha", 1.0), "weights.alpha"),
                                   _num(w.get("beta", 1e-4), "weights.beta"))
        stage = "scene"
        return Scene(
            mesh_spec=mesh_spec,
            control_points=control_points,
            horizon=_num(doc["horizon"], "horizon", True),
            sim=sim,
            target=target,
            obstacle=obstacle,
            delta=None if delta is None else _num(delta, "delta"),
            weights=weights,
            init_strategy=init.get("strategy", "straight-line"),
            name=name,
            target_tolerance=None if tol is None else _num(tol, "target_tolerance"),
        )
    except SceneFileError:
        raise
    except ConfigurationError as exc:
        raise SceneFileError(str(exc), stage) from None


def _plain(v):
    return float(v) if np.isfinite(v) else "inf"


def scene_to_dict(scene: Scene) -> dict:
    """Inverse of ``parse_scene``."""
    ms = scene.mesh_spec
    doc = {
        "name": scene.name,
        "mesh": {"rows": ms.rows, "cols": ms.cols, "spacing": ms.spacing,
                 "origin": list(ms.origin), "orientation": list(ms.orientation)},
        "control_points": list(scene.control_points),
        "horizon": scene.horizon,
        "sim": {"gravity": list(scene.sim.gravity), "dt": scene.sim.dt,
                "iterations": scene.sim.iterations,
                "k_dist": _plain(scene.sim.k_dist), "k_bend": _plain(scene.sim.k_bend)},
        "target": {"indices": scene.target.indices.tolist(),
                   "positions": scene.target.positions.tolist()},
        "obstacle": None if scene.obstacle is None else {
            "spheres": [{"center": c.tolist(), "radius": float(r)}
                        for c, r in zip(scene.obstacle.centers, scene.obstacle.radii)]},
        "delta": scene.delta,
        "weights": {"alpha": scene.weights.alpha, "beta": scene.weights.beta},
        "init": {"strategy": scene.init_strategy},
    }
    if scene.target_tolerance is not None:
        doc["target_tolerance"] = scene.target_tolerance
    return doc


def load_scene(path) -> Scene:
    """Read and validate a scene file; syntax errors report line and column."""
    path = Path(path)
    text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneFileError(exc.msg, f"{path.name}:{exc.lineno}:{exc.colno}") from None
    return parse_scene(doc)


def save_scene(scene: Scene, path) -> None:
    Path(path).write_text(json.dumps(scene_to_dict(scene), indent=2) + "\n")


def resolve_scene(source: str) -> Scene:
    """Load ``source`` as a file path, falling back to a bundled preset by name.

    ``"ushape"``, ``"ushape.json"`` and ``"presets/ushape.json"`` all resolve to
    the bundled preset when no such file exists.
    """
    path = Path(source)
    if path.exists():
        return load_scene(path)
    stem = path.name[:-5] if path.name.endswith(".json") else path.name
    if stem in PRESETS:
        return preset(stem)
    raise FileNotFoundError(f"no scene file or preset named {source!r}")


# ---------------------------------------------------------------- presets

def _bundled(name: str) -> Scene:
    text = resources.files("clothopt.presets").joinpath(f"{name}.json").read_text()
    return parse_scene(json.loads(text))


def preset(name: str, delta: float | None = None) -> Scene:
    """One of the bundled task scenes, optionally with a different clearance threshold."""
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {PRESETS}")
    scene = _bundled(name)
    if delta is not None:
        if scene.obstacle is None:
            raise ConfigurationError(f"preset {name!r} has no obstacle; delta does not apply")
        scene = scene.with_overrides(delta=delta)
    return scene
