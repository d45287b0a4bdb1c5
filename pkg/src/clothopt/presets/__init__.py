"""Builders for the bundled task scenes.

The JSON files next to this module are generated from these builders
(``python -m clothopt.presets``) and are what ``clothopt.scene.preset`` loads.

Scale: one scene unit is 10 cm. The 10 x 10 cloth has spacing 1/15, so it is
0.6 units (6 cm) on a side, and the U obstacle is 0.3 deep, 1.2 tall and
1.8 wide (3 x 12 x 18 cm) with its bottom center at the origin. z is up.

ushape
    The cloth hangs in the x-z plane 0.35 in front of the U (y < 0), held at
    its two top corners. Its bottom edge must end on a horizontal line behind
    the U that runs along y, so the cloth has to turn edge-on as it goes
    through the opening.
swing
    The cloth hangs in the x-z plane and must swing its bottom edge up to a
    horizontal line 0.6 behind and 0.5 above where it starts.
drop
    The cloth lies flat, held at two corners, and must be lowered onto a
    0.7 x 0.7 square 0.6 lower down. The square is slightly larger than the
    cloth, so reaching it exactly means stretching the cloth, which trades off
    against the energy term. The distance stiffness is raised to 1e5 to make
    that energy visible at beta = 1e-5.

``target_tolerance`` is the documented success threshold on the final target
error for the ablation study.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..objective import ObjectiveWeights, TargetSpec
from ..safety import build_u_shape
from ..scene import MeshSpec, Scene, scene_to_dict
from ..xpbd import SimParams

SPACING = 1.0 / 15.0
U_DIMENSIONS = (0.3, 1.2, 1.8)
U_SPHERES = 18
ROWS = COLS = 10


def _bottom_edge():
    return list(range((ROWS - 1) * COLS, ROWS * COLS))


def build_ushape(delta: float = 0.2) -> Scene:
    mesh = MeshSpec(ROWS, COLS, SPACING, (-0.3, -0.35, 1.4), ("x", "-z"))
    target = TargetSpec(_bottom_edge(), [(0.0, 0.7 + k * SPACING, 0.8) for k in range(COLS)])
    return Scene(
        mesh_spec=mesh,
        control_points=(0, COLS - 1),
        horizon=10,
        sim=SimParams(),
        target=target,
        obstacle=build_u_shape(U_DIMENSIONS, U_SPHERES),
        delta=delta,
        weights=ObjectiveWeights(1.0, 1e-4),
        name="ushape",
    )


def build_swing() -> Scene:
    mesh = MeshSpec(ROWS, COLS, SPACING, (-0.3, 0.0, 1.0), ("x", "-z"))
    target = TargetSpec(_bottom_edge(), [(-0.3 + k * SPACING, 0.6, 0.9) for k in range(COLS)])
    return Scene(
        mesh_spec=mesh,
        control_points=(0, COLS - 1),
        horizon=10,
        sim=SimParams(),
        target=target,
        weights=ObjectiveWeights(1.0, 1e-5),
        name="swing",
        target_tolerance=0.05,
    )


def build_drop() -> Scene:
    mesh = MeshSpec(ROWS, COLS, SPACING, (-0.3, 0.0, 1.0), ("x", "y"))
    h = 0.35
    corners = [(-h, -0.3, 0.4), (h, -0.3, 0.4), (-h, 0.4, 0.4), (h, 0.4, 0.4)]
    last = ROWS * COLS - 1
    target = TargetSpec([0, COLS - 1, last - COLS + 1, last], corners)
    return Scene(
        mesh_spec=mesh,
        control_points=(0, COLS - 1),
        horizon=10,
        sim=SimParams(k_dist=1e5),
        target=target,
        weights=ObjectiveWeights(0.1, 1e-5),
        name="drop",
        target_tolerance=0.15,
    )


BUILDERS = {"ushape": build_ushape, "swing": build_swing, "drop": build_drop}


def write_presets(directory=None) -> list[Path]:
    directory = Path(directory or Path(__file__).parent)
    written = []
    for name, build in BUILDERS.items():
        path = directory / f"{name}.json"
        path.write_text(json.dumps(scene_to_dict(build()), indent=2) + "\n")
        written.append(path)
    return written
