"""Differentiable quasi-static cloth simulation and safe trajectory optimization.

The pieces, bottom-up:

- ``mesh``: grid cloth topology with colored constraint sets
- ``xpbd``: quasi-static XPBD stepping and taped rollouts
- ``diff``: reverse-mode gradients through a taped rollout
- ``objective`` / ``safety``: loss terms and the obstacle clearance constraint
- ``optimize``: penalty L-BFGS over the control sequence
- ``scene``: scene files and bundled presets
- ``cli``: the ``clothopt`` command
"""

from .diff import GradientResult, backward, finite_difference_gradient
from .errors import (ClothOptError, ConfigurationError, OptimizerError, SceneFileError,
                     SimulationDiverged, TapeMismatchError)
from .mesh import ClothMesh, build_grid, color_constraints, make_mesh
from .objective import ObjectiveWeights, TargetSpec, total_loss
from .optimize import (Metrics, OptimizationReport, OptimizerConfig, evaluate, gradients,
                       initialize_controls, optimize)
from .safety import SphereObstacle, build_u_shape, safety_constraint, sdf
from .scene import Scene, load_scene, preset, resolve_scene, save_scene
from .xpbd import Rollout, SimParams, Tape, rollout, step

__version__ = "0.1.0"

__all__ = [
    "ClothMesh", "build_grid", "color_constraints", "make_mesh",
    "SimParams", "Tape", "Rollout", "step", "rollout",
    "GradientResult", "backward", "finite_difference_gradient",
    "TargetSpec", "ObjectiveWeights", "total_loss",
    "SphereObstacle", "build_u_shape", "sdf", "safety_constraint",
    "OptimizerConfig", "OptimizationReport", "Metrics", "evaluate", "gradients",
    "initialize_controls", "optimize",
    "Scene", "load_scene", "save_scene", "preset", "resolve_scene",
    "ClothOptError", "ConfigurationError", "SceneFileError", "SimulationDiverged",
    "TapeMismatchError", "OptimizerError",
]
