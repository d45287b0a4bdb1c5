"""Command-line entry point.

::

    clothopt optimize|sweep|ablate [--scene PATH] [--out DIR] [--delta F]
             [--delta-list F,F,...] [--alpha F] [--beta F] [--seed N] [--max-rounds N]

``--scene`` takes a scene file or the name of a bundled preset (``ushape``,
``swing``, ``drop``). Exit codes: 0 on success, 2 when a run ends infeasible,
1 on any error (message on standard error).

``CLOTHOPT_THREADS`` caps how many sweep runs execute at once.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import ClothOptError, ConfigurationError
from .export import bar_chart_svg, write_run, write_table
from .optimize import OptimizerConfig, optimize
from .scene import resolve_scene

__all__ = ["main", "build_parser", "cmd_optimize", "cmd_sweep", "cmd_ablate", "ABLATION_VARIANTS"]

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2

# (label, keep trajectory term, keep energy term)
ABLATION_VARIANTS = (("G", False, False), ("G+T", True, False),
                     ("G+E", False, True), ("G+T+E", True, True))

log = logging.getLogger("clothopt")


def _float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"not a finite number: {text!r}")
    return v


def _float_list(text: str) -> list[float]:
    parts = [p.strip() for p in text.split(",")]
    if not parts or any(p == "" for p in parts):
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    return [_float(p) for p in parts]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="clothopt",
                                description="Safe cloth-manipulation trajectory optimization.")
    p.add_argument("command", choices=("optimize", "sweep", "ablate"))
    p.add_argument("--scene", default="ushape", help="scene file or preset name (default: ushape)")
    p.add_argument("--out", default=None, help="output directory (default: runs/<command>)")
    p.add_argument("--delta", type=_float, help="safety threshold override")
    p.add_argument("--delta-list", type=_float_list, help="thresholds for sweep, e.g. 0.05,0.2,0.4")
    p.add_argument("--alpha", type=_float, help="trajectory irregularity weight")
    p.add_argument("--beta", type=_float, help="potential energy weight")
    p.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
    p.add_argument("--max-rounds", type=int, help="maximum penalty rounds")
    p.add_argument("-v", "--verbose", action="store_true", help="log optimizer progress")
    return p


def _config(args) -> OptimizerConfig:
    cfg = OptimizerConfig(seed=args.seed)
    if args.max_rounds is not None:
        cfg = replace(cfg, max_outer_rounds=args.max_rounds)
    return cfg


def _scene(args, delta=None):
    scene = resolve_scene(args.scene)
    delta = args.delta if delta is None else delta
    if delta is not None and scene.obstacle is None:
        raise ConfigurationError("--delta given but the scene has no obstacle")
    return scene.with_overrides(delta=delta, alpha=args.alpha, beta=args.beta)


def _out(args) -> Path:
    return Path(args.out) if args.out else Path("runs") / args.command


def _run(scene, config, out_dir, extra=None) -> dict:
    report = optimize(scene, config=config)
    return write_run(out_dir, report, scene, extra)


def cmd_optimize(args) -> int:
    doc = _run(_scene(args), _config(args), _out(args))
    print(f"{doc['status']}: G={doc['G']:.6g} T={doc['T']:.6g} E={doc['E']:.6g} "
          f"C={doc['C']:.3g} min_sdf={doc['min_sdf']}")
    return EXIT_OK if doc["status"] == "feasible" else EXIT_INFEASIBLE


def _sweep_one(scene, config, out_dir):
    # top-level so it can run in a worker process
    return _run(scene, config, out_dir)


def _workers(n_jobs: int) -> int:
    env = os.environ.get("CLOTHOPT_THREADS")
    if env is not None:
        try:
            cap = int(env)
        except ValueError:
            raise ConfigurationError(f"CLOTHOPT_THREADS must be an integer, got {env!r}") from None
        if cap < 1:
            raise ConfigurationError("CLOTHOPT_THREADS must be at least 1")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_jobs))


def _delta_dir(d: float) -> str:
    return f"delta_{d:g}"


def cmd_sweep(args) -> int:
    deltas = args.delta_list or ([args.delta] if args.delta is not None else None)
    if not deltas:
        raise ConfigurationError("sweep needs --delta-list (or --delta)")
    if len(set(deltas)) != len(deltas):
        raise ConfigurationError(f"duplicate values in --delta-list: {deltas}")
    if any(d < 0 for d in deltas):
        raise ConfigurationError("safety thresholds must be nonnegative")
    scenes = [_scene(args, delta=d) for d in deltas]
    config = _config(args)
    out = _out(args)
    out.mkdir(parents=True, exist_ok=True)
    dirs = [out / _delta_dir(d) for d in deltas]

    docs: list = [None] * len(deltas)
    errors: dict[int, str] = {}
    n = _workers(len(deltas))
    if n == 1:
        for i, (s, d) in enumerate(zip(scenes, dirs)):
            try:
                docs[i] = _sweep_one(s, config, d)
            except (ClothOptError, OSError) as exc:
                errors[i] = str(exc)
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            futures = [pool.submit(_sweep_one, s, config, d) for s, d in zip(scenes, dirs)]
            for i, f in enumerate(futures):
                try:
                    docs[i] = f.result()
                except (ClothOptError, OSError) as exc:
                    errors[i] = str(exc)

    write_table(out / "table.csv", deltas, docs)
    code = EXIT_OK
    for i, d in enumerate(deltas):
        if i in errors:
            print(f"delta={d:g}: error: {errors[i]}", file=sys.stderr)
            code = EXIT_ERROR
        else:
            print(f"delta={d:g}: {docs[i]['status']} G={docs[i]['G']:.6g} "
                  f"C={docs[i]['C']:.3g} min_sdf={docs[i]['min_sdf']}")
            if docs[i]["status"] != "feasible" and code == EXIT_OK:
                code = EXIT_INFEASIBLE
    return code


def cmd_ablate(args) -> int:
    base = resolve_scene(args.scene)
    if base.obstacle is not None:
        raise ConfigurationError("ablation runs unconstrained; the scene must not have an obstacle")
    if args.delta is not None or args.delta_list:
        raise ConfigurationError("--delta has no meaning for ablate")
    base = base.with_overrides(alpha=args.alpha, beta=args.beta)
    config = _config(args)
    out = _out(args)
    out.mkdir(parents=True, exist_ok=True)
    rows, summary = [], {}
    for label, keep_t, keep_e in ABLATION_VARIANTS:
        w = base.weights
        scene = base.with_overrides(alpha=w.alpha if keep_t else 0.0,
                                    beta=w.beta if keep_e else 0.0)
        doc = _run(scene, config, out / label.replace("+", "_"), extra={"variant": label})
        rows.append([doc["G"], doc["T"], doc["E"]])
        summary[label] = {k: doc[k] for k in ("G", "T", "E", "loss", "status", "converged")}
        print(f"{label:6s} G={doc['G']:.6g} T={doc['T']:.6g} E={doc['E']:.6g}")
    labels = [v[0] for v in ABLATION_VARIANTS]
    (out / "ablation.svg").write_text(bar_chart_svg(labels, np.array(rows), pad=0.1))
    (out / "ablation.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


COMMANDS = {"optimize": cmd_optimize, "sweep": cmd_sweep, "ablate": cmd_ablate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ClothOptError, ValueError, OSError) as exc:
        print(f"clothopt: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
