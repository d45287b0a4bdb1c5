"""Run artifacts: CSV trajectories, metrics JSON, OBJ frames and SVG plots.

Plots are written as hand-assembled SVG so that output bytes depend only on the
numbers being drawn.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .optimize import OptimizationReport, _rollout
from .safety import clearance_per_step

__all__ = [
    "METRIC_KEYS",
    "write_run",
    "write_controls_csv",
    "write_states_csv",
    "write_obj",
    "metrics_document",
    "write_table",
    "export_plots",
    "bar_chart_svg",
]

METRIC_KEYS = ("G", "T", "E", "C", "min_sdf")
TABLE_ROWS = (("G", "G"), ("T", "T"), ("E", "E"), ("C", "C"), ("min_sdf", "min{SDF}"))
PATH_COLORS = ("#7b3fa0", "#2e9e48", "#1f6fb4", "#d9822b")


def _fmt(v: float) -> str:
    return repr(float(v))


def write_controls_csv(path, U) -> None:
    U = np.asarray(U)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "point", "dx", "dy", "dz"])
        for t in range(U.shape[0]):
            for p in range(U.shape[1]):
                w.writerow([t, p] + [_fmt(v) for v in U[t, p]])


def write_states_csv(path, states) -> None:
    states = np.asarray(states)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "particle", "x", "y", "z"])
        for t in range(states.shape[0]):
            for i in range(states.shape[1]):
                w.writerow([t, i] + [_fmt(v) for v in states[t, i]])


def write_obj(path, positions, triangles) -> None:
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in np.asarray(positions, float).tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in np.asarray(triangles).tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def _clean(v):
    v = float(v)
    if np.isnan(v):
        return None
    if np.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def metrics_document(report: OptimizationReport, scene, extra=None) -> dict:
    m = report.final
    doc = {name: _clean(getattr(m, name)) for name in METRIC_KEYS}
    doc["loss"] = _clean(m.loss)
    doc["status"] = report.status
    doc["converged"] = report.converged
    doc["scene"] = scene.name
    doc["delta"] = scene.delta
    doc["alpha"] = scene.weights.alpha
    doc["beta"] = scene.weights.beta
    doc["horizon"] = scene.horizon
    doc["n_particles"] = scene.mesh.n_particles
    doc["seed"] = report.config.seed
    doc["rounds"] = [
        {"round": r.round, "penalty": r.penalty, "phi": _clean(r.phi),
         "inner_iterations": r.inner_iterations, "inner_status": r.inner_status,
         **{k: _clean(v) for k, v in r.metrics.as_dict().items()}}
        for r in report.history
    ]
    if extra:
        doc.update(extra)
    return doc


def write_run(out_dir, report: OptimizationReport, scene, extra=None, plots=True) -> dict:
    """Write all artifacts of one optimization run into ``out_dir``."""
    out = Path(out_dir)
    (out / "frames").mkdir(parents=True, exist_ok=True)
    ro = _rollout(scene, report.U_star, record=False)
    write_controls_csv(out / "controls.csv", report.U_star)
    write_states_csv(out / "states.csv", ro.states)
    for t, x in enumerate(ro.states):
        write_obj(out / "frames" / f"frame_{t:03d}.obj", x, scene.mesh.triangles)
    doc = metrics_document(report, scene, extra)
    doc["clearance_per_step"] = [_clean(v) for v in clearance_per_step(ro.trajectory, scene.obstacle)]
    (out / "metrics.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    if plots:
        export_plots(report, scene, out / "plots", states=ro.states)
    return doc


def write_table(path, deltas, docs) -> None:
    """Metrics table: one row per metric, one column per clearance threshold."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric"] + [f"delta={d:g}" for d in deltas])
        for key, label in TABLE_ROWS:
            w.writerow([label] + ["" if doc is None else _fmt_cell(doc.get(key)) for doc in docs])


def _fmt_cell(v):
    return "" if v is None else (v if isinstance(v, str) else f"{v:.6g}")


# ---------------------------------------------------------------- SVG

class _Canvas:
    def __init__(self, width=480, height=360, margin=40):
        self.w, self.h, self.m = width, height, margin
        self.items: list[str] = []

    def fit(self, points, equal=True):
        pts = np.asarray(points, float).reshape(-1, 2)
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        span = np.maximum(hi - lo, 1e-9)
        sx = (self.w - 2 * self.m) / span[0]
        sy = (self.h - 2 * self.m) / span[1]
        if equal:
            sx = sy = min(sx, sy)
        self._lo, self._s = lo, (sx, sy)

    def map(self, p):
        x = self.m + (p[0] - self._lo[0]) * self._s[0]
        y = self.h - self.m - (p[1] - self._lo[1]) * self._s[1]
        return f"{x:.2f},{y:.2f}"

    def polyline(self, pts, color, width=1.5, dash=None, closed=False):
        tag = "polygon" if closed else "polyline"
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.items.append(f'<{tag} points="{" ".join(self.map(p) for p in pts)}" fill="none" '
                          f'stroke="{color}" stroke-width="{width}"{d}/>')

    def circle(self, c, r, color, fill="none"):
        x, y = self.map(c).split(",")
        self.items.append(f'<circle cx="{x}" cy="{y}" r="{max(r * self._s[0], 0.5):.2f}" '
                          f'fill="{fill}" stroke="{color}" stroke-width="1"/>')

    def dot(self, c, color):
        x, y = self.map(c).split(",")
        self.items.append(f'<circle cx="{x}" cy="{y}" r="2.5" fill="{color}"/>')

    def text(self, x, y, s, size=12, anchor="start"):
        self.items.append(f'<text x="{x}" y="{y}" font-size="{size}" font-family="sans-serif" '
                          f'text-anchor="{anchor}">{s}</text>')

    def rect(self, x, y, w, h, color):
        self.items.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" fill="{color}"/>')

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.w}" height="{self.h}" '
                f'viewBox="0 0 {self.w} {self.h}">\n<rect width="100%" height="100%" fill="white"/>\n')
        return head + "\n".join(self.items) + "\n</svg>\n"


def _outline(mesh, x):
    r, c = mesh.n_rows, mesh.n_cols
    ring = ([mesh.index(0, j) for j in range(c)] + [mesh.index(i, c - 1) for i in range(1, r)]
            + [mesh.index(r - 1, j) for j in range(c - 2, -1, -1)]
            + [mesh.index(i, 0) for i in range(r - 2, 0, -1)])
    return x[ring]


def _view_svg(states, scene, axes, title) -> str:
    ax = list(axes)
    cps = list(scene.control_points)
    paths = states[:, cps, :][..., ax]  # (T+1, n_control, 2)
    pts = [states[0][:, ax], states[-1][:, ax], scene.target.positions[:, ax]]
    if scene.obstacle is not None:
        c, r = scene.obstacle.centers[:, ax], scene.obstacle.radii[:, None]
        pts += [c - r, c + r]
    cv = _Canvas()
    cv.fit(np.concatenate(pts))
    if scene.obstacle is not None:
        for c, r in zip(scene.obstacle.centers, scene.obstacle.radii):
            cv.circle(c[ax], r, "#888888", fill="#dddddd")
    cv.polyline(_outline(scene.mesh, states[0])[:, ax], "#999999", 1.0, dash="4,3", closed=True)
    cv.polyline(_outline(scene.mesh, states[-1])[:, ax], "#333333", 1.0, closed=True)
    for k in range(paths.shape[1]):
        cv.polyline(paths[:, k], PATH_COLORS[k % len(PATH_COLORS)], 2.0)
    for p in scene.target.positions:
        cv.dot(p[ax], "#d62728")
    cv.text(cv.m, 20, title, 14)
    return cv.render()


def _convergence_svg(trace) -> str:
    trace = np.asarray(trace, float)
    trace = trace[np.isfinite(trace)]
    cv = _Canvas(480, 300)
    if trace.size == 0:
        return cv.render()
    y = np.log10(np.maximum(trace, 1e-300))
    cv.fit(np.column_stack([np.arange(trace.size), y]), equal=False)
    cv.polyline(np.column_stack([np.arange(trace.size), y]), "#1f6fb4", 1.5)
    cv.text(cv.m, 20, "log10 penalized objective per accepted iteration", 13)
    return cv.render()


def export_plots(report: OptimizationReport, scene, out_dir, states=None) -> list[Path]:
    """Top view, side view and convergence curve of a run; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if states is None:
        states = _rollout(scene, report.U_star, record=False).states
    files = {
        "top_view.svg": _view_svg(states, scene, (0, 1), "top view (x-y)"),
        "side_view.svg": _view_svg(states, scene, (1, 2), "side view (y-z)"),
        "convergence.svg": _convergence_svg(report.phi_trace),
    }
    written = []
    for name, text in files.items():
        (out / name).write_text(text)
        written.append(out / name)
    return written


def bar_chart_svg(groups, values, series=("G", "T", "E"), pad=0.1, log=True) -> str:
    """Grouped bar chart; every value is padded by ``pad`` before plotting."""
    colors = {"G": "#e3b505", "T": "#d62728", "E": "#7b3fa0"}
    vals = np.asarray(values, float) + pad
    cv = _Canvas(560, 340, 50)
    top = np.log10(vals.max()) if log else vals.max()
    bottom = min(np.log10(vals.min()), 0.0) - 0.1 if log else 0.0
    plot_h = cv.h - 2 * cv.m
    gw = (cv.w - 2 * cv.m) / len(groups)
    bw = gw / (len(series) + 1)
    for gi, name in enumerate(groups):
        for si, s in enumerate(series):
            v = np.log10(vals[gi, si]) if log else vals[gi, si]
            hgt = plot_h * (v - bottom) / max(top - bottom, 1e-12)
            x = cv.m + gi * gw + (si + 0.5) * bw
            cv.rect(x, cv.h - cv.m - hgt, bw * 0.9, hgt, colors.get(s, "#555555"))
        cv.text(cv.m + (gi + 0.5) * gw, cv.h - cv.m + 18, name, 12, "middle")
    for si, s in enumerate(series):
        cv.rect(cv.w - cv.m - 60, 10 + 16 * si, 10, 10, colors.get(s, "#555555"))
        cv.text(cv.w - cv.m - 45, 19 + 16 * si, s, 11)
    cv.text(cv.m, 20, f"objective terms per variant (+{pad:g}{', log scale' if log else ''})", 13)
    return cv.render()
