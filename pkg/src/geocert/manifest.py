"""Analysis manifests: a YAML key-value document describing one run.

Loading validates everything at once and reports every violation;
unknown keys are rejected.  ``save_manifest(load_manifest(path))``
round-trips losslessly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np
import yaml

from .errors import (BadParams, ManifestParseError, ManifestValidationError,
                     UnknownSurface)
from .surfaces import builtin_surface, expression_surface, default_base_point

MODES = ("a-invariant", "b-invariant", "properness", "topology", "full")


@dataclass
class AnalysisConfig:
    surface_name: str
    surface_params: dict = field(default_factory=dict)
    components: list = field(default_factory=list)   # expr surfaces
    dim: int = 2
    chart_lo: list = field(default_factory=list)
    chart_hi: list = field(default_factory=list)
    chart_periodic: list = field(default_factory=list)
    base_point: list | None = None
    center: list | None = None       # None = anchor at the base point image
    mode: str = "full"
    r0: float = 0.0                  # 0 = surface default
    count: int = 0
    scheme: str = "geometric"
    grid_counts: list = field(default_factory=lambda: [0, 0])
    grid_refine: int = 1
    stencil: int = 16
    window_lo: list = field(default_factory=list)
    window_hi: list = field(default_factory=list)
    flow_radius: float = 0.0         # 0 = chosen from the tail sequence
    flow_c: float = 0.0              # 0 = chosen from the tail sequence
    ray_count: int = 64
    t_max: float = 0.0               # 0 = 50 * r
    flow_tol: float = 1e-8
    flow_max_step: float = 0.05
    alpha_norm: str = "hs"
    seed: int = 0
    out: str | None = None

    def build_surface(self):
        if self.surface_name == "expr":
            return expression_surface(self.components, self.dim,
                                      self.chart_lo, self.chart_hi,
                                      self.chart_periodic or None)
        return builtin_surface(self.surface_name, self.surface_params)

    def resolved_base_point(self, imm):
        if self.base_point is not None:
            return np.asarray(self.base_point, dtype=float)
        return default_base_point(imm)

    def to_dict(self):
        return asdict(self)


_SCHEMA = {
    "surface": {"name", "params", "components", "dim", "chart"},
    "chart": {"lo", "hi", "periodic"},
    "exhaustion": {"r0", "count", "scheme"},
    "grid": {"counts", "refine", "stencil"},
    "window": {"lo", "hi"},
    "flow": {"radius", "c", "ray_count", "t_max", "tol", "max_step"},
    "top": {"surface", "base_point", "center", "mode", "exhaustion", "grid",
            "window", "flow", "alpha_norm", "seed", "out"},
}


def _check_keys(mapping, allowed, where, violations):
    for key in mapping:
        if key not in allowed:
            violations.append(f"{where}: unknown key {key!r}")


def load_manifest(path) -> AnalysisConfig:
    """Parse and fully validate a manifest file."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
        raise ManifestParseError(f"{path}: {exc.__class__.__name__}{loc}: "
                                 f"{getattr(exc, 'problem', exc)}") from exc
    except OSError as exc:
        raise ManifestParseError(f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ManifestParseError(f"{path}: manifest must be a mapping")
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> AnalysisConfig:
    violations: list = []
    _check_keys(raw, _SCHEMA["top"], "manifest", violations)

    surf = raw.get("surface") or {}
    if not isinstance(surf, dict):
        violations.append("surface: must be a mapping")
        surf = {}
    _check_keys(surf, _SCHEMA["surface"], "surface", violations)
    name = surf.get("name")
    if not name:
        violations.append("surface.name: required")
        name = "plane"

    chart = surf.get("chart") or {}
    if chart:
        _check_keys(chart, _SCHEMA["chart"], "surface.chart", violations)

    cfg = AnalysisConfig(
        surface_name=str(name),
        surface_params=dict(surf.get("params") or {}),
        components=list(surf.get("components") or []),
        dim=int(surf.get("dim", 2)),
        chart_lo=list(chart.get("lo") or []),
        chart_hi=list(chart.get("hi") or []),
        chart_periodic=list(chart.get("periodic") or []),
    )

    if raw.get("base_point") is not None:
        cfg.base_point = [float(x) for x in raw["base_point"]]
    center = raw.get("center")
    if center is not None and center != "auto":
        cfg.center = [float(x) for x in center]
    cfg.mode = str(raw.get("mode", "full"))
    if cfg.mode not in MODES:
        violations.append(f"mode: {cfg.mode!r} not one of {MODES}")

    exh = raw.get("exhaustion") or {}
    _check_keys(exh, _SCHEMA["exhaustion"], "exhaustion", violations)
    cfg.r0 = float(exh.get("r0", 0.0))
    cfg.count = int(exh.get("count", 0))
    cfg.scheme = str(exh.get("scheme", "geometric"))
    if cfg.scheme not in ("geometric", "arithmetic"):
        violations.append(f"exhaustion.scheme: {cfg.scheme!r} unknown")
    if cfg.r0 < 0:
        violations.append("exhaustion.r0: must be positive")
    if cfg.count < 0 or cfg.count == 1:
        violations.append("exhaustion.count: must be at least 2")

    grid = raw.get("grid") or {}
    _check_keys(grid, _SCHEMA["grid"], "grid", violations)
    cfg.grid_counts = list(grid.get("counts") or [0, 0])
    cfg.grid_refine = int(grid.get("refine", 1))
    cfg.stencil = int(grid.get("stencil", 16))
    if cfg.stencil not in (8, 16):
        violations.append("grid.stencil: must be 8 or 16")
    if cfg.grid_refine < 0 or cfg.grid_refine > 3:
        violations.append("grid.refine: must be between 0 and 3")

    window = raw.get("window") or {}
    _check_keys(window, _SCHEMA["window"], "window", violations)
    cfg.window_lo = [float(x) for x in (window.get("lo") or [])]
    cfg.window_hi = [float(x) for x in (window.get("hi") or [])]

    flow = raw.get("flow") or {}
    _check_keys(flow, _SCHEMA["flow"], "flow", violations)
    radius = flow.get("radius", 0.0)
    cfg.flow_radius = 0.0 if radius in (None, "auto") else float(radius)
    cfg.flow_c = float(flow.get("c", 0.0))
    cfg.ray_count = int(flow.get("ray_count", 64))
    tmax = flow.get("t_max", 0.0)
    cfg.t_max = 0.0 if tmax in (None, "auto") else float(tmax)
    cfg.flow_tol = float(flow.get("tol", 1e-8))
    cfg.flow_max_step = float(flow.get("max_step", 0.05))
    for fieldname, value in [("flow.tol", cfg.flow_tol),
                             ("flow.max_step", cfg.flow_max_step)]:
        if value <= 0:
            violations.append(f"{fieldname}: must be positive")
    if cfg.ray_count < 4:
        violations.append("flow.ray_count: must be at least 4")

    cfg.alpha_norm = str(raw.get("alpha_norm", "hs"))
    if cfg.alpha_norm not in ("hs", "op"):
        violations.append("alpha_norm: must be 'hs' or 'op'")
    cfg.seed = int(raw.get("seed", 0))
    out = raw.get("out")
    cfg.out = str(out) if out else None

    # surface construction errors become validation messages
    imm = None
    if cfg.surface_name == "expr":
        if not cfg.components:
            violations.append("surface.components: required for expr surfaces")
        if not cfg.chart_lo or not cfg.chart_hi:
            violations.append("surface.chart: required for expr surfaces")
    if not violations:
        try:
            imm = cfg.build_surface()
        except (BadParams, UnknownSurface) as exc:
            violations.append(str(exc))

    if imm is not None:
        p = cfg.resolved_base_point(imm)
        if len(p) != imm.m:
            violations.append(f"base_point: expected {imm.m} coordinates")
        elif not imm.chart.contains(p):
            violations.append(f"base_point: {p.tolist()} outside the chart")
        elif cfg.window_lo and cfg.window_hi:
            inside = all(
                imm.chart.periodic[d]
                or cfg.window_lo[d] < p[d] < cfg.window_hi[d]
                for d in range(imm.m))
            if not inside:
                violations.append("window: does not contain the base point")
        if cfg.center is not None and len(cfg.center) != imm.n:
            violations.append(f"center: expected {imm.n} coordinates")

    if violations:
        raise ManifestValidationError(violations)
    return cfg


def save_manifest(cfg: AnalysisConfig, path):
    """Emit a manifest that loads back to an identical config."""
    doc: dict = {"surface": {"name": cfg.surface_name}}
    if cfg.surface_params:
        doc["surface"]["params"] = cfg.surface_params
    if cfg.components:
        doc["surface"]["components"] = cfg.components
        doc["surface"]["dim"] = cfg.dim
        doc["surface"]["chart"] = {"lo": cfg.chart_lo, "hi": cfg.chart_hi,
                                   "periodic": cfg.chart_periodic}
    if cfg.base_point is not None:
        doc["base_point"] = cfg.base_point
    if cfg.center is not None:
        doc["center"] = cfg.center
    doc["mode"] = cfg.mode
    doc["exhaustion"] = {"r0": cfg.r0, "count": cfg.count,
                         "scheme": cfg.scheme}
    doc["grid"] = {"counts": cfg.grid_counts, "refine": cfg.grid_refine,
                   "stencil": cfg.stencil}
    if cfg.window_lo or cfg.window_hi:
        doc["window"] = {"lo": cfg.window_lo, "hi": cfg.window_hi}
    doc["flow"] = {"radius": cfg.flow_radius or "auto", "c": cfg.flow_c,
                   "ray_count": cfg.ray_count, "t_max": cfg.t_max or "auto",
                   "tol": cfg.flow_tol, "max_step": cfg.flow_max_step}
    doc["alpha_norm"] = cfg.alpha_norm
    doc["seed"] = cfg.seed
    if cfg.out:
        doc["out"] = cfg.out
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=True, default_flow_style=None)
    return path
