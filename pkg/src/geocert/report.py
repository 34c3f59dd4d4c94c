"""Run reports: canonical machine serialization and human summaries.

The machine report is deterministic byte-for-byte for a fixed config
(sorted keys, repr-exact floats, no volatile data); wall-clock timings
go to the text summary and a sidecar file instead.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__

SCHEMA_VERSION = 1


def _plain(obj):
    """Recursively convert numpy scalars/arrays for JSON emission."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and (obj != obj):
        return None
    return obj


@dataclass
class Report:
    config: dict
    stages: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def add_stage(self, name, payload, seconds=None):
        self.stages[name] = _plain(payload)
        if seconds is not None:
            self.timings[name] = seconds

    def to_json(self) -> str:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "toolkit_version": __version__,
            "config": _plain(self.config),
            "stages": self.stages,
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    @staticmethod
    def from_json(text: str) -> "Report":
        doc = json.loads(text)
        return Report(doc.get("config", {}), doc.get("stages", {}))

    @property
    def errored(self) -> bool:
        return any(st.get("status") == "error" for st in self.stages.values())

    def summary(self) -> str:
        lines = [f"geocert {__version__} report",
                 f"surface: {self.config.get('surface_name')} "
                 f"params={self.config.get('surface_params')}",
                 f"mode: {self.config.get('mode')}", ""]
        for name in sorted(self.stages):
            st = self.stages[name]
            status = st.get("status", "?")
            head = f"[{name}] {status}"
            if name == "a_invariant" and status == "ok":
                head += (f"  a(M): {_fmt_verdict(st)}  "
                         f"gap={st.get('refinement_gap'):.2e}")
                lines.append(head)
                lines.append("    radii: " + _fmt_seq(st.get("radii", [])))
                lines.append("    a_i:   " + _fmt_seq(st.get("values", [])))
            elif name == "b_invariant" and status == "ok":
                head += f"  b(M): {_fmt_verdict(st)}"
                lines.append(head)
                lines.append("    radii: " + _fmt_seq(st.get("radii", [])))
                lines.append("    b_i:   " + _fmt_seq(st.get("values", [])))
            elif name.startswith("properness") and status == "ok":
                head += (f"  {st.get('verdict')} (route {st.get('route')})"
                         + (f": {st.get('reason')}" if st.get("reason") else ""))
                lines.append(head)
                if st.get("constants"):
                    c = st["constants"]
                    lines.append(f"    R0={c.get('R0')} c={c.get('c'):.6g} "
                                 f"b={c.get('b'):.6g} infG={c.get('inf_G'):.6g}")
                if st.get("bound"):
                    b = st["bound"]
                    lines.append(f"    bound: {b.get('violations')} violations "
                                 f"of {b.get('checked')} samples, worst margin "
                                 f"{b.get('worst_margin'):.3e}")
            elif name == "topology" and status == "ok":
                head += (f"  {st.get('verdict')}"
                         + (f": {st.get('reason')}" if st.get("reason") else ""))
                lines.append(head)
                lines.append(f"    r={st.get('r')} c={st.get('c'):.6g} "
                             f"seeds={st.get('seed_count')} "
                             f"rings={st.get('ring_sizes')}")
                lines.append(f"    critical clusters: "
                             f"{[cl.get('kind') for cl in st.get('clusters', [])]}")
                checks = st.get("checks") or {}
                if checks:
                    lines.append("    residuals: " + ", ".join(
                        f"{k}={v:.2e}" for k, v in sorted(checks.items())))
            else:
                if st.get("reason"):
                    head += f": {st.get('reason')}"
                lines.append(head)
        if self.timings:
            lines.append("")
            lines.append("timings (s): " + ", ".join(
                f"{k}={v:.2f}" for k, v in sorted(self.timings.items())))
        return "\n".join(lines) + "\n"


def _fmt_verdict(st):
    verdict = st.get("verdict")
    limit = st.get("limit")
    if verdict == "converging" and limit is not None:
        return f"{limit:.6g} (converging)"
    return str(verdict)


def _fmt_seq(values):
    return "[" + ", ".join(f"{v:.6g}" for v in values) + "]"


def emit(report: Report, outdir, traces=None, trace_c=None,
         max_rows: int = 2001):
    """Write the machine report, summary, timing sidecar and trace files."""
    from .flow import trace_to_csv

    os.makedirs(outdir, exist_ok=True)
    paths = {}
    machine = os.path.join(outdir, "report.json")
    with open(machine, "w") as fh:
        fh.write(report.to_json())
    paths["report"] = machine
    summary = os.path.join(outdir, "summary.txt")
    with open(summary, "w") as fh:
        fh.write(report.summary())
    paths["summary"] = summary
    if report.timings:
        tpath = os.path.join(outdir, "timings.json")
        with open(tpath, "w") as fh:
            json.dump(_plain(report.timings), fh, sort_keys=True, indent=2)
        paths["timings"] = tpath
    if traces:
        tdir = os.path.join(outdir, "traces")
        pdir = os.path.join(outdir, "plotdata")
        os.makedirs(tdir, exist_ok=True)
        os.makedirs(pdir, exist_ok=True)
        for i, tr in enumerate(traces):
            sub = _downsample(tr, max_rows)
            trace_to_csv(sub, os.path.join(tdir, f"trace_{i:03d}.csv"),
                         c=trace_c)
            _plot_data(sub, os.path.join(pdir, f"trace_{i:03d}.tsv"), trace_c)
        paths["traces"] = tdir
    return paths


def _downsample(trace, max_rows):
    from dataclasses import replace

    n = len(trace.t)
    if n <= max_rows:
        return trace
    keep = np.unique(np.concatenate(
        [np.linspace(0, n - 1, max_rows).astype(int), [0, n - 1]]))
    return replace(trace, t=trace.t[keep], points=trace.points[keep],
                   R=trace.R[keep], psi=trace.psi[keep],
                   sin_theta=trace.sin_theta[keep],
                   integrand=trace.integrand[keep],
                   accumulator=trace.accumulator[keep])


def _plot_data(trace, path, c):
    env = np.full(len(trace.t), np.nan)
    if c is not None:
        env = ((c * trace.t + trace.r * trace.sin_theta[0])
               / (trace.t + trace.r))
    rows = np.column_stack([trace.t, trace.sin_theta, env])
    np.savetxt(path, rows, delimiter="\t", header="t\tsin_theta\tenvelope",
               comments="", fmt="%.17g")
