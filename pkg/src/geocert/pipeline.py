"""Stage orchestration: invariants -> properness -> topology.

Stages run in dependency order; a stage that is not applicable (e.g. a
diverging tail, or a non-minimal surface asked for the Ricci route)
downgrades the verdict and the run carries on.  Only computational
failures mark the report as errored.
"""

from __future__ import annotations

import time
from dataclasses import asdict

import numpy as np

from . import config as tolconf
from .defaults import default_axes, default_radii
from .errors import GeocertError, NotMinimal
from .flow import topology_certificate
from .geodesic import exhaustion_radii
from .invariants import a_sequence, b_sequence
from .manifest import AnalysisConfig
from .properness import certify_properness, certify_properness_minimal
from .report import Report


def _stage(report, name, fn):
    t0 = time.perf_counter()
    try:
        payload = fn()
        payload.setdefault("status", "ok")
    except NotMinimal as exc:
        payload = {"status": "not_applicable", "reason": str(exc)}
    except GeocertError as exc:
        payload = {"status": "error", "reason": f"{type(exc).__name__}: {exc}"}
    except Exception as exc:  # computational failure
        payload = {"status": "error", "reason": f"{type(exc).__name__}: {exc}"}
    report.add_stage(name, payload, time.perf_counter() - t0)
    return payload


def _estimate_payload(est):
    return {
        "radii": list(est.radii),
        "values": list(est.values),
        "verdict": est.verdict.kind,
        "limit": est.verdict.limit,
        "sample_count": est.sample_count,
        "refinement_gap": est.refinement_gap,
        "window_rho_max": est.window_rho_max,
    }


def _properness_payload(cert):
    payload = {
        "route": cert.route,
        "verdict": cert.verdict,
        "reason": cert.reason,
        "constants": cert.constants,
        "caveats": cert.caveats,
    }
    if cert.profile is not None:
        payload["profile"] = asdict(cert.profile)
    if cert.bound_report is not None:
        payload["bound"] = asdict(cert.bound_report)
    return payload


def _topology_payload(cert):
    return {
        "verdict": cert.verdict,
        "reason": cert.reason,
        "r": cert.r,
        "c": cert.c,
        "center": cert.center,
        "seed_count": cert.seed_count,
        "ring_sizes": cert.ring_sizes,
        "clusters": [{"kind": cl.kind, "point": cl.point.tolist(),
                      "psi": cl.psi, "cluster_radius": cl.cluster_radius,
                      "member_count": cl.member_count}
                     for cl in cert.clusters],
        "inside_isolated": cert.inside_isolated,
        "inside_degenerate": cert.inside_degenerate,
        "checks": cert.trace_checks,
        "caveats": cert.caveats,
    }


def run_analysis(cfg: AnalysisConfig, collect_traces: bool = False):
    """Execute the configured stages; returns (Report, traces)."""
    report = Report(cfg.to_dict())
    traces: list = []

    imm = cfg.build_surface()
    p = cfg.resolved_base_point(imm)
    if cfg.r0 > 0 and cfg.count >= 2:
        radii = exhaustion_radii(cfg.r0, cfg.count, cfg.scheme)
    else:
        radii = default_radii(imm)
    rho_max = tolconf.WINDOW_FACTOR * radii[-1]
    counts = cfg.grid_counts if any(cfg.grid_counts) else None
    if cfg.window_lo and cfg.window_hi:
        axes = _axes_from_window(imm, cfg, counts)
    else:
        axes = default_axes(imm, p, rho_max, counts)

    need_a = cfg.mode in ("a-invariant", "properness", "topology", "full")
    need_b = cfg.mode in ("b-invariant", "full") or \
        (cfg.mode == "properness")

    aest = fld = None
    if need_a:
        def run_a():
            nonlocal aest, fld
            aest, fld = a_sequence(imm, p, radii, axes,
                                   alpha_norm=cfg.alpha_norm,
                                   stencil=cfg.stencil,
                                   refine=cfg.grid_refine)
            return _estimate_payload(aest)
        _stage(report, "a_invariant", run_a)

    best = bfld = None
    if need_b:
        def run_b():
            nonlocal best, bfld
            best, bfld = b_sequence(imm, p, radii, axes,
                                    stencil=cfg.stencil,
                                    refine=cfg.grid_refine, fld=fld)
            return _estimate_payload(best)
        _stage(report, "b_invariant", run_b)

    if cfg.mode in ("properness", "full") and aest is not None:
        def run_prop():
            cert = certify_properness(imm, p, aest, fld)
            return _properness_payload(cert)
        _stage(report, "properness", run_prop)

    if cfg.mode in ("properness", "b-invariant", "full") and best is not None:
        def run_prop_min():
            cert = certify_properness_minimal(imm, p, best, bfld)
            return _properness_payload(cert)
        _stage(report, "properness_minimal", run_prop_min)

    if cfg.mode in ("topology", "full") and aest is not None:
        def run_topo():
            center = (np.asarray(cfg.center, dtype=float)
                      if cfg.center is not None else None)
            cert = topology_certificate(
                imm, p, aest, fld, center=center, ray_count=cfg.ray_count,
                t_max=cfg.t_max or None, tol=cfg.flow_tol,
                max_step=cfg.flow_max_step,
                r_override=cfg.flow_radius or None,
                c_override=cfg.flow_c or None,
                traces_out=traces if collect_traces else None)
            return _topology_payload(cert)
        _stage(report, "topology", run_topo)

    return report, traces


def _axes_from_window(imm, cfg, counts):
    axes = []
    spec_counts = counts or [129] * imm.m
    for d in range(imm.m):
        n = int(spec_counts[d]) or 129
        if imm.chart.periodic[d]:
            axes.append(np.linspace(imm.chart.lo[d], imm.chart.hi[d], n,
                                    endpoint=False))
        else:
            lo = max(cfg.window_lo[d], imm.chart.lo[d] + 1e-9)
            hi = min(cfg.window_hi[d], imm.chart.hi[d] - 1e-9)
            axes.append(np.linspace(lo, hi, n))
    return tuple(axes)
