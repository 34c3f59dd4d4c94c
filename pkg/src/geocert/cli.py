"""Command-line front end.

    geocert analyze MANIFEST [--mode MODE] [--out DIR] [--seed N] [--quiet]
    geocert surfaces list
    geocert flow MANIFEST --seed-index K [--out DIR]
    geocert bench [--points N] [--repeat K]

GEOCERT_WORKERS caps worker parallelism; GEOCERT_BACKEND=python forces
the numpy kernel fallback.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import KERNEL_BACKEND, __version__
from .errors import GeocertError, ManifestValidationError
from .manifest import load_manifest
from .report import Report, emit


def _cmd_analyze(args):
    cfg = load_manifest(args.manifest)
    if args.mode:
        cfg.mode = args.mode
    if args.seed is not None:
        cfg.seed = args.seed
    outdir = args.out or cfg.out
    from .pipeline import run_analysis

    report, traces = run_analysis(cfg, collect_traces=bool(outdir))
    if outdir:
        topo = report.stages.get("topology") or {}
        c = topo.get("c")
        emit(report, outdir, traces=traces, trace_c=c)
    if not args.quiet:
        sys.stdout.write(report.summary())
    return 1 if report.errored else 0


def _cmd_surfaces(args):
    from .surfaces import list_surfaces

    if args.action != "list":
        raise GeocertError(f"unknown surfaces action {args.action!r}")
    for name, doc in list_surfaces():
        print(f"{name:12s} {doc}")
    return 0


def _cmd_flow(args):
    cfg = load_manifest(args.manifest)
    from .defaults import default_axes, default_radii
    from .flow import (check_angle_envelope, check_conservation,
                       check_integrated_identity, check_radius_affine,
                       extract_level_set, integrate_flow, trace_to_csv)
    from .geodesic import exhaustion_radii
    from .invariants import a_sequence
    from .properness import select_tail_bound
    from . import config as tolconf

    imm = cfg.build_surface()
    p = cfg.resolved_base_point(imm)
    center = (np.asarray(cfg.center, dtype=float) if cfg.center is not None
              else imm.value(p[None, :])[0])
    if cfg.flow_radius > 0 and cfg.flow_c > 0:
        r, c = cfg.flow_radius, cfg.flow_c
    else:
        radii = (exhaustion_radii(cfg.r0, cfg.count, cfg.scheme)
                 if cfg.r0 > 0 and cfg.count >= 2 else default_radii(imm))
        axes = default_axes(imm, p, tolconf.WINDOW_FACTOR * radii[-1])
        aest, _ = a_sequence(imm, p, radii, axes, stencil=cfg.stencil,
                             refine=cfg.grid_refine)
        _, r, c = select_tail_bound(aest)
    seeds = extract_level_set(imm, p, center, r, cfg.ray_count)
    k = args.seed_index
    if not 0 <= k < len(seeds.seeds):
        raise GeocertError(f"seed index {k} outside 0..{len(seeds.seeds) - 1}")
    t_max = cfg.t_max or tolconf.T_MAX_FACTOR * r
    trace = integrate_flow(imm, seeds.seeds[k], center, r, t_max,
                           tol=cfg.flow_tol, max_step=cfg.flow_max_step)
    rep = check_angle_envelope(imm, trace, c)
    print(f"seed {k}/{len(seeds.seeds)} at {seeds.seeds[k]}  "
          f"psi0={seeds.psi0[k]:.6f}")
    print(f"termination: {trace.termination} after t={trace.t[-1]:.4g} "
          f"({len(trace.t)} states)")
    print(f"radius affinity max |R-(t+r)|: {check_radius_affine(trace):.3e}")
    print(f"integrated identity residual: {check_integrated_identity(trace):.3e}")
    print(f"conservation RMS residual:    {check_conservation(trace):.3e}")
    print(f"envelope ok: {rep.envelope_ok}  premise ok: {rep.premise_ok}  "
          f"worst margin: {rep.worst_margin:.3e}  "
          f"sup R|alpha|: {rep.premise_sup:.4f} (c={c:.4f})")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, f"trace_{k:03d}.csv")
        trace_to_csv(trace, path, c=c)
        print(f"trace written to {path}")
    return 0


def _cmd_bench(args):
    from .bench import run_benchmark

    run_benchmark(points=args.points, repeat=args.repeat)
    return 0


def build_parser():
    ap = argparse.ArgumentParser(
        prog="geocert",
        description="curvature-decay invariants and geometric certificates "
                    "for parametrized immersed submanifolds")
    ap.add_argument("--version", action="version",
                    version=f"geocert {__version__} ({KERNEL_BACKEND} kernels)")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="run an analysis manifest")
    a.add_argument("manifest")
    a.add_argument("--mode", choices=["a-invariant", "b-invariant",
                                      "properness", "topology", "full"])
    a.add_argument("--out", help="output directory for reports and traces")
    a.add_argument("--seed", type=int)
    a.add_argument("--quiet", action="store_true")
    a.set_defaults(fn=_cmd_analyze)

    s = sub.add_parser("surfaces", help="gallery operations")
    s.add_argument("action", choices=["list"])
    s.set_defaults(fn=_cmd_surfaces)

    f = sub.add_parser("flow", help="integrate and inspect a single trace")
    f.add_argument("manifest")
    f.add_argument("--seed-index", type=int, required=True)
    f.add_argument("--out")
    f.set_defaults(fn=_cmd_flow)

    b = sub.add_parser("bench", help="compare kernel backends")
    b.add_argument("--points", type=int, default=200_000)
    b.add_argument("--repeat", type=int, default=3)
    b.set_defaults(fn=_cmd_bench)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ManifestValidationError as exc:
        for v in exc.violations:
            print(f"manifest error: {v}", file=sys.stderr)
        return 2
    except GeocertError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
