"""Command-line entry point.

Subcommands: ``sweep`` (displacement vs amplitude curves), ``heightfield``
(field sampling, contours, junctions), ``pmp`` (variational shooting), and
``compare`` (cross-validation of both pipelines).  All outputs are
deterministic: re-running a command with the same config produces
byte-identical CSV/JSON.

Exit codes: 0 success, 1 documented nonconvergence, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import geometry, pmp, svg
from .config import frame_to_config, load_model_config
from .connection import BodyFrameSpec, optimize_frame
from .errors import (BoundNeverReached, ConfigError, GaitforgeError,
                     IntegrationFailure, NoBracket, NoRoot,
                     SingularArcBreakdown)
from .simulate import displacement_sweep

SCHEMA_VERSION = 1

_PMP_FAILURES = (NoBracket, NoRoot, SingularArcBreakdown, IntegrationFailure,
                 BoundNeverReached)


def _workers():
    raw = os.environ.get("GAITFORGE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"GAITFORGE_THREADS must be an integer, got {raw!r}")


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.12g}" if isinstance(v, float) else v
                             for v in row])


def _write_json(path, payload):
    payload = dict(payload)
    payload["schema_version"] = SCHEMA_VERSION
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _resolve_frame(args, model):
    """Frame from the CLI flag, overriding the config file's frame."""
    spec = getattr(args, "frame", None)
    if spec in (None, "config"):
        return args._config_frame
    if spec == "middle-link":
        return BodyFrameSpec.middle_link()
    if spec == "min-perturbation":
        window = _parse_window(getattr(args, "window", None) or "-3,3,-3,3")
        return optimize_frame(model, window).frame
    raise ConfigError(f"unknown frame spec {spec!r}")


def _parse_window(text):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4:
        raise ConfigError("window must be x0,x1,y0,y1")
    x0, x1, y0, y1 = (float(p) for p in parts)
    if not (x0 < x1 and y0 < y1):
        raise ConfigError("window bounds must be increasing")
    return (x0, x1, y0, y1)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_sweep(args):
    model, _ = load_model_config(args.model_config)
    if args.eps_step <= 0:
        raise ConfigError("eps step must be positive")
    eps = np.arange(args.eps_min, args.eps_max + 0.5 * args.eps_step,
                    args.eps_step)
    if len(eps) == 0:
        raise ConfigError("empty amplitude grid")
    families = (("circle", "#1f4e9c"), ("square", "#2e7d32"))
    if args.family != "both":
        families = tuple(f for f in families if f[0] == args.family)
    curves = []
    markers = []
    for family, color in families:
        res = displacement_sweep(model, family, eps, workers=_workers())
        _write_csv(os.path.join(args.out, f"sweep_{family}.csv"),
                   ["eps", "dx", "dy", "dtheta"],
                   [[float(e), *map(float, d)]
                    for e, d in zip(res.eps, res.displacements)])
        curves.append((res.eps, res.displacements[:, 0], color,
                       family == "square"))
        markers.append((res.argmax_eps, res.argmax_dx, "#7b1fa2"))
        markers.append((res.argmin_eps, res.argmin_dx, "#c62828"))
    out_svg = svg.line_plot_svg(curves, xlabel="amplitude eps [rad]",
                                ylabel="dx per cycle",
                                markers=markers,
                                title="net x-displacement vs gait amplitude")
    with open(os.path.join(args.out, "fig2.svg"), "w",
              encoding="utf-8") as fh:
        fh.write(out_svg)
    return 0


def cmd_heightfield(args):
    model, _ = load_model_config(args.model_config)
    frame = _resolve_frame(args, model)
    window = _parse_window(args.window) if args.window else None
    field = geometry.sample_height_field(model, frame=frame, window=window,
                                         n=args.grid,
                                         component=args.component)
    try:
        contours = geometry.extract_zero_contours(field)
    except GaitforgeError:
        contours = None
    rows = []
    if contours is not None:
        for ci, (poly, kind) in enumerate(zip(contours.contours,
                                              contours.kinds)):
            for x, y in poly:
                rows.append([ci, kind, float(x), float(y)])
    _write_csv(os.path.join(args.out, "contours.csv"),
               ["contour", "kind", "phi1", "phi2"], rows)
    _write_csv(os.path.join(args.out, "junctions.csv"), ["phi1", "phi2"],
               [[float(x), float(y)] for x, y in
                (contours.junctions if contours is not None else [])])
    _write_csv(os.path.join(args.out, "heightfield.csv"),
               ["phi1", "phi2", "value"],
               [[float(x), float(y), float(field.values[i, j])]
                for i, x in enumerate(field.phi1)
                for j, y in enumerate(field.phi2)])
    with open(os.path.join(args.out, "heightfield.svg"), "w",
              encoding="utf-8") as fh:
        fh.write(svg.heightfield_svg(field, contours,
                                     title=f"H_{args.component}"))
    with open(os.path.join(args.out, "frame.cfg"), "w",
              encoding="utf-8") as fh:
        fh.write(frame_to_config(frame))
    return 0


def _gait_rows(gait):
    """Closed-gait vertices with their curve parameter, end point repeated."""
    verts = np.asarray(gait.vertices, dtype=float)
    loop = np.vstack([verts, verts[:1]])
    s = np.linspace(0.0, 1.0, len(loop))
    return [[float(si), float(x), float(y)] for si, (x, y) in zip(s, loop)]


def _costate_rows(sol):
    rows = []
    for seg in sol.segments:
        for t, st in zip(seg.t, seg.states):
            rows.append([seg.kind, float(t), *[float(v) for v in
                         (st[0], st[1], st[2], st[4], st[5], st[3])]])
    return rows


def _pmp_case(model, branch, bound, escape_radius=None):
    # The forward scan stops short of the reverse window; the reverse scan
    # starts past the forward root so the branches cannot shadow each other.
    interval = (0.05, 2.8) if branch == "forward" else (1.6, 3.9)
    try:
        if bound is None:
            sol = pmp.shoot_unbounded(model, interval=interval,
                                      escape_radius=escape_radius)
        else:
            sol = pmp.shoot_bounded(model, bound)
    except _PMP_FAILURES as exc:
        return None, {"converged": False, "error": type(exc).__name__,
                      "message": str(exc), "branch": branch,
                      "bound": bound}
    summary = {"converged": True, "branch": branch, "bound": bound,
               "phi1_0": sol.phi1_0, "dx": sol.dx, "dy": sol.displacement[1],
               "dtheta": sol.displacement[2], "tau1": sol.tau1,
               "tau2": sol.tau2, "t_final": sol.t_final,
               "residuals": {k: float(v) for k, v in sol.residuals.items()},
               "segments": [seg.kind for seg in sol.segments]}
    return sol, summary


def cmd_pmp(args):
    model, _ = load_model_config(args.model_config)
    if args.bound in (None, "none"):
        bound = None
    else:
        try:
            bound = float(args.bound)
        except ValueError:
            raise ConfigError(f"--bound must be a number or 'none', "
                              f"got {args.bound!r}")
    sol, summary = _pmp_case(model, args.branch, bound,
                             escape_radius=args.escape_radius)
    _write_json(os.path.join(args.out, "pmp_summary.json"), summary)
    if sol is not None:
        _write_csv(os.path.join(args.out, "pmp_gait.csv"),
                   ["s", "phi1", "phi2"], _gait_rows(sol.gait))
        _write_csv(os.path.join(args.out, "pmp_costates.csv"),
                   ["arc", "t", "phi1", "phi2", "theta",
                    "lam1", "lam2", "lam3"], _costate_rows(sol))
        if args.overlay_heightfield:
            frame = _resolve_frame(args, model)
            field = geometry.sample_height_field(model, frame=frame)
            try:
                contours = geometry.extract_zero_contours(field)
            except GaitforgeError:
                contours = None
            poly = np.asarray(sol.gait.vertices, dtype=float)
            overlay = [(np.vstack([poly, poly[:1]]), "#7b1fa2")]
            with open(os.path.join(args.out, "pmp_overlay.svg"), "w",
                      encoding="utf-8") as fh:
                fh.write(svg.heightfield_svg(field, contours, gaits=overlay,
                                             title="optimal gait over H_x"))
    return 0 if summary["converged"] else 1


def cmd_compare(args):
    model, _ = load_model_config(args.model_config)
    window = _parse_window(args.window) if args.window else None
    frame = optimize_frame(model, window or (-3.0, 3.0, -3.0, 3.0)).frame
    field = geometry.sample_height_field(model, frame=frame, window=window)
    contours = geometry.extract_zero_contours(field)
    loops = contours.closed_loops()

    # The zero contours bound how far a candidate gait can reach; let the
    # shooting validity radius follow them so wide-loop models converge while
    # far-wandering spurious arcs are still rejected.
    loop_reach = max((float(np.max(np.linalg.norm(contours.contours[li],
                                                  axis=1)))
                      for li in loops), default=0.0)
    escape_radius = max(2.0 * np.pi, loop_reach + 0.6)

    cases = []
    overlays = []
    for branch in ("forward", "reverse"):
        sol, summary = _pmp_case(model, branch, None,
                                 escape_radius=escape_radius)
        case = {"pmp": summary, "match": None, "junction_flag": False}
        if sol is not None:
            gait_poly = np.asarray(sol.gait.vertices, dtype=float)
            best = None
            for li in loops:
                d = geometry.hausdorff_distance(
                    gait_poly, contours.contours[li])
                if best is None or d < best[1]:
                    best = (li, d)
            if best is not None:
                case["match"] = {"contour": best[0],
                                 "hausdorff": float(best[1])}
            overlays.append((np.vstack([gait_poly, gait_poly[:1]]),
                             "#7b1fa2" if branch == "forward" else "#c62828"))
        else:
            # Failed branch: report whether a junction-bearing contour exists,
            # the geometric explanation for shooting failure.
            case["junction_flag"] = any(
                k == "junction-bearing" for k in contours.kinds)
        cases.append(case)

    report = {"cases": cases,
              "n_contours": len(contours.contours),
              "n_junctions": len(contours.junctions),
              "junctions": [[float(x), float(y)]
                            for x, y in contours.junctions]}
    _write_json(os.path.join(args.out, "compare_report.json"), report)
    with open(os.path.join(args.out, "compare.svg"), "w",
              encoding="utf-8") as fh:
        fh.write(svg.heightfield_svg(field, contours, gaits=overlays,
                                     title="PMP gaits over H_x"))
    return 0 if all(c["pmp"]["converged"] or c["junction_flag"]
                    for c in cases) else 1


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gaitforge",
        description="Gait optimization for planar three-link swimmers.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--model-config", required=True,
                       help="path to a key-value model config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0,
                       help="RNG seed for randomized checks")

    p = sub.add_parser("sweep", help="displacement vs amplitude curves")
    common(p)
    p.add_argument("--family", choices=("circle", "square", "both"),
                   default="both")
    p.add_argument("--eps-min", type=float, default=0.05)
    p.add_argument("--eps-max", type=float, default=3.9)
    p.add_argument("--eps-step", type=float, default=0.05)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("heightfield", help="height field, contours, junctions")
    common(p)
    p.add_argument("--window", help="x0,x1,y0,y1 in radians")
    p.add_argument("--grid", type=int, default=None, help="samples per axis")
    p.add_argument("--component", choices=("x", "y", "theta"), default="x")
    p.add_argument("--frame",
                   choices=("config", "middle-link", "min-perturbation"),
                   default="config")
    p.set_defaults(func=cmd_heightfield)

    p = sub.add_parser("pmp", help="variational shooting")
    common(p)
    p.add_argument("--branch", choices=("forward", "reverse"),
                   default="forward")
    p.add_argument("--bound", default=None,
                   help="joint-angle bound in radians, or 'none'")
    p.add_argument("--overlay-heightfield", action="store_true",
                   help="also emit the gait drawn over the height field")
    p.add_argument("--escape-radius", type=float, default=None,
                   help="validity radius for unbounded arcs (default 2*pi)")
    p.add_argument("--frame",
                   choices=("config", "middle-link", "min-perturbation"),
                   default="min-perturbation")
    p.set_defaults(func=cmd_pmp)

    p = sub.add_parser("compare", help="cross-validate both pipelines")
    common(p)
    p.add_argument("--window", help="x0,x1,y0,y1 in radians")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args._config_frame = None
        if getattr(args, "model_config", None):
            _, args._config_frame = load_model_config(args.model_config)
        os.makedirs(args.out, exist_ok=True)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GaitforgeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
